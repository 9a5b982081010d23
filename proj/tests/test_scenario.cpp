#include <catch2/catch_amalgamated.hpp>

#include <holoblock/scenario.hpp>

using namespace holoblock;

namespace {

ScenarioSuite parse_ok(const std::string& text) {
    auto r = parse_scenario(text);
    if (!r.ok()) FAIL("parse failed: " << format_error(r.error()));
    return std::move(r.value());
}

ParseError parse_bad(const std::string& text) {
    auto r = parse_scenario(text);
    REQUIRE_FALSE(r.ok());
    return r.error();
}

} // namespace

TEST_CASE("empty input yields one default run") {
    ScenarioSuite s = parse_ok("");
    CHECK(s.name == "scenario");
    REQUIRE(s.runs.size() == 1);
    CHECK(s.runs[0].mode == Mode::Hybrid);
    CHECK(s.runs[0].num_nodes == 50);
    CHECK_FALSE(s.custom_adversaries);
}

TEST_CASE("every config field is reachable by name") {
    ScenarioSuite s = parse_ok(
        "name = everything\n"
        "out_dir = /tmp/x\n"
        "seed = 99\n"
        "mode = blockchain\n"
        "num_nodes = 64\n"
        "transactions_per_node = 7\n"
        "attacker_fraction = 0.25\n"
        "duration_ms = 12345\n"
        "delay.propagation_ms = 2.5\n"
        "delay.processing_ms = 0.5\n"
        "delay.consensus_ms = 75\n"
        "complexity.c = 2\n"
        "complexity.z = 8\n"
        "replication_factor = 5\n"
        "fanout = 3\n"
        "gossip_interval_ms = 500\n"
        "telemetry_interval_ms = 2500\n"
        "refresh_interval_ms = 5000\n"
        "rate_window_ms = 2000\n"
        "ttl = 8\n"
        "queue_capacity = 32\n"
        "payload_bytes = 128\n"
        "region_m = 500\n"
        "radio_range_m = 100\n"
        "buffer_capacity = 4096\n"
        "blocker.rate_threshold = 0.8\n"
        "blocker.allowance = 300000\n"
        "blocker.block_base = 150000\n"
        "blocker.stage_decay = true\n"
        "blocker.decay_after = 60000\n"
        "link_all_predecessors = false\n");
    CHECK(s.name == "everything");
    CHECK(s.out_dir == "/tmp/x");
    const SimConfig& c = s.runs.at(0);
    CHECK(c.seed == 99);
    CHECK(c.mode == Mode::BlockchainOnly);
    CHECK(c.num_nodes == 64);
    CHECK(c.transactions_per_node == 7);
    CHECK(c.attacker_fraction == 0.25);
    CHECK(c.duration_ms == 12345);
    CHECK(c.delay.propagation_ms == 2.5);
    CHECK(c.delay.processing_ms == 0.5);
    CHECK(c.delay.consensus_ms == 75.0);
    CHECK(c.complexity.c == 2.0);
    CHECK(c.complexity.z == 8);
    CHECK(c.replication_factor == 5);
    CHECK(c.fanout == 3);
    CHECK(c.gossip_interval_ms == 500);
    CHECK(c.telemetry_interval_ms == 2500);
    CHECK(c.refresh_interval_ms == 5000);
    CHECK(c.rate_window_ms == 2000);
    CHECK(c.ttl == 8);
    CHECK(c.queue_capacity == 32);
    CHECK(c.payload_bytes == 128);
    CHECK(c.region_m == 500.0);
    CHECK(c.radio_range_m == 100.0);
    CHECK(c.buffer_capacity == 4096);
    CHECK(c.blocker.rate_threshold == 0.8);
    CHECK(c.blocker.allowance == 300000);
    CHECK(c.blocker.block_base == 150000);
    CHECK(c.blocker.stage_decay);
    CHECK(c.blocker.decay_after == 60000);
    CHECK_FALSE(c.link_all_predecessors);
}

TEST_CASE("short aliases and comments work") {
    ScenarioSuite s = parse_ok(
        "# comment line\n"
        "\n"
        "nodes = 30   \n"
        "gamma = 3\n");
    CHECK(s.base.num_nodes == 30);
    CHECK(s.base.transactions_per_node == 3);
}

TEST_CASE("run lines expand against the final base regardless of order") {
    ScenarioSuite s = parse_ok(
        "run = mode=blockchain gamma=5\n"
        "run = mode=holochain gamma=100\n"
        "seed = 42\n"       // appears after the run lines on purpose
        "nodes = 10\n");
    REQUIRE(s.runs.size() == 2);
    CHECK(s.runs[0].mode == Mode::BlockchainOnly);
    CHECK(s.runs[0].transactions_per_node == 5);
    CHECK(s.runs[0].seed == 42);
    CHECK(s.runs[0].num_nodes == 10);
    CHECK(s.runs[1].mode == Mode::HolochainOnly);
    CHECK(s.runs[1].transactions_per_node == 100);
    CHECK(s.runs[1].seed == 42);
}

TEST_CASE("parse errors carry the offending line number") {
    ParseError e1 = parse_bad("seed = 1\nthis line has no equals\n");
    CHECK(e1.line == 2);
    CHECK(format_error(e1) == "line 2: expected key = value");

    ParseError e2 = parse_bad("seed = 1\n\nwhatever = 3\n");
    CHECK(e2.line == 3);
    CHECK(e2.message == "unknown key 'whatever'");

    ParseError e3 = parse_bad("seed = banana\n");
    CHECK(e3.line == 1);
    CHECK(e3.message == "invalid value for 'seed'");

    ParseError e4 = parse_bad("run = gamma=5 oops\n");
    CHECK(e4.line == 1);

    ParseError e5 = parse_bad("mode = tangent\n");
    CHECK(e5.message == "invalid value for 'mode'");
}

TEST_CASE("adversary lines parse kinds, intensity and targets") {
    ScenarioSuite s = parse_ok(
        "adversary = flooder targets=4 intensity=2\n"
        "adversary = man_in_middle targets=@doctors,9\n"
        "adversary = tamperer\n");
    REQUIRE(s.adversaries.size() == 3);
    CHECK(s.custom_adversaries);
    CHECK(s.adversaries[0].profile.kind == AdversaryKind::Flooder);
    CHECK(s.adversaries[0].profile.intensity == 2.0);
    CHECK(s.adversaries[0].profile.targets == std::vector<NodeId>{4});
    CHECK(s.adversaries[1].profile.kind == AdversaryKind::ManInMiddle);
    CHECK(s.adversaries[1].groups == std::vector<std::string>{"doctors"});
    CHECK(s.adversaries[1].profile.targets == std::vector<NodeId>{9});
    CHECK(s.adversaries[2].profile.kind == AdversaryKind::Tamperer);
    CHECK(s.adversaries[2].profile.intensity == 1.0);

    CHECK(parse_bad("adversary = ghost\n").message ==
          "unknown adversary kind 'ghost'");
    CHECK(parse_bad("adversary = flooder targets=@nurses\n").message ==
          "unknown target group '@nurses'");
    CHECK(parse_bad("adversary = flooder intensity=-1\n").message ==
          "invalid adversary intensity");
    CHECK(parse_bad("adversary = flooder targets=0\n").line == 1);
}

TEST_CASE("group targets resolve against a built world") {
    ScenarioSuite s = parse_ok("nodes = 20\nadversary = man_in_middle targets=@doctors\n");
    auto wr = build_world(s.runs[0]);
    REQUIRE(wr.ok());
    auto resolved = resolve_adversaries(s.adversaries, *wr.value());
    REQUIRE(resolved.size() == 1);
    CHECK(resolved[0].targets == wr.value()->doctor_ids);
    CHECK_FALSE(resolved[0].targets.empty());
}
