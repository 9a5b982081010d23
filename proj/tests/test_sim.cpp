#include <catch2/catch_amalgamated.hpp>

#include <holoblock/sim.hpp>

using namespace holoblock;

namespace {

std::unique_ptr<World> make_world(SimConfig cfg) {
    auto r = build_world(cfg);
    REQUIRE(r.ok());
    return std::move(r.value());
}

SimConfig base_config(Mode mode) {
    SimConfig cfg;
    cfg.mode = mode;
    cfg.seed = 7;
    return cfg;
}

} // namespace

TEST_CASE("message conservation holds in every mode, with and without attackers") {
    for (Mode mode : {Mode::BlockchainOnly, Mode::HolochainOnly, Mode::Hybrid}) {
        for (double frac : {0.0, 0.1}) {
            SimConfig cfg = base_config(mode);
            cfg.num_nodes = 50;
            cfg.transactions_per_node = 10;
            cfg.attacker_fraction = frac;
            auto w = make_world(cfg);
            Simulation sim(*w);
            RunArtifacts a = sim.run();
            INFO("mode " << static_cast<int>(mode) << " frac " << frac);
            CHECK(a.counters.conserved());
            CHECK(a.counters.offered == 21u * 10u);   // 45% of 47 regular nodes
            CHECK(a.counters.delivered_elements <= a.counters.offered);
        }
    }
}

TEST_CASE("same seed and config reproduce identical artifacts") {
    for (Mode mode : {Mode::BlockchainOnly, Mode::HolochainOnly, Mode::Hybrid}) {
        SimConfig cfg = base_config(mode);
        cfg.attacker_fraction = 0.1;
        auto w1 = make_world(cfg);
        auto w2 = make_world(cfg);
        RunArtifacts a = Simulation(*w1).run();
        RunArtifacts b = Simulation(*w2).run();
        CHECK(a.counters.emitted == b.counters.emitted);
        CHECK(a.counters.delivered_msgs == b.counters.delivered_msgs);
        CHECK(a.counters.delivered_elements == b.counters.delivered_elements);
        CHECK(a.counters.rejected_auth == b.counters.rejected_auth);
        CHECK(a.counters.rejected_integrity == b.counters.rejected_integrity);
        CHECK(a.counters.data_ops == b.counters.data_ops);
        CHECK(a.latency_ms == b.latency_ms);
        CHECK(a.route_ms == b.route_ms);
        CHECK(a.counters.accepted_forged == b.counters.accepted_forged);
    }
}

TEST_CASE("hybrid delivers every genuine element in a calm run") {
    SimConfig cfg = base_config(Mode::Hybrid);
    cfg.num_nodes = 20;
    cfg.transactions_per_node = 5;
    auto w = make_world(cfg);
    RunArtifacts a = Simulation(*w).run();
    CHECK(a.counters.conserved());
    CHECK(a.counters.delivered_elements == a.counters.offered);
    CHECK(a.counters.accepted_forged == 0);
    for (double l : a.latency_ms) CHECK(l > 0.0);
}

TEST_CASE("chain-committed mode matches its operation-count model exactly") {
    SimConfig cfg = base_config(Mode::BlockchainOnly);
    cfg.num_nodes = 10;
    cfg.transactions_per_node = 5;
    cfg.duration_ms = 30'000;
    auto w = make_world(cfg);
    std::size_t sensors = w->sensor_ids.size();
    REQUIRE(sensors == 3);
    RunArtifacts a = Simulation(*w).run();
    CHECK(a.counters.conserved());
    CHECK(a.counters.delivered_elements == a.counters.offered);
    CHECK(a.counters.in_flight_end == 0);

    // Per origin: gamma append ops, then the k-th commit costs m*(c+2k-1),
    // summing to m*gamma*(c+gamma).
    double gamma = 5, m = 10, c = 1;
    double expect = sensors * (gamma + m * gamma * (c + gamma));
    CHECK(a.counters.data_ops == expect);
    CHECK(a.bc_data_bytes > 0);
    for (double l : a.latency_ms) CHECK(l > 0.0);
}

TEST_CASE("empirical operation counts order holo < hybrid < chain") {
    double ops[3] = {0, 0, 0};
    for (Mode mode : {Mode::HolochainOnly, Mode::Hybrid, Mode::BlockchainOnly}) {
        SimConfig cfg = base_config(mode);
        cfg.num_nodes = 50;
        cfg.transactions_per_node = 5;
        cfg.duration_ms = 30'000;
        auto w = make_world(cfg);
        ops[static_cast<int>(mode)] = Simulation(*w).run().counters.data_ops;
    }
    CHECK(ops[static_cast<int>(Mode::HolochainOnly)] <
          ops[static_cast<int>(Mode::Hybrid)]);
    CHECK(ops[static_cast<int>(Mode::Hybrid)] <
          ops[static_cast<int>(Mode::BlockchainOnly)]);
}

TEST_CASE("impersonation bounces off ledger modes but poisons the open DHT") {
    SimConfig hybrid_cfg = base_config(Mode::Hybrid);
    hybrid_cfg.attacker_fraction = 0.1;
    auto wh = make_world(hybrid_cfg);
    RunArtifacts hybrid = Simulation(*wh).run();
    CHECK(hybrid.counters.accepted_forged == 0);
    CHECK(hybrid.counters.rejected_auth > 0);

    SimConfig holo_cfg = base_config(Mode::HolochainOnly);
    holo_cfg.attacker_fraction = 0.1;
    auto wo = make_world(holo_cfg);
    RunArtifacts holo = Simulation(*wo).run();
    CHECK(holo.counters.accepted_forged > 0);
    // Consumers eventually spot the bad provenance; each detection also
    // removes the entry from the table.
    CHECK(holo.counters.forged_rejected_consumer > 0);
    CHECK(holo.counters.conserved());
}

TEST_CASE("sustained flooding walks the staged blocker to a permanent ban") {
    SimConfig cfg = base_config(Mode::Hybrid);
    cfg.num_nodes = 10;
    cfg.transactions_per_node = 0;
    cfg.duration_ms = 1'960'000;
    auto w = make_world(cfg);
    NodeId offender = w->sensor_ids.front();
    w->adversaries = {{AdversaryKind::Flooder, {offender}, 1.0}};
    RunArtifacts a = Simulation(*w).run();

    REQUIRE(a.blocker_log.size() == 3);
    CHECK(a.blocker_log[0].t_min == 10.0);
    CHECK(a.blocker_log[0].node == offender);
    CHECK(a.blocker_log[0].stage == 1);
    CHECK(a.blocker_log[0].action == "block:5");
    CHECK(a.blocker_log[1].t_min == 20.0);
    CHECK(a.blocker_log[1].stage == 2);
    CHECK(a.blocker_log[1].action == "block:10");
    CHECK(a.blocker_log[2].t_min == 32.5);
    CHECK(a.blocker_log[2].stage == 3);
    CHECK(a.blocker_log[2].action == "permanent");

    // While banned, the uplink refuses the offender's packets.
    CHECK(a.counters.rejected_auth > 0);
    CHECK(a.counters.conserved());
}

TEST_CASE("flooding without a ledger is never blocked") {
    SimConfig cfg = base_config(Mode::HolochainOnly);
    cfg.num_nodes = 10;
    cfg.transactions_per_node = 0;
    cfg.duration_ms = 1'300'000;
    auto w = make_world(cfg);
    w->adversaries = {{AdversaryKind::Flooder, {w->sensor_ids.front()}, 1.0}};
    RunArtifacts a = Simulation(*w).run();
    CHECK(a.blocker_log.empty());
    CHECK(a.counters.rejected_auth == 0);
    CHECK(a.counters.emitted > 0);
    CHECK(a.counters.conserved());
}

TEST_CASE("tampered replicas are quarantined when touched") {
    SimConfig cfg = base_config(Mode::Hybrid);
    cfg.num_nodes = 50;
    cfg.transactions_per_node = 10;
    auto w = make_world(cfg);
    w->adversaries = {{AdversaryKind::Tamperer, {}, 4.0}};
    RunArtifacts a = Simulation(*w).run();
    CHECK(a.counters.tamper_events > 0);
    CHECK(a.counters.rejected_integrity > 0);
    CHECK(a.counters.conserved());
}

TEST_CASE("a tapped consumer discards every intercepted response") {
    SimConfig cfg = base_config(Mode::Hybrid);
    cfg.num_nodes = 50;
    cfg.transactions_per_node = 10;
    auto w = make_world(cfg);
    w->adversaries = {{AdversaryKind::ManInMiddle, w->doctor_ids, 1.0}};
    RunArtifacts a = Simulation(*w).run();
    CHECK(a.counters.mim_detected > 0);
    // Nothing intercepted reaches a subscription.
    CHECK(w->transfers.empty());
    CHECK(a.counters.conserved());
}

TEST_CASE("route samples come back priced per mode") {
    SimConfig cfg = base_config(Mode::Hybrid);
    auto w = make_world(cfg);
    RunArtifacts a = Simulation(*w).run();
    REQUIRE_FALSE(a.route_ms.empty());
    for (double r : a.route_ms) CHECK(r >= 0.0);

    SimConfig bc = cfg;
    bc.mode = Mode::BlockchainOnly;
    auto wb = make_world(bc);
    RunArtifacts ab = Simulation(*wb).run();
    REQUIRE(ab.route_ms.size() == a.route_ms.size());
    double sum_h = 0, sum_b = 0;
    for (double r : a.route_ms) sum_h += r;
    for (double r : ab.route_ms) sum_b += r;
    CHECK(sum_h < sum_b);   // consensus registration tax on every route
}
