// Release gate: eleven end-to-end checks, one PASS/FAIL line each, nonzero
// exit if any fails.  Covers chain tamper evidence, lookup cost, the
// complexity / storage / latency / throughput / route-time orderings across
// the three modes, staged rate blocking, the registration gate, in-transit
// integrity, run determinism, and the packet codec.
#include <holoblock/holoblock.hpp>

#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

using namespace holoblock;

namespace {

int g_failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
    std::printf("%s  criterion %s (%s)\n", ok ? "PASS" : "FAIL", name,
                detail.c_str());
    if (!ok) ++g_failures;
}

[[noreturn]] void die(const std::string& why) {
    std::fprintf(stderr, "acceptance harness error: %s\n", why.c_str());
    std::exit(3);
}

// ---- shared simulation driver ----------------------------------------------

struct RunOut {
    MetricSample sample;
    StorageBreakdown storage;
    RunArtifacts artifacts;
    std::unique_ptr<World> world;
};

RunOut run_sim(const SimConfig& cfg, std::vector<AdversaryProfile> advs = {}) {
    auto wr = build_world(cfg);
    if (!wr.ok()) die("build_world: " + wr.error());
    RunOut out;
    out.world = std::move(wr.value());
    World& w = *out.world;
    if (!advs.empty()) w.adversaries = std::move(advs);
    out.artifacts = Simulation(w).run();
    if (!out.artifacts.counters.conserved()) die("message conservation violated");
    out.sample = measure(w, out.artifacts);
    out.storage = measure_storage(w, out.artifacts.bc_data_bytes);
    return out;
}

constexpr int kBc = static_cast<int>(Mode::BlockchainOnly);
constexpr int kHo = static_cast<int>(Mode::HolochainOnly);
constexpr int kHy = static_cast<int>(Mode::Hybrid);
const Mode kModes[3] = {Mode::BlockchainOnly, Mode::HolochainOnly, Mode::Hybrid};

// ---- 1: chain tamper evidence ----------------------------------------------

std::uint64_t mutable_bits(const ChainElement& e) {
    return 8 * (e.data.payload.size() + e.data.extra_validation_bits.size() +
                4 + 8 + 32 + 32 * e.header.predecessor_hashes.size());
}

// Flips bit r of the element's stored representation: payload, trailer,
// origin, sequence, data hash, then predecessor hashes.  Involutive.
void flip_bit(ChainElement& e, std::uint64_t r) {
    auto in_bytes = [&r](Bytes& b) {
        if (r < 8 * b.size()) {
            b[r / 8] ^= static_cast<std::uint8_t>(1u << (r % 8));
            return true;
        }
        r -= 8 * b.size();
        return false;
    };
    if (in_bytes(e.data.payload)) return;
    if (in_bytes(e.data.extra_validation_bits)) return;
    if (r < 32) {
        e.data.origin ^= (1u << r);
        return;
    }
    r -= 32;
    if (r < 64) {
        e.data.sequence ^= (1ull << r);
        return;
    }
    r -= 64;
    if (r < 256) {
        e.header.data_hash[r / 8] ^= static_cast<std::uint8_t>(1u << (r % 8));
        return;
    }
    r -= 256;
    e.header.predecessor_hashes[r / 256][(r % 256) / 8] ^=
        static_cast<std::uint8_t>(1u << (r % 8));
}

void crit1() {
    std::mt19937_64 rng(2024);
    int random_ok = 0;
    const int kTrials = 1000;
    for (int trial = 0; trial < kTrials; ++trial) {
        NodeState st;
        int len = 1 + static_cast<int>(rng() % 50);
        for (int i = 0; i < len; ++i) {
            Bytes raw(1 + rng() % 32);
            for (auto& b : raw) b = static_cast<std::uint8_t>(rng());
            if (!process(st, 7, raw, i).ok()) die("chain append failed");
        }
        std::size_t victim = rng() % st.chain.size();
        flip_bit(st.chain[victim], rng() % mutable_bits(st.chain[victim]));
        auto rep = verify_chain(st);
        if (!rep.ok && rep.first_bad_index && *rep.first_bad_index == victim)
            ++random_ok;
    }

    NodeState st3;
    for (int i = 0; i < 3; ++i) {
        Bytes raw(8);
        for (std::size_t j = 0; j < raw.size(); ++j)
            raw[j] = static_cast<std::uint8_t>(17 * i + j);
        if (!process(st3, 9, raw, i).ok()) die("chain append failed");
    }
    std::uint64_t exhaustive_total = 0, exhaustive_ok = 0;
    for (std::size_t i = 0; i < st3.chain.size(); ++i) {
        std::uint64_t bits = mutable_bits(st3.chain[i]);
        for (std::uint64_t b = 0; b < bits; ++b) {
            flip_bit(st3.chain[i], b);
            auto rep = verify_chain(st3);
            if (!rep.ok && rep.first_bad_index && *rep.first_bad_index == i)
                ++exhaustive_ok;
            ++exhaustive_total;
            flip_bit(st3.chain[i], b);
        }
    }
    bool restored = verify_chain(st3).ok;

    std::ostringstream d;
    d << random_ok << "/" << kTrials << " random flips, " << exhaustive_ok << "/"
      << exhaustive_total << " exhaustive";
    report("1 chain tamper evidence",
           random_ok == kTrials && exhaustive_ok == exhaustive_total && restored,
           d.str());
}

// ---- 2: lookup cost law -----------------------------------------------------

void crit2() {
    // hand-computed ceil(log2 N)
    const std::pair<std::size_t, int> expect[] = {
        {1, 0}, {2, 1}, {3, 2}, {7, 3}, {8, 3}, {1024, 10}, {65536, 16}};
    int checked = 0, good = 0;
    for (int c : {0, 1, 5}) {
        ZonedDht dht({.replication_factor = 1, .fanout = 2, .confidence_c = c});
        dht.join(10, Section::ODP);
        std::size_t inserted = 0;
        for (auto [n, lg] : expect) {
            while (inserted < n) {
                TransactionData t;
                t.payload = {0x5a};
                t.origin = 10;
                t.sequence = inserted;
                ChainElement e;
                e.header.data_hash = sha256(canonical_bytes(t));
                e.data = std::move(t);
                if (!dht.put(Section::ODP, std::move(e), 3).ok())
                    die("dht put failed");
                ++inserted;
            }
            auto lr = dht.lookup(Zone::SNZ, entry_key(Zone::SNZ, 10, n - 1));
            ++checked;
            if (lr.entry != nullptr && lr.steps == c + lg) ++good;
        }
    }
    std::ostringstream d;
    d << good << "/" << checked << " (N,c) points exact";
    report("2 lookup steps = c + ceil(log2 N)", good == checked, d.str());
}

// ---- 3 and 4: complexity and storage over the grid --------------------------

struct GridCell {
    double model = 0, emp = 0;
    StorageBreakdown storage;
};

void crit3_and_4() {
    const int ms[] = {10, 50, 100};
    const int gammas[] = {5, 100};
    std::map<std::tuple<int, int, int>, GridCell> grid;
    for (int m : ms)
        for (int gamma : gammas)
            for (Mode mode : kModes) {
                SimConfig cfg;
                cfg.mode = mode;
                cfg.num_nodes = m;
                cfg.transactions_per_node = gamma;
                cfg.duration_ms = 150'000;   // lets the commit queue drain
                RunOut r = run_sim(cfg);
                GridCell cell;
                cell.model =
                    model_complexity(mode, cfg.complexity, m, gamma, cfg.delay);
                cell.emp = r.sample.op_count;
                cell.storage = r.storage;
                grid[{m, gamma, static_cast<int>(mode)}] = cell;
            }

    int point_ok = 0, points = 0;
    for (int m : ms)
        for (int gamma : gammas) {
            auto& bc = grid[{m, gamma, kBc}];
            auto& ho = grid[{m, gamma, kHo}];
            auto& hy = grid[{m, gamma, kHy}];
            ++points;
            if (ho.model < hy.model && hy.model < bc.model &&
                ho.emp < hy.emp && hy.emp < bc.emp)
                ++point_ok;
        }

    bool ratios_ok = true;
    std::ostringstream rd;
    for (int m : ms) {
        double ratio =
            grid[{m, 100, kBc}].emp / grid[{m, 5, kBc}].emp;
        ratios_ok = ratios_ok && ratio >= 300.0 && ratio <= 500.0;
        rd << " " << fmt_g(ratio);
    }
    std::ostringstream d;
    d << point_ok << "/" << points
      << " grid points ordered, committed-mode growth ratios" << rd.str();
    report("3 complexity orderings and quadratic growth",
           point_ok == points && ratios_ok, d.str());

    const auto& bc = grid[{50, 100, kBc}];
    const auto& ho = grid[{50, 100, kHo}];
    const auto& hy = grid[{50, 100, kHy}];
    bool order = bc.storage.total > hy.storage.total &&
                 hy.storage.total > ho.storage.total;
    double floor50 = 50.0 / 3.0 * static_cast<double>(hy.storage.ledger_bytes);
    bool share = static_cast<double>(bc.storage.total) >= floor50;
    std::ostringstream d4;
    d4 << bc.storage.total << " > " << hy.storage.total << " > "
       << ho.storage.total << ", full-replication floor "
       << fmt_g(floor50);
    report("4 storage ordering at m=50", order && share, d4.str());
}

// ---- 5 and 6: latency, throughput and route time under attack ---------------

void crit5_and_6() {
    int lat_ok = 0, thr_ok = 0;
    bool route_all = true;
    double worst_ratio = 0;
    const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
    for (std::uint64_t seed : seeds) {
        double lat[3], thr[3], rt[3];
        for (Mode mode : kModes) {
            SimConfig cfg;
            cfg.mode = mode;
            cfg.num_nodes = 100;
            cfg.transactions_per_node = 100;
            cfg.attacker_fraction = 0.1;
            cfg.seed = seed;
            RunOut r = run_sim(cfg);
            int k = static_cast<int>(mode);
            lat[k] = mean_of(r.sample.latency_samples);
            thr[k] = throughput_norm(r.sample);
            rt[k] = mean_of(r.sample.route_time_samples);
        }
        if (lat[kHy] < lat[kHo] && lat[kHo] < lat[kBc]) ++lat_ok;
        if (thr[kHy] >= thr[kHo] && thr[kHo] >= thr[kBc]) ++thr_ok;
        route_all = route_all && rt[kHy] < rt[kBc] && rt[kBc] > 0;
        worst_ratio = std::max(worst_ratio, rt[kHy] / rt[kBc]);
    }
    std::ostringstream d5;
    d5 << "latency ordered " << lat_ok << "/5 seeds, throughput ordered "
       << thr_ok << "/5";
    report("5 latency and throughput orderings under attack",
           lat_ok >= 4 && thr_ok >= 4, d5.str());

    std::ostringstream d6;
    d6 << "hybrid < committed on 5/5 seeds, worst ratio " << fmt_g(worst_ratio);
    report("6 route selection time", route_all && worst_ratio < 0.8, d6.str());
}

// ---- 7: staged blocking timeline --------------------------------------------

void crit7() {
    // Independent trace: feed the guard a flat-out rate at one-second ticks
    // and collect every fresh action it issues.
    OffenderState st;
    BlockerConfig bcfg;
    struct Issued {
        double t_min;
        int stage;
        std::string action;
    };
    std::vector<Issued> trace;
    for (Timestamp t = 0; t <= 2'000'000; t += 1000) {
        Action a = observe_rate(st, bcfg, t, 1.0);
        if (!a.fresh) continue;
        std::string what = a.kind == Action::PermanentBlock
                               ? "permanent"
                               : "block:" + std::to_string(a.duration / 60'000);
        trace.push_back({t / 60000.0, st.stage, what});
    }
    auto matches = [](const Issued& got, double t_min, int stage,
                      const char* action) {
        return got.t_min == t_min && got.stage == stage && got.action == action;
    };
    bool unit_ok = trace.size() == 3 && matches(trace[0], 10.0, 1, "block:5") &&
                   matches(trace[1], 20.0, 2, "block:10") &&
                   matches(trace[2], 32.5, 3, "permanent");

    // Full simulator run: one flooder pinned to the first sensor.
    SimConfig cfg;
    cfg.mode = Mode::Hybrid;
    cfg.num_nodes = 10;
    cfg.transactions_per_node = 0;
    cfg.duration_ms = 1'960'000;
    RunOut r = run_sim(cfg, {{AdversaryKind::Flooder, {4}, 1.0}});
    const auto& log = r.artifacts.blocker_log;
    auto row_is = [&](std::size_t i, double t_min, int stage,
                      const char* action) {
        return i < log.size() && log[i].t_min == t_min && log[i].node == 4 &&
               log[i].stage == stage && log[i].action == action;
    };
    bool sim_ok = log.size() == 3 && row_is(0, 10.0, 1, "block:5") &&
                  row_is(1, 20.0, 2, "block:10") &&
                  row_is(2, 32.5, 3, "permanent");

    std::ostringstream d;
    d << "guard trace " << (unit_ok ? "exact" : "WRONG") << ", simulated log "
      << (sim_ok ? "exact at 10/20/32.5 min" : "WRONG");
    report("7 staged blocking timeline", unit_ok && sim_ok, d.str());
}

// ---- 8: registration gate vs poisoning window -------------------------------

void crit8() {
    SimConfig base;
    base.num_nodes = 50;
    base.transactions_per_node = 10;
    base.attacker_fraction = 0.1;

    SimConfig hybrid = base;
    hybrid.mode = Mode::Hybrid;
    RunOut h = run_sim(hybrid);
    std::uint64_t hybrid_bad = 0;
    for (Zone z : {Zone::SNZ, Zone::RNZ})
        for (const auto& [sk, e] : h.world->dht.zone_contents(z))
            if (!bound_to_registration(*h.world, e.value.data)) ++hybrid_bad;
    bool hybrid_ok = h.artifacts.counters.accepted_forged == 0 &&
                     hybrid_bad == 0 &&
                     h.artifacts.counters.rejected_auth > 0;

    SimConfig holo = base;
    holo.mode = Mode::HolochainOnly;
    RunOut o = run_sim(holo);
    std::uint64_t holo_bad = 0;
    for (Zone z : {Zone::SNZ, Zone::RNZ})
        for (const auto& [sk, e] : o.world->dht.zone_contents(z))
            if (!bound_to_agent(*o.world, e.value.data)) ++holo_bad;
    bool holo_ok = o.artifacts.counters.accepted_forged > 0 && holo_bad > 0 &&
                   o.artifacts.counters.forged_rejected_consumer > 0;

    std::ostringstream d;
    d << "gated: 0 forged stored (" << h.artifacts.counters.rejected_auth
      << " rejected at entry); ungated: "
      << o.artifacts.counters.accepted_forged << " stored, "
      << o.artifacts.counters.forged_rejected_consumer
      << " caught at the consumer";
    report("8 registration gate closes the poisoning window",
           hybrid_ok && holo_ok, d.str());
}

// ---- 9: in-transit modification ----------------------------------------------

void crit9() {
    std::mt19937_64 rng(99);
    const int kTrials = 1000;
    int detected = 0;
    for (int trial = 0; trial < kTrials; ++trial) {
        Bytes payload(1 + rng() % 64);
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
        TransactionData t;
        t.payload = payload;
        t.origin = 4 + static_cast<NodeId>(trial % 40);
        t.sequence = static_cast<std::uint64_t>(trial);
        t.extra_validation_bits = expected_extra_bits(payload);
        DhtEntry entry;
        entry.key = entry_key(Zone::SNZ, t.origin, t.sequence);
        entry.section = Section::ODP;
        entry.value.header.data_hash = sha256(canonical_bytes(t));
        entry.value.data = std::move(t);
        if (!verify_entry(entry)) die("entry invalid before tampering");

        // corrupt the copy in flight: payload, stored hash, or key
        DhtEntry wire = entry;
        std::uint64_t site = rng() % 3;
        if (site == 0) {
            std::uint64_t r = rng() % (8 * wire.value.data.payload.size());
            wire.value.data.payload[r / 8] ^=
                static_cast<std::uint8_t>(1u << (r % 8));
        } else if (site == 1) {
            std::uint64_t r = rng() % 256;
            wire.value.header.data_hash[r / 8] ^=
                static_cast<std::uint8_t>(1u << (r % 8));
        } else {
            std::uint64_t r = rng() % 256;
            wire.key[r / 8] ^= static_cast<std::uint8_t>(1u << (r % 8));
        }
        if (!verify_entry(wire)) ++detected;
    }
    std::ostringstream d;
    d << detected << "/" << kTrials << " rejected at the consumer hash check";
    report("9 in-transit modification detection", detected == kTrials, d.str());
}

// ---- 10: determinism ----------------------------------------------------------

std::string render_artifacts(const SimConfig& cfg, const RunOut& r) {
    std::ostringstream os;
    write_complexity_header(os);
    write_complexity_row(os, cfg.mode, cfg.num_nodes, cfg.transactions_per_node,
                         model_complexity(cfg.mode, cfg.complexity,
                                          cfg.num_nodes,
                                          cfg.transactions_per_node, cfg.delay),
                         r.sample.op_count);
    write_perf_header(os);
    write_perf_row(os, r.sample);
    write_blocker_header(os);
    for (const BlockerRow& row : r.artifacts.blocker_log)
        write_blocker_row(os, row);
    write_trace_header(os);
    for (const TraceRow& row : r.artifacts.trace) write_trace_row(os, row);
    return os.str();
}

void crit10() {
    SimConfig cfg;
    cfg.mode = Mode::Hybrid;
    cfg.num_nodes = 20;
    cfg.transactions_per_node = 8;
    cfg.attacker_fraction = 0.1;
    cfg.seed = 7;
    std::string a = render_artifacts(cfg, run_sim(cfg));
    std::string b = render_artifacts(cfg, run_sim(cfg));
    std::ostringstream d;
    d << a.size() << " bytes of CSV, " << (a == b ? "identical" : "DIFFER");
    report("10 same seed, byte-identical artifacts", a == b && a.size() > 200,
           d.str());
}

// ---- 11: packet codec ----------------------------------------------------------

void crit11() {
    std::mt19937_64 rng(4242);
    const int kTrials = 10'000;
    int round_ok = 0;
    for (int trial = 0; trial < kTrials; ++trial) {
        Bytes payload(rng() % (kPacketMaxPayload + 1));
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
        Packet p = make_packet(static_cast<std::uint8_t>(rng()),
                               static_cast<std::uint8_t>(rng() % 4),
                               static_cast<std::uint8_t>(rng()),
                               static_cast<NodeId>(rng()),
                               static_cast<NodeId>(rng()), payload);
        auto wire = serialize_packet(p);
        if (!wire.ok()) continue;
        auto back = parse_packet(wire.value());
        if (!back.ok() || !(back.value() == p)) continue;
        auto again = serialize_packet(back.value());
        if (again.ok() && again.value() == wire.value()) ++round_ok;
    }

    Packet pinned = make_packet(0xa5, 3, 0x10, 0x00000001u, 0xfffffffeu,
                                bytes_of("data"));
    auto wire = serialize_packet(pinned);
    bool golden_ok =
        wire.ok() && to_hex(wire.value()) == "a510031000000001fffffffe64617461";

    // 244-byte payload wraps the length byte to 0x00 and still parses
    Bytes big(kPacketMaxPayload, 0xee);
    auto full = serialize_packet(make_packet(1, 0, 1, 2, 3, big));
    bool wrap_ok = full.ok() && full.value()[1] == 0x00 &&
                   parse_packet(full.value()).ok();

    std::ostringstream d;
    d << round_ok << "/" << kTrials << " round trips, golden "
      << (golden_ok ? "match" : "MISMATCH") << ", length wrap "
      << (wrap_ok ? "ok" : "BAD");
    report("11 packet codec", round_ok == kTrials && golden_ok && wrap_ok,
           d.str());
}

} // namespace

int main() {
    crit1();
    crit2();
    crit3_and_4();
    crit5_and_6();
    crit7();
    crit8();
    crit9();
    crit10();
    crit11();
    if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures ? 1 : 0;
}
