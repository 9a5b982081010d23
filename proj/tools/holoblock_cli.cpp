#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <holoblock/metrics.hpp>
#include <holoblock/scenario.hpp>
#include <holoblock/sim.hpp>

namespace fs = std::filesystem;
using namespace holoblock;

namespace {

struct Overrides {
    std::optional<std::string> mode;
    std::optional<int> nodes;
    std::optional<int> gamma;
    std::optional<std::uint64_t> seed;
};

struct RunResult {
    SimConfig cfg;
    MetricSample sample;
    RunArtifacts artifacts;
};

// usage/config problems exit 2, failed checks exit 1
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

int fail_usage(const std::string& msg) {
    std::cerr << "error: " << msg << "\n";
    return kExitUsage;
}

void apply_overrides(SimConfig& cfg, const Overrides& ov) {
    if (ov.mode) cfg.mode = *mode_from_string(*ov.mode);
    if (ov.nodes) cfg.num_nodes = *ov.nodes;
    if (ov.gamma) cfg.transactions_per_node = *ov.gamma;
    if (ov.seed) cfg.seed = *ov.seed;
}

std::string default_out_dir() {
    if (const char* env = std::getenv("HOLOBLOCK_OUT")) return env;
    return "out";
}

Result<RunResult, std::string> execute(const SimConfig& cfg,
                                       const std::vector<ScenarioAdversary>& advs,
                                       bool custom_advs) {
    if (auto err = validate_config(cfg)) return *err;
    auto wr = build_world(cfg);
    if (!wr.ok()) return wr.error();
    World& w = *wr.value();
    if (custom_advs) w.adversaries = resolve_adversaries(advs, w);
    RunResult out;
    out.cfg = cfg;
    out.artifacts = Simulation(w).run();
    if (!out.artifacts.counters.conserved())
        return std::string("internal error: message conservation violated");
    out.sample = measure(w, out.artifacts);
    return out;
}

int cmd_run(const std::string& scenario_path, const Overrides& ov,
            std::string out_flag, bool force) {
    ScenarioSuite suite;
    if (!scenario_path.empty()) {
        std::ifstream in(scenario_path);
        if (!in) return fail_usage("cannot open scenario file: " + scenario_path);
        auto parsed = parse_scenario(in);
        if (!parsed.ok())
            return fail_usage(scenario_path + ": " + format_error(parsed.error()));
        suite = std::move(parsed.value());
    }
    for (SimConfig& cfg : suite.runs) apply_overrides(cfg, ov);

    std::string base = !out_flag.empty()  ? out_flag
                       : !suite.out_dir.empty() ? suite.out_dir
                                                : default_out_dir();
    fs::path dir = fs::path(base) / suite.name;

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) return fail_usage("cannot create output dir " + dir.string());
    for (const char* name : {"complexity.csv", "perf.csv", "blocker.csv"})
        if (!force && fs::exists(dir / name))
            return fail_usage((dir / name).string() +
                              " exists (pass --force to overwrite)");

    std::vector<RunResult> results;
    for (std::size_t i = 0; i < suite.runs.size(); ++i) {
        auto r = execute(suite.runs[i], suite.adversaries,
                         suite.custom_adversaries);
        if (!r.ok()) return fail_usage("run " + std::to_string(i + 1) + ": " +
                                       r.error());
        results.push_back(std::move(r.value()));
        const RunResult& rr = results.back();
        std::cout << "run " << i + 1 << "/" << suite.runs.size() << " mode="
                  << to_string(rr.cfg.mode) << " m=" << rr.cfg.num_nodes
                  << " gamma=" << rr.cfg.transactions_per_node << " delivered="
                  << rr.sample.delivered_count << "/" << rr.sample.offered_count
                  << " ops=" << fmt_g(rr.sample.op_count) << "\n";
    }

    std::ofstream cx(dir / "complexity.csv");
    write_complexity_header(cx);
    for (const RunResult& r : results)
        write_complexity_row(
            cx, r.cfg.mode, r.cfg.num_nodes, r.cfg.transactions_per_node,
            model_complexity(r.cfg.mode, r.cfg.complexity, r.cfg.num_nodes,
                             r.cfg.transactions_per_node, r.cfg.delay),
            r.sample.op_count);

    std::ofstream pf(dir / "perf.csv");
    write_perf_header(pf);
    for (const RunResult& r : results) write_perf_row(pf, r.sample);

    std::ofstream bl(dir / "blocker.csv");
    write_blocker_header(bl);
    for (const RunResult& r : results)
        for (const BlockerRow& row : r.artifacts.blocker_log)
            write_blocker_row(bl, row);

    for (std::size_t i = 0; i < results.size(); ++i) {
        std::ofstream tr(dir / ("trace_r" + std::to_string(i + 1) + ".csv"));
        write_trace_header(tr);
        for (const TraceRow& row : results[i].artifacts.trace)
            write_trace_row(tr, row);
    }

    std::cout << "wrote " << dir.string() << "\n";
    return 0;
}

struct OrderingReport {
    bool applicable = true;
    bool complexity = false, latency = false, throughput = false,
         storage = false, route = false;
    bool all_pass() const {
        return !applicable ||
               (complexity && latency && throughput && storage && route);
    }
};

void print_check(const char* name, bool pass, const std::string& detail) {
    std::cout << "  " << name << ": " << (pass ? "PASS" : "FAIL") << " ("
              << detail << ")\n";
}

// Each ordering claim is checked under its own published conditions: clean
// long runs for complexity, storage and route (the consensus queue must
// drain), contested short runs for latency and throughput.
int cmd_compare(std::vector<int> nodes_list, std::vector<int> gamma_list,
                std::uint64_t seed, int parallel) {
    if (nodes_list.empty() || gamma_list.empty())
        return fail_usage("compare needs nonempty node and gamma lists");

    struct Cell {
        SimConfig cfg;
        Result<RunResult, std::string> result{std::string("not run")};
    };
    std::vector<Cell> cells;
    for (int m : nodes_list)
        for (int g : gamma_list)
            for (bool contested : {false, true})
                for (Mode mode :
                     {Mode::HolochainOnly, Mode::Hybrid, Mode::BlockchainOnly}) {
                    SimConfig cfg;
                    cfg.mode = mode;
                    cfg.num_nodes = m;
                    cfg.transactions_per_node = g;
                    cfg.seed = seed;
                    if (contested) {
                        cfg.attacker_fraction = 0.1;
                    } else {
                        cfg.duration_ms = 150'000;
                    }
                    cells.push_back({cfg, std::string("not run")});
                }

    auto work = [&](std::size_t i) { cells[i].result = execute(cells[i].cfg, {}, false); };
    if (parallel > 1) {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < parallel; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < cells.size();
                     i = next.fetch_add(1))
                    work(i);
            });
        for (auto& th : pool) th.join();
    } else {
        for (std::size_t i = 0; i < cells.size(); ++i) work(i);
    }

    bool any_fail = false;
    std::size_t idx = 0;
    for (int m : nodes_list)
        for (int g : gamma_list) {
            const MetricSample* clean[3] = {};
            const MetricSample* contested[3] = {};
            for (int pass = 0; pass < 2; ++pass)
                for (int k = 0; k < 3; ++k, ++idx) {
                    if (!cells[idx].result.ok())
                        return fail_usage("m=" + std::to_string(m) + " gamma=" +
                                          std::to_string(g) + ": " +
                                          cells[idx].result.error());
                    auto& slot = pass == 0 ? clean : contested;
                    slot[static_cast<int>(cells[idx].cfg.mode)] =
                        &cells[idx].result.value().sample;
                }

            std::cout << "m=" << m << " gamma=" << g << " seed=" << seed << "\n";
            if (g == 0) {
                std::cout << "  orderings: not applicable (no offered load)\n";
                continue;
            }
            const MetricSample& ho = *clean[static_cast<int>(Mode::HolochainOnly)];
            const MetricSample& hy = *clean[static_cast<int>(Mode::Hybrid)];
            const MetricSample& bc = *clean[static_cast<int>(Mode::BlockchainOnly)];
            const MetricSample& aho =
                *contested[static_cast<int>(Mode::HolochainOnly)];
            const MetricSample& ahy = *contested[static_cast<int>(Mode::Hybrid)];
            const MetricSample& abc =
                *contested[static_cast<int>(Mode::BlockchainOnly)];

            OrderingReport rep;
            rep.complexity = ho.op_count < hy.op_count && hy.op_count < bc.op_count;
            print_check("complexity", rep.complexity,
                        fmt_g(ho.op_count) + " < " + fmt_g(hy.op_count) + " < " +
                            fmt_g(bc.op_count));

            double lho = mean_of(aho.latency_samples),
                   lhy = mean_of(ahy.latency_samples),
                   lbc = mean_of(abc.latency_samples);
            rep.latency = lhy < lho && lho < lbc;
            print_check("latency", rep.latency,
                        fmt_g(lhy) + " < " + fmt_g(lho) + " < " + fmt_g(lbc));

            double tho = throughput_norm(aho), thy = throughput_norm(ahy),
                   tbc = throughput_norm(abc);
            rep.throughput = thy >= tho && tho >= tbc && thy > tbc;
            print_check("throughput", rep.throughput,
                        fmt_g(thy) + " >= " + fmt_g(tho) + " >= " + fmt_g(tbc));

            rep.storage = bc.bytes_stored_total > hy.bytes_stored_total &&
                          hy.bytes_stored_total > ho.bytes_stored_total;
            print_check("storage", rep.storage,
                        std::to_string(bc.bytes_stored_total) + " > " +
                            std::to_string(hy.bytes_stored_total) + " > " +
                            std::to_string(ho.bytes_stored_total));

            double rho = mean_of(ho.route_time_samples),
                   rhy = mean_of(hy.route_time_samples),
                   rbc = mean_of(bc.route_time_samples);
            rep.route = rhy < rho && rhy < rbc;
            print_check("route", rep.route, fmt_g(rhy) + " < {" + fmt_g(rho) +
                                                ", " + fmt_g(rbc) + "}");

            if (!rep.all_pass()) any_fail = true;
        }

    std::cout << "overall: " << (any_fail ? "FAIL" : "PASS") << "\n";
    return any_fail ? kExitCheckFailed : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"zoned-DHT / authority-ledger network simulator"};
    app.require_subcommand(1);

    Overrides ov;
    std::string mode_str;

    auto add_overrides = [&](CLI::App* sub) {
        sub->add_option("--mode", mode_str, "force a mode for every run")
            ->check(CLI::IsMember({"blockchain", "holochain", "hybrid"}));
        sub->add_option_function<int>(
            "--nodes", [&](int v) { ov.nodes = v; }, "node count override");
        sub->add_option_function<int>(
            "--gamma", [&](int v) { ov.gamma = v; },
            "transactions per sender override");
        sub->add_option_function<std::uint64_t>(
            "--seed", [&](std::uint64_t v) { ov.seed = v; }, "seed override");
    };

    CLI::App* run = app.add_subcommand("run", "execute a scenario and write CSVs");
    std::string scenario_path, out_dir;
    bool force = false;
    run->add_option("--scenario", scenario_path, "scenario file (key=value)");
    run->add_option("--out", out_dir, "output directory root");
    run->add_flag("--force", force, "overwrite existing artifacts");
    add_overrides(run);

    CLI::App* compare =
        app.add_subcommand("compare", "run all modes over a grid and check the "
                                      "claimed orderings");
    std::vector<int> nodes_list{50, 100};
    std::vector<int> gamma_list{100};
    std::uint64_t seed = 1;
    int parallel = 1;
    compare->add_option("--nodes", nodes_list, "grid of node counts");
    compare->add_option("--gamma", gamma_list, "grid of per-sender workloads");
    compare->add_option("--seed", seed, "seed for every run");
    compare->add_option("--parallel", parallel, "worker threads")
        ->check(CLI::Range(1, 64));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (!mode_str.empty()) ov.mode = mode_str;

    if (run->parsed()) return cmd_run(scenario_path, ov, out_dir, force);
    return cmd_compare(nodes_list, gamma_list, seed, parallel);
}
