#pragma once

#include <charconv>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "world.hpp"

namespace holoblock {

// Scenario files are plain key=value text, one setting per line.  `#` starts
// a comment.  Every SimConfig field is reachable by its own name; nested
// groups use a dotted prefix (delay.propagation_ms, complexity.c,
// blocker.allowance).  `gamma` and `nodes` are accepted as short forms.
//
// Repeated `run = key=val key=val ...` lines expand into one config each,
// every run starting from the base settings.  A file without run lines is a
// single-run suite.
//
// Repeated `adversary = <kind> [intensity=X] [targets=a,b,@group]` lines
// replace the attacker population for every run; numeric targets are node
// ids, @groups (@sensors, @relays, @doctors, @paramedics, @pharmacy) resolve
// against the built world.

struct ParseError {
    int line = 0;
    std::string message;
};

inline std::string format_error(const ParseError& e) {
    return "line " + std::to_string(e.line) + ": " + e.message;
}

struct ScenarioAdversary {
    AdversaryProfile profile;
    std::vector<std::string> groups;
};

struct ScenarioSuite {
    std::string name = "scenario";
    std::string out_dir;
    SimConfig base;
    std::vector<SimConfig> runs;
    std::vector<ScenarioAdversary> adversaries;
    bool custom_adversaries = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

template <typename T>
bool parse_num(std::string_view s, T& out) {
    auto* end = s.data() + s.size();
    auto [p, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && p == end;
}

inline bool parse_bool(std::string_view s, bool& out) {
    if (s == "true" || s == "1" || s == "on") return out = true, true;
    if (s == "false" || s == "0" || s == "off") return out = false, true;
    return false;
}

inline std::optional<AdversaryKind> adversary_from_string(std::string_view s) {
    if (s == "impersonator") return AdversaryKind::Impersonator;
    if (s == "tamperer") return AdversaryKind::Tamperer;
    if (s == "flooder") return AdversaryKind::Flooder;
    if (s == "man_in_middle") return AdversaryKind::ManInMiddle;
    return std::nullopt;
}

inline bool known_group(std::string_view g) {
    return g == "sensors" || g == "relays" || g == "doctors" ||
           g == "paramedics" || g == "pharmacy";
}

// One setting applied to a config; empty return means accepted.
inline std::optional<std::string> apply_kv(SimConfig& cfg, std::string_view key,
                                           std::string_view value) {
    auto bad = [&](const char* what) {
        return std::optional<std::string>("invalid value for '" +
                                          std::string(what) + "'");
    };
    if (key == "seed") {
        if (!parse_num(value, cfg.seed)) return bad("seed");
    } else if (key == "mode") {
        auto m = mode_from_string(value);
        if (!m) return bad("mode");
        cfg.mode = *m;
    } else if (key == "num_nodes" || key == "nodes") {
        if (!parse_num(value, cfg.num_nodes)) return bad("num_nodes");
    } else if (key == "transactions_per_node" || key == "gamma") {
        if (!parse_num(value, cfg.transactions_per_node))
            return bad("transactions_per_node");
    } else if (key == "attacker_fraction") {
        if (!parse_num(value, cfg.attacker_fraction))
            return bad("attacker_fraction");
    } else if (key == "duration_ms") {
        if (!parse_num(value, cfg.duration_ms)) return bad("duration_ms");
    } else if (key == "delay.propagation_ms") {
        if (!parse_num(value, cfg.delay.propagation_ms))
            return bad("delay.propagation_ms");
    } else if (key == "delay.processing_ms") {
        if (!parse_num(value, cfg.delay.processing_ms))
            return bad("delay.processing_ms");
    } else if (key == "delay.consensus_ms") {
        if (!parse_num(value, cfg.delay.consensus_ms))
            return bad("delay.consensus_ms");
    } else if (key == "complexity.c") {
        if (!parse_num(value, cfg.complexity.c)) return bad("complexity.c");
    } else if (key == "complexity.z") {
        if (!parse_num(value, cfg.complexity.z)) return bad("complexity.z");
    } else if (key == "replication_factor") {
        if (!parse_num(value, cfg.replication_factor))
            return bad("replication_factor");
    } else if (key == "fanout") {
        if (!parse_num(value, cfg.fanout)) return bad("fanout");
    } else if (key == "gossip_interval_ms") {
        if (!parse_num(value, cfg.gossip_interval_ms))
            return bad("gossip_interval_ms");
    } else if (key == "telemetry_interval_ms") {
        if (!parse_num(value, cfg.telemetry_interval_ms))
            return bad("telemetry_interval_ms");
    } else if (key == "refresh_interval_ms") {
        if (!parse_num(value, cfg.refresh_interval_ms))
            return bad("refresh_interval_ms");
    } else if (key == "rate_window_ms") {
        if (!parse_num(value, cfg.rate_window_ms)) return bad("rate_window_ms");
    } else if (key == "ttl") {
        if (!parse_num(value, cfg.ttl)) return bad("ttl");
    } else if (key == "queue_capacity") {
        if (!parse_num(value, cfg.queue_capacity)) return bad("queue_capacity");
    } else if (key == "payload_bytes") {
        if (!parse_num(value, cfg.payload_bytes)) return bad("payload_bytes");
    } else if (key == "region_m") {
        if (!parse_num(value, cfg.region_m)) return bad("region_m");
    } else if (key == "radio_range_m") {
        if (!parse_num(value, cfg.radio_range_m)) return bad("radio_range_m");
    } else if (key == "buffer_capacity") {
        if (!parse_num(value, cfg.buffer_capacity)) return bad("buffer_capacity");
    } else if (key == "blocker.rate_threshold") {
        if (!parse_num(value, cfg.blocker.rate_threshold))
            return bad("blocker.rate_threshold");
    } else if (key == "blocker.allowance") {
        if (!parse_num(value, cfg.blocker.allowance))
            return bad("blocker.allowance");
    } else if (key == "blocker.block_base") {
        if (!parse_num(value, cfg.blocker.block_base))
            return bad("blocker.block_base");
    } else if (key == "blocker.stage_decay") {
        if (!parse_bool(value, cfg.blocker.stage_decay))
            return bad("blocker.stage_decay");
    } else if (key == "blocker.decay_after") {
        if (!parse_num(value, cfg.blocker.decay_after))
            return bad("blocker.decay_after");
    } else if (key == "link_all_predecessors") {
        if (!parse_bool(value, cfg.link_all_predecessors))
            return bad("link_all_predecessors");
    } else {
        return "unknown key '" + std::string(key) + "'";
    }
    return std::nullopt;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.push_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i)
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    return out;
}

inline std::optional<std::string> parse_adversary(std::string_view value,
                                                  ScenarioAdversary& out) {
    auto tokens = split_ws(value);
    if (tokens.empty()) return "adversary needs a kind";
    auto kind = adversary_from_string(tokens[0]);
    if (!kind) return "unknown adversary kind '" + std::string(tokens[0]) + "'";
    out.profile.kind = *kind;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
        std::string_view t = tokens[i];
        auto eq = t.find('=');
        if (eq == std::string_view::npos)
            return "expected key=value in adversary spec, got '" +
                   std::string(t) + "'";
        std::string_view k = t.substr(0, eq), v = t.substr(eq + 1);
        if (k == "intensity") {
            if (!parse_num(v, out.profile.intensity) ||
                out.profile.intensity <= 0)
                return std::string("invalid adversary intensity");
        } else if (k == "targets") {
            for (std::string_view item : split_on(v, ',')) {
                if (item.empty()) return std::string("empty adversary target");
                if (item.front() == '@') {
                    std::string_view g = item.substr(1);
                    if (!known_group(g))
                        return "unknown target group '" + std::string(item) + "'";
                    out.groups.emplace_back(g);
                } else {
                    NodeId id = 0;
                    if (!parse_num(item, id) || id == 0)
                        return "invalid target id '" + std::string(item) + "'";
                    out.profile.targets.push_back(id);
                }
            }
        } else {
            return "unknown adversary option '" + std::string(k) + "'";
        }
    }
    return std::nullopt;
}

} // namespace detail

inline Result<ScenarioSuite, ParseError> parse_scenario(std::istream& in) {
    ScenarioSuite suite;
    std::vector<std::pair<int, std::string>> run_lines;
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            return ParseError{lineno, "expected key = value"};
        std::string_view key = detail::trim(line.substr(0, eq));
        std::string_view value = detail::trim(line.substr(eq + 1));
        if (key.empty()) return ParseError{lineno, "empty key"};

        if (key == "name") {
            if (value.empty()) return ParseError{lineno, "empty scenario name"};
            suite.name = std::string(value);
        } else if (key == "out_dir") {
            suite.out_dir = std::string(value);
        } else if (key == "run") {
            run_lines.emplace_back(lineno, std::string(value));
        } else if (key == "adversary") {
            ScenarioAdversary adv;
            if (auto err = detail::parse_adversary(value, adv))
                return ParseError{lineno, *err};
            suite.adversaries.push_back(std::move(adv));
            suite.custom_adversaries = true;
        } else {
            if (auto err = detail::apply_kv(suite.base, key, value))
                return ParseError{lineno, *err};
        }
    }

    // Runs expand against the complete base so ordering in the file never
    // changes the outcome.
    for (const auto& [ln, overrides] : run_lines) {
        SimConfig cfg = suite.base;
        for (std::string_view t : detail::split_ws(overrides)) {
            auto eq = t.find('=');
            if (eq == std::string_view::npos)
                return ParseError{ln, "expected key=value in run overrides, got '" +
                                          std::string(t) + "'"};
            if (auto err = detail::apply_kv(cfg, detail::trim(t.substr(0, eq)),
                                            detail::trim(t.substr(eq + 1))))
                return ParseError{ln, *err};
        }
        suite.runs.push_back(cfg);
    }
    if (suite.runs.empty()) suite.runs.push_back(suite.base);
    return suite;
}

inline Result<ScenarioSuite, ParseError> parse_scenario(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in);
}

// Turn symbolic @group targets into concrete node ids for a built world.
inline std::vector<AdversaryProfile> resolve_adversaries(
    const std::vector<ScenarioAdversary>& list, const World& w) {
    std::vector<AdversaryProfile> out;
    for (const ScenarioAdversary& sa : list) {
        AdversaryProfile p = sa.profile;
        for (const std::string& g : sa.groups) {
            const std::vector<NodeId>* ids = nullptr;
            if (g == "sensors") ids = &w.sensor_ids;
            else if (g == "relays") ids = &w.relay_ids;
            else if (g == "doctors") ids = &w.doctor_ids;
            else if (g == "paramedics") ids = &w.paramedic_ids;
            else if (g == "pharmacy") ids = &w.pharmacy_ids;
            if (ids) p.targets.insert(p.targets.end(), ids->begin(), ids->end());
        }
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace holoblock
