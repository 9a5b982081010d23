#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "sim.hpp"

namespace holoblock {

// Default validation cost: each transaction checks a log-sized neighborhood.
inline double v_default(int gamma, int m) {
    return gamma * std::log2(static_cast<double>(m) + 1.0);
}

// Delay priced into operation counts at 1 ms = 1 operation.
inline double delay_ops(const DelayModel& d) {
    return d.propagation_ms + d.processing_ms;
}

// Closed-form predicted operation count for one node's workload.
inline double model_complexity(Mode mode, const ComplexityParams& p, int m,
                               int gamma, const DelayModel& delay = {}) {
    double c = p.c;
    double g = gamma;
    double lg = gamma <= 1 ? 0.0 : std::log2(g);
    double v = v_default(gamma, m);
    double dd = delay_ops(delay);
    switch (mode) {
        case Mode::BlockchainOnly:
            // every node re-validates, and the k-th check walks k history
            return m * g * (c + g);
        case Mode::HolochainOnly:
            return c + lg + v + dd;
        case Mode::Hybrid:
            return (c + p.z) * (g + lg + v + dd);
    }
    return 0;
}

struct MetricSample {
    Timestamp time = 0;
    Mode mode = Mode::Hybrid;
    int m = 0;
    int gamma = 0;
    double op_count = 0;
    std::uint64_t bytes_stored_total = 0;
    std::uint64_t bytes_stored_max_node = 0;
    std::vector<double> latency_samples;
    std::uint64_t delivered_count = 0;
    std::uint64_t offered_count = 0;
    std::vector<double> route_time_samples;
};

struct StorageBreakdown {
    std::vector<std::uint64_t> per_node;   // indexed by node id, [0] unused
    std::uint64_t chain_bytes = 0;
    std::uint64_t dht_bytes = 0;
    std::uint64_t buffer_bytes = 0;
    std::uint64_t ledger_bytes = 0;        // all replicas summed
    std::uint64_t data_ledger_bytes = 0;   // committed payloads, all replicas
    std::uint64_t total = 0;
    std::uint64_t max_node = 0;
};

// Byte accounting across everything a run leaves resident: per-origin chains
// with their receipt records, replica copies in the DHT, consumer buffers,
// and the authority ledger at its configured replication.
inline StorageBreakdown measure_storage(const World& w,
                                        std::uint64_t bc_data_bytes = 0) {
    StorageBreakdown s;
    s.per_node.assign(static_cast<std::size_t>(w.m()) + 1, 0);

    for (const Node& n : w.nodes) {
        std::uint64_t b = 0;
        for (const ChainElement& e : n.chain.chain) b += canonical_bytes(e).size();
        for (const Bytes& r : n.chain.side_data) b += r.size();
        s.chain_bytes += b;
        s.per_node[n.id] += b;
    }

    for (Zone z : {Zone::SNZ, Zone::RNZ})
        for (const auto& [sk, e] : w.dht.zone_contents(z)) {
            std::uint64_t one = entry_bytes(e);
            s.dht_bytes += one * e.stored_at.size();
            for (NodeId h : e.stored_at) s.per_node[h] += one;
        }

    for (const auto& [id, buf] : w.buffers) {
        s.buffer_bytes += buf.used();
        s.per_node[id] += buf.used();
    }

    if (w.ledger) {
        std::uint64_t lb = w.ledger->ledger_bytes();
        s.ledger_bytes = lb * w.ledger->replica_count();
        if (w.cfg.mode == Mode::BlockchainOnly) {
            // Full replication: every participant keeps the ledger plus the
            // payload data that rides on it.
            for (const Node& n : w.nodes)
                s.per_node[n.id] += lb + bc_data_bytes;
            s.data_ledger_bytes = bc_data_bytes * w.nodes.size();
        } else if (w.cfg.mode == Mode::Hybrid) {
            const AuthorityIds& a = w.ledger->authorities();
            for (NodeId id : {a.sra, a.rra, a.cc}) s.per_node[id] += lb;
        }
    }

    s.total = s.chain_bytes + s.dht_bytes + s.buffer_bytes + s.ledger_bytes +
              s.data_ledger_bytes;
    for (std::uint64_t b : s.per_node) s.max_node = std::max(s.max_node, b);
    return s;
}

inline MetricSample measure(const World& w, const RunArtifacts& a) {
    MetricSample s;
    s.time = a.end_time;
    s.mode = w.cfg.mode;
    s.m = w.cfg.num_nodes;
    s.gamma = w.cfg.transactions_per_node;
    s.op_count = a.counters.data_ops;
    StorageBreakdown st = measure_storage(w, a.bc_data_bytes);
    s.bytes_stored_total = st.total;
    s.bytes_stored_max_node = st.max_node;
    s.latency_samples = a.latency_ms;
    s.delivered_count = a.counters.delivered_elements;
    s.offered_count = a.counters.offered;
    s.route_time_samples = a.route_ms;
    return s;
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double sum = 0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

inline double throughput_norm(const MetricSample& s) {
    if (s.offered_count == 0) return 0.0;
    return static_cast<double>(s.delivered_count) /
           static_cast<double>(s.offered_count);
}

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---- CSV emission ---------------------------------------------------------

inline void write_complexity_header(std::ostream& os) {
    os << "mode,m,gamma,predicted,empirical\n";
}

inline void write_complexity_row(std::ostream& os, Mode mode, int m, int gamma,
                                 double predicted, double empirical) {
    os << to_string(mode) << ',' << m << ',' << gamma << ',' << fmt_g(predicted)
       << ',' << fmt_g(empirical) << '\n';
}

inline void write_perf_header(std::ostream& os) {
    os << "mode,m,latency_ms,throughput_norm,route_ms,bytes_total,bytes_max_node\n";
}

inline void write_perf_row(std::ostream& os, const MetricSample& s) {
    os << to_string(s.mode) << ',' << s.m << ',' << fmt_g(mean_of(s.latency_samples))
       << ',' << fmt_g(throughput_norm(s)) << ','
       << fmt_g(mean_of(s.route_time_samples)) << ',' << s.bytes_stored_total
       << ',' << s.bytes_stored_max_node << '\n';
}

inline void write_blocker_header(std::ostream& os) {
    os << "t_min,node,stage,action\n";
}

inline void write_blocker_row(std::ostream& os, const BlockerRow& r) {
    os << fmt_g(r.t_min) << ',' << r.node << ',' << r.stage << ',' << r.action
       << '\n';
}

inline void write_trace_header(std::ostream& os) {
    os << "time,op,actor,outcome\n";
}

inline void write_trace_row(std::ostream& os, const TraceRow& r) {
    os << r.time << ',' << r.op << ',' << r.actor << ',' << r.outcome << '\n';
}

} // namespace holoblock
