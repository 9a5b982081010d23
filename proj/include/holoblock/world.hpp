#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <initializer_list>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dht.hpp"
#include "dos_guard.hpp"
#include "ledger.hpp"
#include "types.hpp"

namespace holoblock {

struct DelayModel {
    double propagation_ms = 5.0;    // per hop
    double processing_ms = 1.0;     // per operation
    double consensus_ms = 50.0;     // interval between commit rounds
};

struct ComplexityParams {
    double c = 1.0;   // fixed lookup confidence term
    int z = 4;        // authority batch size
};

enum class AdversaryKind { Impersonator, Tamperer, Flooder, ManInMiddle };

inline const char* to_string(AdversaryKind k) {
    switch (k) {
        case AdversaryKind::Impersonator: return "impersonator";
        case AdversaryKind::Tamperer:     return "tamperer";
        case AdversaryKind::Flooder:      return "flooder";
        case AdversaryKind::ManInMiddle:  return "man_in_middle";
    }
    return "?";
}

struct AdversaryProfile {
    AdversaryKind kind = AdversaryKind::Impersonator;
    std::vector<NodeId> targets;
    double intensity = 1.0;
};

struct SimConfig {
    std::uint64_t seed = 1;
    Mode mode = Mode::Hybrid;
    int num_nodes = 50;               // m, includes the three authorities
    int transactions_per_node = 10;   // gamma
    double attacker_fraction = 0.0;
    DelayModel delay;
    ComplexityParams complexity;
    Timestamp duration_ms = 20'000;

    int replication_factor = 3;
    int fanout = 2;
    Timestamp gossip_interval_ms = 1'000;
    Timestamp telemetry_interval_ms = 5'000;
    Timestamp refresh_interval_ms = 10'000;
    Timestamp rate_window_ms = 1'000;   // guard observation cadence
    int ttl = 16;
    std::size_t queue_capacity = 64;
    std::size_t payload_bytes = 224;
    double region_m = 1000.0;
    double radio_range_m = 200.0;
    std::size_t buffer_capacity = 1 << 20;
    BlockerConfig blocker;
    bool link_all_predecessors = true;
};

inline std::optional<std::string> validate_config(const SimConfig& cfg) {
    if (cfg.num_nodes < 4)
        return "num_nodes must be at least 4 (three authorities plus one node)";
    if (cfg.transactions_per_node < 0)
        return "transactions_per_node must be non-negative";
    if (cfg.attacker_fraction < 0.0 || cfg.attacker_fraction > 1.0)
        return "attacker_fraction must lie in [0,1]";
    if (cfg.duration_ms <= 0) return "duration_ms must be positive";
    if (cfg.delay.propagation_ms < 0 || cfg.delay.processing_ms < 0 ||
        cfg.delay.consensus_ms <= 0)
        return "delay parameters must be non-negative (consensus interval positive)";
    if (cfg.complexity.c < 0) return "complexity c must be non-negative";
    if (cfg.complexity.z < 1) return "complexity z must be at least 1";
    if (cfg.replication_factor < 1) return "replication_factor must be at least 1";
    if (cfg.fanout < 1) return "fanout must be at least 1";
    if (cfg.gossip_interval_ms <= 0 || cfg.telemetry_interval_ms <= 0 ||
        cfg.refresh_interval_ms <= 0 || cfg.rate_window_ms <= 0)
        return "tick intervals must be positive";
    if (cfg.ttl < 1) return "ttl must be at least 1";
    if (cfg.queue_capacity < 1) return "queue_capacity must be at least 1";
    if (cfg.payload_bytes < 1 || cfg.payload_bytes > kMaxChainPayload)
        return "payload_bytes must lie in [1,244]";
    if (cfg.region_m <= 0 || cfg.radio_range_m <= 0)
        return "region and radio range must be positive";
    if (cfg.buffer_capacity < 1) return "buffer_capacity must be at least 1";
    return std::nullopt;
}

struct Node {
    NodeId id = kNoNode;
    NodeKind kind = NodeKind::Sensor;
    GeoLocation loc;
    KeyPair keys;
    Certificate cert;
    HBRecord record;
    NodeState chain;
    std::optional<Section> section;
};

// One record per sender whose data a doctor has shared onward; refresh ticks
// push any elements published after delivered_through to every subscriber.
struct TransferRecord {
    NodeId sn = kNoNode;
    Digest element_key{};
    Timestamp shared_at = 0;
    std::vector<NodeId> subscribers;      // sorted, unique
    std::uint64_t delivered_through = 0;  // count of sequences already pushed
};

inline constexpr std::uint16_t kUnreachable = 0xffff;

// Largest-remainder split of n into buckets; ties keep declaration order.
inline std::vector<int> proportional_split(int n, std::initializer_list<double> weights) {
    std::vector<double> w(weights);
    std::vector<int> out(w.size(), 0);
    std::vector<std::pair<double, std::size_t>> rem;
    int used = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        double exact = n * w[i];
        out[i] = static_cast<int>(exact);
        used += out[i];
        rem.emplace_back(exact - out[i], i);
    }
    std::stable_sort(rem.begin(), rem.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; used < n; ++i, ++used) out[rem[i % rem.size()].second] += 1;
    return out;
}

inline void ensure_min_one(std::vector<int>& counts, std::size_t idx) {
    if (counts[idx] > 0) return;
    std::size_t big = 0;
    for (std::size_t i = 1; i < counts.size(); ++i)
        if (counts[i] > counts[big]) big = i;
    if (big != idx && counts[big] > 1) {
        counts[big] -= 1;
        counts[idx] += 1;
    }
}

struct World {
    SimConfig cfg;
    KeyStore keystore;                       // must outlive the ledger
    std::vector<Node> nodes;                 // nodes[id - 1]
    std::optional<AuthorityLedger> ledger;
    ZonedDht dht;
    std::map<NodeId, TemporaryBuffer> buffers;     // doctors only
    std::map<NodeId, TransferRecord> transfers;    // keyed by sender id
    std::map<NodeId, std::uint64_t> bc_sequences;  // ledger-mode sequence counters
    std::vector<std::vector<NodeId>> adjacency;    // adjacency[id - 1], sorted
    std::vector<std::vector<std::uint16_t>> hop;   // hop[a - 1][b - 1]
    std::vector<AdversaryProfile> adversaries;
    std::vector<NodeId> sensor_ids, relay_ids, doctor_ids, paramedic_ids, pharmacy_ids;
    std::vector<std::string> action_log;
    std::mt19937_64 rng;
    Timestamp now = 0;

    World() = default;
    World(const World&) = delete;             // the dht hook captures this
    World& operator=(const World&) = delete;

    Node& node(NodeId id) { return nodes[id - 1]; }
    const Node& node(NodeId id) const { return nodes[id - 1]; }
    int m() const { return static_cast<int>(nodes.size()); }

    std::uint16_t hops_between(NodeId a, NodeId b) const { return hop[a - 1][b - 1]; }

    // Highest sequence the sender has published, if any.
    std::optional<std::uint64_t> latest_sequence(NodeId sn) const {
        if (cfg.mode == Mode::BlockchainOnly) {
            auto it = bc_sequences.find(sn);
            if (it == bc_sequences.end() || it->second == 0) return std::nullopt;
            return it->second - 1;
        }
        std::uint64_t next = next_sequence(node(sn).chain, sn);
        if (next == 0) return std::nullopt;
        return next - 1;
    }

    NodeId nearest_of(const std::vector<NodeId>& pool, NodeId to) const {
        NodeId best = kNoNode;
        double best_d = 0;
        for (NodeId n : pool) {
            if (n == to) continue;
            double d = distance(node(n).loc, node(to).loc);
            if (best == kNoNode || d < best_d || (d == best_d && n < best)) {
                best = n;
                best_d = d;
            }
        }
        return best;
    }
};

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

inline std::vector<std::uint16_t> bfs_hops(const std::vector<std::vector<NodeId>>& adj,
                                           NodeId src) {
    std::vector<std::uint16_t> d(adj.size(), kUnreachable);
    std::deque<NodeId> q{src};
    d[src - 1] = 0;
    while (!q.empty()) {
        NodeId u = q.front();
        q.pop_front();
        for (NodeId v : adj[u - 1])
            if (d[v - 1] == kUnreachable) {
                d[v - 1] = static_cast<std::uint16_t>(d[u - 1] + 1);
                q.push_back(v);
            }
    }
    return d;
}

} // namespace detail

inline Result<std::unique_ptr<World>, std::string> build_world(const SimConfig& cfg) {
    if (auto err = validate_config(cfg)) return *err;

    auto w = std::make_unique<World>();
    w->cfg = cfg;
    w->rng.seed(cfg.seed);
    const int m = cfg.num_nodes;
    const AuthorityIds auth{};

    // Population shape: three authorities, then sensors, personal devices,
    // base stations, and receivers, carved by fixed proportions.
    const int regular = m - 3;
    std::vector<int> kinds = proportional_split(regular, {0.45, 0.10, 0.10, 0.35});
    ensure_min_one(kinds, 0);
    if (regular >= 2) ensure_min_one(kinds, 3);
    std::vector<int> rn_split = proportional_split(kinds[3], {0.40, 0.35, 0.25});
    if (kinds[3] >= 1) ensure_min_one(rn_split, 0);
    std::vector<int> sn_split = proportional_split(kinds[0], {0.15, 0.10, 0.50, 0.25});

    std::vector<NodeKind> layout;
    layout.reserve(m);
    layout.push_back(NodeKind::AuthoritySRA);
    layout.push_back(NodeKind::AuthorityRRA);
    layout.push_back(NodeKind::AuthorityCC);
    layout.insert(layout.end(), kinds[0], NodeKind::Sensor);
    layout.insert(layout.end(), kinds[1], NodeKind::PersonalDevice);
    layout.insert(layout.end(), kinds[2], NodeKind::BaseStation);
    layout.insert(layout.end(), rn_split[0], NodeKind::Doctor);
    layout.insert(layout.end(), rn_split[1], NodeKind::Paramedic);
    layout.insert(layout.end(), rn_split[2], NodeKind::Pharmacy);

    std::uniform_real_distribution<double> coord(0.0, cfg.region_m);
    std::uniform_int_distribution<int> energy(50, 100);

    std::map<NodeId, KeyPair> authority_keys;
    w->nodes.resize(m);
    for (int i = 0; i < m; ++i) {
        Node& n = w->nodes[i];
        n.id = static_cast<NodeId>(i + 1);
        n.kind = layout[i];
        n.loc = {coord(w->rng), coord(w->rng)};
        n.keys = KeyStore::derive_pair(cfg.seed, n.id);
        w->keystore.register_pair(n.keys);
        NodeId assoc = is_authority(n.kind) ? kNoNode
                     : is_sender_kind(n.kind) ? auth.sra
                                              : auth.rra;
        n.record = HBRecord{n.id,
                            n.kind,
                            1.0,
                            0,
                            0,
                            std::nullopt,
                            n.loc,
                            assoc,
                            static_cast<double>(energy(w->rng))};
        if (is_authority(n.kind)) authority_keys[n.id] = n.keys;
    }

    // Certificates are issued by the association authority over the
    // subject/issuer pair.
    for (Node& n : w->nodes) {
        if (is_authority(n.kind)) continue;
        NodeId issuer = n.record.association;
        const KeyPair& ik = w->nodes[issuer - 1].keys;
        n.cert = Certificate{n.id, issuer,
                             sign(ik.private_key, certificate_core(n.id, issuer)), true};
    }

    // Radio topology: nodes hear each other within range; isolated components
    // get stitched together through their closest cross pair.
    w->adjacency.assign(m, {});
    detail::UnionFind uf(m);
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b)
            if (distance(w->nodes[a].loc, w->nodes[b].loc) <= cfg.radio_range_m) {
                w->adjacency[a].push_back(static_cast<NodeId>(b + 1));
                w->adjacency[b].push_back(static_cast<NodeId>(a + 1));
                uf.unite(a, b);
            }
    for (;;) {
        int best_a = -1, best_b = -1;
        double best_d = 0;
        for (int a = 0; a < m; ++a)
            for (int b = a + 1; b < m; ++b) {
                if (uf.find(a) == uf.find(b)) continue;
                double d = distance(w->nodes[a].loc, w->nodes[b].loc);
                if (best_a < 0 || d < best_d) {
                    best_a = a;
                    best_b = b;
                    best_d = d;
                }
            }
        if (best_a < 0) break;
        w->adjacency[best_a].push_back(static_cast<NodeId>(best_b + 1));
        w->adjacency[best_b].push_back(static_cast<NodeId>(best_a + 1));
        uf.unite(best_a, best_b);
    }
    for (auto& a : w->adjacency) std::sort(a.begin(), a.end());

    w->hop.resize(m);
    for (int i = 0; i < m; ++i)
        w->hop[i] = detail::bfs_hops(w->adjacency, static_cast<NodeId>(i + 1));

    for (const Node& n : w->nodes) {
        switch (n.kind) {
            case NodeKind::Sensor:         w->sensor_ids.push_back(n.id); break;
            case NodeKind::PersonalDevice:
            case NodeKind::BaseStation:    w->relay_ids.push_back(n.id); break;
            case NodeKind::Doctor:         w->doctor_ids.push_back(n.id); break;
            case NodeKind::Paramedic:      w->paramedic_ids.push_back(n.id); break;
            case NodeKind::Pharmacy:       w->pharmacy_ids.push_back(n.id); break;
            default: break;
        }
    }

    w->ledger.emplace(auth, &w->keystore, authority_keys);
    w->ledger->set_replica_count(cfg.mode == Mode::BlockchainOnly ? m
                               : cfg.mode == Mode::Hybrid         ? 3
                                                                  : 0);

    // Genesis registration: every regular node enrolls before traffic starts.
    // The chain-free mode keeps the ledger empty by design.
    if (cfg.mode != Mode::HolochainOnly) {
        for (Node& n : w->nodes) {
            if (is_authority(n.kind)) continue;
            RegistrationRequest req{n.record, n.keys.public_key, n.cert};
            auto r = is_sender_kind(n.kind) ? w->ledger->register_sender(req, 0)
                                            : w->ledger->register_receiver(req, 0);
            if (!r.ok())
                return std::string("genesis registration failed for node ") +
                       std::to_string(n.id);
        }
    }

    w->dht = ZonedDht(DhtConfig{cfg.replication_factor, cfg.fanout,
                                static_cast<int>(cfg.complexity.c)});
    {
        // Sensors spread over the patient sections in proportion; receivers
        // join their professional section.
        std::size_t at = 0;
        const Section sections[] = {Section::ODP, Section::HRP, Section::RMP,
                                    Section::AT};
        for (int s = 0; s < 4; ++s)
            for (int k = 0; k < sn_split[s]; ++k) {
                NodeId id = w->sensor_ids[at++];
                w->dht.join(id, sections[s]);
                w->node(id).section = sections[s];
            }
        for (NodeId id : w->doctor_ids) {
            w->dht.join(id, Section::Doctors);
            w->node(id).section = Section::Doctors;
        }
        for (NodeId id : w->paramedic_ids) {
            w->dht.join(id, Section::Paramedics);
            w->node(id).section = Section::Paramedics;
        }
        for (NodeId id : w->pharmacy_ids) {
            w->dht.join(id, Section::Pharmacy);
            w->node(id).section = Section::Pharmacy;
        }
    }

    if (cfg.mode == Mode::Hybrid) {
        World* raw = w.get();
        w->dht.set_authorization(
            [raw](NodeId n) { return raw->ledger->is_authorized(n, raw->now); });
    }

    for (NodeId id : w->doctor_ids)
        w->buffers.emplace(id, TemporaryBuffer(id, cfg.buffer_capacity));

    // Default adversary population: floor(fraction * m) impersonators, each
    // pinned to a sensor identity chosen without replacement.
    int n_attack = static_cast<int>(cfg.attacker_fraction * m);
    if (n_attack > 0 && !w->sensor_ids.empty()) {
        std::vector<NodeId> victims = w->sensor_ids;
        std::shuffle(victims.begin(), victims.end(), w->rng);
        for (int i = 0; i < n_attack; ++i)
            w->adversaries.push_back(
                {AdversaryKind::Impersonator, {victims[i % victims.size()]}, 1.0});
    }

    return w;
}

} // namespace holoblock
