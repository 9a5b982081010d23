#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>

#include "world.hpp"

namespace holoblock {

// Wire form of a published element's authentication trailer, carried in the
// auxiliary validation bits after the one-byte application rule:
//   [0]      rule byte (first byte of the payload hash)
//   [1..33)  presented public key of the claimed origin
//   [33..65) signature over (payload, origin, sequence) with the matching key
// Anyone can present a self-consistent key pair; binding the key to the
// claimed identity is exactly what the authority ledger adds.
inline constexpr std::size_t kAuthTrailerBytes = 65;

inline Bytes signature_core(const Bytes& payload, NodeId origin, std::uint64_t seq) {
    Bytes b;
    put_blob(b, payload);
    put_u32le(b, origin);
    put_u64le(b, seq);
    return b;
}

inline TransactionData make_signed_transaction(NodeId origin, std::uint64_t seq,
                                               Bytes payload, const KeyPair& keys) {
    TransactionData t;
    t.extra_validation_bits = expected_extra_bits(payload);
    t.extra_validation_bits.insert(t.extra_validation_bits.end(),
                                   keys.public_key.begin(), keys.public_key.end());
    Bytes sig = sign(keys.private_key, signature_core(payload, origin, seq));
    t.extra_validation_bits.insert(t.extra_validation_bits.end(), sig.begin(),
                                   sig.end());
    t.payload = std::move(payload);
    t.origin = origin;
    t.sequence = seq;
    return t;
}

inline Bytes presented_key(const TransactionData& t) {
    if (t.extra_validation_bits.size() < kAuthTrailerBytes) return {};
    return Bytes(t.extra_validation_bits.begin() + 1,
                 t.extra_validation_bits.begin() + 33);
}

inline Bytes presented_signature(const TransactionData& t) {
    if (t.extra_validation_bits.size() < kAuthTrailerBytes) return {};
    return Bytes(t.extra_validation_bits.begin() + 33,
                 t.extra_validation_bits.begin() + 65);
}

// The signature checks out against whatever key the sender presented.
inline bool self_consistent(const KeyStore& ks, const TransactionData& t) {
    Bytes pub = presented_key(t);
    if (pub.empty()) return false;
    return ks.verify(pub, signature_core(t.payload, t.origin, t.sequence),
                     presented_signature(t));
}

// The presented key is the one the ledger registered for the claimed origin.
inline bool bound_to_registration(const World& w, const TransactionData& t) {
    const Bytes* reg = w.ledger->public_key_of(t.origin);
    if (!reg) return false;
    return presented_key(t) == *reg && self_consistent(w.keystore, t);
}

// The presented key matches the origin's actual agent key.  This is the check
// a consumer can make from its own directory, even without any ledger.
inline bool bound_to_agent(const World& w, const TransactionData& t) {
    if (t.origin == kNoNode || t.origin > static_cast<NodeId>(w.m())) return false;
    return presented_key(t) == w.node(t.origin).keys.public_key &&
           self_consistent(w.keystore, t);
}

enum class PublishError { Unauthorized, ValidationFailed, NoSection };
enum class FetchError { Unauthorized, NotFound, IntegrityFailure };
enum class ForwardError { Unauthorized, ForbiddenEdge, NotFound, IntegrityFailure };
enum class RouteSelectError { Unauthorized, NoRoute };

inline const char* to_string(PublishError e) {
    switch (e) {
        case PublishError::Unauthorized:     return "Unauthorized";
        case PublishError::ValidationFailed: return "ValidationFailed";
        case PublishError::NoSection:        return "NoSection";
    }
    return "?";
}

inline const char* to_string(FetchError e) {
    switch (e) {
        case FetchError::Unauthorized:     return "Unauthorized";
        case FetchError::NotFound:         return "NotFound";
        case FetchError::IntegrityFailure: return "IntegrityFailure";
    }
    return "?";
}

inline const char* to_string(ForwardError e) {
    switch (e) {
        case ForwardError::Unauthorized:     return "Unauthorized";
        case ForwardError::ForbiddenEdge:    return "ForbiddenEdge";
        case ForwardError::NotFound:         return "NotFound";
        case ForwardError::IntegrityFailure: return "IntegrityFailure";
    }
    return "?";
}

struct PublishOutcome {
    TransactionData tx;
    Digest element_hash{};
    std::optional<DhtEntry> entry;   // engaged in zone modes
    Urgency urgency = 0;
};

// An adversary publishes with its own keys and a fabricated chain; honest
// callers leave both fields null.
struct PublishContext {
    const KeyPair* keys = nullptr;
    NodeState* chain = nullptr;
    bool immediate_replication = true;
};

inline Result<PublishOutcome, PublishError>
sn_publish(World& w, NodeId sn, Bytes payload, Timestamp now, PublishContext ctx = {}) {
    Node& n = w.node(sn);
    const KeyPair& keys = ctx.keys ? *ctx.keys : n.keys;
    const bool ledger_mode = w.cfg.mode != Mode::HolochainOnly;

    std::uint64_t seq;
    NodeState* chain = ctx.chain ? ctx.chain : &n.chain;
    if (w.cfg.mode == Mode::BlockchainOnly)
        seq = w.bc_sequences[sn];
    else
        seq = next_sequence(*chain, sn);

    TransactionData tx = make_signed_transaction(sn, seq, std::move(payload), keys);

    if (ledger_mode) {
        if (!w.ledger->is_authorized(sn, now)) return PublishError::Unauthorized;
        if (!bound_to_registration(w, tx)) return PublishError::Unauthorized;
    } else if (!self_consistent(w.keystore, tx)) {
        return PublishError::Unauthorized;
    }

    PublishOutcome out;
    if (w.cfg.mode == Mode::BlockchainOnly) {
        if (tx.payload.size() > kMaxChainPayload) return PublishError::ValidationFailed;
        if (!extra_bits_ok(tx.extra_validation_bits, tx.payload))
            return PublishError::ValidationFailed;
        w.bc_sequences[sn] = seq + 1;
        out.element_hash = sha256(canonical_bytes(tx));
        out.tx = std::move(tx);
        return out;
    }

    ChainConfig ccfg{w.cfg.link_all_predecessors};
    auto appended = append_transition(*chain, tx, now, ccfg);
    if (!appended.ok()) return PublishError::ValidationFailed;
    const ChainElement& element = chain->chain.back();
    out.element_hash = element_hash(element);

    if (!n.section) return PublishError::NoSection;
    Urgency urg = w.dht.urgency_for(sn, *n.section);
    auto put = ctx.immediate_replication
                   ? w.dht.put(*n.section, element, urg)
                   : w.dht.put_at(*n.section, element, urg, sn);
    if (!put.ok()) {
        switch (put.error()) {
            case DhtError::NotRegistered: return PublishError::Unauthorized;
            default:                      return PublishError::NoSection;
        }
    }
    out.entry = put.value();
    out.urgency = urg;
    out.tx = element.data;
    return out;
}

struct FetchOutcome {
    DhtEntry entry;
    NodeId served_by = kNoNode;
    Zone served_from = Zone::SNZ;
    int snz_lookup_steps = 0;
    int rnz_lookup_steps = 0;
    bool promoted = false;
    int evicted = 0;
};

namespace detail {

inline NodeId nearest_holder(const World& w, const DhtEntry& e, NodeId to) {
    return w.nearest_of(e.stored_at, to);
}

inline void note_subscription(World& w, NodeId sn, const Digest& shared_key,
                              std::uint64_t seq, NodeId subscriber, Timestamp now) {
    TransferRecord& tr = w.transfers[sn];
    tr.sn = sn;
    tr.element_key = shared_key;
    tr.shared_at = now;
    auto pos = std::lower_bound(tr.subscribers.begin(), tr.subscribers.end(),
                                subscriber);
    if (pos == tr.subscribers.end() || *pos != subscriber)
        tr.subscribers.insert(pos, subscriber);
    tr.delivered_through = std::max(tr.delivered_through, seq + 1);
}

} // namespace detail

// Fetch one specific element.  The receiver zone replica is consulted first;
// only on a miss does the request reach back into the sender zone.
inline Result<FetchOutcome, FetchError>
rn_fetch_key(World& w, NodeId rn, NodeId origin, std::uint64_t seq, Timestamp now,
             bool immediate_replication = true) {
    if (w.cfg.mode == Mode::BlockchainOnly) return FetchError::NotFound;
    Node& r = w.node(rn);
    if (w.cfg.mode == Mode::Hybrid && !w.ledger->is_authorized(rn, now))
        return FetchError::Unauthorized;
    // Requests originate from the doctor section only; other receivers get
    // data forwarded to them.
    if (r.kind != NodeKind::Doctor) return FetchError::Unauthorized;

    Digest k_rnz = entry_key(Zone::RNZ, origin, seq);
    Digest k_snz = entry_key(Zone::SNZ, origin, seq);

    FetchOutcome out;
    auto rnz = w.dht.lookup(Zone::RNZ, k_rnz);
    out.rnz_lookup_steps = rnz.steps;
    if (rnz.entry) {
        if (!verify_entry(*rnz.entry)) {
            w.dht.quarantine(rnz.entry->section, k_rnz);
            return FetchError::IntegrityFailure;
        }
        out.entry = *rnz.entry;
        out.served_from = Zone::RNZ;
        out.served_by = detail::nearest_holder(w, out.entry, rn);
        detail::note_subscription(w, origin, k_rnz, seq, rn, now);
        return out;
    }

    auto snz = w.dht.lookup(Zone::SNZ, k_snz);
    out.snz_lookup_steps = snz.steps;
    if (!snz.entry) return FetchError::NotFound;
    const DhtEntry& e = *snz.entry;
    Section src_section = e.section;

    bool authentic = w.cfg.mode == Mode::Hybrid ? bound_to_registration(w, e.value.data)
                                                : bound_to_agent(w, e.value.data);
    if (!verify_entry(e) || !authentic) {
        w.dht.quarantine(src_section, k_snz);
        return FetchError::IntegrityFailure;
    }

    out.entry = e;
    out.served_by = detail::nearest_holder(w, e, rn);

    auto buf = w.buffers.find(rn);
    if (buf != w.buffers.end()) out.evicted = buf->second.add(e);

    Urgency urg = e.urgency;
    ChainElement value = e.value;
    auto promoted = immediate_replication
                        ? w.dht.put(Section::Doctors, std::move(value), urg)
                        : w.dht.put_at(Section::Doctors, std::move(value), urg, rn);
    if (promoted.ok()) out.promoted = true;

    detail::note_subscription(w, origin, k_rnz, seq, rn, now);
    return out;
}

// Fetch the sender's most recent element.
inline Result<FetchOutcome, FetchError>
rn_fetch(World& w, NodeId rn, NodeId sn, Timestamp now,
         bool immediate_replication = true) {
    auto latest = w.latest_sequence(sn);
    if (!latest) return FetchError::NotFound;
    return rn_fetch_key(w, rn, sn, *latest, now, immediate_replication);
}

inline bool forward_edge_allowed(Section from, Section to) {
    return (from == Section::Doctors && to == Section::Paramedics) ||
           (from == Section::Doctors && to == Section::Pharmacy) ||
           (from == Section::Paramedics && to == Section::Pharmacy);
}

struct ForwardOutcome {
    DhtEntry entry;
    Section to_section = Section::Paramedics;
};

inline Result<ForwardOutcome, ForwardError>
rn_forward(World& w, NodeId from, NodeId to, NodeId origin, std::uint64_t seq,
           Timestamp now, bool immediate_replication = true) {
    if (w.cfg.mode == Mode::BlockchainOnly) return ForwardError::NotFound;
    Node& nf = w.node(from);
    Node& nt = w.node(to);
    if (w.cfg.mode == Mode::Hybrid &&
        (!w.ledger->is_authorized(from, now) || !w.ledger->is_authorized(to, now)))
        return ForwardError::Unauthorized;
    if (!nf.section || !nt.section ||
        !forward_edge_allowed(*nf.section, *nt.section))
        return ForwardError::ForbiddenEdge;

    Digest k_rnz = entry_key(Zone::RNZ, origin, seq);
    DhtEntry* e = w.dht.find_in(*nf.section, k_rnz);
    if (!e) return ForwardError::NotFound;
    if (!verify_entry(*e)) {
        w.dht.quarantine(*nf.section, k_rnz);
        return ForwardError::IntegrityFailure;
    }

    Urgency urg = e->urgency;
    ChainElement value = e->value;
    auto put = immediate_replication
                   ? w.dht.put(*nt.section, std::move(value), urg)
                   : w.dht.put_at(*nt.section, std::move(value), urg, to);
    if (!put.ok()) return ForwardError::NotFound;

    w.action_log.push_back("forward " + std::to_string(from) + "->" +
                           std::to_string(to));
    detail::note_subscription(w, origin, k_rnz, seq, to, now);
    return ForwardOutcome{put.value(), *nt.section};
}

// Push every element published since the last refresh to each live
// subscriber.  Returns the number of delivery events; the optional sink sees
// each one (the simulator charges transport costs there).
inline int refresh_subscriptions(
    World& w, Timestamp now, bool immediate_replication = true,
    const std::function<void(NodeId, const DhtEntry&)>& on_delivery = {}) {
    if (w.cfg.mode == Mode::BlockchainOnly) return 0;
    int events = 0;
    for (auto& [sn, tr] : w.transfers) {
        auto latest = w.latest_sequence(sn);
        if (!latest) continue;
        std::uint64_t s = tr.delivered_through;
        for (; s <= *latest; ++s) {
            // Updates flow from the sender zone only.
            DhtEntry* e = w.dht.find(Zone::SNZ, entry_key(Zone::SNZ, sn, s));
            if (!e) break;   // not replicated yet; retry next tick
            Digest k_rnz = entry_key(Zone::RNZ, sn, s);
            for (NodeId sub : tr.subscribers) {
                if (w.cfg.mode == Mode::Hybrid &&
                    !w.ledger->is_authorized(sub, now)) {
                    w.action_log.push_back("refresh skip blocked subscriber " +
                                           std::to_string(sub));
                    continue;
                }
                auto sec = w.node(sub).section;
                if (!sec) continue;
                // A copy may already sit in the subscriber's section from an
                // earlier delivery; extend its holders rather than resetting.
                if (w.dht.find_in(*sec, k_rnz)) {
                    w.dht.add_holder(*sec, k_rnz, sub);
                } else {
                    Urgency urg = e->urgency;
                    ChainElement value = e->value;
                    auto put = immediate_replication
                                   ? w.dht.put(*sec, std::move(value), urg)
                                   : w.dht.put_at(*sec, std::move(value), urg, sub);
                    if (!put.ok()) continue;
                }
                ++events;
                if (on_delivery) on_delivery(sub, *w.dht.find_in(*sec, k_rnz));
            }
            tr.element_key = k_rnz;
            tr.shared_at = now;
        }
        tr.delivered_through = s;
    }
    return events;
}

struct RouteOutcome {
    Route route;
    double elapsed_ms = 0;
    int edges = 0;
};

// Shortest authorized path between two endpoints, priced per mode: the
// ledger modes pay a commit round to register the route, the zone mode pays
// a per-hop table check instead, the hybrid pays neither.
inline Result<RouteOutcome, RouteSelectError>
select_route(World& w, NodeId src, NodeId dst, Timestamp now) {
    const bool gate = w.cfg.mode != Mode::HolochainOnly;
    auto allowed = [&](NodeId n) {
        if (!gate) return true;
        if (is_authority(w.node(n).kind)) return true;
        return w.ledger->is_authorized(n, now);
    };
    if (!allowed(src) || !allowed(dst)) return RouteSelectError::Unauthorized;

    std::vector<NodeId> parent(w.m() + 1, kNoNode);
    std::deque<NodeId> q{src};
    parent[src] = src;
    while (!q.empty() && parent[dst] == kNoNode) {
        NodeId u = q.front();
        q.pop_front();
        for (NodeId v : w.adjacency[u - 1]) {
            if (parent[v] != kNoNode || !allowed(v)) continue;
            parent[v] = u;
            q.push_back(v);
        }
    }
    if (parent[dst] == kNoNode) return RouteSelectError::NoRoute;

    std::vector<NodeId> path{dst};
    for (NodeId at = dst; at != src; at = parent[at]) path.push_back(parent[at]);
    std::reverse(path.begin(), path.end());

    RouteOutcome out;
    out.edges = static_cast<int>(path.size()) - 1;
    out.elapsed_ms = out.edges * w.cfg.delay.propagation_ms;
    if (w.cfg.mode == Mode::BlockchainOnly) {
        auto reg = w.ledger->register_route(path, now);
        if (!reg.ok()) return RouteSelectError::Unauthorized;
        out.route = reg.value();
        out.elapsed_ms += w.cfg.delay.consensus_ms;
    } else {
        out.route = Route{0, path, false};
        if (w.cfg.mode == Mode::HolochainOnly) {
            std::size_t n_entries = w.dht.zone_entry_count(Zone::SNZ) +
                                    w.dht.zone_entry_count(Zone::RNZ);
            int check = static_cast<int>(w.cfg.complexity.c) +
                        ceil_log2(std::max<std::size_t>(1, n_entries));
            out.elapsed_ms += out.edges * check * w.cfg.delay.processing_ms;
        }
    }
    return out;
}

} // namespace holoblock
