#pragma once

#include <algorithm>
#include <cstring>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "bytes.hpp"
#include "result.hpp"
#include "sha256.hpp"
#include "types.hpp"

namespace holoblock {

enum class LedgerOp : std::uint8_t {
    RegisterSN,
    RegisterRN,
    PublishTelemetry,
    RegisterRoute,
    Block,
    Unblock,
};

inline const char* to_string(LedgerOp op) {
    switch (op) {
        case LedgerOp::RegisterSN:       return "register_sn";
        case LedgerOp::RegisterRN:       return "register_rn";
        case LedgerOp::PublishTelemetry: return "publish_telemetry";
        case LedgerOp::RegisterRoute:    return "register_route";
        case LedgerOp::Block:            return "block";
        case LedgerOp::Unblock:          return "unblock";
    }
    return "?";
}

// One live snapshot per node; a publish at t+1 replaces the one at t.
// Senders report operational cost and residual energy, receivers report
// queuing delay and their urgency listing.
struct TelemetrySnapshot {
    NodeId node = kNoNode;
    GeoLocation geo_location;
    double operational_cost = 0.0;
    std::optional<double> residual_energy;                       // SN side
    std::optional<double> queuing_delay;                         // RN side
    std::optional<std::vector<std::pair<NodeId, std::uint8_t>>> urgency_listing;
    Timestamp at = 0;

    bool operator==(const TelemetrySnapshot&) const = default;
};

inline Bytes canonical_bytes(const TelemetrySnapshot& s) {
    Bytes out;
    put_u32le(out, s.node);
    std::uint64_t bits;
    std::memcpy(&bits, &s.geo_location.x, 8); put_u64le(out, bits);
    std::memcpy(&bits, &s.geo_location.y, 8); put_u64le(out, bits);
    std::memcpy(&bits, &s.operational_cost, 8); put_u64le(out, bits);
    put_u8(out, s.residual_energy.has_value());
    double re = s.residual_energy.value_or(0);
    std::memcpy(&bits, &re, 8); put_u64le(out, bits);
    put_u8(out, s.queuing_delay.has_value());
    double qd = s.queuing_delay.value_or(0);
    std::memcpy(&bits, &qd, 8); put_u64le(out, bits);
    put_u8(out, s.urgency_listing.has_value());
    if (s.urgency_listing) {
        put_u32le(out, static_cast<std::uint32_t>(s.urgency_listing->size()));
        for (auto [id, u] : *s.urgency_listing) {
            put_u32le(out, id);
            put_u8(out, u);
        }
    }
    put_u64le(out, static_cast<std::uint64_t>(s.at));
    return out;
}

struct Route {
    std::uint64_t id = 0;
    std::vector<NodeId> hops;
    bool registered = false;

    bool operator==(const Route&) const = default;
};

inline Bytes canonical_bytes(const Route& r) {
    Bytes out;
    put_u64le(out, r.id);
    put_u32le(out, static_cast<std::uint32_t>(r.hops.size()));
    for (NodeId h : r.hops) put_u32le(out, h);
    put_u8(out, r.registered);
    return out;
}

struct BlockAction {
    NodeId node = kNoNode;
    int stage = 0;
    bool permanent = false;
    Timestamp until = 0;

    bool operator==(const BlockAction&) const = default;
};

inline Bytes canonical_bytes(const BlockAction& a) {
    Bytes out;
    put_u32le(out, a.node);
    put_u32le(out, static_cast<std::uint32_t>(a.stage));
    put_u8(out, a.permanent);
    put_u64le(out, static_cast<std::uint64_t>(a.until));
    return out;
}

struct LedgerEntry {
    LedgerOp op = LedgerOp::RegisterSN;
    std::variant<HBRecord, TelemetrySnapshot, Route, BlockAction> record;
    std::set<NodeId> required_signers;
};

inline Bytes canonical_bytes(const LedgerEntry& e) {
    Bytes out;
    put_u8(out, static_cast<std::uint8_t>(e.op));
    put_u8(out, static_cast<std::uint8_t>(e.record.index()));
    std::visit([&](const auto& rec) {
        Bytes b = canonical_bytes(rec);
        put_blob(out, b);
    }, e.record);
    put_u32le(out, static_cast<std::uint32_t>(e.required_signers.size()));
    for (NodeId s : e.required_signers) put_u32le(out, s);
    return out;
}

inline Digest entry_hash(const LedgerEntry& e) { return sha256(canonical_bytes(e)); }

struct LedgerBlock {
    std::uint64_t index = 0;
    Digest prev_hash{};
    std::vector<LedgerEntry> entries;
    std::vector<std::pair<NodeId, Bytes>> signatures;   // sorted by signer id
    Timestamp timestamp = 0;
};

// Everything a signature covers.
inline Bytes block_core_bytes(const LedgerBlock& b) {
    Bytes out;
    put_u64le(out, b.index);
    put_digest(out, b.prev_hash);
    put_u32le(out, static_cast<std::uint32_t>(b.entries.size()));
    for (const auto& e : b.entries) put_blob(out, canonical_bytes(e));
    put_u64le(out, static_cast<std::uint64_t>(b.timestamp));
    return out;
}

inline Bytes block_full_bytes(const LedgerBlock& b) {
    Bytes out = block_core_bytes(b);
    put_u32le(out, static_cast<std::uint32_t>(b.signatures.size()));
    for (const auto& [id, sig] : b.signatures) {
        put_u32le(out, id);
        put_blob(out, sig);
    }
    return out;
}

inline Digest block_hash(const LedgerBlock& b) { return sha256(block_full_bytes(b)); }

enum class RegistrationError {
    InvalidCertificate,
    DuplicateId,
    AuthorityUnavailable,
    WrongAuthority,
};

inline const char* to_string(RegistrationError e) {
    switch (e) {
        case RegistrationError::InvalidCertificate:   return "InvalidCertificate";
        case RegistrationError::DuplicateId:          return "DuplicateId";
        case RegistrationError::AuthorityUnavailable: return "AuthorityUnavailable";
        case RegistrationError::WrongAuthority:       return "WrongAuthority";
    }
    return "?";
}

enum class TelemetryError { NotRegistered, NodeBlocked, MalformedSnapshot };

enum class RouteError { UnregisteredHop, BlockedHop };

struct RegistrationRequest {
    HBRecord record;
    Bytes public_key;
    Certificate certificate;
};

struct LedgerVerifyReport {
    bool ok = true;
    std::optional<std::size_t> first_bad_block;
};

struct AuthorityIds {
    NodeId sra = 1;
    NodeId rra = 2;
    NodeId cc = 3;
};

// Proof-of-authority ledger shared by SRA, RRA and C&C.  Registration takes
// a two-tier quorum; telemetry takes the single associated authority.  The
// ledger object is the canonical copy; replica_count says how many identical
// copies exist in the network (3 in hybrid, every node in blockchain mode)
// and scales the storage charge.
class AuthorityLedger {
public:
    AuthorityLedger(AuthorityIds ids, const KeyStore* keystore,
                    std::map<NodeId, KeyPair> authority_keys)
        : ids_(ids), keystore_(keystore), authority_keys_(std::move(authority_keys)) {
        online_[ids_.sra] = online_[ids_.rra] = online_[ids_.cc] = true;
    }

    const AuthorityIds& authorities() const { return ids_; }

    void set_online(NodeId authority, bool online) { online_[authority] = online; }

    void set_replica_count(std::size_t n) { replica_count_ = n; }
    std::size_t replica_count() const { return replica_count_; }

    Result<Ok, RegistrationError> register_sender(const RegistrationRequest& req,
                                                  Timestamp now) {
        return do_register(req, now, /*sender_side=*/true);
    }

    Result<Ok, RegistrationError> register_receiver(const RegistrationRequest& req,
                                                    Timestamp now) {
        return do_register(req, now, /*sender_side=*/false);
    }

    Result<Ok, TelemetryError> publish_telemetry(const TelemetrySnapshot& snap) {
        auto it = registered_.find(snap.node);
        if (it == registered_.end()) return TelemetryError::NotRegistered;
        if (blocked_now(snap.node, snap.at)) return TelemetryError::NodeBlocked;
        bool sender = is_sender_kind(it->second.record.kind);
        if (sender) {
            if (!snap.residual_energy || snap.queuing_delay || snap.urgency_listing)
                return TelemetryError::MalformedSnapshot;
        } else {
            if (snap.residual_energy || !snap.queuing_delay || !snap.urgency_listing)
                return TelemetryError::MalformedSnapshot;
        }
        LedgerEntry e;
        e.op = LedgerOp::PublishTelemetry;
        e.record = snap;
        e.required_signers = {it->second.record.association};
        append({std::move(e)}, snap.at);
        telemetry_[snap.node] = snap;
        it->second.record.operational_cost = snap.operational_cost;
        it->second.record.geo_location = snap.geo_location;
        return Ok{};
    }

    Result<Route, RouteError> register_route(const std::vector<NodeId>& hops,
                                             Timestamp now) {
        for (NodeId h : hops) {
            // The authority identities anchor the ledger; they relay without
            // needing a registration record of their own.
            if (h == ids_.sra || h == ids_.rra || h == ids_.cc) continue;
            if (!registered_.count(h)) return RouteError::UnregisteredHop;
            if (blocked_now(h, now)) return RouteError::BlockedHop;
        }
        Route r;
        r.id = next_route_id_++;
        r.hops = hops;
        r.registered = true;
        LedgerEntry e;
        e.op = LedgerOp::RegisterRoute;
        e.record = r;
        e.required_signers = {ids_.cc};
        append({std::move(e)}, now);
        routes_.push_back(r);
        return r;
    }

    void record_block_action(const BlockAction& action, Timestamp now) {
        LedgerEntry e;
        e.op = LedgerOp::Block;
        e.record = action;
        e.required_signers = {ids_.cc};
        append({std::move(e)}, now);
        block_table_[action.node] = action;
    }

    void record_unblock(NodeId node, Timestamp now) {
        LedgerEntry e;
        e.op = LedgerOp::Unblock;
        e.record = BlockAction{node, 0, false, now};
        e.required_signers = {ids_.cc};
        append({std::move(e)}, now);
        block_table_.erase(node);
    }

    bool is_registered(NodeId node) const { return registered_.count(node) != 0; }

    bool is_authorized(NodeId node, Timestamp now) const {
        auto it = registered_.find(node);
        if (it == registered_.end()) return false;
        if (!it->second.certificate.valid) return false;
        return !blocked_now(node, now);
    }

    const HBRecord* record_of(NodeId node) const {
        auto it = registered_.find(node);
        return it == registered_.end() ? nullptr : &it->second.record;
    }

    const Bytes* public_key_of(NodeId node) const {
        auto it = registered_.find(node);
        return it == registered_.end() ? nullptr : &it->second.public_key;
    }

    const TelemetrySnapshot* telemetry_of(NodeId node) const {
        auto it = telemetry_.find(node);
        return it == telemetry_.end() ? nullptr : &it->second;
    }

    std::size_t telemetry_count() const { return telemetry_.size(); }

    std::vector<NodeId> available_senders() const { return available_sn_; }
    std::vector<NodeId> available_receivers() const { return available_rn_; }

    // Test-harness hook: flips the stored certificate to invalid.
    void invalidate_certificate(NodeId node) {
        auto it = registered_.find(node);
        if (it != registered_.end()) it->second.certificate.valid = false;
    }

    const std::vector<LedgerBlock>& blocks() const { return blocks_; }
    std::vector<LedgerBlock>& blocks_mut() { return blocks_; }

    std::size_t ledger_bytes() const { return ledger_bytes_; }

    LedgerVerifyReport verify() const {
        Digest prev{};
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const LedgerBlock& b = blocks_[i];
            if (b.index != i || b.prev_hash != prev) return {false, i};
            std::set<NodeId> need;
            for (const auto& e : b.entries)
                need.insert(e.required_signers.begin(), e.required_signers.end());
            Bytes core = block_core_bytes(b);
            for (NodeId signer : need) {
                auto sig = std::find_if(b.signatures.begin(), b.signatures.end(),
                                        [&](const auto& p) { return p.first == signer; });
                if (sig == b.signatures.end()) return {false, i};
                auto key = authority_keys_.find(signer);
                if (key == authority_keys_.end()
                    || !keystore_->verify(key->second.public_key, core, sig->second))
                    return {false, i};
            }
            prev = block_hash(b);
        }
        if (prev != head_hash_) return {false, blocks_.empty() ? 0 : blocks_.size() - 1};
        return {};
    }

    std::string export_csv() const {
        std::ostringstream os;
        os << "block,op,signers,entry_hash\n";
        for (const auto& b : blocks_) {
            for (const auto& e : b.entries) {
                os << b.index << ',' << to_string(e.op) << ',';
                bool first = true;
                for (NodeId s : e.required_signers) {
                    if (!first) os << '|';
                    os << s;
                    first = false;
                }
                os << ',' << to_hex(entry_hash(e).data(), 32) << '\n';
            }
        }
        return os.str();
    }

    // Batch append used by world construction; entries must already carry
    // their required signer sets.
    void append(std::vector<LedgerEntry> entries, Timestamp now) {
        LedgerBlock b;
        b.index = blocks_.size();
        b.prev_hash = head_hash_;
        b.entries = std::move(entries);
        b.timestamp = now;
        std::set<NodeId> need;
        for (const auto& e : b.entries)
            need.insert(e.required_signers.begin(), e.required_signers.end());
        Bytes core = block_core_bytes(b);
        for (NodeId signer : need) {
            const KeyPair& kp = authority_keys_.at(signer);
            b.signatures.emplace_back(signer, sign(kp.private_key, core));
        }
        head_hash_ = block_hash(b);
        ledger_bytes_ += block_full_bytes(b).size();
        blocks_.push_back(std::move(b));
    }

private:
    struct Registration {
        HBRecord record;
        Bytes public_key;
        Certificate certificate;
    };

    Result<Ok, RegistrationError> do_register(const RegistrationRequest& req,
                                              Timestamp now, bool sender_side) {
        const HBRecord& rec = req.record;
        if (sender_side != is_sender_kind(rec.kind))
            return RegistrationError::WrongAuthority;
        NodeId first_tier = sender_side ? ids_.sra : ids_.rra;
        if (rec.association != first_tier) return RegistrationError::WrongAuthority;
        if (!online(first_tier) || !online(ids_.cc))
            return RegistrationError::AuthorityUnavailable;
        if (registered_.count(rec.id)) return RegistrationError::DuplicateId;
        auto issuer_key = authority_keys_.find(req.certificate.issuer);
        if (issuer_key == authority_keys_.end()
            || req.certificate.issuer != first_tier
            || !keystore_->verify_certificate(req.certificate,
                                              issuer_key->second.public_key))
            return RegistrationError::InvalidCertificate;

        LedgerEntry e;
        e.op = sender_side ? LedgerOp::RegisterSN : LedgerOp::RegisterRN;
        e.record = rec;
        e.required_signers = {first_tier, ids_.cc};
        append({std::move(e)}, now);
        registered_[rec.id] = {rec, req.public_key, req.certificate};
        (sender_side ? available_sn_ : available_rn_).push_back(rec.id);
        return Ok{};
    }

    bool online(NodeId authority) const {
        auto it = online_.find(authority);
        return it != online_.end() && it->second;
    }

    bool blocked_now(NodeId node, Timestamp now) const {
        auto it = block_table_.find(node);
        if (it == block_table_.end()) return false;
        return it->second.permanent || now < it->second.until;
    }

    AuthorityIds ids_;
    const KeyStore* keystore_;
    std::map<NodeId, KeyPair> authority_keys_;
    std::map<NodeId, bool> online_;
    std::map<NodeId, Registration> registered_;
    std::vector<NodeId> available_sn_;
    std::vector<NodeId> available_rn_;
    std::map<NodeId, TelemetrySnapshot> telemetry_;
    std::map<NodeId, BlockAction> block_table_;
    std::vector<Route> routes_;
    std::uint64_t next_route_id_ = 1;
    std::vector<LedgerBlock> blocks_;
    Digest head_hash_{};
    std::size_t ledger_bytes_ = 0;
    std::size_t replica_count_ = 3;
};

} // namespace holoblock
