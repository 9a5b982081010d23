#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <unordered_map>

#include "bytes.hpp"
#include "sha256.hpp"

namespace holoblock {

using NodeId = std::uint32_t;
constexpr NodeId kNoNode = 0;

// Simulation clock, milliseconds from world start.
using Timestamp = std::int64_t;

enum class NodeKind : std::uint8_t {
    Sensor,
    PersonalDevice,
    BaseStation,
    Doctor,
    Paramedic,
    Pharmacy,
    AuthoritySRA,
    AuthorityRRA,
    AuthorityCC,
};

inline bool is_authority(NodeKind k) {
    return k == NodeKind::AuthoritySRA || k == NodeKind::AuthorityRRA
        || k == NodeKind::AuthorityCC;
}

// Sender side of the network: devices that originate health data.
inline bool is_sender_kind(NodeKind k) {
    return k == NodeKind::Sensor || k == NodeKind::PersonalDevice
        || k == NodeKind::BaseStation;
}

// Receiver side: medical staff consuming the data.
inline bool is_receiver_kind(NodeKind k) {
    return k == NodeKind::Doctor || k == NodeKind::Paramedic
        || k == NodeKind::Pharmacy;
}

inline const char* to_string(NodeKind k) {
    switch (k) {
        case NodeKind::Sensor:         return "sensor";
        case NodeKind::PersonalDevice: return "personal_device";
        case NodeKind::BaseStation:    return "base_station";
        case NodeKind::Doctor:         return "doctor";
        case NodeKind::Paramedic:      return "paramedic";
        case NodeKind::Pharmacy:       return "pharmacy";
        case NodeKind::AuthoritySRA:   return "authority_sra";
        case NodeKind::AuthorityRRA:   return "authority_rra";
        case NodeKind::AuthorityCC:    return "authority_cc";
    }
    return "?";
}

struct GeoLocation {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const GeoLocation&) const = default;
};

inline double distance(const GeoLocation& a, const GeoLocation& b) {
    double dx = a.x - b.x, dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

// Registration record, the ledger's unit of state.
struct HBRecord {
    NodeId id = kNoNode;
    NodeKind kind = NodeKind::Sensor;
    double operational_cost = 0.0;          // ms per distributed transaction
    std::uint64_t storage_space = 0;        // bytes
    Timestamp start_time = 0;
    std::optional<Timestamp> end_time;
    GeoLocation geo_location;
    NodeId association = kNoNode;           // owning authority
    double residual_energy = 0.0;           // joules

    bool operator==(const HBRecord&) const = default;
};

inline Bytes canonical_bytes(const HBRecord& r) {
    Bytes out;
    put_u32le(out, r.id);
    put_u8(out, static_cast<std::uint8_t>(r.kind));
    // Reals are serialized as their IEEE bit patterns so hashing stays
    // deterministic across platforms with the same double representation.
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(double));
    std::memcpy(&bits, &r.operational_cost, 8); put_u64le(out, bits);
    put_u64le(out, r.storage_space);
    put_u64le(out, static_cast<std::uint64_t>(r.start_time));
    put_u8(out, r.end_time.has_value() ? 1 : 0);
    put_u64le(out, static_cast<std::uint64_t>(r.end_time.value_or(0)));
    std::memcpy(&bits, &r.geo_location.x, 8); put_u64le(out, bits);
    std::memcpy(&bits, &r.geo_location.y, 8); put_u64le(out, bits);
    put_u32le(out, r.association);
    std::memcpy(&bits, &r.residual_energy, 8); put_u64le(out, bits);
    return out;
}

struct KeyPair {
    Bytes public_key;
    Bytes private_key;
};

struct Certificate {
    NodeId subject = kNoNode;
    NodeId issuer = kNoNode;
    Bytes signature;
    bool valid = true;   // test harness can force expiry
};

inline Bytes certificate_core(NodeId subject, NodeId issuer) {
    Bytes out;
    put_u32le(out, subject);
    put_u32le(out, issuer);
    return out;
}

// Signatures are modeled as hash(private_key ‖ message).  Verification goes
// through the KeyStore, the simulator's trusted key registry; this is the
// swap-in point for real asymmetric crypto.
inline Bytes sign(const Bytes& private_key, const Bytes& message) {
    Bytes buf = private_key;
    buf.insert(buf.end(), message.begin(), message.end());
    Digest d = sha256(buf);
    return Bytes(d.begin(), d.end());
}

class KeyStore {
public:
    // priv is derived deterministically so worlds rebuild identically per seed.
    static KeyPair derive_pair(std::uint64_t seed, NodeId id) {
        Bytes material;
        put_u64le(material, seed);
        put_u32le(material, id);
        Digest priv = sha256(material);
        Digest pub = sha256(priv.data(), priv.size());
        return KeyPair{Bytes(pub.begin(), pub.end()), Bytes(priv.begin(), priv.end())};
    }

    void register_pair(const KeyPair& kp) {
        priv_by_pub_[raw_key(kp.public_key)] = kp.private_key;
    }

    bool known(const Bytes& public_key) const {
        return priv_by_pub_.count(raw_key(public_key)) != 0;
    }

    bool verify(const Bytes& public_key, const Bytes& message, const Bytes& signature) const {
        auto it = priv_by_pub_.find(raw_key(public_key));
        if (it == priv_by_pub_.end()) return false;
        return sign(it->second, message) == signature;
    }

    bool verify_certificate(const Certificate& cert, const Bytes& issuer_public_key) const {
        if (!cert.valid) return false;
        return verify(issuer_public_key, certificate_core(cert.subject, cert.issuer),
                      cert.signature);
    }

private:
    static std::string raw_key(const Bytes& b) {
        return std::string(b.begin(), b.end());
    }

    std::unordered_map<std::string, Bytes> priv_by_pub_;
};

// The unit a sender turns raw readings into before chaining.
struct TransactionData {
    Bytes payload;
    NodeId origin = kNoNode;
    std::uint64_t sequence = 0;             // per-origin, strictly increasing
    Bytes extra_validation_bits;

    bool operator==(const TransactionData&) const = default;
};

inline Bytes canonical_bytes(const TransactionData& t) {
    Bytes out;
    put_blob(out, t.payload);
    put_u32le(out, t.origin);
    put_u64le(out, t.sequence);
    put_blob(out, t.extra_validation_bits);
    return out;
}

enum class Mode : std::uint8_t { BlockchainOnly, HolochainOnly, Hybrid };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::BlockchainOnly: return "blockchain";
        case Mode::HolochainOnly:  return "holochain";
        case Mode::Hybrid:         return "hybrid";
    }
    return "?";
}

inline std::optional<Mode> mode_from_string(std::string_view s) {
    if (s == "blockchain") return Mode::BlockchainOnly;
    if (s == "holochain") return Mode::HolochainOnly;
    if (s == "hybrid") return Mode::Hybrid;
    return std::nullopt;
}

} // namespace holoblock
