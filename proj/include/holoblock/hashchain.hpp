#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bytes.hpp"
#include "result.hpp"
#include "sha256.hpp"
#include "types.hpp"

namespace holoblock {

// Source chain: every element carries the hash of its transaction data plus
// the hashes of all earlier elements.  Storage is quadratic in chain length
// by design; set ChainConfig::link_all_predecessors=false for a linked-list
// variant that keeps only the immediate predecessor.

struct ChainHeader {
    Digest data_hash{};
    std::vector<Digest> predecessor_hashes;

    bool operator==(const ChainHeader&) const = default;
};

struct ChainElement {
    ChainHeader header;
    TransactionData data;

    bool operator==(const ChainElement&) const = default;
};

inline Bytes canonical_bytes(const ChainElement& e) {
    Bytes out = canonical_bytes(e.data);
    put_digest(out, e.header.data_hash);
    put_u32le(out, static_cast<std::uint32_t>(e.header.predecessor_hashes.size()));
    for (const auto& h : e.header.predecessor_hashes) put_digest(out, h);
    return out;
}

// Hash of the element as stored, covering data and header both.
inline Digest element_hash(const ChainElement& e) {
    return sha256(canonical_bytes(e));
}

struct NodeState {
    std::vector<ChainElement> chain;
    std::vector<Bytes> side_data;

    bool operator==(const NodeState&) const = default;
};

struct ChainConfig {
    bool link_all_predecessors = true;
};

enum class ChainFault {
    SequenceGap,
    DuplicateSequence,
    PayloadTooLarge,
    ExtraBitsMismatch,
};

inline const char* to_string(ChainFault f) {
    switch (f) {
        case ChainFault::SequenceGap:       return "SequenceGap";
        case ChainFault::DuplicateSequence: return "DuplicateSequence";
        case ChainFault::PayloadTooLarge:   return "PayloadTooLarge";
        case ChainFault::ExtraBitsMismatch: return "ExtraBitsMismatch";
    }
    return "?";
}

struct Verdict {
    std::optional<ChainFault> fault;

    bool valid() const { return !fault.has_value(); }
};

constexpr std::size_t kMaxChainPayload = 244;

// Application rule for the auxiliary validation bits: the first byte must
// equal the first byte of the payload hash.  Callers may append further
// application data (the transport layer stores an authenticity signature
// there); only the leading rule byte is checked.
inline Bytes expected_extra_bits(const Bytes& payload) {
    return Bytes{sha256(payload)[0]};
}

inline bool extra_bits_ok(const Bytes& extra, const Bytes& payload) {
    return !extra.empty() && extra[0] == sha256(payload)[0];
}

inline std::uint64_t next_sequence(const NodeState& state, NodeId origin) {
    std::uint64_t n = 0;
    for (const auto& e : state.chain)
        if (e.data.origin == origin) ++n;
    return n;
}

inline Verdict validate_element(const NodeState& state, const TransactionData& t,
                                const Bytes& extra) {
    if (t.payload.size() > kMaxChainPayload) return {ChainFault::PayloadTooLarge};
    std::uint64_t next = next_sequence(state, t.origin);
    if (t.sequence < next) return {ChainFault::DuplicateSequence};
    if (t.sequence > next) return {ChainFault::SequenceGap};
    if (!extra_bits_ok(extra, t.payload)) return {ChainFault::ExtraBitsMismatch};
    return {};
}

inline Verdict validate_element(const NodeState& state, const TransactionData& t) {
    return validate_element(state, t, t.extra_validation_bits);
}

// Side record gained per transition: timestamp plus the data hash.
inline Bytes make_side_record(Timestamp now, const Digest& data_hash) {
    Bytes out;
    put_u64le(out, static_cast<std::uint64_t>(now));
    put_digest(out, data_hash);
    return out;
}

// In-place transition; the pure apply_transition wraps this.
inline Result<Ok, ChainFault> append_transition(NodeState& state, TransactionData t,
                                                Timestamp now = 0,
                                                const ChainConfig& cfg = {}) {
    Verdict v = validate_element(state, t);
    if (!v.valid()) return *v.fault;
    ChainElement e;
    e.data = std::move(t);
    e.header.data_hash = sha256(canonical_bytes(e.data));
    if (cfg.link_all_predecessors) {
        e.header.predecessor_hashes.reserve(state.chain.size());
        for (const auto& prior : state.chain)
            e.header.predecessor_hashes.push_back(element_hash(prior));
    } else if (!state.chain.empty()) {
        e.header.predecessor_hashes.push_back(element_hash(state.chain.back()));
    }
    state.side_data.push_back(make_side_record(now, e.header.data_hash));
    state.chain.push_back(std::move(e));
    return Ok{};
}

inline Result<NodeState, ChainFault> apply_transition(const NodeState& state,
                                                      const TransactionData& t,
                                                      Timestamp now = 0,
                                                      const ChainConfig& cfg = {}) {
    NodeState copy = state;
    auto r = append_transition(copy, t, now, cfg);
    if (!r.ok()) return r.error();
    return copy;
}

struct VerificationReport {
    bool ok = true;
    std::optional<std::size_t> first_bad_index;
};

inline VerificationReport verify_chain(const NodeState& state,
                                       const ChainConfig& cfg = {}) {
    // Recomputed element hashes, valid only up to the first bad index.
    std::vector<Digest> recomputed;
    recomputed.reserve(state.chain.size());
    for (std::size_t i = 0; i < state.chain.size(); ++i) {
        const ChainElement& e = state.chain[i];
        if (sha256(canonical_bytes(e.data)) != e.header.data_hash)
            return {false, i};
        const auto& preds = e.header.predecessor_hashes;
        if (cfg.link_all_predecessors) {
            if (preds.size() != i) return {false, i};
            for (std::size_t j = 0; j < i; ++j)
                if (preds[j] != recomputed[j]) return {false, i};
        } else {
            std::size_t want = i == 0 ? 0 : 1;
            if (preds.size() != want) return {false, i};
            if (i > 0 && preds[0] != recomputed[i - 1]) return {false, i};
        }
        recomputed.push_back(element_hash(e));
    }
    return {};
}

// Stimulus sent toward the network channel once a transition lands.
struct StimulusEvent {
    NodeId origin = kNoNode;
    std::uint64_t sequence = 0;
    Digest data_hash{};
};

inline Result<StimulusEvent, ChainFault> process(NodeState& state, NodeId origin,
                                                 const Bytes& raw, Timestamp now = 0,
                                                 const ChainConfig& cfg = {}) {
    TransactionData t;
    t.payload = raw;
    t.origin = origin;
    t.sequence = next_sequence(state, origin);
    t.extra_validation_bits = expected_extra_bits(raw);
    auto r = append_transition(state, std::move(t), now, cfg);
    if (!r.ok()) return r.error();
    const ChainElement& e = state.chain.back();
    return StimulusEvent{origin, e.data.sequence, e.header.data_hash};
}

// ---- dump/load: one line per item, hex fields, "-" for empty ----
//   e <origin> <sequence> <payload> <extra> <data_hash> <pred,pred,...>
//   d <record>

inline std::string dump_chain(const NodeState& state) {
    std::ostringstream os;
    auto hex_or_dash = [](const Bytes& b) { return b.empty() ? std::string("-") : to_hex(b); };
    for (const auto& e : state.chain) {
        os << "e " << e.data.origin << ' ' << e.data.sequence << ' '
           << hex_or_dash(e.data.payload) << ' '
           << hex_or_dash(e.data.extra_validation_bits) << ' '
           << to_hex(e.header.data_hash);
        os << ' ';
        if (e.header.predecessor_hashes.empty()) {
            os << '-';
        } else {
            for (std::size_t j = 0; j < e.header.predecessor_hashes.size(); ++j) {
                if (j) os << ',';
                os << to_hex(e.header.predecessor_hashes[j]);
            }
        }
        os << '\n';
    }
    for (const auto& d : state.side_data) os << "d " << hex_or_dash(d) << '\n';
    return os.str();
}

inline Result<NodeState, std::string> load_chain(const std::string& text) {
    NodeState state;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& why) {
        return "line " + std::to_string(lineno) + ": " + why;
    };
    auto parse_hex_field = [](const std::string& f, Bytes& out) {
        if (f == "-") { out.clear(); return true; }
        auto b = from_hex(f);
        if (!b) return false;
        out = std::move(*b);
        return true;
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "d") {
            std::string f;
            if (!(ls >> f)) return fail("missing side record");
            Bytes rec;
            if (!parse_hex_field(f, rec)) return fail("bad hex in side record");
            state.side_data.push_back(std::move(rec));
        } else if (tag == "e") {
            ChainElement e;
            std::string payload_f, extra_f, hash_f, preds_f;
            if (!(ls >> e.data.origin >> e.data.sequence >> payload_f >> extra_f
                     >> hash_f >> preds_f))
                return fail("malformed element line");
            if (!parse_hex_field(payload_f, e.data.payload)) return fail("bad payload hex");
            if (!parse_hex_field(extra_f, e.data.extra_validation_bits))
                return fail("bad extra bits hex");
            auto dh = from_hex(hash_f);
            if (!dh || dh->size() != 32) return fail("bad data hash");
            std::copy(dh->begin(), dh->end(), e.header.data_hash.begin());
            if (preds_f != "-") {
                std::size_t pos = 0;
                while (pos <= preds_f.size()) {
                    std::size_t comma = preds_f.find(',', pos);
                    std::string one = preds_f.substr(
                        pos, comma == std::string::npos ? std::string::npos : comma - pos);
                    auto ph = from_hex(one);
                    if (!ph || ph->size() != 32) return fail("bad predecessor hash");
                    Digest d{};
                    std::copy(ph->begin(), ph->end(), d.begin());
                    e.header.predecessor_hashes.push_back(d);
                    if (comma == std::string::npos) break;
                    pos = comma + 1;
                }
            }
            state.chain.push_back(std::move(e));
        } else {
            return fail("unknown tag '" + tag + "'");
        }
    }
    return state;
}

} // namespace holoblock
