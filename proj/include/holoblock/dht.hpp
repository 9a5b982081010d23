#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "hashchain.hpp"
#include "result.hpp"
#include "sha256.hpp"
#include "types.hpp"

namespace holoblock {

enum class Zone : std::uint8_t { SNZ, RNZ };

enum class Section : std::uint8_t {
    // Sender-node zone
    ODP,   // on-demand patients
    HRP,   // high-risk patients
    RMP,   // remote monitoring
    AT,    // athletes
    // Receiver-node zone
    Doctors,
    Paramedics,
    Pharmacy,
};

inline Zone zone_of(Section s) {
    return s <= Section::AT ? Zone::SNZ : Zone::RNZ;
}

inline const char* to_string(Zone z) { return z == Zone::SNZ ? "SNZ" : "RNZ"; }

inline const char* to_string(Section s) {
    switch (s) {
        case Section::ODP:        return "ODP";
        case Section::HRP:        return "HRP";
        case Section::RMP:        return "RMP";
        case Section::AT:         return "AT";
        case Section::Doctors:    return "doctors";
        case Section::Paramedics: return "paramedics";
        case Section::Pharmacy:   return "pharmacy";
    }
    return "?";
}

using Urgency = std::uint8_t;

// Urgency ladder over SNZ sections; RNZ sections do not carry urgency.
inline Urgency default_urgency(Section s) {
    switch (s) {
        case Section::ODP: return 3;
        case Section::HRP: return 2;
        case Section::RMP: return 1;
        default:           return 0;
    }
}

struct DhtEntry {
    Digest key{};
    ChainElement value;
    Urgency urgency = 0;
    Section section = Section::ODP;
    std::vector<NodeId> stored_at;   // sorted replica holders

    bool operator==(const DhtEntry&) const = default;
};

inline Digest entry_key(Zone zone, NodeId origin, std::uint64_t sequence) {
    Bytes b;
    put_u8(b, static_cast<std::uint8_t>(zone));
    put_u32le(b, origin);
    put_u64le(b, sequence);
    return sha256(b);
}

// Element-level integrity: the data hash and the key must both recompute.
inline bool verify_entry(const DhtEntry& e) {
    if (sha256(canonical_bytes(e.value.data)) != e.value.header.data_hash) return false;
    return e.key == entry_key(zone_of(e.section), e.value.data.origin,
                              e.value.data.sequence);
}

// Storage footprint of one replica of an entry.
inline std::size_t entry_bytes(const DhtEntry& e) {
    return 32 + 2 + canonical_bytes(e.value).size();
}

inline int ceil_log2(std::size_t n) {
    if (n <= 1) return 0;
    return static_cast<int>(std::bit_width(n - 1));
}

enum class DhtError {
    NotRegistered,
    SectionEmpty,
    UnknownEntry,
    NotSectionMember,
    IntegrityFailure,
};

inline const char* to_string(DhtError e) {
    switch (e) {
        case DhtError::NotRegistered:    return "NotRegistered";
        case DhtError::SectionEmpty:     return "SectionEmpty";
        case DhtError::UnknownEntry:     return "UnknownEntry";
        case DhtError::NotSectionMember: return "NotSectionMember";
        case DhtError::IntegrityFailure: return "IntegrityFailure";
    }
    return "?";
}

struct DhtConfig {
    int replication_factor = 3;
    int fanout = 2;
    int confidence_c = 1;        // the c in steps = c + ceil(log2 N)
};

struct DhtCounters {
    std::uint64_t put_messages = 0;
    std::uint64_t lookups = 0;
    std::uint64_t lookup_steps = 0;
};

struct AuditEvent {
    NodeId node = kNoNode;
    std::string what;
};

struct LookupResult {
    const DhtEntry* entry = nullptr;   // stable; owned by the table
    int steps = 0;
};

// Each section keeps its own store; a zone is the union of its sections'
// stores, so the same key can appear in two sections after a forward.
using SectionKey = std::pair<Section, Digest>;

inline const std::vector<Section>& sections_in(Zone z) {
    static const std::vector<Section> snz{Section::ODP, Section::HRP,
                                          Section::RMP, Section::AT};
    static const std::vector<Section> rnz{Section::Doctors, Section::Paramedics,
                                          Section::Pharmacy};
    return z == Zone::SNZ ? snz : rnz;
}

class ZonedDht {
public:
    explicit ZonedDht(DhtConfig cfg = {}) : cfg_(cfg) {}

    const DhtConfig& config() const { return cfg_; }
    const DhtCounters& counters() const { return counters_; }
    const std::vector<AuditEvent>& audit() const { return audit_; }

    // Hybrid mode installs the ledger's authorization check here; without it
    // any origin may publish, which is exactly the gap the comparison probes.
    void set_authorization(std::function<bool(NodeId)> check) {
        authorize_ = std::move(check);
    }

    void join(NodeId node, Section section) {
        auto it = section_of_.find(node);
        if (it != section_of_.end()) {
            if (it->second == section) return;
            detach(node, it->second);
        }
        section_of_[node] = section;
        auto& m = members_[section];
        m.insert(std::upper_bound(m.begin(), m.end(), node), node);
    }

    std::optional<Section> section_of(NodeId node) const {
        auto it = section_of_.find(node);
        if (it == section_of_.end()) return std::nullopt;
        return it->second;
    }

    const std::vector<NodeId>& members_of(Section s) const {
        static const std::vector<NodeId> empty;
        auto it = members_.find(s);
        return it == members_.end() ? empty : it->second;
    }

    std::size_t zone_entry_count(Zone z) const { return table(z).size(); }

    Urgency urgency_for(NodeId node, Section section) const {
        auto it = urgency_override_.find(node);
        return it == urgency_override_.end() ? default_urgency(section) : it->second;
    }

    // Replica holders for a key: the section members closest by XOR distance,
    // capped at the replication factor.
    std::vector<NodeId> replica_targets(Section section, const Digest& key) const {
        std::vector<NodeId> m = members_of(section);
        std::size_t want = std::min<std::size_t>(cfg_.replication_factor, m.size());
        std::partial_sort(m.begin(), m.begin() + want, m.end(),
                          [&](NodeId a, NodeId b) {
                              int c = xor_distance_cmp(key, member_key(a), member_key(b));
                              return c != 0 ? c < 0 : a < b;
                          });
        m.resize(want);
        std::sort(m.begin(), m.end());
        return m;
    }

    Result<DhtEntry, DhtError> put(Section section, ChainElement value, Urgency urgency) {
        auto prepared = prepare(section, std::move(value), urgency);
        if (!prepared.ok()) return prepared.error();
        DhtEntry e = std::move(prepared.value());
        e.stored_at = replica_targets(section, e.key);
        counters_.put_messages += e.stored_at.size();
        return store(std::move(e));
    }

    // Deferred variant for the simulator: the entry lands on one holder now
    // and replicas arrive later through add_holder.
    Result<DhtEntry, DhtError> put_at(Section section, ChainElement value,
                                      Urgency urgency, NodeId first_holder) {
        auto prepared = prepare(section, std::move(value), urgency);
        if (!prepared.ok()) return prepared.error();
        DhtEntry e = std::move(prepared.value());
        if (!is_member(first_holder, section)) return DhtError::NotSectionMember;
        e.stored_at = {first_holder};
        counters_.put_messages += 1;
        return store(std::move(e));
    }

    Result<Ok, DhtError> add_holder(Section section, const Digest& key, NodeId node) {
        auto it = table(zone_of(section)).find({section, key});
        if (it == table(zone_of(section)).end()) return DhtError::UnknownEntry;
        DhtEntry& e = it->second;
        if (!is_member(node, e.section)) return DhtError::NotSectionMember;
        // The receiving replica re-verifies before storing.
        if (!verify_entry(e)) return DhtError::IntegrityFailure;
        auto pos = std::lower_bound(e.stored_at.begin(), e.stored_at.end(), node);
        if (pos == e.stored_at.end() || *pos != node) {
            e.stored_at.insert(pos, node);
            counters_.put_messages += 1;
        }
        return Ok{};
    }

    LookupResult lookup(Zone zone, const Digest& key) {
        int steps = cfg_.confidence_c
                  + ceil_log2(std::max<std::size_t>(1, table(zone).size()));
        counters_.lookups += 1;
        counters_.lookup_steps += static_cast<std::uint64_t>(steps);
        return {find(zone, key), steps};
    }

    DhtEntry* find(Zone zone, const Digest& key) {
        for (Section s : sections_in(zone)) {
            auto it = table(zone).find({s, key});
            if (it != table(zone).end()) return &it->second;
        }
        return nullptr;
    }

    DhtEntry* find_in(Section section, const Digest& key) {
        auto it = table(zone_of(section)).find({section, key});
        return it == table(zone_of(section)).end() ? nullptr : &it->second;
    }

    // One gossip round: every under-replicated entry recruits up to
    // current*fanout new holders, never past its replication target.
    int gossip_round(Zone zone) {
        int events = 0;
        for (auto& [skey, e] : table(zone)) {
            const Digest& key = skey.second;
            std::size_t target = std::min<std::size_t>(cfg_.replication_factor,
                                                       members_of(e.section).size());
            if (e.stored_at.size() >= target) continue;
            std::size_t adds = std::min(e.stored_at.size() * cfg_.fanout,
                                        target - e.stored_at.size());
            std::vector<NodeId> candidates;
            for (NodeId n : members_of(e.section))
                if (!std::binary_search(e.stored_at.begin(), e.stored_at.end(), n))
                    candidates.push_back(n);
            std::partial_sort(candidates.begin(),
                              candidates.begin() + std::min(adds, candidates.size()),
                              candidates.end(), [&](NodeId a, NodeId b) {
                                  int c = xor_distance_cmp(key, member_key(a),
                                                           member_key(b));
                                  return c != 0 ? c < 0 : a < b;
                              });
            for (std::size_t i = 0; i < adds && i < candidates.size(); ++i) {
                e.stored_at.insert(std::lower_bound(e.stored_at.begin(),
                                                    e.stored_at.end(), candidates[i]),
                                   candidates[i]);
                counters_.put_messages += 1;
                ++events;
            }
        }
        return events;
    }

    Result<Ok, DhtError> update_urgency(NodeId sn, Urgency new_level) {
        auto sec = section_of(sn);
        if (!sec) return DhtError::NotRegistered;
        audit_.push_back({sn, "urgency_update"});
        urgency_override_[sn] = new_level;
        for (auto z : {Zone::SNZ, Zone::RNZ})
            for (auto& [skey, e] : table(z))
                if (e.value.data.origin == sn) e.urgency = new_level;
        return Ok{};
    }

    Result<Ok, DhtError> update_section(NodeId sn, Section new_section) {
        auto sec = section_of(sn);
        if (!sec) return DhtError::NotRegistered;
        audit_.push_back({sn, "section_update"});
        if (*sec == new_section) return Ok{};
        join(sn, new_section);
        // Move the node's live entries into the new section's store and
        // recompute their replica sets there.
        auto& t = table(zone_of(*sec));
        std::vector<Digest> moving;
        for (auto& [skey, e] : t)
            if (skey.first == *sec && e.value.data.origin == sn)
                moving.push_back(skey.second);
        for (const Digest& key : moving) {
            auto node = t.extract({*sec, key});
            DhtEntry e = std::move(node.mapped());
            e.section = new_section;
            e.stored_at = replica_targets(new_section, key);
            table(zone_of(new_section))[{new_section, key}] = std::move(e);
        }
        return Ok{};
    }

    // Drop a copy that failed verification downstream.
    bool quarantine(Section section, const Digest& key) {
        bool hit = table(zone_of(section)).erase({section, key}) > 0;
        if (hit) audit_.push_back({kNoNode, "quarantine"});
        return hit;
    }

    const std::map<SectionKey, DhtEntry>& zone_contents(Zone z) const { return table(z); }
    std::map<SectionKey, DhtEntry>& zone_contents_mut(Zone z) { return table(z); }

    std::string dump_zone_csv(Zone z) const {
        std::ostringstream os;
        os << "key,section,urgency,replica_count\n";
        for (const auto& [skey, e] : table(z))
            os << to_hex(e.key.data(), e.key.size()) << ',' << to_string(e.section)
               << ',' << int(e.urgency) << ',' << e.stored_at.size() << '\n';
        return os.str();
    }

    std::size_t replica_bytes() const {
        std::size_t total = 0;
        for (auto z : {Zone::SNZ, Zone::RNZ})
            for (const auto& [skey, e] : table(z))
                total += entry_bytes(e) * e.stored_at.size();
        return total;
    }

private:
    Result<DhtEntry, DhtError> prepare(Section section, ChainElement value,
                                       Urgency urgency) {
        NodeId origin = value.data.origin;
        if (authorize_ && !authorize_(origin)) return DhtError::NotRegistered;
        if (members_of(section).empty()) return DhtError::SectionEmpty;
        DhtEntry e;
        e.key = entry_key(zone_of(section), origin, value.data.sequence);
        e.value = std::move(value);
        e.urgency = urgency;
        e.section = section;
        return e;
    }

    DhtEntry store(DhtEntry e) {
        Zone z = zone_of(e.section);
        DhtEntry& slot = table(z)[{e.section, e.key}];
        slot = std::move(e);
        return slot;
    }

    bool is_member(NodeId node, Section section) const {
        const auto& m = members_of(section);
        return std::binary_search(m.begin(), m.end(), node);
    }

    void detach(NodeId node, Section section) {
        auto& m = members_[section];
        m.erase(std::remove(m.begin(), m.end(), node), m.end());
    }

    const Digest& member_key(NodeId id) const {
        auto it = member_keys_.find(id);
        if (it == member_keys_.end()) {
            Bytes b;
            put_u32le(b, id);
            it = member_keys_.emplace(id, sha256(b)).first;
        }
        return it->second;
    }

    std::map<SectionKey, DhtEntry>& table(Zone z) { return entries_[int(z)]; }
    const std::map<SectionKey, DhtEntry>& table(Zone z) const { return entries_[int(z)]; }

    DhtConfig cfg_;
    std::map<SectionKey, DhtEntry> entries_[2];
    std::map<NodeId, Section> section_of_;
    std::map<Section, std::vector<NodeId>> members_;
    std::map<NodeId, Urgency> urgency_override_;
    mutable std::map<NodeId, Digest> member_keys_;
    std::function<bool(NodeId)> authorize_;
    DhtCounters counters_;
    std::vector<AuditEvent> audit_;
};

// Doctors hold fetched data in bounded scratch memory before promoting it
// into the RNZ table; overflow evicts the oldest entry.
class TemporaryBuffer {
public:
    TemporaryBuffer(NodeId owner, std::size_t capacity)
        : owner_(owner), capacity_(capacity) {}

    NodeId owner() const { return owner_; }
    std::size_t used() const { return used_; }
    std::size_t capacity() const { return capacity_; }
    const std::deque<DhtEntry>& contents() const { return contents_; }

    // Returns the number of evicted entries.  An entry larger than the whole
    // buffer is dropped outright rather than flushing everything for nothing.
    int add(DhtEntry e) {
        std::size_t sz = entry_bytes(e);
        if (sz > capacity_) return 0;
        int evicted = 0;
        while (used_ + sz > capacity_) {
            used_ -= entry_bytes(contents_.front());
            contents_.pop_front();
            ++evicted;
        }
        contents_.push_back(std::move(e));
        used_ += sz;
        return evicted;
    }

    std::optional<DhtEntry> take_oldest() {
        if (contents_.empty()) return std::nullopt;
        DhtEntry e = std::move(contents_.front());
        contents_.pop_front();
        used_ -= entry_bytes(e);
        return e;
    }

private:
    NodeId owner_;
    std::size_t capacity_;
    std::size_t used_ = 0;
    std::deque<DhtEntry> contents_;
};

} // namespace holoblock
