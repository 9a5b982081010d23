#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "packet.hpp"
#include "protocol.hpp"

namespace holoblock {

// One simulated rate unit for the traffic guard.
inline constexpr double kRateUnitBytesPerSec = 102400.0;

enum class EventKind {
    Publish,
    Fetch,
    Forward,
    GossipTick,
    TelemetryTick,
    RefreshTick,
    AttackBurst,
    RateObservation,
    Arrival,        // replica or delivery message reaching a node's queue
    ConsensusTick,  // ledger commit round
};

struct Event {
    Timestamp at = 0;
    std::uint64_t order = 0;   // insertion tiebreak: equal times run FIFO
    EventKind kind = EventKind::Publish;
    NodeId a = kNoNode;        // actor
    NodeId b = kNoNode;        // counterpart / target
    NodeId c = kNoNode;        // data origin where distinct from the actor
    std::uint64_t n = 0;       // sequence number or flavor flag
    Section section = Section::ODP;
    Digest key{};
    int adversary = -1;
};

struct SimCounters {
    // Message conservation set.
    std::uint64_t emitted = 0;
    std::uint64_t delivered_msgs = 0;
    std::uint64_t dropped_ttl = 0;
    std::uint64_t dropped_queue = 0;
    std::uint64_t rejected_auth = 0;
    std::uint64_t rejected_integrity = 0;
    std::uint64_t in_flight_end = 0;

    // Element-level workload outcome.
    std::uint64_t offered = 0;
    std::uint64_t delivered_elements = 0;

    // Adversary bookkeeping.
    std::uint64_t accepted_forged = 0;
    std::uint64_t forged_rejected_consumer = 0;
    std::uint64_t tamper_events = 0;
    std::uint64_t mim_detected = 0;

    double data_ops = 0;   // data-plane operation count (the empirical cost)

    bool conserved() const {
        return emitted == delivered_msgs + dropped_ttl + dropped_queue +
                              rejected_auth + rejected_integrity + in_flight_end;
    }
};

struct BlockerRow {
    double t_min = 0;
    NodeId node = kNoNode;
    int stage = 0;
    std::string action;
};

struct TraceRow {
    Timestamp time = 0;
    const char* op = "";
    NodeId actor = kNoNode;
    std::string outcome;
};

struct RunArtifacts {
    SimCounters counters;
    std::vector<double> latency_ms;
    std::vector<double> route_ms;
    std::vector<BlockerRow> blocker_log;
    std::vector<TraceRow> trace;
    std::uint64_t bc_data_bytes = 0;   // committed payload bytes, one copy
    Timestamp end_time = 0;
};

class Simulation {
public:
    explicit Simulation(World& w) : w_(w), cfg_(w.cfg) {
        rng_.seed(cfg_.seed * 0x9E3779B97F4A7C15ull + 0x6C62272E07BB0142ull);
        forward_rng_.seed(cfg_.seed * 0xBF58476D1CE4E5B9ull + 1);
        attack_rng_.seed(cfg_.seed * 0x94D049BB133111EBull + 2);
        completions_.resize(w_.m() + 1);
        bytes_window_.assign(w_.m() + 1, 0);
        guards_.resize(w_.m() + 1);
        for (int i = 0; i <= w_.m(); ++i) guards_[i].node = static_cast<NodeId>(i);
    }

    RunArtifacts run() {
        schedule_workload();
        schedule_ticks();
        schedule_adversaries();

        while (!heap_.empty()) {
            Event ev = heap_.top();
            if (ev.at > cfg_.duration_ms) break;
            heap_.pop();
            w_.now = ev.at;
            dispatch(ev);
        }
        w_.now = cfg_.duration_ms;

        while (!heap_.empty()) {
            if (heap_.top().kind == EventKind::Arrival) ++counters_.in_flight_end;
            heap_.pop();
        }
        counters_.in_flight_end += pending_.size();

        sample_routes();

        RunArtifacts a;
        a.counters = counters_;
        a.latency_ms = std::move(latency_);
        a.route_ms = std::move(route_);
        a.blocker_log = std::move(blocker_);
        a.trace = std::move(trace_);
        a.bc_data_bytes = bc_data_bytes_;
        a.end_time = cfg_.duration_ms;
        return a;
    }

private:
    struct Cmp {
        bool operator()(const Event& x, const Event& y) const {
            if (x.at != y.at) return x.at > y.at;
            return x.order > y.order;
        }
    };
    struct Track {
        double published = 0;
        bool delivered = false;
    };
    struct AdvState {
        AdversaryKind kind;
        NodeId victim = kNoNode;
        KeyPair keys;
        std::uint64_t next_seq = 0;
        double intensity = 1.0;
    };

    static constexpr std::uint64_t kLatest = ~0ull;
    static constexpr std::uint64_t kForgeSeqBase = 1'000'000;
    static constexpr Timestamp kForever =
        std::numeric_limits<Timestamp>::max() / 4;

    bool dht_mode() const { return cfg_.mode != Mode::BlockchainOnly; }
    bool ledger_mode() const { return cfg_.mode != Mode::HolochainOnly; }

    void schedule(Event e) {
        e.order = order_++;
        heap_.push(e);
    }

    void note(Timestamp t, const char* op, NodeId actor, std::string outcome) {
        trace_.push_back({t, op, actor, std::move(outcome)});
    }

    static Timestamp ms_of(double t) { return static_cast<Timestamp>(std::llround(t)); }

    std::size_t wire_bytes(const DhtEntry& e) const {
        std::size_t body = canonical_bytes(e.value).size();
        return body + kPacketHeaderSize * ((body + kPacketMaxPayload - 1) / kPacketMaxPayload);
    }

    Bytes make_payload(NodeId origin, std::uint64_t seq) const {
        Bytes p(cfg_.payload_bytes);
        for (std::size_t i = 0; i < p.size(); ++i)
            p[i] = static_cast<uint8_t>(origin * 131 + seq * 31 + i);
        return p;
    }

    // ---- schedule construction ------------------------------------------

    double publish_window() const { return 0.8 * static_cast<double>(cfg_.duration_ms); }

    double publish_time(std::size_t sensor_idx, int j) const {
        std::size_t s_count = w_.sensor_ids.size();
        std::size_t total = s_count * std::max(1, cfg_.transactions_per_node);
        double dt = publish_window() / static_cast<double>(std::max<std::size_t>(1, total));
        return (static_cast<double>(j) * s_count + sensor_idx) * dt;
    }

    void schedule_workload() {
        const int gamma = cfg_.transactions_per_node;
        for (std::size_t i = 0; i < w_.sensor_ids.size(); ++i)
            for (int j = 0; j < gamma; ++j)
                schedule({ms_of(publish_time(i, j)), 0, EventKind::Publish,
                          w_.sensor_ids[i]});

        if (!dht_mode() || gamma == 0 || w_.doctor_ids.empty()) return;
        for (std::size_t i = 0; i < w_.sensor_ids.size(); ++i) {
            NodeId sn = w_.sensor_ids[i];
            Timestamp first = ms_of(publish_time(i, 0));
            NodeId d1 = w_.nearest_of(w_.doctor_ids, sn);
            if (d1 != kNoNode)
                schedule({first + 400, 0, EventKind::Fetch, d1, sn, kNoNode, kLatest});
            if (i % 3 == 0 && w_.doctor_ids.size() > 1) {
                // second-closest doctor takes an interest too
                std::vector<NodeId> pool;
                for (NodeId d : w_.doctor_ids)
                    if (d != d1) pool.push_back(d);
                NodeId d2 = w_.nearest_of(pool, sn);
                if (d2 != kNoNode)
                    schedule({first + 1400, 0, EventKind::Fetch, d2, sn, kNoNode,
                              kLatest});
            }
        }
    }

    void schedule_ticks() {
        if (dht_mode()) {
            for (Timestamp t = cfg_.gossip_interval_ms; t <= cfg_.duration_ms;
                 t += cfg_.gossip_interval_ms)
                schedule({t, 0, EventKind::GossipTick});
            for (Timestamp t = cfg_.refresh_interval_ms; t <= cfg_.duration_ms;
                 t += cfg_.refresh_interval_ms)
                schedule({t, 0, EventKind::RefreshTick});
        }
        if (ledger_mode()) {
            for (Timestamp t = cfg_.telemetry_interval_ms; t <= cfg_.duration_ms;
                 t += cfg_.telemetry_interval_ms)
                schedule({t, 0, EventKind::TelemetryTick});
            for (Timestamp t = cfg_.rate_window_ms; t <= cfg_.duration_ms;
                 t += cfg_.rate_window_ms)
                schedule({t, 0, EventKind::RateObservation});
        }
        if (cfg_.mode == Mode::BlockchainOnly) {
            Timestamp step = ms_of(cfg_.delay.consensus_ms);
            for (Timestamp t = step; t <= cfg_.duration_ms; t += step)
                schedule({t, 0, EventKind::ConsensusTick});
        }
    }

    void schedule_adversaries() {
        for (std::size_t i = 0; i < w_.adversaries.size(); ++i) {
            const AdversaryProfile& p = w_.adversaries[i];
            AdvState st;
            st.kind = p.kind;
            st.intensity = p.intensity <= 0 ? 1.0 : p.intensity;
            st.victim = p.targets.empty()
                            ? (w_.sensor_ids.empty()
                                   ? kNoNode
                                   : w_.sensor_ids[attack_rng_() % w_.sensor_ids.size()])
                            : p.targets[0];
            st.keys = KeyStore::derive_pair(cfg_.seed ^ 0xAD5E'11ull,
                                            static_cast<NodeId>(10'000 + i));
            w_.keystore.register_pair(st.keys);
            adv_.push_back(st);
            int idx = static_cast<int>(i);

            switch (p.kind) {
                case AdversaryKind::Impersonator: {
                    Timestamp period =
                        std::max<Timestamp>(1, ms_of(1000.0 / (60.0 * st.intensity)));
                    for (Timestamp t = 0; t <= cfg_.duration_ms; t += period)
                        schedule({t, 0, EventKind::AttackBurst, kNoNode, kNoNode,
                                  kNoNode, 0, Section::ODP, {}, idx});
                    break;
                }
                case AdversaryKind::Flooder:
                    for (Timestamp t = 0; t <= cfg_.duration_ms; t += 100)
                        schedule({t, 0, EventKind::AttackBurst, kNoNode, kNoNode,
                                  kNoNode, 0, Section::ODP, {}, idx});
                    break;
                case AdversaryKind::Tamperer: {
                    Timestamp period = std::max<Timestamp>(
                        100, ms_of(2000.0 / st.intensity));
                    for (Timestamp t = period; t <= cfg_.duration_ms; t += period)
                        schedule({t, 0, EventKind::AttackBurst, kNoNode, kNoNode,
                                  kNoNode, 0, Section::ODP, {}, idx});
                    break;
                }
                case AdversaryKind::ManInMiddle:
                    for (NodeId d : p.targets) mitm_taps_.insert(d);
                    break;
            }
        }
    }

    // ---- per-node queue model -------------------------------------------

    void purge(NodeId n, double now) {
        auto& c = completions_[n];
        while (!c.empty() && c.front() <= now) c.pop_front();
    }

    // Admit one job of `ops` operations into the node's inbound queue.
    // Returns the completion time, or a negative value when the queue is full.
    double admit(NodeId n, double arrive, int ops) {
        purge(n, arrive);
        auto& c = completions_[n];
        if (c.size() >= cfg_.queue_capacity) return -1.0;
        double start = c.empty() ? arrive : std::max(arrive, c.back());
        double done = start + ops * cfg_.delay.processing_ms;
        c.push_back(done);
        counters_.data_ops += ops;
        return done;
    }

    int verify_ops() const { return ceil_log2(static_cast<std::size_t>(w_.m()) + 1); }

    void dec_inflight(const SectionKey& sk) {
        auto it = inflight_.find(sk);
        if (it != inflight_.end() && --it->second <= 0) inflight_.erase(it);
    }

    void schedule_replica(NodeId from, NodeId to, Section section, const Digest& key,
                          Timestamp at, bool load_only) {
        ++counters_.emitted;
        std::uint16_t h = w_.hops_between(from, to);
        if (h > cfg_.ttl) {
            ++counters_.dropped_ttl;
            return;
        }
        Timestamp arrive = at + ms_of(h * cfg_.delay.propagation_ms);
        inflight_[{section, key}] += 1;
        schedule({arrive, 0, EventKind::Arrival, from, to, kNoNode,
                  load_only ? 1ull : 0ull, section, key});
    }

    // ---- event handlers ---------------------------------------------------

    void dispatch(const Event& ev) {
        switch (ev.kind) {
            case EventKind::Publish:         on_publish(ev); break;
            case EventKind::Fetch:           on_fetch(ev); break;
            case EventKind::Forward:         on_forward(ev); break;
            case EventKind::GossipTick:      on_gossip(ev); break;
            case EventKind::TelemetryTick:   on_telemetry(ev); break;
            case EventKind::RefreshTick:     on_refresh(ev); break;
            case EventKind::AttackBurst:     on_attack(ev); break;
            case EventKind::RateObservation: on_rate_observation(ev); break;
            case EventKind::Arrival:         on_arrival(ev); break;
            case EventKind::ConsensusTick:   on_consensus(ev); break;
        }
    }

    void on_publish(const Event& ev) {
        NodeId sn = ev.a;
        std::uint64_t seq = w_.cfg.mode == Mode::BlockchainOnly
                                ? w_.bc_sequences[sn]
                                : next_sequence(w_.node(sn).chain, sn);
        ++counters_.offered;
        auto out = sn_publish(w_, sn, make_payload(sn, seq), ev.at,
                              PublishContext{nullptr, nullptr, false});
        if (!out.ok()) {
            // Uplink refuses traffic from a blocked or deregistered node.
            ++counters_.emitted;
            ++counters_.rejected_auth;
            note(ev.at, "publish", sn, "rejected_auth");
            return;
        }
        counters_.data_ops += 1;   // the origin's own append
        if (cfg_.mode == Mode::Hybrid)
            counters_.data_ops += cfg_.complexity.c + cfg_.complexity.z;

        if (cfg_.mode == Mode::BlockchainOnly) {
            ++counters_.emitted;
            pending_.push_back({sn, double(ev.at),
                                canonical_bytes(out.value().tx).size()});
            note(ev.at, "publish", sn, "queued");
            return;
        }
        note(ev.at, "publish", sn, "stored");

        const DhtEntry& e = *out.value().entry;
        track_[e.key] = {double(ev.at), false};
        auto targets = w_.dht.replica_targets(e.section, e.key);
        std::size_t shipped = 0;
        for (NodeId t : targets) {
            if (t == sn) continue;
            schedule_replica(sn, t, e.section, e.key, ev.at, false);
            bytes_window_[sn] += wire_bytes(e);
            ++shipped;
        }
        if (shipped == 0) {
            // Singleton section: the element is complete where it stands.
            track_[e.key].delivered = true;
            ++counters_.delivered_elements;
        }
    }

    void on_arrival(const Event& ev) {
        NodeId to = ev.b;
        SectionKey sk{ev.section, ev.key};
        double done = admit(to, double(ev.at), verify_ops());
        if (done < 0) {
            ++counters_.dropped_queue;
            note(ev.at, "arrival", to, "dropped_queue");
            dec_inflight(sk);
            return;
        }
        if (ev.n == 1) {   // load-only: junk absorbed by the holder
            ++counters_.delivered_msgs;
            note(ev.at, "arrival", to, "absorbed");
            dec_inflight(sk);
            return;
        }
        auto r = w_.dht.add_holder(ev.section, ev.key, to);
        if (r.ok()) {
            ++counters_.delivered_msgs;
            note(ev.at, "arrival", to, "stored");
            auto it = track_.find(ev.key);
            if (it != track_.end() && !it->second.delivered) {
                it->second.delivered = true;
                ++counters_.delivered_elements;
                latency_.push_back(done - it->second.published);
            }
        } else if (r.error() == DhtError::IntegrityFailure) {
            ++counters_.rejected_integrity;
            w_.dht.quarantine(ev.section, ev.key);
            note(ev.at, "arrival", to, "rejected_integrity");
        } else {
            // References an entry that has since been quarantined.
            ++counters_.rejected_integrity;
            note(ev.at, "arrival", to, "stale");
        }
        dec_inflight(sk);
    }

    void on_fetch(const Event& ev) {
        NodeId rn = ev.a, origin = ev.b;
        bool targeted = ev.n != kLatest;

        if (mitm_taps_.count(rn)) {
            // The response only exists if the element does.
            std::uint64_t seq = targeted ? ev.n : w_.latest_sequence(origin).value_or(0);
            bool exists = w_.dht.find(Zone::RNZ, entry_key(Zone::RNZ, origin, seq)) ||
                          w_.dht.find(Zone::SNZ, entry_key(Zone::SNZ, origin, seq));
            if (exists) {
                ++counters_.emitted;
                ++counters_.rejected_integrity;
                ++counters_.mim_detected;
                note(ev.at, "fetch", rn, "intercepted");
            }
            return;
        }

        auto r = targeted ? rn_fetch_key(w_, rn, origin, ev.n, ev.at, false)
                          : rn_fetch(w_, rn, origin, ev.at, false);
        if (!r.ok()) {
            if (r.error() == FetchError::IntegrityFailure) {
                ++counters_.emitted;
                ++counters_.rejected_integrity;
                note(ev.at, "fetch", rn, "rejected_integrity");
                if (targeted &&
                    forged_keys_.count(entry_key(Zone::SNZ, origin, ev.n)))
                    ++counters_.forged_rejected_consumer;
            } else {
                note(ev.at, "fetch", rn,
                     r.error() == FetchError::NotFound ? "not_found"
                                                       : "unauthorized");
            }
            return;
        }
        const FetchOutcome& out = r.value();
        counters_.data_ops += out.snz_lookup_steps + out.rnz_lookup_steps;

        ++counters_.emitted;
        NodeId server = out.served_by == kNoNode ? origin : out.served_by;
        std::uint16_t h = w_.hops_between(server, rn);
        if (h > cfg_.ttl) {
            ++counters_.dropped_ttl;
            note(ev.at, "fetch", rn, "dropped_ttl");
            return;
        }
        double arrive = ev.at + h * cfg_.delay.propagation_ms;
        if (admit(rn, arrive, verify_ops()) < 0) {
            ++counters_.dropped_queue;
            note(ev.at, "fetch", rn, "dropped_queue");
            return;
        }
        ++counters_.delivered_msgs;
        note(ev.at, "fetch", rn, "served");
        bytes_window_[server] += wire_bytes(out.entry);

        if (!targeted && !w_.paramedic_ids.empty() &&
            forward_rng_() % 100 < 20) {
            NodeId para = w_.nearest_of(w_.paramedic_ids, rn);
            std::uint64_t seq = out.entry.value.data.sequence;
            schedule({ev.at + 200, 0, EventKind::Forward, rn, para, origin, seq});
            if (!w_.pharmacy_ids.empty() && forward_rng_() % 100 < 50) {
                NodeId ph = w_.nearest_of(w_.pharmacy_ids, para);
                schedule({ev.at + 400, 0, EventKind::Forward, para, ph, origin, seq});
            }
        }
    }

    void on_forward(const Event& ev) {
        auto r = rn_forward(w_, ev.a, ev.b, ev.c, ev.n, ev.at, false);
        if (!r.ok()) {
            if (r.error() == ForwardError::IntegrityFailure) {
                ++counters_.emitted;
                ++counters_.rejected_integrity;
                note(ev.at, "forward", ev.a, "rejected_integrity");
            } else {
                note(ev.at, "forward", ev.a, "refused");
            }
            return;
        }
        ++counters_.emitted;
        std::uint16_t h = w_.hops_between(ev.a, ev.b);
        if (h > cfg_.ttl) {
            ++counters_.dropped_ttl;
            note(ev.at, "forward", ev.a, "dropped_ttl");
            return;
        }
        if (admit(ev.b, ev.at + h * cfg_.delay.propagation_ms, verify_ops()) < 0) {
            ++counters_.dropped_queue;
            note(ev.at, "forward", ev.a, "dropped_queue");
            return;
        }
        ++counters_.delivered_msgs;
        note(ev.at, "forward", ev.a, "ok");
        bytes_window_[ev.a] += wire_bytes(r.value().entry);
    }

    void on_gossip(const Event& ev) {
        for (Zone z : {Zone::SNZ, Zone::RNZ}) {
            for (const auto& [sk, e] : w_.dht.zone_contents(z)) {
                std::size_t target = std::min<std::size_t>(
                    cfg_.replication_factor, w_.dht.members_of(e.section).size());
                std::size_t have = e.stored_at.size();
                if (have >= target) continue;
                auto fl = inflight_.find(sk);
                if (fl != inflight_.end() && fl->second > 0) continue;
                std::size_t adds =
                    std::min(have * cfg_.fanout, target - have);
                if (adds == 0) continue;
                NodeId from = e.stored_at.empty() ? e.value.data.origin
                                                  : e.stored_at.front();
                std::size_t sent = 0;
                for (NodeId t : w_.dht.replica_targets(e.section, e.key)) {
                    if (sent >= adds) break;
                    if (std::binary_search(e.stored_at.begin(), e.stored_at.end(), t))
                        continue;
                    schedule_replica(from, t, e.section, e.key, ev.at, false);
                    ++sent;
                }
            }
        }
    }

    void on_telemetry(const Event& ev) {
        for (const Node& n : w_.nodes) {
            if (is_authority(n.kind)) continue;
            if (!w_.ledger->is_registered(n.id)) continue;
            if (!w_.ledger->is_authorized(n.id, ev.at)) continue;
            TelemetrySnapshot snap;
            snap.node = n.id;
            snap.geo_location = n.loc;
            snap.operational_cost = n.record.operational_cost;
            snap.at = ev.at;
            if (is_sender_kind(n.kind)) {
                snap.residual_energy = n.record.residual_energy;
            } else {
                purge(n.id, double(ev.at));
                snap.queuing_delay = completions_[n.id].size() *
                                     cfg_.delay.processing_ms;
                std::vector<std::pair<NodeId, std::uint8_t>> listing;
                for (const auto& [sn, tr] : w_.transfers)
                    if (std::binary_search(tr.subscribers.begin(),
                                           tr.subscribers.end(), n.id)) {
                        auto sec = w_.node(sn).section;
                        listing.push_back(
                            {sn, w_.dht.urgency_for(sn, sec.value_or(Section::RMP))});
                    }
                snap.urgency_listing = std::move(listing);
            }
            (void)w_.ledger->publish_telemetry(snap);
        }
    }

    void on_refresh(const Event& ev) {
        refresh_subscriptions(w_, ev.at, true, [&](NodeId sub, const DhtEntry& e) {
            ++counters_.emitted;
            NodeId from = e.value.data.origin;
            std::uint16_t h = w_.hops_between(from, sub);
            if (h > cfg_.ttl) {
                ++counters_.dropped_ttl;
                note(ev.at, "refresh", sub, "dropped_ttl");
                return;
            }
            if (admit(sub, ev.at + h * cfg_.delay.propagation_ms, verify_ops()) < 0) {
                ++counters_.dropped_queue;
                note(ev.at, "refresh", sub, "dropped_queue");
                return;
            }
            ++counters_.delivered_msgs;
            note(ev.at, "refresh", sub, "delivered");
        });
    }

    void on_attack(const Event& ev) {
        AdvState& st = adv_[ev.adversary];
        switch (st.kind) {
            case AdversaryKind::Impersonator: on_impersonate(ev, st); break;
            case AdversaryKind::Flooder:      on_flood(ev, st); break;
            case AdversaryKind::Tamperer:     on_tamper(ev, st); break;
            case AdversaryKind::ManInMiddle:  break;
        }
    }

    void on_impersonate(const Event& ev, AdvState& st) {
        if (st.victim == kNoNode) return;
        std::uint64_t seq = kForgeSeqBase + st.next_seq++;
        Bytes junk(64);
        for (std::size_t i = 0; i < junk.size(); ++i)
            junk[i] = static_cast<uint8_t>(seq * 7 + i);
        TransactionData tx = make_signed_transaction(st.victim, seq, junk, st.keys);

        if (ledger_mode()) {
            // The key binding check at the entry point throws this away.
            ++counters_.emitted;
            ++counters_.rejected_auth;
            counters_.data_ops += cfg_.complexity.c + cfg_.complexity.z;
            note(ev.at, "attack_impersonate", st.victim, "rejected_auth");
            return;
        }

        auto sec = w_.node(st.victim).section;
        if (!sec) return;
        ChainElement elem{{sha256(canonical_bytes(tx)), {}}, tx};
        Digest key = entry_key(Zone::SNZ, st.victim, seq);
        auto targets = w_.dht.replica_targets(*sec, key);
        if (targets.empty()) return;
        auto r = w_.dht.put_at(*sec, elem, w_.dht.urgency_for(st.victim, *sec),
                               targets[0]);
        if (!r.ok()) return;
        ++counters_.accepted_forged;
        forged_keys_.insert(key);
        note(ev.at, "attack_impersonate", st.victim, "stored");

        // The first holder still pays the verification work; the rest get
        // ordinary replica pushes.
        schedule_replica(st.victim, targets[0], *sec, key, ev.at, true);
        for (std::size_t i = 1; i < targets.size(); ++i)
            schedule_replica(st.victim, targets[i], *sec, key, ev.at, false);

        if (st.next_seq % 8 == 1 && !w_.doctor_ids.empty()) {
            NodeId doc = w_.doctor_ids[attack_rng_() % w_.doctor_ids.size()];
            schedule({ev.at + 300, 0, EventKind::Fetch, doc, st.victim, kNoNode, seq});
        }
    }

    void on_flood(const Event& ev, AdvState& st) {
        if (st.victim == kNoNode) return;
        double chunk = st.intensity * kRateUnitBytesPerSec * 0.1;   // per 100 ms
        bytes_window_[st.victim] += static_cast<std::uint64_t>(chunk);
        std::uint64_t pkts = static_cast<std::uint64_t>(
            std::ceil(chunk / kPacketMaxPayload));
        counters_.emitted += pkts;
        if (ledger_mode() && !w_.ledger->is_authorized(st.victim, ev.at)) {
            counters_.rejected_auth += pkts;
            note(ev.at, "attack_flood", st.victim, "blocked");
        } else {
            counters_.delivered_msgs += pkts;
            note(ev.at, "attack_flood", st.victim, "accepted");
        }
    }

    void on_tamper(const Event& ev, AdvState& st) {
        (void)ev;
        (void)st;
        auto& table = w_.dht.zone_contents_mut(Zone::SNZ);
        if (table.empty()) return;
        std::size_t idx = attack_rng_() % table.size();
        auto it = table.begin();
        std::advance(it, idx);
        if (it->second.value.data.payload.empty()) return;
        std::size_t byte = attack_rng_() % it->second.value.data.payload.size();
        it->second.value.data.payload[byte] ^= 0x40;
        ++counters_.tamper_events;
        note(ev.at, "attack_tamper", it->second.value.data.origin, "flipped");
    }

    void on_rate_observation(const Event& ev) {
        Timestamp logical = ev.at - cfg_.rate_window_ms;
        double window_s = cfg_.rate_window_ms / 1000.0;
        for (int id = 4; id <= w_.m(); ++id) {
            if (!w_.ledger->is_registered(static_cast<NodeId>(id))) {
                bytes_window_[id] = 0;
                continue;
            }
            double rate = bytes_window_[id] / (kRateUnitBytesPerSec * window_s);
            bytes_window_[id] = 0;
            Action act = observe_rate(guards_[id], cfg_.blocker, logical, rate);
            if (!act.fresh) continue;
            bool perm = act.kind == Action::Kind::PermanentBlock;
            Timestamp until = perm ? kForever : logical + act.duration;
            w_.ledger->record_block_action(
                {static_cast<NodeId>(id), guards_[id].stage, perm, until}, logical);
            char buf[32];
            if (perm)
                std::snprintf(buf, sizeof buf, "permanent");
            else
                std::snprintf(buf, sizeof buf, "block:%g",
                              act.duration / 60000.0);
            blocker_.push_back({logical / 60000.0, static_cast<NodeId>(id),
                                guards_[id].stage, buf});
            note(ev.at, "block", static_cast<NodeId>(id), buf);
        }
    }

    void on_consensus(const Event& ev) {
        int budget = cfg_.complexity.z;
        while (budget-- > 0 && !pending_.empty()) {
            Pending p = pending_.front();
            pending_.pop_front();
            std::uint64_t k = ++per_origin_k_[p.origin];
            counters_.data_ops +=
                w_.m() * (cfg_.complexity.c + 2.0 * k - 1.0);
            ++counters_.delivered_msgs;
            ++counters_.delivered_elements;
            bc_data_bytes_ += p.bytes;
            std::uint16_t h = w_.hops_between(p.origin, 3);
            latency_.push_back(double(ev.at) + h * cfg_.delay.propagation_ms -
                               p.published);
            note(ev.at, "commit", p.origin, "ok");
        }
    }

    void sample_routes() {
        if (w_.sensor_ids.empty() || w_.doctor_ids.empty()) return;
        std::mt19937_64 rrng(cfg_.seed ^ 0x726f'7574'6573ull);
        for (int k = 0; k < 20; ++k) {
            NodeId s = w_.sensor_ids[rrng() % w_.sensor_ids.size()];
            NodeId d = w_.doctor_ids[rrng() % w_.doctor_ids.size()];
            auto r = select_route(w_, s, d, cfg_.duration_ms);
            if (r.ok()) route_.push_back(r.value().elapsed_ms);
        }
    }

    struct Pending {
        NodeId origin;
        double published;
        std::size_t bytes;
    };

    World& w_;
    SimConfig cfg_;
    std::priority_queue<Event, std::vector<Event>, Cmp> heap_;
    std::uint64_t order_ = 0;
    std::vector<std::deque<double>> completions_;
    std::vector<std::uint64_t> bytes_window_;
    std::vector<OffenderState> guards_;
    std::map<SectionKey, int> inflight_;
    std::map<Digest, Track> track_;
    std::set<Digest> forged_keys_;
    std::vector<AdvState> adv_;
    std::set<NodeId> mitm_taps_;
    std::deque<Pending> pending_;
    std::map<NodeId, std::uint64_t> per_origin_k_;
    std::mt19937_64 rng_, forward_rng_, attack_rng_;
    SimCounters counters_;
    std::vector<double> latency_;
    std::vector<double> route_;
    std::vector<BlockerRow> blocker_;
    std::vector<TraceRow> trace_;
    std::uint64_t bc_data_bytes_ = 0;
};

} // namespace holoblock
