#pragma once

#include <optional>
#include <stdexcept>

#include "types.hpp"

namespace holoblock {

// Staged passive blocking.  A node may run over the rate threshold for the
// allowance window v; completing the window earns a block of u.  Each repeat
// halves the allowance and doubles the block: v/2 -> 2u, then v/4 -> permanent.
// Sub-threshold dips reset the running window but never the stage.

struct BlockerConfig {
    double rate_threshold = 0.9;        // simulator rate units
    Timestamp allowance = 600'000;      // v, ms (10 simulated minutes)
    Timestamp block_base = 300'000;     // u, ms (5 simulated minutes)
    bool stage_decay = false;           // optional forgiveness, off by default
    Timestamp decay_after = 3'600'000;  // clean time to shed one stage
};

struct OffenderState {
    NodeId node = kNoNode;
    int stage = 0;                          // 0 = clean history, 3 = permanent
    std::optional<Timestamp> window_start;  // current over-threshold run
    std::optional<Timestamp> blocked_until;
    bool permanent = false;
    std::optional<Timestamp> last_seen;     // monotonicity guard
    std::optional<Timestamp> clean_since;   // used only when stage_decay is on
};

struct ClockRegression : std::logic_error {
    ClockRegression() : std::logic_error("observe_rate: timestamps must not go backwards") {}
};

struct Action {
    enum Kind { Allow, Block, PermanentBlock } kind = Allow;
    Timestamp duration = 0;   // for Block: full length when fresh, remaining otherwise
    bool fresh = false;       // true exactly when this observation issued the block
};

inline Timestamp allowance_for_stage(const BlockerConfig& cfg, int stage) {
    return cfg.allowance >> stage;
}

inline Timestamp block_for_stage(const BlockerConfig& cfg, int stage) {
    return cfg.block_base << stage;
}

// gcc 11 flags optional payload reads here as maybe-uninitialized when the
// loop around the caller gets unrolled; every read is guarded by has_value.
#if defined(__GNUC__) && !defined(__clang__)
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wmaybe-uninitialized"
#endif
inline bool is_blocked(const OffenderState& s, Timestamp now) {
    if (s.permanent) return true;
    return s.blocked_until.has_value() && now < *s.blocked_until;
}

inline Action observe_rate(OffenderState& s, const BlockerConfig& cfg, Timestamp now,
                           double rate) {
    if (s.last_seen && now < *s.last_seen) throw ClockRegression{};
    s.last_seen = now;

    if (s.permanent) return {Action::PermanentBlock, 0, false};

    if (s.blocked_until) {
        if (now < *s.blocked_until)
            return {Action::Block, *s.blocked_until - now, false};
        // Block expired at blocked_until (half-open); this observation counts.
        s.blocked_until.reset();
        s.window_start.reset();
    }

    if (rate > cfg.rate_threshold) {
        s.clean_since.reset();
        if (!s.window_start) s.window_start = now;
        if (now - *s.window_start >= allowance_for_stage(cfg, s.stage)) {
            s.window_start.reset();
            if (s.stage >= 2) {
                s.stage = 3;
                s.permanent = true;
                return {Action::PermanentBlock, 0, true};
            }
            Timestamp len = block_for_stage(cfg, s.stage);
            s.blocked_until = now + len;
            ++s.stage;
            return {Action::Block, len, true};
        }
        return {Action::Allow, 0, false};
    }

    s.window_start.reset();
    if (cfg.stage_decay && s.stage > 0) {
        if (!s.clean_since) s.clean_since = now;
        if (now - *s.clean_since >= cfg.decay_after) {
            --s.stage;
            s.clean_since = now;
        }
    }
    return {Action::Allow, 0, false};
}
#if defined(__GNUC__) && !defined(__clang__)
#pragma GCC diagnostic pop
#endif

} // namespace holoblock
