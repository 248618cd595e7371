#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "trendlab/date.hpp"
#include "trendlab/neuralnet.hpp"

namespace trendlab {

enum class ClosurePolicy {
    fixed_t,     // close T minutes after opening
    on_flip,     // close when the hard decision sequence changes
    flip_plus_t, // close T minutes after the first flip
};

struct SafetyConfig {
    int win = 10;          // closed trades inspected
    int trigger = 4;       // losses within the window that fire the switch
    int len_minutes = 120; // suppression length in session minutes
};

struct StrategyConfig {
    int horizon = 28;       // T, prediction interval in minutes
    int lookback_days = 5;  // D, trading days feeding threshold calibration
    std::vector<double> threshold_grid; // candidate T_H values, sorted, in [0,1)
    double commission_pct = 0.1;        // round-trip cost, percent of stake
    SafetyConfig safety;
    ClosurePolicy closure = ClosurePolicy::on_flip;
    int min_qualifying_points = 5;

    // When set, T_H is pinned and adaptive calibration is skipped.
    std::optional<double> fixed_threshold;

    void validate() const; // throws ConfigError
};

std::vector<double> default_threshold_grid(); // 0.00 .. 0.90 step 0.05

// Sentinel threshold no margin can clear: no trades open.
inline constexpr double kNoTradeThreshold = std::numeric_limits<double>::infinity();

// Classification margin |p2 - p1|.
double margin(const Prediction& pred);

// One prior decision point: its margin, hard direction and the
// commission-adjusted gain a fixed-horizon trade at that point would have
// made. Calibration is counterfactual — every point counts, not just
// executed trades.
struct CalibrationPoint {
    double margin = 0.0;
    int direction = 0;
    double hypothetical_gain_pct = 0.0;
};

// Picks the grid candidate maximizing the median hypothetical gain over the
// points whose margin clears it. Ties go to the largest threshold (fewer
// trades); candidates with fewer than min_qualifying points are skipped; if
// none qualify, returns kNoTradeThreshold. Throws ConfigError on an empty
// history or grid.
double adaptive_threshold(std::span<const CalibrationPoint> history,
                          std::span<const double> grid, int min_qualifying = 5);

// direction * (exit - entry) / entry * 100 - commission.
double trade_gain(int direction, double entry, double exit, double commission_pct);

struct Trade {
    Date day;
    int open_index = 0;  // bar index within the day
    int close_index = 0;
    int open_minute = 0; // minute of day
    int close_minute = 0;
    int direction = 0;   // +1 long, -1 short
    double entry_price = 0.0;
    double exit_price = 0.0;
    double gain_pct = 0.0; // net of commission
    double threshold_used = 0.0;
    double margin_at_open = 0.0;
    int safety_blocked_count = 0; // openings suppressed since the prior close
};

struct OpenDecision {
    bool open = false;
    double margin = 0.0;
    double threshold_used = 0.0;
};

// alpha = 1 iff margin >= T_H and the safety switch is idle and no position
// is already open.
OpenDecision decide_open(const Prediction& pred, double threshold, bool safety_on,
                         bool position_open);

struct PositionState {
    int direction = 0;
    int open_index = 0;
    int flip_index = -1; // first bar where the hard decision changed; -1 until seen
};

// Closure test at bar `now`. Flip detection is the caller's job (it owns the
// prediction stream); every policy force-closes on the session's last bar.
bool decide_close(ClosurePolicy policy, const PositionState& pos, int now,
                  int session_last_index, int horizon);

// Loss-streak circuit breaker. After a close makes the count of losing
// trades among the last `win` closed trades reach `trigger`, openings are
// suppressed for minutes m+1 .. m+len (m = triggering close, session-minute
// clock), resuming at m+len+1.
class SafetySwitch {
public:
    explicit SafetySwitch(SafetyConfig cfg) : cfg_(cfg) {}

    void on_trade_closed(double gain_pct, std::int64_t close_minute);
    bool active(std::int64_t now_minute) const { return now_minute <= suppressed_until_; }

private:
    SafetyConfig cfg_;
    std::deque<double> recent_gains_;
    std::int64_t suppressed_until_ = std::numeric_limits<std::int64_t>::min();
};

} // namespace trendlab
