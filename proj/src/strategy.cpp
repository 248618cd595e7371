#include "trendlab/strategy.hpp"

#include <algorithm>
#include <cmath>

#include "trendlab/errors.hpp"

namespace trendlab {

void StrategyConfig::validate() const {
    if (horizon < 1 || horizon > 30)
        throw ConfigError("horizon must be in 1..30, got " + std::to_string(horizon));
    if (lookback_days < 1) throw ConfigError("lookback_days must be >= 1");
    if (commission_pct < 0.0) throw ConfigError("commission must be >= 0");
    if (safety.win < 1 || safety.trigger < 1 || safety.len_minutes < 0)
        throw ConfigError("safety parameters must be positive");
    if (safety.trigger > safety.win)
        throw ConfigError("safety trigger must not exceed the window size");
    if (min_qualifying_points < 1) throw ConfigError("min_qualifying_points must be >= 1");
    if (!fixed_threshold) {
        if (threshold_grid.empty()) throw ConfigError("threshold grid is empty");
        for (double t : threshold_grid)
            if (t < 0.0 || t >= 1.0) throw ConfigError("threshold grid values must be in [0, 1)");
        if (!std::is_sorted(threshold_grid.begin(), threshold_grid.end()))
            throw ConfigError("threshold grid must be sorted ascending");
    }
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid;
    for (int k = 0; k <= 18; ++k) grid.push_back(0.05 * k);
    return grid;
}

double margin(const Prediction& pred) { return std::fabs(pred.probs[1] - pred.probs[0]); }

namespace {

double median_inplace(std::vector<double>& v) {
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (n % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        m = 0.5 * (lo + m);
    }
    return m;
}

} // namespace

double adaptive_threshold(std::span<const CalibrationPoint> history,
                          std::span<const double> grid, int min_qualifying) {
    if (history.empty()) throw ConfigError("adaptive threshold: empty calibration history");
    if (grid.empty()) throw ConfigError("adaptive threshold: empty grid");

    double best_threshold = kNoTradeThreshold;
    double best_median = -std::numeric_limits<double>::infinity();
    std::vector<double> gains;
    gains.reserve(history.size());
    for (double candidate : grid) {
        gains.clear();
        for (const auto& p : history)
            if (p.margin >= candidate) gains.push_back(p.hypothetical_gain_pct);
        if (static_cast<int>(gains.size()) < min_qualifying) continue;
        const double med = median_inplace(gains);
        if (med >= best_median) { // >= keeps the largest threshold on ties
            best_median = med;
            best_threshold = candidate;
        }
    }
    return best_threshold;
}

double trade_gain(int direction, double entry, double exit, double commission_pct) {
    if (!(entry > 0.0) || !(exit > 0.0))
        throw ValidationError("trade_gain requires positive prices");
    if (direction != 1 && direction != -1)
        throw ValidationError("trade direction must be +1 or -1");
    return direction * (exit - entry) / entry * 100.0 - commission_pct;
}

OpenDecision decide_open(const Prediction& pred, double threshold, bool safety_on,
                         bool position_open) {
    OpenDecision d;
    d.margin = margin(pred);
    d.threshold_used = threshold;
    d.open = d.margin >= threshold && !safety_on && !position_open;
    return d;
}

bool decide_close(ClosurePolicy policy, const PositionState& pos, int now,
                  int session_last_index, int horizon) {
    if (now >= session_last_index) return true; // no overnight positions
    switch (policy) {
        case ClosurePolicy::fixed_t:
            return now - pos.open_index >= horizon;
        case ClosurePolicy::on_flip:
            return pos.flip_index >= 0 && now >= pos.flip_index;
        case ClosurePolicy::flip_plus_t:
            return pos.flip_index >= 0 && now - pos.flip_index >= horizon;
    }
    return false;
}

void SafetySwitch::on_trade_closed(double gain_pct, std::int64_t close_minute) {
    recent_gains_.push_back(gain_pct);
    while (static_cast<int>(recent_gains_.size()) > cfg_.win) recent_gains_.pop_front();
    int losses = 0;
    for (double g : recent_gains_)
        if (g < 0.0) ++losses;
    if (losses >= cfg_.trigger)
        suppressed_until_ = std::max(suppressed_until_, close_minute + cfg_.len_minutes);
}

} // namespace trendlab
