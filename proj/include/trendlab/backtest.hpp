#pragma once

#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "trendlab/dataset.hpp"
#include "trendlab/market_data.hpp"
#include "trendlab/neuralnet.hpp"
#include "trendlab/strategy.hpp"

namespace trendlab {

// Minute-level signal source driving the strategy. `anchor` always has the
// full 64-bar history (callers guarantee anchor >= kMinAnchor).
class Predictor {
public:
    virtual ~Predictor() = default;
    virtual Prediction predict(const TradingDay& day, int anchor) const = 0;
};

// Features from the live day (smooth + normalize), eval-mode forward.
class NetworkPredictor : public Predictor {
public:
    explicit NetworkPredictor(const Network& net) : net_(&net) {}
    Prediction predict(const TradingDay& day, int anchor) const override;

private:
    const Network* net_;
};

// Test double: hard decision equals the realized trend over the horizon,
// margin 1. Near the session end the horizon is clipped to the last bar.
class OraclePredictor : public Predictor {
public:
    explicit OraclePredictor(int horizon) : horizon_(horizon) {}
    Prediction predict(const TradingDay& day, int anchor) const override;

private:
    int horizon_;
};

struct BacktestReport {
    std::vector<Trade> trades;
    double cumulative_gain_pct = 0.0;
    std::vector<std::pair<Date, double>> daily_returns; // every day, 0 when flat
    std::vector<double> minute_returns; // strategy gain at closing minutes, else 0
    std::optional<double> sharpe_annual;
    double sigma_ann_strategy = 0.0; // from minute_returns (percent of stake)
    double sigma_ann_asset = 0.0;    // from asset per-minute percent log returns
    std::optional<double> likelihood_ratio;
    int trade_count = 0;
    double hit_rate = 0.0; // fraction of trades with gain > 0; 0 when no trades
    double buy_and_hold_pct = 0.0;
    std::vector<double> thresholds_by_day; // T_H applied each day
};

struct BacktestOptions {
    // Leakage guard: every backtest day must be strictly after this date.
    std::optional<Date> training_end;
};

// Minute-by-minute drive: per day, recalibrate T_H from up to lookback_days
// prior days of counterfactual decision points (first day has none and
// cannot trade), then walk the session applying open / close / safety rules.
BacktestReport run_backtest(const Predictor& predictor, std::span<const TradingDay> days,
                            const StrategyConfig& cfg, const BacktestOptions& opts = {});

// Passive baseline: percent change from the first to the last close,
// commission-free.
double buy_and_hold(std::span<const TradingDay> days);

// mean/std * sqrt(252) on daily returns, risk-free rate 0, sample std.
// Throws MetricError with fewer than 2 days or zero variance.
double sharpe_annual(std::span<const double> daily_returns);

inline constexpr double kMinutesPerYear = 252.0 * 390.0; // 98280

// sqrt(252*390) * sample std of the minute-level return vector.
double annualized_volatility(std::span<const double> minute_returns);

// Mean probability mass on the true class over mean mass on the false class.
// Throws MetricError on empty input or a zero denominator.
double likelihood_ratio(std::span<const Prediction> predictions, std::span<const int> labels);

struct GridCell {
    int horizon = 0;
    int lookback_days = 0;
    double val_gain_pct = 0.0;
};

struct GridResult {
    std::vector<GridCell> cells;
    int best_index = -1; // argmax val gain; ties to smaller T, then smaller D
};

struct GridSearchInputs {
    std::vector<TradingDay> train_days;
    std::vector<TradingDay> val_days;
    TrainConfig train_cfg;
    StrategyConfig base_cfg; // horizon/lookback overridden per cell
};

// One model per T (fixed seed, balanced train and validation samples), one
// validation backtest per (T, D).
GridResult grid_search(const GridSearchInputs& inputs, std::span<const int> t_grid,
                       std::span<const int> d_grid);

struct SweepRow {
    double commission_pct = 0.0;
    double cumulative_gain_pct = 0.0;
    int trade_count = 0;
};

// Re-accounts a frozen trade set under different commissions:
// gain(c) = gain(base) + base - c per trade.
std::vector<SweepRow> sweep_commissions(std::span<const Trade> trades,
                                        std::span<const double> commissions,
                                        double base_commission_pct);

} // namespace trendlab
