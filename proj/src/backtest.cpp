#include "trendlab/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "trendlab/errors.hpp"

namespace trendlab {

Prediction NetworkPredictor::predict(const TradingDay& day, int anchor) const {
    std::vector<double> raw(kRawWindow);
    for (int k = 0; k < kRawWindow; ++k)
        raw[static_cast<std::size_t>(k)] = day.close_at(anchor - kMinAnchor + k);
    const FeatureWindow fw = normalize(smooth(raw));
    return forward(*net_, fw.values);
}

Prediction OraclePredictor::predict(const TradingDay& day, int anchor) const {
    const int last = static_cast<int>(day.bars.size()) - 1;
    const int exit = std::min(anchor + horizon_, last);
    Prediction p;
    const bool up = day.close_at(exit) > day.close_at(anchor);
    p.probs = up ? std::array<double, 2>{0.0, 1.0} : std::array<double, 2>{1.0, 0.0};
    p.hard = up ? +1 : -1;
    return p;
}

namespace {

double sample_std(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

} // namespace

BacktestReport run_backtest(const Predictor& predictor, std::span<const TradingDay> days,
                            const StrategyConfig& cfg, const BacktestOptions& opts) {
    cfg.validate();
    if (days.empty()) throw ConfigError("backtest needs at least one day");
    for (std::size_t i = 1; i < days.size(); ++i)
        if (!(days[i - 1].date < days[i].date))
            throw DataError("backtest days must be strictly increasing by date");
    if (opts.training_end)
        for (const auto& day : days)
            if (!(*opts.training_end < day.date))
                throw DataError("leakage: backtest day " + day.date.to_string() +
                                " not after training end " + opts.training_end->to_string());

    const int T = cfg.horizon;
    BacktestReport report;
    report.minute_returns.assign(days.size() * kSessionMinutes, 0.0);

    std::deque<std::vector<CalibrationPoint>> lookback;
    SafetySwitch safety(cfg.safety);

    std::vector<double> asset_log_returns;
    asset_log_returns.reserve(days.size() * (kSessionMinutes - 1));
    std::vector<Prediction> collected_preds;
    std::vector<int> collected_labels;

    std::vector<std::optional<Prediction>> preds;
    int safety_blocked = 0;

    for (std::size_t day_idx = 0; day_idx < days.size(); ++day_idx) {
        const TradingDay& day = days[day_idx];
        if (day.bars.size() != static_cast<std::size_t>(kSessionMinutes))
            throw DataError("backtest day " + day.date.to_string() + " has " +
                            std::to_string(day.bars.size()) + " bars, expected " +
                            std::to_string(kSessionMinutes));
        const int last_index = static_cast<int>(day.bars.size()) - 1;
        const auto global_minute = [&](int i) {
            return static_cast<std::int64_t>(day_idx) * kSessionMinutes + i;
        };

        // Daily threshold recalibration; no history means no trades today.
        double threshold;
        if (cfg.fixed_threshold) {
            threshold = *cfg.fixed_threshold;
        } else if (lookback.empty()) {
            threshold = kNoTradeThreshold;
        } else {
            std::vector<CalibrationPoint> history;
            for (const auto& d : lookback) history.insert(history.end(), d.begin(), d.end());
            threshold = history.empty()
                            ? kNoTradeThreshold
                            : adaptive_threshold(history, cfg.threshold_grid,
                                                 cfg.min_qualifying_points);
        }
        report.thresholds_by_day.push_back(threshold);

        preds.assign(day.bars.size(), std::nullopt);
        for (int i = kMinAnchor; i <= last_index; ++i) preds[static_cast<std::size_t>(i)] =
            predictor.predict(day, i);

        double day_gain = 0.0;
        std::optional<PositionState> pos;
        double pos_entry = 0.0, pos_margin = 0.0, pos_threshold = 0.0;

        for (int i = 0; i <= last_index; ++i) {
            const auto& pred = preds[static_cast<std::size_t>(i)];
            if (pos) {
                if (pos->flip_index < 0 && i > pos->open_index && pred &&
                    pred->hard != pos->direction)
                    pos->flip_index = i;
                if (decide_close(cfg.closure, *pos, i, last_index, T)) {
                    Trade t;
                    t.day = day.date;
                    t.open_index = pos->open_index;
                    t.close_index = i;
                    t.open_minute = day.bars[static_cast<std::size_t>(pos->open_index)].minute_of_day;
                    t.close_minute = day.bars[static_cast<std::size_t>(i)].minute_of_day;
                    t.direction = pos->direction;
                    t.entry_price = pos_entry;
                    t.exit_price = day.close_at(i);
                    t.gain_pct =
                        trade_gain(t.direction, t.entry_price, t.exit_price, cfg.commission_pct);
                    t.threshold_used = pos_threshold;
                    t.margin_at_open = pos_margin;
                    t.safety_blocked_count = safety_blocked;
                    safety_blocked = 0;
                    day_gain += t.gain_pct;
                    report.cumulative_gain_pct += t.gain_pct;
                    report.minute_returns[static_cast<std::size_t>(global_minute(i))] = t.gain_pct;
                    safety.on_trade_closed(t.gain_pct, global_minute(i));
                    report.trades.push_back(std::move(t));
                    pos.reset();
                    continue; // no re-entry on the closing minute
                }
            } else if (pred && i < last_index) {
                const bool suppressed = safety.active(global_minute(i));
                const OpenDecision d = decide_open(*pred, threshold, suppressed, false);
                if (d.open) {
                    pos = PositionState{pred->hard, i, -1};
                    pos_entry = day.close_at(i);
                    pos_margin = d.margin;
                    pos_threshold = threshold;
                } else if (suppressed && d.margin >= threshold) {
                    ++safety_blocked;
                }
            }
        }

        report.daily_returns.emplace_back(day.date, day_gain);

        // percent log returns, matching the percent units of the strategy vector
        for (int i = 1; i <= last_index; ++i)
            asset_log_returns.push_back(100.0 * std::log(day.close_at(i) / day.close_at(i - 1)));

        // Counterfactual calibration points for future days' thresholds, and
        // realized labels for the likelihood ratio.
        std::vector<CalibrationPoint> points;
        points.reserve(static_cast<std::size_t>(std::max(0, last_index - T - kMinAnchor + 1)));
        for (int i = kMinAnchor; i + T <= last_index; ++i) {
            const auto& p = preds[static_cast<std::size_t>(i)];
            if (!p) continue;
            CalibrationPoint cp;
            cp.margin = margin(*p);
            cp.direction = p->hard;
            cp.hypothetical_gain_pct =
                trade_gain(p->hard, day.close_at(i), day.close_at(i + T), cfg.commission_pct);
            points.push_back(cp);
            collected_preds.push_back(*p);
            collected_labels.push_back(label(day.close_at(i), day.close_at(i + T)));
        }
        lookback.push_back(std::move(points));
        while (static_cast<int>(lookback.size()) > cfg.lookback_days) lookback.pop_front();
    }

    report.trade_count = static_cast<int>(report.trades.size());
    if (report.trade_count > 0) {
        int hits = 0;
        for (const auto& t : report.trades)
            if (t.gain_pct > 0.0) ++hits;
        report.hit_rate = static_cast<double>(hits) / report.trade_count;
    }
    report.buy_and_hold_pct = buy_and_hold(days);
    report.sigma_ann_strategy = annualized_volatility(report.minute_returns);
    report.sigma_ann_asset = annualized_volatility(asset_log_returns);

    std::vector<double> daily;
    daily.reserve(report.daily_returns.size());
    for (const auto& [date, g] : report.daily_returns) daily.push_back(g);
    try {
        report.sharpe_annual = sharpe_annual(daily);
    } catch (const MetricError&) {
        report.sharpe_annual = std::nullopt;
    }
    try {
        report.likelihood_ratio = likelihood_ratio(collected_preds, collected_labels);
    } catch (const MetricError&) {
        report.likelihood_ratio = std::nullopt;
    }
    return report;
}

double buy_and_hold(std::span<const TradingDay> days) {
    if (days.empty()) throw ConfigError("buy_and_hold needs at least one day");
    const double first = days.front().bars.front().close;
    const double last = days.back().bars.back().close;
    return (last - first) / first * 100.0;
}

double sharpe_annual(std::span<const double> daily_returns) {
    if (daily_returns.size() < 2)
        throw MetricError("Sharpe undefined: need at least 2 daily returns");
    double mean = 0.0;
    for (double r : daily_returns) mean += r;
    mean /= static_cast<double>(daily_returns.size());
    const double sd = sample_std(daily_returns);
    if (sd <= 0.0) throw MetricError("Sharpe undefined: zero variance of daily returns");
    return mean / sd * std::sqrt(252.0);
}

double annualized_volatility(std::span<const double> minute_returns) {
    if (minute_returns.empty())
        throw MetricError("annualized volatility needs a nonempty return vector");
    return std::sqrt(kMinutesPerYear) * sample_std(minute_returns);
}

double likelihood_ratio(std::span<const Prediction> predictions, std::span<const int> labels) {
    if (predictions.empty() || predictions.size() != labels.size())
        throw MetricError("likelihood ratio needs aligned, nonempty predictions and labels");
    double mass_true = 0.0, mass_false = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int idx = labels[i] > 0 ? 1 : 0;
        mass_true += predictions[i].probs[static_cast<std::size_t>(idx)];
        mass_false += predictions[i].probs[static_cast<std::size_t>(1 - idx)];
    }
    mass_true /= static_cast<double>(predictions.size());
    mass_false /= static_cast<double>(predictions.size());
    if (mass_false <= 0.0) throw MetricError("likelihood ratio undefined: no mass on false class");
    return mass_true / mass_false;
}

GridResult grid_search(const GridSearchInputs& inputs, std::span<const int> t_grid,
                       std::span<const int> d_grid) {
    if (t_grid.empty() || d_grid.empty()) throw ConfigError("empty grid");
    if (inputs.train_days.empty() || inputs.val_days.empty())
        throw ConfigError("grid search needs train and validation days");

    const Date train_end = inputs.train_days.back().date;
    GridResult result;
    for (int T : t_grid) {
        std::vector<Sample> train_samples, val_samples;
        for (const auto& day : inputs.train_days) {
            auto s = build_samples(day, T);
            train_samples.insert(train_samples.end(), s.begin(), s.end());
        }
        for (const auto& day : inputs.val_days) {
            auto s = build_samples(day, T);
            val_samples.insert(val_samples.end(), s.begin(), s.end());
        }
        train_samples = balance(train_samples, inputs.train_cfg.seed);
        val_samples = balance(val_samples, inputs.train_cfg.seed);

        std::vector<Example> train_ex, val_ex;
        train_ex.reserve(train_samples.size());
        val_ex.reserve(val_samples.size());
        for (const auto& s : train_samples)
            train_ex.push_back(Example{std::span<const double>(s.features.values), s.label});
        for (const auto& s : val_samples)
            val_ex.push_back(Example{std::span<const double>(s.features.values), s.label});

        const TrainResult trained = train(inputs.train_cfg, train_ex, val_ex);
        const NetworkPredictor predictor(trained.net);

        for (int D : d_grid) {
            StrategyConfig cell_cfg = inputs.base_cfg;
            cell_cfg.horizon = T;
            cell_cfg.lookback_days = D;
            BacktestOptions opts;
            opts.training_end = train_end;
            const BacktestReport rep = run_backtest(predictor, inputs.val_days, cell_cfg, opts);
            result.cells.push_back(GridCell{T, D, rep.cumulative_gain_pct});
        }
    }

    for (std::size_t k = 0; k < result.cells.size(); ++k) {
        if (result.best_index < 0) {
            result.best_index = static_cast<int>(k);
            continue;
        }
        const auto& best = result.cells[static_cast<std::size_t>(result.best_index)];
        const auto& cell = result.cells[k];
        if (cell.val_gain_pct > best.val_gain_pct) result.best_index = static_cast<int>(k);
        // ties resolve to the earlier cell: t_grid then d_grid order, so the
        // smaller T (then smaller D) wins by construction
    }
    return result;
}

std::vector<SweepRow> sweep_commissions(std::span<const Trade> trades,
                                        std::span<const double> commissions,
                                        double base_commission_pct) {
    std::vector<SweepRow> rows;
    rows.reserve(commissions.size());
    for (double c : commissions) {
        if (c < 0.0) throw ConfigError("commission must be >= 0");
        SweepRow row;
        row.commission_pct = c;
        row.trade_count = static_cast<int>(trades.size());
        for (const auto& t : trades) row.cumulative_gain_pct += t.gain_pct + base_commission_pct - c;
        rows.push_back(row);
    }
    return rows;
}

} // namespace trendlab
