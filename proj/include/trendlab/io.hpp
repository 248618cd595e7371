#pragma once

#include <string>
#include <utility>
#include <vector>

#include "trendlab/backtest.hpp"
#include "trendlab/dataset.hpp"
#include "trendlab/neuralnet.hpp"
#include "trendlab/strategy.hpp"

namespace trendlab {

// Full-precision decimal (round-trips doubles exactly).
std::string fmt_double(double v);

// Dataset audit format: date,anchor,label,entry,exit,f0..f59
void write_samples_csv(const std::string& path, const std::vector<Sample>& samples);
std::vector<Sample> read_samples_csv(const std::string& path);

// epoch,lr,train_loss,val_error
void write_history_csv(const std::string& path, const TrainingHistory& history);

// day,open_minute,close_minute,direction,entry,exit,gain_pct,threshold_used,margin,safety_blocked_count
void write_trade_log_csv(const std::string& path, const std::vector<Trade>& trades);
std::vector<Trade> read_trade_log_csv(const std::string& path);

// date,gain_pct
void write_daily_returns_csv(const std::string& path,
                             const std::vector<std::pair<Date, double>>& daily);

// minute_index,cumulative_gain_pct — running sum of the minute return vector.
void write_equity_curve_csv(const std::string& path, const std::vector<double>& minute_returns);

struct ReportArtifacts {
    std::string trade_log;
    std::string daily_returns;
    std::string equity_curve;
};

// Schema-versioned summary JSON; undefined metrics serialize as null.
void write_report_json(const std::string& path, const BacktestReport& report,
                       const std::string& instrument, const StrategyConfig& cfg,
                       const ReportArtifacts& artifacts);

} // namespace trendlab
