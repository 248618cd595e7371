#include "trendlab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trendlab/errors.hpp"

namespace trendlab {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double to_double(const std::string& s, const std::string& path, int line_no) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("'" + path + "' line " + std::to_string(line_no) + ": bad number '" +
                         s + "'");
    }
}

int to_int(const std::string& s, const std::string& path, int line_no) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw ParseError("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("'" + path + "' line " + std::to_string(line_no) + ": bad integer '" +
                         s + "'");
    }
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    return out;
}

} // namespace

void write_samples_csv(const std::string& path, const std::vector<Sample>& samples) {
    auto out = open_out(path);
    out << "date,anchor,label,entry,exit";
    for (int i = 0; i < kFeatureDim; ++i) out << ",f" << i;
    out << '\n';
    for (const auto& s : samples) {
        out << s.day.to_string() << ',' << s.anchor << ',' << s.label << ','
            << fmt_double(s.entry_price) << ',' << fmt_double(s.exit_price);
        for (double v : s.features.values) out << ',' << fmt_double(v);
        out << '\n';
    }
}

std::vector<Sample> read_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dataset '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("'" + path + "': empty dataset file");
    const auto header = split_csv(line);
    if (header.size() != static_cast<std::size_t>(5 + kFeatureDim) || header[0] != "date")
        throw ParseError("'" + path + "': unexpected dataset header");

    std::vector<Sample> samples;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cols = split_csv(line);
        if (cols.size() != static_cast<std::size_t>(5 + kFeatureDim))
            throw ParseError("'" + path + "' line " + std::to_string(line_no) +
                             ": wrong column count");
        Sample s;
        s.day = Date::parse(cols[0]);
        s.anchor = to_int(cols[1], path, line_no);
        s.label = to_int(cols[2], path, line_no);
        if (s.label != 1 && s.label != -1)
            throw ParseError("'" + path + "' line " + std::to_string(line_no) +
                             ": label must be +1 or -1");
        s.entry_price = to_double(cols[3], path, line_no);
        s.exit_price = to_double(cols[4], path, line_no);
        for (int i = 0; i < kFeatureDim; ++i)
            s.features.values[static_cast<std::size_t>(i)] =
                to_double(cols[static_cast<std::size_t>(5 + i)], path, line_no);
        samples.push_back(std::move(s));
    }
    return samples;
}

void write_history_csv(const std::string& path, const TrainingHistory& history) {
    auto out = open_out(path);
    out << "epoch,lr,train_loss,val_error\n";
    for (const auto& row : history.rows)
        out << row.epoch << ',' << fmt_double(row.lr) << ',' << fmt_double(row.train_loss) << ','
            << fmt_double(row.val_error) << '\n';
}

void write_trade_log_csv(const std::string& path, const std::vector<Trade>& trades) {
    auto out = open_out(path);
    out << "day,open_minute,close_minute,direction,entry,exit,gain_pct,threshold_used,margin,"
           "safety_blocked_count\n";
    for (const auto& t : trades)
        out << t.day.to_string() << ',' << t.open_minute << ',' << t.close_minute << ','
            << t.direction << ',' << fmt_double(t.entry_price) << ',' << fmt_double(t.exit_price)
            << ',' << fmt_double(t.gain_pct) << ',' << fmt_double(t.threshold_used) << ','
            << fmt_double(t.margin_at_open) << ',' << t.safety_blocked_count << '\n';
}

std::vector<Trade> read_trade_log_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open trade log '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError("'" + path + "': empty trade log");
    std::vector<Trade> trades;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cols = split_csv(line);
        if (cols.size() != 10)
            throw ParseError("'" + path + "' line " + std::to_string(line_no) +
                             ": wrong column count");
        Trade t;
        t.day = Date::parse(cols[0]);
        t.open_minute = to_int(cols[1], path, line_no);
        t.close_minute = to_int(cols[2], path, line_no);
        t.direction = to_int(cols[3], path, line_no);
        t.entry_price = to_double(cols[4], path, line_no);
        t.exit_price = to_double(cols[5], path, line_no);
        t.gain_pct = to_double(cols[6], path, line_no);
        t.threshold_used = to_double(cols[7], path, line_no);
        t.margin_at_open = to_double(cols[8], path, line_no);
        t.safety_blocked_count = to_int(cols[9], path, line_no);
        t.open_index = t.open_minute - kSessionOpenMinute;
        t.close_index = t.close_minute - kSessionOpenMinute;
        trades.push_back(t);
    }
    return trades;
}

void write_daily_returns_csv(const std::string& path,
                             const std::vector<std::pair<Date, double>>& daily) {
    auto out = open_out(path);
    out << "date,gain_pct\n";
    for (const auto& [date, gain] : daily) out << date.to_string() << ',' << fmt_double(gain) << '\n';
}

void write_equity_curve_csv(const std::string& path, const std::vector<double>& minute_returns) {
    auto out = open_out(path);
    out << "minute_index,cumulative_gain_pct\n";
    double cum = 0.0;
    for (std::size_t i = 0; i < minute_returns.size(); ++i) {
        cum += minute_returns[i];
        out << i << ',' << fmt_double(cum) << '\n';
    }
}

namespace {

const char* closure_name(ClosurePolicy p) {
    switch (p) {
        case ClosurePolicy::fixed_t: return "fixedt";
        case ClosurePolicy::on_flip: return "onflip";
        case ClosurePolicy::flip_plus_t: return "flipplust";
    }
    return "?";
}

} // namespace

void write_report_json(const std::string& path, const BacktestReport& report,
                       const std::string& instrument, const StrategyConfig& cfg,
                       const ReportArtifacts& artifacts) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["instrument"] = instrument;
    if (!report.daily_returns.empty()) {
        j["period"]["start"] = report.daily_returns.front().first.to_string();
        j["period"]["end"] = report.daily_returns.back().first.to_string();
    }
    j["config"]["horizon"] = cfg.horizon;
    j["config"]["lookback_days"] = cfg.lookback_days;
    j["config"]["commission_pct"] = cfg.commission_pct;
    j["config"]["closure"] = closure_name(cfg.closure);
    j["config"]["safety"] = {{"win", cfg.safety.win},
                             {"trigger", cfg.safety.trigger},
                             {"len_minutes", cfg.safety.len_minutes}};
    if (cfg.fixed_threshold)
        j["config"]["fixed_threshold"] = *cfg.fixed_threshold;
    else
        j["config"]["threshold_grid"] = cfg.threshold_grid;

    auto& m = j["metrics"];
    m["cumulative_gain_pct"] = report.cumulative_gain_pct;
    m["buy_and_hold_pct"] = report.buy_and_hold_pct;
    m["trade_count"] = report.trade_count;
    m["hit_rate"] = report.hit_rate;
    m["sigma_ann_strategy"] = report.sigma_ann_strategy;
    m["sigma_ann_asset"] = report.sigma_ann_asset;
    m["sharpe_annual"] = report.sharpe_annual ? nlohmann::json(*report.sharpe_annual)
                                              : nlohmann::json(nullptr);
    m["likelihood_ratio"] = report.likelihood_ratio ? nlohmann::json(*report.likelihood_ratio)
                                                    : nlohmann::json(nullptr);

    j["artifacts"] = {{"trade_log", artifacts.trade_log},
                      {"daily_returns", artifacts.daily_returns},
                      {"equity_curve", artifacts.equity_curve}};

    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

} // namespace trendlab
