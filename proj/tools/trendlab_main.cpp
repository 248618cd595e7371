// trendlab — minute-bar trend classification and trading research workbench.
//
// Subcommands: synth, ingest, dataset, train, backtest, gridsearch, report.
// Every command takes --config (key = value file); explicit flags override
// config keys. Exit codes: 0 ok, 2 input error, 3 data/split error,
// 4 artifact mismatch.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trendlab/backtest.hpp"
#include "trendlab/dataset.hpp"
#include "trendlab/errors.hpp"
#include "trendlab/io.hpp"
#include "trendlab/market_data.hpp"
#include "trendlab/neuralnet.hpp"
#include "trendlab/strategy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trendlab;

namespace {

// ---------------------------------------------------------------------------
// key = value run-config file; '#' starts a comment.

class KvConfig {
public:
    static KvConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open config '" + path + "'");
        KvConfig cfg;
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string trimmed = trim(line);
            if (trimmed.empty()) continue;
            const auto eq = trimmed.find('=');
            if (eq == std::string::npos)
                throw ParseError("config '" + path + "' line " + std::to_string(line_no) +
                                 ": expected key = value");
            const std::string key = trim(trimmed.substr(0, eq));
            const std::string value = trim(trimmed.substr(eq + 1));
            if (key.empty())
                throw ParseError("config '" + path + "' line " + std::to_string(line_no) +
                                 ": empty key");
            cfg.kv_[key] = value;
        }
        return cfg;
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get(const std::string& key) const { return kv_.at(key); }

private:
    static std::string trim(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t");
        if (b == std::string::npos) return "";
        std::size_t e = s.find_last_not_of(" \t");
        return s.substr(b, e - b + 1);
    }
    std::map<std::string, std::string> kv_;
};

// Applies config values to options the command line left untouched.
struct ConfigBinders {
    std::vector<std::function<void(const KvConfig&)>> fns;

    void apply(const KvConfig& cfg) {
        for (auto& f : fns) f(cfg);
    }
    template <class T, class Parse>
    void add(CLI::Option* opt, const std::string& key, T& target, Parse parse) {
        fns.push_back([opt, key, &target, parse](const KvConfig& cfg) {
            if (opt->count() == 0 && cfg.has(key)) target = parse(cfg.get(key));
        });
    }
};

std::string cfg_string(const std::string& s) { return s; }
int cfg_int(const std::string& s) { return std::stoi(s); }
double cfg_double(const std::string& s) { return std::stod(s); }
std::uint64_t cfg_u64(const std::string& s) { return std::stoull(s); }

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    if (out.empty()) throw ConfigError("empty list '" + s + "'");
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    if (out.empty()) throw ConfigError("empty list '" + s + "'");
    return out;
}

ClosurePolicy closure_from_string(const std::string& s) {
    if (s == "fixedt") return ClosurePolicy::fixed_t;
    if (s == "onflip") return ClosurePolicy::on_flip;
    if (s == "flipplust") return ClosurePolicy::flip_plus_t;
    throw ConfigError("unknown closure policy '" + s + "' (fixedt | onflip | flipplust)");
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw ConfigError(what + " path not set");
    if (!fs::exists(path)) throw ParseError(what + " not found: '" + path + "'");
}

std::vector<TradingDay> load_filtered_days(const std::string& data_path,
                                           const std::string& calendar_path) {
    require_file(data_path, "data file");
    const MinuteSeries series = load_minute_series(data_path);
    SessionCalendar cal;
    if (!calendar_path.empty()) {
        require_file(calendar_path, "calendar file");
        cal = load_calendar(calendar_path);
    }
    return filter_sessions(series, cal).days;
}

std::vector<TradingDay> slice_days(const std::vector<TradingDay>& days, std::optional<Date> from,
                                   std::optional<Date> to) {
    std::vector<TradingDay> out;
    for (const auto& d : days) {
        if (from && d.date < *from) continue;
        if (to && *to < d.date) continue;
        out.push_back(d);
    }
    return out;
}

std::vector<Example> as_examples(const std::vector<Sample>& samples) {
    std::vector<Example> out;
    out.reserve(samples.size());
    for (const auto& s : samples)
        out.push_back(Example{std::span<const double>(s.features.values), s.label});
    return out;
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

json read_json_file(const std::string& path) {
    require_file(path, "json file");
    std::ifstream in(path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
    return j;
}

// ---------------------------------------------------------------------------
// Shared option bundles.

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& o, ConfigBinders& b) {
    cmd->add_option("--config", o.config_path, "key = value run-config file");
    auto* seed = cmd->add_option("--seed", o.seed, "master seed");
    auto* out = cmd->add_option("--out", o.out_dir, "output directory");
    b.add(seed, "seed", o.seed, cfg_u64);
    b.add(out, "out", o.out_dir, cfg_string);
}

struct TrainOpts {
    int batch_size = 100;
    double lr_initial = 1e-3;
    double lr_decay_factor = 5.0;
    double lr_floor = 1e-7;
    double dropout_rate = 0.5;
    double init_std = 0.01;
    int patience = 3;
    int early_stop_patience = 5;
    int max_epochs = 100;

    TrainConfig to_config(std::uint64_t seed) const {
        TrainConfig cfg;
        cfg.batch_size = batch_size;
        cfg.lr_initial = lr_initial;
        cfg.lr_decay_factor = lr_decay_factor;
        cfg.lr_floor = lr_floor;
        cfg.dropout_rate = dropout_rate;
        cfg.init_std = init_std;
        cfg.patience = patience;
        cfg.early_stop_patience = early_stop_patience;
        cfg.max_epochs = max_epochs;
        cfg.seed = seed;
        return cfg;
    }
};

void add_train_opts(CLI::App* cmd, TrainOpts& o, ConfigBinders& b) {
    b.add(cmd->add_option("--batch-size", o.batch_size, "mini-batch size"), "batch_size", o.batch_size, cfg_int);
    b.add(cmd->add_option("--lr-initial", o.lr_initial, "initial learning rate"), "lr_initial", o.lr_initial, cfg_double);
    b.add(cmd->add_option("--lr-decay-factor", o.lr_decay_factor, "LR divisor on validation stall"), "lr_decay_factor",
          o.lr_decay_factor, cfg_double);
    b.add(cmd->add_option("--lr-floor", o.lr_floor, "stop once LR decays below this"), "lr_floor", o.lr_floor, cfg_double);
    b.add(cmd->add_option("--dropout-rate", o.dropout_rate, "dropout after layers 1 and 2"), "dropout_rate", o.dropout_rate,
          cfg_double);
    b.add(cmd->add_option("--init-std", o.init_std, "weight init std"), "init_std", o.init_std, cfg_double);
    b.add(cmd->add_option("--patience", o.patience, "flat epochs before an LR decay"), "patience", o.patience, cfg_int);
    b.add(cmd->add_option("--early-stop-patience", o.early_stop_patience, "decays without a new best before stopping"), "early_stop_patience",
          o.early_stop_patience, cfg_int);
    b.add(cmd->add_option("--max-epochs", o.max_epochs, "epoch cap"), "max_epochs", o.max_epochs, cfg_int);
}

struct StrategyOpts {
    int horizon = 28;
    int lookback_days = 5;
    double commission = 0.1;
    std::string closure = "onflip";
    std::string grid; // comma list; empty -> default grid
    double fixed_threshold = -1.0; // < 0 means adaptive
    int safety_win = 10;
    int safety_trigger = 4;
    int safety_len = 120;
    int min_qualifying = 5;

    StrategyConfig to_config() const {
        StrategyConfig cfg;
        cfg.horizon = horizon;
        cfg.lookback_days = lookback_days;
        cfg.commission_pct = commission;
        cfg.closure = closure_from_string(closure);
        cfg.threshold_grid = grid.empty() ? default_threshold_grid() : parse_double_list(grid);
        cfg.safety = SafetyConfig{safety_win, safety_trigger, safety_len};
        cfg.min_qualifying_points = min_qualifying;
        if (fixed_threshold >= 0.0) cfg.fixed_threshold = fixed_threshold;
        cfg.validate();
        return cfg;
    }
};

void add_strategy_opts(CLI::App* cmd, StrategyOpts& o, ConfigBinders& b, bool with_horizon) {
    if (with_horizon) b.add(cmd->add_option("--T", o.horizon, "prediction interval, minutes"), "T", o.horizon, cfg_int);
    b.add(cmd->add_option("--D", o.lookback_days, "threshold lookback, trading days"), "D", o.lookback_days, cfg_int);
    b.add(cmd->add_option("--commission", o.commission, "round-trip cost, percent of stake"), "commission", o.commission, cfg_double);
    b.add(cmd->add_option("--closure", o.closure, "fixedt | onflip | flipplust"), "closure", o.closure, cfg_string);
    b.add(cmd->add_option("--threshold-grid", o.grid, "comma list of T_H candidates"), "threshold_grid", o.grid, cfg_string);
    b.add(cmd->add_option("--fixed-threshold", o.fixed_threshold, "pin T_H, skip adaptive calibration"), "fixed_threshold",
          o.fixed_threshold, cfg_double);
    b.add(cmd->add_option("--safety-win", o.safety_win, "closed trades in the loss window"), "safety_win", o.safety_win, cfg_int);
    b.add(cmd->add_option("--safety-trigger", o.safety_trigger, "losses that fire the switch"), "safety_trigger",
          o.safety_trigger, cfg_int);
    b.add(cmd->add_option("--safety-len", o.safety_len, "suppression length, minutes"), "safety_len", o.safety_len, cfg_int);
    b.add(cmd->add_option("--min-qualifying", o.min_qualifying, "min points per threshold candidate"), "min_qualifying",
          o.min_qualifying, cfg_int);
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const CommonOpts& common, const std::string& regime, int days,
              const std::string& start_date, double base, double drift, double vol,
              double amplitude, double period, double phase, const std::string& out_file) {
    if (out_file.empty()) throw ConfigError("--out-file path not set");
    SyntheticSpec spec;
    if (regime == "walk")
        spec.regime = SyntheticSpec::Regime::random_walk;
    else if (regime == "sine")
        spec.regime = SyntheticSpec::Regime::sinusoid;
    else
        throw ConfigError("unknown regime '" + regime + "' (walk | sine)");
    spec.n_days = days;
    if (!start_date.empty()) spec.start_date = Date::parse(start_date);
    spec.base_price = base;
    spec.drift_per_min = drift;
    spec.vol_per_min = vol;
    spec.amplitude = amplitude;
    spec.period_minutes = period;
    spec.phase = phase;

    const MinuteSeries series = generate_synthetic(spec, common.seed);
    if (const auto dir = fs::path(out_file).parent_path(); !dir.empty())
        fs::create_directories(dir);
    write_minute_series(out_file, series);
    std::cout << "wrote " << series.days.size() << " synthetic days to " << out_file << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// ingest

int cmd_ingest(const CommonOpts& common, const std::string& data, const std::string& calendar) {
    require_file(data, "data file");
    const MinuteSeries series = load_minute_series(data);
    SessionCalendar cal;
    if (!calendar.empty()) {
        require_file(calendar, "calendar file");
        cal = load_calendar(calendar);
    }
    const SessionFilterResult result = filter_sessions(series, cal);

    fs::create_directories(common.out_dir);
    const std::string filtered_path = (fs::path(common.out_dir) / "filtered.csv").string();
    MinuteSeries filtered;
    for (const auto& day : result.days) filtered.days.push_back(DayBars{day.date, day.bars});
    write_minute_series(filtered_path, filtered);

    json summary;
    summary["schema_version"] = 1;
    summary["source"] = data;
    summary["kept"] = result.days.size();
    summary["dropped"] = json::array();
    for (const auto& d : result.dropped)
        summary["dropped"].push_back({{"date", d.date.to_string()}, {"reason", d.reason}});
    write_json_file((fs::path(common.out_dir) / "ingest_summary.json").string(), summary);

    std::cout << "kept " << result.days.size() << " days, dropped " << result.dropped.size()
              << "\n";
    for (const auto& d : result.dropped)
        std::cout << "  dropped " << d.date.to_string() << ": " << d.reason << "\n";
    std::cout << "filtered series: " << filtered_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// dataset

int cmd_dataset(const CommonOpts& common, const std::string& data, const std::string& calendar,
                int horizon, const std::string& val_start_s, const std::string& test_start_s) {
    if (val_start_s.empty() || test_start_s.empty())
        throw ConfigError("val_start and test_start are required");
    const Date val_start = Date::parse(val_start_s);
    const Date test_start = Date::parse(test_start_s);

    const auto days = load_filtered_days(data, calendar);
    std::vector<Sample> samples;
    for (const auto& day : days) {
        auto s = build_samples(day, horizon);
        samples.insert(samples.end(), s.begin(), s.end());
    }
    DatasetSplit split = split_chronological(samples, val_start, test_start);
    const Date train_last = split.train.back().day;

    // train and validation are balanced; the test set never is
    split.train = balance(split.train, common.seed);
    split.validation = balance(split.validation, common.seed + 1);

    fs::create_directories(common.out_dir);
    const fs::path out(common.out_dir);
    write_samples_csv((out / "train.csv").string(), split.train);
    write_samples_csv((out / "val.csv").string(), split.validation);
    write_samples_csv((out / "test.csv").string(), split.test);

    json meta;
    meta["schema_version"] = 1;
    meta["horizon"] = horizon;
    meta["seed"] = common.seed;
    meta["val_start"] = val_start.to_string();
    meta["test_start"] = test_start.to_string();
    meta["train_last_date"] = train_last.to_string();
    meta["counts"] = {{"train", split.train.size()},
                      {"validation", split.validation.size()},
                      {"test", split.test.size()}};
    meta["balanced"] = {{"train", true}, {"validation", true}, {"test", false}};
    write_json_file((out / "dataset_meta.json").string(), meta);

    std::cout << "dataset T=" << horizon << ": " << split.train.size() << " train / "
              << split.validation.size() << " val / " << split.test.size() << " test -> "
              << common.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const CommonOpts& common, const std::string& dataset_dir, const TrainOpts& topts) {
    if (dataset_dir.empty()) throw ConfigError("dataset directory not set");
    const fs::path dset(dataset_dir);
    const std::string train_path = (dset / "train.csv").string();
    const std::string val_path = (dset / "val.csv").string();
    require_file(train_path, "train dataset");
    require_file(val_path, "validation dataset");
    const json dmeta = read_json_file((dset / "dataset_meta.json").string());

    const std::vector<Sample> train_samples = read_samples_csv(train_path);
    const std::vector<Sample> val_samples = read_samples_csv(val_path);
    const auto train_ex = as_examples(train_samples);
    const auto val_ex = as_examples(val_samples);

    const TrainConfig cfg = topts.to_config(common.seed);
    const TrainResult result = train(cfg, train_ex, val_ex);

    fs::create_directories(common.out_dir);
    const fs::path out(common.out_dir);
    save_network(result.net, (out / "model.bin").string());
    write_history_csv((out / "history.csv").string(), result.history);

    json meta;
    meta["schema_version"] = 1;
    meta["horizon"] = dmeta.at("horizon");
    meta["seed"] = common.seed;
    meta["layer_sizes"] = result.net.layer_sizes();
    meta["best_val_error"] = result.history.best_val_error;
    meta["best_epoch"] = result.history.best_epoch;
    meta["epochs_run"] = result.history.rows.size();
    meta["train_last_date"] = dmeta.at("train_last_date");
    write_json_file((out / "model.meta.json").string(), meta);

    std::cout << "best validation error " << result.history.best_val_error << " at epoch "
              << result.history.best_epoch << " (" << result.history.rows.size()
              << " epochs run)\n";
    std::cout << "model: " << (out / "model.bin").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// backtest

int cmd_backtest(const CommonOpts& common, const std::string& data, const std::string& calendar,
                 const std::string& model_path, bool oracle, const StrategyOpts& sopts,
                 bool horizon_given, const std::string& test_start_s,
                 const std::string& test_end_s, const std::string& instrument) {
    if (test_start_s.empty()) throw ConfigError("test_start is required");
    const Date test_start = Date::parse(test_start_s);
    std::optional<Date> test_end;
    if (!test_end_s.empty()) test_end = Date::parse(test_end_s);

    StrategyOpts resolved = sopts;
    BacktestOptions opts;
    Network net;
    if (!oracle) {
        require_file(model_path, "model file");
        net = load_network(model_path);
        fs::path meta_path(model_path);
        meta_path.replace_extension(".meta.json");
        const json meta = read_json_file(meta_path.string());
        const int model_T = meta.at("horizon").get<int>();
        if (horizon_given && sopts.horizon != model_T)
            throw MismatchError("model was trained for T=" + std::to_string(model_T) +
                                " but T=" + std::to_string(sopts.horizon) + " was requested");
        resolved.horizon = model_T;
        opts.training_end = Date::parse(meta.at("train_last_date").get<std::string>());
    }

    const auto all_days = load_filtered_days(data, calendar);
    const auto days = slice_days(all_days, test_start, test_end);
    if (days.empty()) throw ConfigError("no trading days in the requested test range");

    const StrategyConfig cfg = resolved.to_config();
    BacktestReport report;
    if (oracle) {
        report = run_backtest(OraclePredictor(cfg.horizon), days, cfg, opts);
    } else {
        report = run_backtest(NetworkPredictor(net), days, cfg, opts);
    }

    fs::create_directories(common.out_dir);
    const fs::path out(common.out_dir);
    write_trade_log_csv((out / "trades.csv").string(), report.trades);
    write_daily_returns_csv((out / "daily_returns.csv").string(), report.daily_returns);
    write_equity_curve_csv((out / "equity.csv").string(), report.minute_returns);
    ReportArtifacts artifacts{"trades.csv", "daily_returns.csv", "equity.csv"};
    write_report_json((out / "report.json").string(), report, instrument, cfg, artifacts);

    std::cout << instrument << ": cumulative gain " << report.cumulative_gain_pct << "% over "
              << days.size() << " days, " << report.trade_count << " trades, hit rate "
              << report.hit_rate << "\n";
    std::cout << "buy-and-hold " << report.buy_and_hold_pct << "%";
    if (report.sharpe_annual) std::cout << ", Sharpe " << *report.sharpe_annual;
    std::cout << "\nreport: " << (out / "report.json").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// gridsearch

int cmd_gridsearch(const CommonOpts& common, const std::string& data,
                   const std::string& calendar, const std::string& val_start_s,
                   const std::string& test_start_s, const std::string& t_grid_s,
                   const std::string& d_grid_s, const TrainOpts& topts,
                   const StrategyOpts& sopts) {
    if (val_start_s.empty() || test_start_s.empty())
        throw ConfigError("val_start and test_start are required");
    const Date val_start = Date::parse(val_start_s);
    const Date test_start = Date::parse(test_start_s);
    const std::vector<int> t_grid = parse_int_list(t_grid_s.empty() ? "28" : t_grid_s);
    const std::vector<int> d_grid = parse_int_list(d_grid_s.empty() ? "5" : d_grid_s);

    const auto all_days = load_filtered_days(data, calendar);
    GridSearchInputs inputs;
    for (const auto& d : all_days) {
        if (d.date < val_start)
            inputs.train_days.push_back(d);
        else if (d.date < test_start)
            inputs.val_days.push_back(d);
    }
    inputs.train_cfg = topts.to_config(common.seed);
    inputs.base_cfg = sopts.to_config();

    const GridResult grid = grid_search(inputs, t_grid, d_grid);

    fs::create_directories(common.out_dir);
    const std::string grid_path = (fs::path(common.out_dir) / "grid.csv").string();
    std::ofstream out(grid_path, std::ios::binary);
    if (!out) throw Error("cannot write '" + grid_path + "'");
    out << "T,D,val_gain,best\n";
    for (std::size_t k = 0; k < grid.cells.size(); ++k) {
        const auto& c = grid.cells[k];
        out << c.horizon << ',' << c.lookback_days << ',' << fmt_double(c.val_gain_pct) << ','
            << (static_cast<int>(k) == grid.best_index ? 1 : 0) << '\n';
    }
    out.close();

    const auto& best = grid.cells[static_cast<std::size_t>(grid.best_index)];
    std::cout << "grid " << t_grid.size() << "x" << d_grid.size() << " -> best T=" << best.horizon
              << " D=" << best.lookback_days << " (validation gain " << best.val_gain_pct
              << "%)\n";
    std::cout << "grid: " << grid_path << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const CommonOpts& common, const std::vector<std::string>& inputs,
               const std::string& commissions_s, const std::string& sigma_source) {
    if (inputs.empty()) throw ConfigError("report needs at least one backtest report.json");
    if (sigma_source != "asset" && sigma_source != "strategy")
        throw ConfigError("sigma-source must be 'asset' or 'strategy'");
    const std::vector<double> commissions =
        parse_double_list(commissions_s.empty() ? "0,0.05,0.1,0.15" : commissions_s);

    fs::create_directories(common.out_dir);
    const fs::path out(common.out_dir);
    std::ofstream table((out / "table2.csv").string(), std::ios::binary);
    std::ofstream sweep((out / "commission_sweep.csv").string(), std::ios::binary);
    if (!table || !sweep) throw Error("cannot write report CSVs");
    table << "instrument,active_gain,baseline,sigma_ann\n";
    sweep << "instrument,commission,active_gain,baseline\n";

    for (const auto& input : inputs) {
        const json rep = read_json_file(input);
        const std::string instrument = rep.at("instrument").get<std::string>();
        const auto& metrics = rep.at("metrics");
        const double active = metrics.at("cumulative_gain_pct").get<double>();
        const double baseline = metrics.at("buy_and_hold_pct").get<double>();
        const double sigma = sigma_source == "asset"
                                 ? metrics.at("sigma_ann_asset").get<double>()
                                 : metrics.at("sigma_ann_strategy").get<double>();
        table << instrument << ',' << fmt_double(active) << ',' << fmt_double(baseline) << ','
              << fmt_double(sigma) << '\n';

        const double base_commission = rep.at("config").at("commission_pct").get<double>();
        const fs::path trade_log =
            fs::path(input).parent_path() / rep.at("artifacts").at("trade_log").get<std::string>();
        const std::vector<Trade> trades = read_trade_log_csv(trade_log.string());
        for (const auto& row : sweep_commissions(trades, commissions, base_commission))
            sweep << instrument << ',' << fmt_double(row.commission_pct) << ','
                  << fmt_double(row.cumulative_gain_pct) << ',' << fmt_double(baseline) << '\n';
    }
    std::cout << "report over " << inputs.size() << " instruments -> " << common.out_dir << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"trendlab — minute-bar trend classification and trading workbench"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic minute-bar CSV");
    CommonOpts synth_common;
    ConfigBinders synth_b;
    add_common(synth, synth_common, synth_b);
    std::string sy_regime = "walk", sy_start, sy_out_file;
    int sy_days = 10;
    double sy_base = 100.0, sy_drift = 0.0, sy_vol = 5e-4;
    double sy_amp = 5.0, sy_period = 390.0, sy_phase = 0.0;
    synth_b.add(synth->add_option("--regime", sy_regime, "walk | sine"), "regime", sy_regime, cfg_string);
    synth_b.add(synth->add_option("--days", sy_days, "number of trading days"), "days", sy_days, cfg_int);
    synth_b.add(synth->add_option("--start-date", sy_start, "first day, YYYY-MM-DD"), "start_date", sy_start, cfg_string);
    synth_b.add(synth->add_option("--base", sy_base, "base price"), "base", sy_base, cfg_double);
    synth_b.add(synth->add_option("--drift", sy_drift, "per-minute log drift (walk)"), "drift", sy_drift, cfg_double);
    synth_b.add(synth->add_option("--vol", sy_vol, "per-minute log vol (walk)"), "vol", sy_vol, cfg_double);
    synth_b.add(synth->add_option("--amplitude", sy_amp, "sine amplitude"), "amplitude", sy_amp, cfg_double);
    synth_b.add(synth->add_option("--period", sy_period, "sine period, minutes"), "period", sy_period, cfg_double);
    synth_b.add(synth->add_option("--phase", sy_phase, "sine phase, radians"), "phase", sy_phase, cfg_double);
    synth_b.add(synth->add_option("--out-file", sy_out_file, "output CSV path"), "out_file", sy_out_file, cfg_string);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate and session-filter a minute-bar CSV");
    CommonOpts ingest_common;
    ConfigBinders ingest_b;
    add_common(ingest, ingest_common, ingest_b);
    std::string in_data, in_calendar;
    ingest_b.add(ingest->add_option("--data", in_data, "minute-bar CSV"), "data", in_data, cfg_string);
    ingest_b.add(ingest->add_option("--calendar", in_calendar, "excluded dates, one per line"), "calendar", in_calendar,
                 cfg_string);

    // dataset
    auto* dataset = app.add_subcommand("dataset", "build labeled, balanced, split datasets");
    CommonOpts ds_common;
    ConfigBinders ds_b;
    add_common(dataset, ds_common, ds_b);
    std::string ds_data, ds_calendar, ds_val_start, ds_test_start;
    int ds_horizon = 28;
    ds_b.add(dataset->add_option("--data", ds_data, "filtered minute-bar CSV"), "data", ds_data, cfg_string);
    ds_b.add(dataset->add_option("--calendar", ds_calendar, "excluded dates, one per line"), "calendar", ds_calendar, cfg_string);
    ds_b.add(dataset->add_option("--T", ds_horizon, "prediction interval, minutes"), "T", ds_horizon, cfg_int);
    ds_b.add(dataset->add_option("--val-start", ds_val_start, "first validation date"), "val_start", ds_val_start,
             cfg_string);
    ds_b.add(dataset->add_option("--test-start", ds_test_start, "first test date"), "test_start", ds_test_start,
             cfg_string);

    // train
    auto* train_cmd = app.add_subcommand("train", "train the trend classifier");
    CommonOpts tr_common;
    ConfigBinders tr_b;
    add_common(train_cmd, tr_common, tr_b);
    std::string tr_dataset;
    TrainOpts tr_opts;
    tr_b.add(train_cmd->add_option("--dataset", tr_dataset, "dataset directory from the dataset command"), "dataset", tr_dataset, cfg_string);
    add_train_opts(train_cmd, tr_opts, tr_b);

    // backtest
    auto* backtest_cmd = app.add_subcommand("backtest", "run the strategy over held-out days");
    CommonOpts bt_common;
    ConfigBinders bt_b;
    add_common(backtest_cmd, bt_common, bt_b);
    std::string bt_data, bt_calendar, bt_model, bt_test_start, bt_test_end, bt_instrument = "SYN";
    bool bt_oracle = false;
    StrategyOpts bt_sopts;
    bt_b.add(backtest_cmd->add_option("--data", bt_data, "filtered minute-bar CSV"), "data", bt_data, cfg_string);
    bt_b.add(backtest_cmd->add_option("--calendar", bt_calendar, "excluded dates, one per line"), "calendar", bt_calendar,
             cfg_string);
    bt_b.add(backtest_cmd->add_option("--model", bt_model, "model.bin from the train command"), "model", bt_model, cfg_string);
    backtest_cmd->add_flag("--oracle", bt_oracle, "use the oracle predictor instead of a model");
    bt_b.add(backtest_cmd->add_option("--test-start", bt_test_start, "first backtest date"), "test_start", bt_test_start,
             cfg_string);
    bt_b.add(backtest_cmd->add_option("--test-end", bt_test_end, "last backtest date (inclusive)"), "test_end", bt_test_end,
             cfg_string);
    bt_b.add(backtest_cmd->add_option("--instrument", bt_instrument, "instrument tag for reports"), "instrument", bt_instrument,
             cfg_string);
    auto* bt_T_opt =
        backtest_cmd->add_option("--T", bt_sopts.horizon, "expected model horizon, minutes");
    bt_b.add(bt_T_opt, "T", bt_sopts.horizon, cfg_int);
    add_strategy_opts(backtest_cmd, bt_sopts, bt_b, false);

    // gridsearch
    auto* grid_cmd = app.add_subcommand("gridsearch", "cross-validate (T, D) on validation gain");
    CommonOpts gs_common;
    ConfigBinders gs_b;
    add_common(grid_cmd, gs_common, gs_b);
    std::string gs_data, gs_calendar, gs_val_start, gs_test_start, gs_t_grid, gs_d_grid;
    TrainOpts gs_topts;
    StrategyOpts gs_sopts;
    gs_b.add(grid_cmd->add_option("--data", gs_data, "filtered minute-bar CSV"), "data", gs_data, cfg_string);
    gs_b.add(grid_cmd->add_option("--calendar", gs_calendar, "excluded dates, one per line"), "calendar", gs_calendar, cfg_string);
    gs_b.add(grid_cmd->add_option("--val-start", gs_val_start, "first validation date"), "val_start", gs_val_start,
             cfg_string);
    gs_b.add(grid_cmd->add_option("--test-start", gs_test_start, "first test date (grid stops before it)"), "test_start", gs_test_start,
             cfg_string);
    gs_b.add(grid_cmd->add_option("--t-grid", gs_t_grid, "comma list of T values"), "t_grid", gs_t_grid, cfg_string);
    gs_b.add(grid_cmd->add_option("--d-grid", gs_d_grid, "comma list of D values"), "d_grid", gs_d_grid, cfg_string);
    add_train_opts(grid_cmd, gs_topts, gs_b);
    add_strategy_opts(grid_cmd, gs_sopts, gs_b, false);

    // report
    auto* report_cmd = app.add_subcommand("report", "aggregate backtests across instruments");
    CommonOpts rp_common;
    ConfigBinders rp_b;
    add_common(report_cmd, rp_common, rp_b);
    std::vector<std::string> rp_inputs;
    std::string rp_commissions, rp_sigma = "asset";
    report_cmd->add_option("--inputs", rp_inputs, "backtest report.json paths");
    rp_b.add(report_cmd->add_option("--commissions", rp_commissions, "comma list for the sweep"), "commissions",
             rp_commissions, cfg_string);
    rp_b.add(report_cmd->add_option("--sigma-source", rp_sigma, "asset | strategy"), "sigma_source", rp_sigma,
             cfg_string);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        auto apply_config = [](const CommonOpts& common, ConfigBinders& binders) {
            if (!common.config_path.empty()) {
                const KvConfig cfg = KvConfig::load(common.config_path);
                binders.apply(cfg);
            }
        };
        if (synth->parsed()) {
            apply_config(synth_common, synth_b);
            return cmd_synth(synth_common, sy_regime, sy_days, sy_start, sy_base, sy_drift,
                             sy_vol, sy_amp, sy_period, sy_phase, sy_out_file);
        }
        if (ingest->parsed()) {
            apply_config(ingest_common, ingest_b);
            return cmd_ingest(ingest_common, in_data, in_calendar);
        }
        if (dataset->parsed()) {
            apply_config(ds_common, ds_b);
            return cmd_dataset(ds_common, ds_data, ds_calendar, ds_horizon, ds_val_start,
                               ds_test_start);
        }
        if (train_cmd->parsed()) {
            apply_config(tr_common, tr_b);
            return cmd_train(tr_common, tr_dataset, tr_opts);
        }
        if (backtest_cmd->parsed()) {
            apply_config(bt_common, bt_b);
            return cmd_backtest(bt_common, bt_data, bt_calendar, bt_model, bt_oracle, bt_sopts,
                                bt_T_opt->count() > 0, bt_test_start, bt_test_end, bt_instrument);
        }
        if (grid_cmd->parsed()) {
            apply_config(gs_common, gs_b);
            return cmd_gridsearch(gs_common, gs_data, gs_calendar, gs_val_start, gs_test_start,
                                  gs_t_grid, gs_d_grid, gs_topts, gs_sopts);
        }
        if (report_cmd->parsed()) {
            apply_config(rp_common, rp_b);
            return cmd_report(rp_common, rp_inputs, rp_commissions, rp_sigma);
        }
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const MismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
