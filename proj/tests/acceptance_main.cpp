// Acceptance suite. Each criterion runs end to end and prints one PASS/FAIL
// line; the process exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "trendlab/backtest.hpp"
#include "trendlab/dataset.hpp"
#include "trendlab/errors.hpp"
#include "trendlab/io.hpp"
#include "trendlab/market_data.hpp"
#include "trendlab/neuralnet.hpp"
#include "trendlab/rng.hpp"
#include "trendlab/strategy.hpp"

using namespace trendlab;
namespace fs = std::filesystem;

namespace {

struct Checker {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& msg) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += msg;
        }
    }
    void note(const std::string& msg) {
        if (!detail.empty()) detail += "; ";
        detail += msg;
    }
};

int g_failures = 0;

void run_criterion(const std::string& name, void (*fn)(Checker&)) {
    Checker c;
    const auto start = std::chrono::steady_clock::now();
    try {
        fn(c);
    } catch (const std::exception& e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream line;
    line << (c.ok ? "[PASS] " : "[FAIL] ") << name;
    line.setf(std::ios::fixed);
    line.precision(1);
    line << " (" << secs << "s";
    if (!c.detail.empty()) line << "; " << c.detail;
    line << ")";
    std::cout << line.str() << std::endl;
    if (!c.ok) ++g_failures;
}

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 60-dim Gaussian blobs separated along the normalized all-ones direction.
struct Blobs {
    std::vector<std::vector<double>> x;
    std::vector<int> y;

    std::vector<Example> examples() const {
        std::vector<Example> out;
        out.reserve(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            out.push_back(Example{std::span<const double>(x[i]), y[i]});
        return out;
    }
};

Blobs make_blobs(int n, double separation, Rng& rng) {
    Blobs b;
    const double shift = separation / std::sqrt(60.0);
    for (int k = 0; k < n; ++k) {
        const int lbl = rng.bernoulli(0.5) ? +1 : -1;
        std::vector<double> x(60);
        for (double& v : x) v = rng.normal() + lbl * shift;
        b.x.push_back(std::move(x));
        b.y.push_back(lbl);
    }
    return b;
}

TrainConfig train_schedule(std::uint64_t seed, int max_epochs) {
    TrainConfig cfg; // batch 100, lr 1e-3, /5 decay, floor 1e-7, dropout 0.5
    cfg.init_std = 0.1;
    cfg.max_epochs = max_epochs;
    cfg.seed = seed;
    return cfg;
}

// --------------------------------------------------------------------------

void gradient_correctness(Checker& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<int> sizes{60, 8, 2};
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        const Network net = make_network(sizes, 0.5, rng);
        std::vector<double> x(60);
        for (double& v : x) v = rng.normal();
        const Example ex{std::span<const double>(x), seed % 2 ? +1 : -1};
        const GradCheckReport report = grad_check(net, ex, 1e-5, 1e-4);
        worst = std::max(worst, report.max_rel_error);
        c.expect(report.pass, "seed " + std::to_string(seed) + " rel error " +
                                  std::to_string(report.max_rel_error));
    }
    c.note("worst rel error " + fmt_double(worst));
    c.expect(elapsed_since(t0) < 10.0, "runtime exceeded 10 s");
}

void learnability(Checker& c) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng data_rng(7);
    const Blobs train_b = make_blobs(5000, 3.0, data_rng);
    const Blobs val_b = make_blobs(1000, 3.0, data_rng);
    const auto train_ex = train_b.examples();
    const auto val_ex = val_b.examples();
    const TrainResult result = train(train_schedule(7, 50), train_ex, val_ex);
    const double acc = 1.0 - result.history.best_val_error;
    c.note("val accuracy " + fmt_double(acc) + " at epoch " +
           std::to_string(result.history.best_epoch));
    c.expect(acc >= 0.95, "validation accuracy below 95%");
    c.expect(static_cast<int>(result.history.rows.size()) <= 50, "ran past 50 epochs");
    c.expect(elapsed_since(t0) < 120.0, "runtime exceeded 2 min");
}

void null_signal(Checker& c) {
    Rng data_rng(7);
    Blobs train_b = make_blobs(5000, 3.0, data_rng);
    Blobs val_b = make_blobs(1000, 3.0, data_rng);
    Blobs test_b = make_blobs(5000, 3.0, data_rng);
    Rng shuffle_rng(99);
    shuffle_rng.shuffle(train_b.y);
    shuffle_rng.shuffle(val_b.y);
    shuffle_rng.shuffle(test_b.y);
    const auto train_ex = train_b.examples();
    const auto val_ex = val_b.examples();
    const auto test_ex = test_b.examples();
    const TrainResult result = train(train_schedule(7, 50), train_ex, val_ex);
    const double acc = 1.0 - classification_error(result.net, test_ex);
    c.note("test accuracy " + fmt_double(acc));
    c.expect(acc >= 0.47 && acc <= 0.53, "test accuracy outside [47%, 53%]");
}

// Deterministic pseudo-random signal independent of prices.
class NoisePredictor : public Predictor {
public:
    Prediction predict(const TradingDay& day, int anchor) const override {
        std::uint64_t h = static_cast<std::uint64_t>(days_from_civil(day.date)) * 2654435761u +
                          static_cast<std::uint64_t>(anchor) * 1099511628211ull;
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdull;
        h ^= h >> 33;
        const double m = static_cast<double>(h >> 11) * 0x1.0p-53;
        const bool up = (h & 1) != 0;
        Prediction p;
        p.probs = up ? std::array<double, 2>{(1.0 - m) / 2.0, (1.0 + m) / 2.0}
                     : std::array<double, 2>{(1.0 + m) / 2.0, (1.0 - m) / 2.0};
        p.hard = up ? +1 : -1;
        return p;
    }
};

std::vector<TradingDay> walk_days(int n_days, std::uint64_t seed) {
    SyntheticSpec spec;
    spec.n_days = n_days;
    spec.vol_per_min = 0.001;
    return filter_sessions(generate_synthetic(spec, seed), SessionCalendar{}).days;
}

void accounting_identity(Checker& c) {
    const auto days = walk_days(5, 21);
    StrategyConfig cfg;
    cfg.horizon = 4;
    cfg.lookback_days = 2;
    cfg.threshold_grid = default_threshold_grid();
    cfg.commission_pct = 0.05;
    cfg.closure = ClosurePolicy::on_flip;
    const NoisePredictor noise;
    const BacktestReport rep = run_backtest(noise, days, cfg);
    c.expect(rep.trade_count > 0, "no trades opened");
    double sum = 0.0;
    for (const auto& t : rep.trades) sum += t.gain_pct;
    c.note(std::to_string(rep.trade_count) + " trades");
    c.expect(std::fabs(rep.cumulative_gain_pct - sum) <= 1e-9,
             "cumulative gain != trade-log sum");

    StrategyConfig no_trades = cfg;
    no_trades.fixed_threshold = 2.0;
    const BacktestReport empty = run_backtest(noise, days, no_trades);
    c.expect(empty.trade_count == 0, "expected a zero-trade run");
    c.expect(empty.cumulative_gain_pct == 0.0, "zero-trade gain not exactly 0");
    c.expect(!empty.sharpe_annual.has_value(), "zero-trade Sharpe should be undefined");
    c.expect(empty.sigma_ann_strategy == 0.0, "zero-trade sigma not 0");
}

void oracle_strategy(Checker& c) {
    const auto t0 = std::chrono::steady_clock::now();
    SyntheticSpec spec;
    spec.regime = SyntheticSpec::Regime::sinusoid;
    spec.n_days = 4;
    spec.amplitude = 5.0;
    spec.period_minutes = 37.0;
    spec.phase = 0.3;
    const auto days = filter_sessions(generate_synthetic(spec, 1), SessionCalendar{}).days;

    StrategyConfig cfg;
    cfg.horizon = 1;
    cfg.lookback_days = 2;
    cfg.threshold_grid = default_threshold_grid();
    cfg.commission_pct = 0.0;
    cfg.closure = ClosurePolicy::on_flip;
    const OraclePredictor oracle(1);
    const BacktestReport rep = run_backtest(oracle, days, cfg);
    c.note(std::to_string(rep.trade_count) + " trades, gain " +
           fmt_double(rep.cumulative_gain_pct) + "%");
    c.expect(rep.trade_count > 0, "no trades opened");
    for (const auto& t : rep.trades)
        if (t.gain_pct < 0.0) {
            c.expect(false, "losing oracle trade on " + t.day.to_string());
            break;
        }
    c.expect(rep.cumulative_gain_pct > 0.0, "cumulative gain not positive");
    c.expect(rep.hit_rate == 1.0, "hit rate below 1.0");
    c.expect(elapsed_since(t0) < 10.0, "runtime exceeded 10 s");
}

void commission_monotonicity(Checker& c) {
    const auto days = walk_days(4, 22);
    StrategyConfig cfg;
    cfg.horizon = 3;
    cfg.lookback_days = 2;
    cfg.threshold_grid = default_threshold_grid();
    cfg.fixed_threshold = 0.3;
    cfg.commission_pct = 0.1;
    cfg.closure = ClosurePolicy::on_flip;
    const NoisePredictor noise;
    const BacktestReport rep = run_backtest(noise, days, cfg);
    c.expect(rep.trade_count > 0, "no trades opened");

    const std::vector<double> commissions{0.0, 0.05, 0.1, 0.15};
    const auto rows = sweep_commissions(rep.trades, commissions, cfg.commission_pct);
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const double delta = commissions[k] - commissions[k - 1];
        const double expected = rows[k - 1].cumulative_gain_pct - rep.trade_count * delta;
        c.expect(std::fabs(rows[k].cumulative_gain_pct - expected) <= 1e-9,
                 "gain drop != trade_count * delta at commission " + fmt_double(commissions[k]));
        c.expect(rows[k].cumulative_gain_pct <= rows[k - 1].cumulative_gain_pct,
                 "gain increased with commission");
    }
    c.note(std::to_string(rep.trade_count) + " trades frozen");
}

void threshold_monotonicity(Checker& c) {
    const auto days = walk_days(4, 23);
    const NoisePredictor noise;
    int prev = -1;
    std::string counts;
    for (double t : default_threshold_grid()) {
        StrategyConfig cfg;
        cfg.horizon = 1;
        cfg.lookback_days = 2;
        cfg.threshold_grid = default_threshold_grid();
        cfg.fixed_threshold = t;
        cfg.commission_pct = 0.0;
        cfg.closure = ClosurePolicy::on_flip;
        cfg.safety.len_minutes = 0;
        const BacktestReport rep = run_backtest(noise, days, cfg);
        if (prev >= 0 && rep.trade_count > prev)
            c.expect(false, "count rose from " + std::to_string(prev) + " to " +
                                std::to_string(rep.trade_count) + " at T_H " + fmt_double(t));
        prev = rep.trade_count;
        counts += (counts.empty() ? "" : ",") + std::to_string(rep.trade_count);
    }
    c.note("counts " + counts);
}

// Always-long, full-margin signal on a strictly falling series: every fixed-T
// trade loses, so the switch must fire and suppress exactly len minutes.
class AlwaysUpPredictor : public Predictor {
public:
    Prediction predict(const TradingDay&, int) const override {
        Prediction p;
        p.probs = {0.0, 1.0};
        p.hard = +1;
        return p;
    }
};

void safety_switch(Checker& c) {
    TradingDay day;
    day.date = Date{2020, 1, 6};
    for (int i = 0; i < kSessionMinutes; ++i)
        day.bars.push_back(MinuteBar{day.date, kSessionOpenMinute + i, 1000.0 - 0.1 * i});

    StrategyConfig cfg;
    cfg.horizon = 5;
    cfg.lookback_days = 1;
    cfg.threshold_grid = default_threshold_grid();
    cfg.fixed_threshold = 0.5;
    cfg.commission_pct = 0.0;
    cfg.closure = ClosurePolicy::fixed_t;
    cfg.safety = SafetyConfig{4, 2, 30};
    const AlwaysUpPredictor always_up;
    const BacktestReport rep =
        run_backtest(always_up, std::vector<TradingDay>{day}, cfg);

    // open 63, close 68 (loss 1); open 69, close 74 (loss 2 -> trigger);
    // suppression covers 75..104, reopen exactly at 105
    c.expect(rep.trade_count >= 3, "need at least 3 trades");
    if (rep.trade_count >= 3) {
        const auto& t0 = rep.trades[0];
        const auto& t1 = rep.trades[1];
        const auto& t2 = rep.trades[2];
        c.expect(t0.open_index == 63 && t0.close_index == 68, "first trade timing off");
        c.expect(t1.open_index == 69 && t1.close_index == 74, "second trade timing off");
        c.expect(t0.gain_pct < 0.0 && t1.gain_pct < 0.0, "constructed losses missing");
        c.expect(t2.open_index == 105,
                 "reopen at " + std::to_string(t2.open_index) + ", expected 105");
        c.expect(t2.safety_blocked_count == 30,
                 "blocked " + std::to_string(t2.safety_blocked_count) +
                     " opening minutes, expected exactly 30");
    }
}

void sample_count_formula(Checker& c) {
    SyntheticSpec spec;
    spec.n_days = 1;
    const auto days = filter_sessions(generate_synthetic(spec, 31), SessionCalendar{}).days;
    const auto samples = build_samples(days.at(0), 28);
    c.note(std::to_string(samples.size()) + " samples");
    c.expect(samples.size() == 299, "expected exactly 299 samples for T=28");
}

void metric_oracles(Checker& c) {
    const std::vector<double> daily{0.2, -0.1, 0.3, 0.0};
    const double sharpe_expected = 0.1 / std::sqrt(0.10 / 3.0) * std::sqrt(252.0);
    c.expect(std::fabs(sharpe_annual(daily) - sharpe_expected) <= 1e-9,
             "Sharpe differs from the hand computation");

    const std::vector<double> minute{0.1, -0.2, 0.3, 0.0};
    const double sigma_expected = std::sqrt(252.0 * 390.0) * std::sqrt(0.13 / 3.0);
    c.expect(std::fabs(annualized_volatility(minute) - sigma_expected) <= 1e-9,
             "sigma_ann differs from the hand computation");

    Prediction uniform;
    uniform.probs = {0.5, 0.5};
    const std::vector<Prediction> preds(16, uniform);
    std::vector<int> labels;
    for (int i = 0; i < 16; ++i) labels.push_back(i % 2 ? +1 : -1);
    c.expect(std::fabs(likelihood_ratio(preds, labels) - 1.0) <= 1e-12,
             "uniform predictor R != 1");
}

// --------------------------------------------------------------------------
// End-to-end determinism through the CLI binary.

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + TRENDLAB_CLI_PATH + "\" " + args +
                            " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return status == -1 ? -1 : WEXITSTATUS(status);
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void determinism(Checker& c) {
    const fs::path root = fs::temp_directory_path() / "trendlab_acceptance_det";
    fs::remove_all(root);

    auto run_pipeline = [&](const std::string& tag) -> fs::path {
        const fs::path dir = root / tag;
        fs::create_directories(dir);
        const std::string raw = (dir / "raw.csv").string();
        c.expect(run_cli("synth --days 6 --vol 0.002 --seed 17 --out-file \"" + raw + "\"") == 0,
                 "synth failed");
        c.expect(run_cli("ingest --data \"" + raw + "\" --out \"" + (dir / "ingest").string() +
                         "\"") == 0,
                 "ingest failed");
        c.expect(run_cli("dataset --data \"" + (dir / "ingest" / "filtered.csv").string() +
                         "\" --T 3 --val-start 2020-01-09 --test-start 2020-01-13 --seed 17 "
                         "--out \"" + (dir / "dataset").string() + "\"") == 0,
                 "dataset failed");
        c.expect(run_cli("train --dataset \"" + (dir / "dataset").string() +
                         "\" --max-epochs 3 --init-std 0.1 --seed 17 --out \"" +
                         (dir / "model").string() + "\"") == 0,
                 "train failed");
        c.expect(run_cli("backtest --data \"" + (dir / "ingest" / "filtered.csv").string() +
                         "\" --model \"" + (dir / "model" / "model.bin").string() +
                         "\" --test-start 2020-01-13 --D 2 --commission 0.05 "
                         "--fixed-threshold 0.0 --instrument DET --out \"" +
                         (dir / "backtest").string() + "\"") == 0,
                 "backtest failed");
        return dir;
    };

    const fs::path a = run_pipeline("a");
    const fs::path b = run_pipeline("b");
    const std::vector<std::string> artifacts{
        "raw.csv",
        "ingest/filtered.csv",
        "dataset/train.csv",
        "dataset/val.csv",
        "dataset/test.csv",
        "dataset/dataset_meta.json",
        "model/model.bin",
        "model/history.csv",
        "model/model.meta.json",
        "backtest/report.json",
        "backtest/trades.csv",
        "backtest/daily_returns.csv",
        "backtest/equity.csv",
    };
    for (const auto& rel : artifacts) {
        if (!fs::exists(a / rel) || !fs::exists(b / rel)) {
            c.expect(false, rel + " missing");
            continue;
        }
        c.expect(read_bytes(a / rel) == read_bytes(b / rel), rel + " differs between runs");
    }
    fs::remove_all(root);
}

} // namespace

int main() {
    std::cout << "trendlab acceptance suite\n";
    run_criterion("gradient-correctness", gradient_correctness);
    run_criterion("learnability", learnability);
    run_criterion("null-signal-control", null_signal);
    run_criterion("accounting-identity", accounting_identity);
    run_criterion("oracle-strategy", oracle_strategy);
    run_criterion("commission-monotonicity", commission_monotonicity);
    run_criterion("threshold-monotonicity", threshold_monotonicity);
    run_criterion("safety-switch", safety_switch);
    run_criterion("sample-count-formula", sample_count_formula);
    run_criterion("metric-oracles", metric_oracles);
    run_criterion("determinism", determinism);
    std::cout << (g_failures == 0 ? "all criteria passed"
                                  : std::to_string(g_failures) + " criteria failed")
              << std::endl;
    return g_failures;
}
