#include "trendlab/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "trendlab/errors.hpp"
#include "trendlab/rng.hpp"

namespace trendlab {

std::vector<double> smooth(std::span<const double> raw) {
    if (raw.size() != static_cast<std::size_t>(kRawWindow))
        throw ValidationError("smooth expects " + std::to_string(kRawWindow) +
                              " closes, got " + std::to_string(raw.size()));
    std::vector<double> out(kFeatureDim);
    for (int i = 0; i < kFeatureDim; ++i) {
        double sum = 0.0;
        for (int t = 0; t < kSmoothTaps; ++t) sum += raw[static_cast<std::size_t>(i + t)];
        out[static_cast<std::size_t>(i)] = sum / kSmoothTaps;
    }
    return out;
}

FeatureWindow normalize(std::span<const double> window) {
    if (window.size() != static_cast<std::size_t>(kFeatureDim))
        throw ValidationError("normalize expects " + std::to_string(kFeatureDim) +
                              " values, got " + std::to_string(window.size()));
    double mean = 0.0;
    for (double v : window) mean += v;
    mean /= kFeatureDim;
    double ss = 0.0;
    for (double v : window) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (kFeatureDim - 1));

    FeatureWindow fw;
    if (sd < 1e-12) {
        fw.degenerate = true; // values stay zero
        return fw;
    }
    for (int i = 0; i < kFeatureDim; ++i)
        fw.values[static_cast<std::size_t>(i)] = (window[static_cast<std::size_t>(i)] - mean) / sd;
    return fw;
}

int label(double entry, double exit) {
    if (!(entry > 0.0) || !(exit > 0.0))
        throw ValidationError("label requires positive prices");
    return exit > entry ? +1 : -1;
}

std::vector<Sample> build_samples(const TradingDay& day, int horizon) {
    if (horizon < 1 || horizon > 30)
        throw ValidationError("horizon must be in 1..30, got " + std::to_string(horizon));
    std::vector<Sample> out;
    const int n_bars = static_cast<int>(day.bars.size());
    const int last_anchor = n_bars - 1 - horizon;
    if (last_anchor < kMinAnchor) return out; // day too short, not an error
    out.reserve(static_cast<std::size_t>(last_anchor - kMinAnchor + 1));

    std::vector<double> raw(kRawWindow);
    for (int n = kMinAnchor; n <= last_anchor; ++n) {
        for (int k = 0; k < kRawWindow; ++k)
            raw[static_cast<std::size_t>(k)] = day.close_at(n - kMinAnchor + k);
        Sample s;
        s.features = normalize(smooth(raw));
        s.day = day.date;
        s.anchor = n;
        s.entry_price = day.close_at(n);
        s.exit_price = day.close_at(n + horizon);
        s.label = label(s.entry_price, s.exit_price);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> balance(const std::vector<Sample>& samples, std::uint64_t seed) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < samples.size(); ++i)
        (samples[i].label > 0 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty())
        throw ConfigError("cannot balance: only one class present (" +
                          std::to_string(pos.size()) + " positive, " +
                          std::to_string(neg.size()) + " negative)");

    std::vector<Sample> out = samples;
    const auto& minority = pos.size() < neg.size() ? pos : neg;
    const std::size_t deficit =
        pos.size() < neg.size() ? neg.size() - pos.size() : pos.size() - neg.size();
    Rng rng(seed);
    for (std::size_t k = 0; k < deficit; ++k)
        out.push_back(samples[minority[static_cast<std::size_t>(rng.below(minority.size()))]]);
    return out;
}

DatasetSplit split_chronological(const std::vector<Sample>& samples, Date val_start,
                                 Date test_start) {
    if (!(val_start < test_start))
        throw ConfigError("val_start must precede test_start");
    DatasetSplit split;
    split.val_start = val_start;
    split.test_start = test_start;
    for (const auto& s : samples) {
        if (s.day < val_start)
            split.train.push_back(s);
        else if (s.day < test_start)
            split.validation.push_back(s);
        else
            split.test.push_back(s);
    }
    if (split.train.empty()) throw ConfigError("empty split: train");
    if (split.validation.empty()) throw ConfigError("empty split: validation");
    if (split.test.empty()) throw ConfigError("empty split: test");
    return split;
}

} // namespace trendlab
