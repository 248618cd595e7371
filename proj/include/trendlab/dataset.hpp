#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "trendlab/market_data.hpp"

namespace trendlab {

inline constexpr int kFeatureDim = 60;                          // window length M
inline constexpr int kSmoothTaps = 5;                           // uniform moving average
inline constexpr int kRawWindow = kFeatureDim + kSmoothTaps - 1; // 64 raw closes per window
inline constexpr int kMinAnchor = kRawWindow - 1;                // first bar with full history

struct FeatureWindow {
    std::array<double, kFeatureDim> values{};
    bool degenerate = false; // constant input window, values all zero
};

struct Sample {
    FeatureWindow features;
    int label = -1; // +1 up, -1 down-or-flat
    Date day;
    int anchor = 0; // bar index within the trading day
    double entry_price = 0.0;
    double exit_price = 0.0;
};

struct DatasetSplit {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
    Date val_start;
    Date test_start;
};

// 64 consecutive closes -> 60 five-tap means: out[i] = mean(raw[i..i+4]).
// The extra 4 predecessors keep the filter fully supported; out[59] ends at
// the anchor bar, so the window stays causal.
std::vector<double> smooth(std::span<const double> raw);

// (v - mean) / sample std (N-1). A window with std < 1e-12 comes back as all
// zeros with the degenerate flag set.
FeatureWindow normalize(std::span<const double> window);

// +1 iff exit > entry; ties are a negative trend.
int label(double entry, double exit);

// One sample per anchor with 64 predecessors and anchor+horizon inside the
// day: count per full day = 390 - 63 - horizon. Labels and entry/exit prices
// use raw closes; only features see smoothing.
std::vector<Sample> build_samples(const TradingDay& day, int horizon);

// Over-samples the minority class (with replacement, seeded) until classes
// are equal. Originals keep their order; duplicates append. Throws
// ConfigError when only one class is present.
std::vector<Sample> balance(const std::vector<Sample>& samples, std::uint64_t seed);

// Assignment purely by Sample.day: train < val_start <= validation <
// test_start <= test. Throws ConfigError naming the first empty split.
DatasetSplit split_chronological(const std::vector<Sample>& samples, Date val_start,
                                 Date test_start);

} // namespace trendlab
