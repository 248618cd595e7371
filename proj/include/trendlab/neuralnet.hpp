#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trendlab/rng.hpp"

namespace trendlab {

// Fully connected layer, weights row-major [out][in].
struct DenseLayer {
    int in = 0;
    int out = 0;
    std::vector<double> w;
    std::vector<double> b;

    double& weight(int o, int i) { return w[static_cast<std::size_t>(o) * in + i]; }
    double weight(int o, int i) const { return w[static_cast<std::size_t>(o) * in + i]; }
};

// Dense classifier: rectifier on every layer except the last, whose outputs
// are the softmax logits. Dropout (train mode only) follows layers 1 and 2.
struct Network {
    std::vector<DenseLayer> layers;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in; }
    int output_dim() const { return layers.empty() ? 0 : layers.back().out; }
    std::vector<int> layer_sizes() const; // {in, out_1, ..., out_L}
};

// Default topology 60 -> 500 -> 200 -> 40 -> 20 -> 2.
inline constexpr std::array<int, 6> kDefaultLayerSizes{60, 500, 200, 40, 20, 2};

// Weights ~ Normal(0, init_std^2) drawn in a fixed order, biases zero.
Network make_network(std::span<const int> sizes, double init_std, Rng& rng);

// The production classifier at the default topology and 0.01 init std.
Network init_network(std::uint64_t seed);

struct Prediction {
    std::array<double, 2> probs{0.5, 0.5}; // [0] = P(down), [1] = P(up)
    int hard = -1;                         // argmax; tie -> -1
};

// Per-layer intermediates kept for backpropagation.
struct ForwardCache {
    std::vector<double> input;
    std::vector<std::vector<double>> preact; // z per layer
    std::vector<std::vector<double>> act;    // post-activation (and dropout) per layer
    std::vector<std::vector<double>> mask;   // inverted-dropout scales; empty when unused
};

// Eval mode: deterministic, no dropout. Throws ValidationError on a shape
// mismatch or non-finite input.
Prediction forward(const Network& net, std::span<const double> input);

// Train mode: inverted dropout after layers 1 and 2 (kept units scaled by
// 1/(1-rate)), masks drawn from rng, intermediates cached.
Prediction forward_train(const Network& net, std::span<const double> input, double dropout_rate,
                         Rng& rng, ForwardCache& cache);

struct LossGrad {
    double value = 0.0;
    std::array<double, 2> dlogits{}; // softmax - onehot(true)
};

// Logistic loss -log p(true class); probabilities clamped at 1e-12.
LossGrad loss(const Prediction& pred, int lbl);

// Same shapes as the network parameters.
struct Gradients {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    static Gradients zeros_like(const Network& net);
};

// Backprop through rectifiers and the cached dropout masks; accumulates.
void backward(const Network& net, const ForwardCache& cache,
              const std::array<double, 2>& dlogits, Gradients& grads);

struct Example {
    std::span<const double> x;
    int label = -1; // +1 / -1
};

// One SGD step on the mean batch gradient; returns the mean batch loss.
// Throws Error if a parameter goes non-finite.
double sgd_step(Network& net, std::span<const Example> batch, double lr, double dropout_rate,
                Rng& rng);

// Fraction of hard decisions that disagree with the labels (eval mode).
double classification_error(const Network& net, std::span<const Example> set);

struct TrainConfig {
    int batch_size = 100;
    double lr_initial = 1e-3;
    double lr_decay_factor = 5.0;
    double lr_floor = 1e-7;
    double dropout_rate = 0.5;
    double init_std = 0.01;
    int patience = 3;            // flat epochs before an LR decay
    int early_stop_patience = 5; // decays without a new best before stopping
    int max_epochs = 500;
    std::uint64_t seed = 1;
};

struct EpochRow {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_error = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRow> rows;
    int best_epoch = 0;
    double best_val_error = 1.0;
};

struct TrainResult {
    Network net; // snapshot at the best validation error
    TrainingHistory history;
};

// Seeded epochs over shuffled mini-batches; validation classification error
// drives the LR schedule and early stopping. Deterministic per (config, data).
TrainResult train(const TrainConfig& cfg, std::span<const Example> train_set,
                  std::span<const Example> val_set);

struct GradCheckReport {
    std::vector<double> max_rel_error_per_layer;
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// Central finite differences vs analytic backprop on every parameter,
// dropout disabled. rel = |a-n| / max(|a|, |n|, 1e-6). Meant for reduced
// topologies; cost is O(params * forward).
GradCheckReport grad_check(const Network& net, const Example& example, double h,
                           double tolerance);

// Versioned flat file: magic, version, layer sizes, row-major f64
// little-endian parameter blocks, FNV-1a64 checksum trailer.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path); // throws ParseError on any corruption

} // namespace trendlab
