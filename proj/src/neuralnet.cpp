#include "trendlab/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "trendlab/errors.hpp"

namespace trendlab {

namespace {

// Dropout follows the first and second layers only.
bool dropout_after(int layer_index) { return layer_index == 0 || layer_index == 1; }

void softmax2(const std::vector<double>& logits, std::array<double, 2>& probs) {
    const double m = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - m);
    const double e1 = std::exp(logits[1] - m);
    const double z = e0 + e1;
    probs[0] = e0 / z;
    probs[1] = e1 / z;
}

Prediction to_prediction(const std::vector<double>& logits) {
    Prediction p;
    softmax2(logits, p.probs);
    p.hard = p.probs[1] > p.probs[0] ? +1 : -1; // tie is a negative trend
    return p;
}

void check_input(const Network& net, std::span<const double> input) {
    if (static_cast<int>(input.size()) != net.input_dim())
        throw ValidationError("input dimension " + std::to_string(input.size()) +
                              " != network input " + std::to_string(net.input_dim()));
    for (double v : input)
        if (!std::isfinite(v)) throw ValidationError("non-finite network input");
}

// z = W a + b
void affine(const DenseLayer& l, const std::vector<double>& a, std::vector<double>& z) {
    z.assign(static_cast<std::size_t>(l.out), 0.0);
    for (int o = 0; o < l.out; ++o) {
        const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
        double acc = 0.0;
        for (int i = 0; i < l.in; ++i) acc += wrow[i] * a[static_cast<std::size_t>(i)];
        z[static_cast<std::size_t>(o)] = acc + l.b[static_cast<std::size_t>(o)];
    }
}

std::vector<double> run_layers(const Network& net, std::span<const double> input,
                               double dropout_rate, Rng* rng, ForwardCache* cache) {
    const int n_layers = static_cast<int>(net.layers.size());
    std::vector<double> a(input.begin(), input.end());
    if (cache) {
        cache->input = a;
        cache->preact.assign(static_cast<std::size_t>(n_layers), {});
        cache->act.assign(static_cast<std::size_t>(n_layers), {});
        cache->mask.assign(static_cast<std::size_t>(n_layers), {});
    }
    std::vector<double> z;
    for (int li = 0; li < n_layers; ++li) {
        const auto& l = net.layers[static_cast<std::size_t>(li)];
        affine(l, a, z);
        if (cache) cache->preact[static_cast<std::size_t>(li)] = z;
        if (li + 1 < n_layers) {
            for (double& v : z) v = v > 0.0 ? v : 0.0;
            if (rng && dropout_rate > 0.0 && dropout_after(li)) {
                const double keep = 1.0 - dropout_rate;
                std::vector<double> m(z.size());
                for (std::size_t u = 0; u < z.size(); ++u) {
                    m[u] = rng->uniform() < keep ? 1.0 / keep : 0.0;
                    z[u] *= m[u];
                }
                if (cache) cache->mask[static_cast<std::size_t>(li)] = std::move(m);
            }
        }
        if (cache) cache->act[static_cast<std::size_t>(li)] = z;
        a = z;
    }
    return a;
}

} // namespace

std::vector<int> Network::layer_sizes() const {
    std::vector<int> sizes;
    sizes.push_back(input_dim());
    for (const auto& l : layers) sizes.push_back(l.out);
    return sizes;
}

Network make_network(std::span<const int> sizes, double init_std, Rng& rng) {
    if (sizes.size() < 2) throw ConfigError("network needs at least one layer");
    Network net;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        DenseLayer l;
        l.in = sizes[k];
        l.out = sizes[k + 1];
        if (l.in < 1 || l.out < 1) throw ConfigError("layer sizes must be positive");
        l.w.resize(static_cast<std::size_t>(l.in) * l.out);
        for (double& v : l.w) v = init_std * rng.normal();
        l.b.assign(static_cast<std::size_t>(l.out), 0.0);
        net.layers.push_back(std::move(l));
    }
    return net;
}

Network init_network(std::uint64_t seed) {
    Rng rng(seed);
    return make_network(kDefaultLayerSizes, 0.01, rng);
}

Prediction forward(const Network& net, std::span<const double> input) {
    check_input(net, input);
    if (net.output_dim() != 2) throw ValidationError("classifier output must be 2 classes");
    return to_prediction(run_layers(net, input, 0.0, nullptr, nullptr));
}

Prediction forward_train(const Network& net, std::span<const double> input, double dropout_rate,
                         Rng& rng, ForwardCache& cache) {
    check_input(net, input);
    if (net.output_dim() != 2) throw ValidationError("classifier output must be 2 classes");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("dropout rate must be in [0, 1)");
    return to_prediction(run_layers(net, input, dropout_rate, &rng, &cache));
}

LossGrad loss(const Prediction& pred, int lbl) {
    const int true_idx = lbl > 0 ? 1 : 0;
    LossGrad lg;
    lg.value = -std::log(std::max(pred.probs[static_cast<std::size_t>(true_idx)], 1e-12));
    lg.dlogits = pred.probs;
    lg.dlogits[static_cast<std::size_t>(true_idx)] -= 1.0;
    return lg;
}

Gradients Gradients::zeros_like(const Network& net) {
    Gradients g;
    for (const auto& l : net.layers) {
        g.w.emplace_back(l.w.size(), 0.0);
        g.b.emplace_back(l.b.size(), 0.0);
    }
    return g;
}

void backward(const Network& net, const ForwardCache& cache,
              const std::array<double, 2>& dlogits, Gradients& grads) {
    const int n_layers = static_cast<int>(net.layers.size());
    std::vector<double> delta(dlogits.begin(), dlogits.end());
    for (int li = n_layers - 1; li >= 0; --li) {
        const auto& l = net.layers[static_cast<std::size_t>(li)];
        const std::vector<double>& a_in =
            li == 0 ? cache.input : cache.act[static_cast<std::size_t>(li - 1)];

        auto& gw = grads.w[static_cast<std::size_t>(li)];
        auto& gb = grads.b[static_cast<std::size_t>(li)];
        for (int o = 0; o < l.out; ++o) {
            const double d = delta[static_cast<std::size_t>(o)];
            gb[static_cast<std::size_t>(o)] += d;
            double* gwrow = gw.data() + static_cast<std::size_t>(o) * l.in;
            for (int i = 0; i < l.in; ++i) gwrow[i] += d * a_in[static_cast<std::size_t>(i)];
        }
        if (li == 0) break;

        std::vector<double> dprev(static_cast<std::size_t>(l.in), 0.0);
        for (int o = 0; o < l.out; ++o) {
            const double d = delta[static_cast<std::size_t>(o)];
            const double* wrow = l.w.data() + static_cast<std::size_t>(o) * l.in;
            for (int i = 0; i < l.in; ++i) dprev[static_cast<std::size_t>(i)] += d * wrow[i];
        }
        // through the previous layer's dropout mask, then its rectifier
        const auto& mask = cache.mask[static_cast<std::size_t>(li - 1)];
        if (!mask.empty())
            for (std::size_t i = 0; i < dprev.size(); ++i) dprev[i] *= mask[i];
        const auto& zprev = cache.preact[static_cast<std::size_t>(li - 1)];
        for (std::size_t i = 0; i < dprev.size(); ++i)
            if (zprev[i] <= 0.0) dprev[i] = 0.0;
        delta = std::move(dprev);
    }
}

double sgd_step(Network& net, std::span<const Example> batch, double lr, double dropout_rate,
                Rng& rng) {
    if (batch.empty()) throw ConfigError("sgd_step on an empty batch");
    Gradients grads = Gradients::zeros_like(net);
    ForwardCache cache;
    double total_loss = 0.0;
    for (const auto& ex : batch) {
        const Prediction pred = forward_train(net, ex.x, dropout_rate, rng, cache);
        const LossGrad lg = loss(pred, ex.label);
        total_loss += lg.value;
        backward(net, cache, lg.dlogits, grads);
    }
    const double scale = lr / static_cast<double>(batch.size());
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        auto& l = net.layers[li];
        for (std::size_t k = 0; k < l.w.size(); ++k) l.w[k] -= scale * grads.w[li][k];
        for (std::size_t k = 0; k < l.b.size(); ++k) l.b[k] -= scale * grads.b[li][k];
        for (double v : l.w)
            if (!std::isfinite(v)) throw Error("training aborted: non-finite weight update");
        for (double v : l.b)
            if (!std::isfinite(v)) throw Error("training aborted: non-finite bias update");
    }
    return total_loss / static_cast<double>(batch.size());
}

double classification_error(const Network& net, std::span<const Example> set) {
    if (set.empty()) throw ConfigError("classification_error on an empty set");
    std::size_t wrong = 0;
    for (const auto& ex : set)
        if (forward(net, ex.x).hard != ex.label) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(set.size());
}

TrainResult train(const TrainConfig& cfg, std::span<const Example> train_set,
                  std::span<const Example> val_set) {
    if (train_set.empty()) throw ConfigError("empty split: train");
    if (val_set.empty()) throw ConfigError("empty split: validation");
    if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (!(cfg.lr_floor < cfg.lr_initial)) throw ConfigError("lr floor must be below initial lr");
    if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0)
        throw ConfigError("dropout rate must be in [0, 1)");

    Rng rng(cfg.seed);
    std::vector<int> sizes(kDefaultLayerSizes.begin(), kDefaultLayerSizes.end());
    Network net = make_network(sizes, cfg.init_std, rng);

    TrainResult result;
    result.net = net;
    result.history.best_val_error = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double lr = cfg.lr_initial;
    int epochs_since_best = 0;
    int decays_since_best = 0;
    std::vector<Example> batch;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        int n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            batch.clear();
            for (std::size_t k = start; k < end; ++k) batch.push_back(train_set[order[k]]);
            loss_sum += sgd_step(net, batch, lr, cfg.dropout_rate, rng);
            ++n_batches;
        }
        const double val_err = classification_error(net, val_set);
        result.history.rows.push_back(
            EpochRow{epoch, lr, loss_sum / std::max(1, n_batches), val_err});

        if (val_err < result.history.best_val_error) {
            result.history.best_val_error = val_err;
            result.history.best_epoch = epoch;
            result.net = net;
            epochs_since_best = 0;
            decays_since_best = 0;
        } else {
            ++epochs_since_best;
        }
        if (epochs_since_best >= cfg.patience) {
            lr /= cfg.lr_decay_factor;
            epochs_since_best = 0;
            ++decays_since_best;
            if (lr < cfg.lr_floor) break;
        }
        if (decays_since_best >= cfg.early_stop_patience) break;
    }
    return result;
}

GradCheckReport grad_check(const Network& net, const Example& example, double h,
                           double tolerance) {
    GradCheckReport report;
    report.tolerance = tolerance;

    Rng unused(0);
    ForwardCache cache;
    Network work = net;
    const Prediction pred = forward_train(work, example.x, 0.0, unused, cache);
    Gradients grads = Gradients::zeros_like(work);
    backward(work, cache, loss(pred, example.label).dlogits, grads);

    auto loss_at = [&](void) {
        return loss(forward(work, example.x), example.label).value;
    };
    auto relative = [](double a, double n) {
        return std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-6});
    };

    for (std::size_t li = 0; li < work.layers.size(); ++li) {
        auto& l = work.layers[li];
        double layer_max = 0.0;
        auto probe = [&](double& param, double analytic) {
            const double saved = param;
            param = saved + h;
            const double lp = loss_at();
            param = saved - h;
            const double lm = loss_at();
            param = saved;
            layer_max = std::max(layer_max, relative(analytic, (lp - lm) / (2.0 * h)));
        };
        for (std::size_t k = 0; k < l.w.size(); ++k) probe(l.w[k], grads.w[li][k]);
        for (std::size_t k = 0; k < l.b.size(); ++k) probe(l.b[k], grads.b[li][k]);
        report.max_rel_error_per_layer.push_back(layer_max);
        report.max_rel_error = std::max(report.max_rel_error, layer_max);
    }
    report.pass = report.max_rel_error <= tolerance;
    return report;
}

namespace {

constexpr char kMagic[4] = {'T', 'L', 'N', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

class Reader {
public:
    Reader(const std::string& bytes, const std::string& path)
        : bytes_(bytes), path_(path) {}

    void skip(std::size_t n) {
        need(n);
        pos_ += n;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw ParseError("'" + path_ + "': truncated model file");
    }
    const std::string& bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

} // namespace

void save_network(const Network& net, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kFormatVersion);
    const auto sizes = net.layer_sizes();
    put_u32(out, static_cast<std::uint32_t>(sizes.size()));
    for (int s : sizes) put_u32(out, static_cast<std::uint32_t>(s));
    for (const auto& l : net.layers) {
        for (double v : l.w) put_f64(out, v);
        for (double v : l.b) put_f64(out, v);
    }
    put_u64(out, fnv1a64(out));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write '" + path + "'");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw Error("short write to '" + path + "'");
}

Network load_network(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open model '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (bytes.size() < 8 + 8) throw ParseError("'" + path + "': truncated model file");

    const std::string payload = bytes.substr(0, bytes.size() - 8);
    if (payload.size() < 4 || std::memcmp(payload.data(), kMagic, 4) != 0)
        throw ParseError("'" + path + "': bad magic, not a model file");

    std::uint64_t stored_checksum = 0;
    for (int i = 0; i < 8; ++i)
        stored_checksum |= static_cast<std::uint64_t>(
                               static_cast<unsigned char>(bytes[bytes.size() - 8 + i]))
                           << (8 * i);
    if (fnv1a64(payload) != stored_checksum)
        throw ParseError("'" + path + "': checksum mismatch, model file corrupt");

    Reader body(payload, path);
    body.skip(4); // magic bytes already verified
    const std::uint32_t version = body.u32();
    if (version != kFormatVersion)
        throw ParseError("'" + path + "': unsupported model version " + std::to_string(version));
    const std::uint32_t n_sizes = body.u32();
    if (n_sizes < 2 || n_sizes > 64) throw ParseError("'" + path + "': implausible layer count");
    std::vector<int> sizes;
    for (std::uint32_t k = 0; k < n_sizes; ++k) {
        const std::uint32_t s = body.u32();
        if (s < 1 || s > 1000000) throw ParseError("'" + path + "': implausible layer size");
        sizes.push_back(static_cast<int>(s));
    }

    Network net;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        DenseLayer l;
        l.in = sizes[k];
        l.out = sizes[k + 1];
        l.w.resize(static_cast<std::size_t>(l.in) * l.out);
        l.b.resize(static_cast<std::size_t>(l.out));
        for (double& v : l.w) v = body.f64();
        for (double& v : l.b) v = body.f64();
        net.layers.push_back(std::move(l));
    }
    if (body.pos() != payload.size())
        throw ParseError("'" + path + "': trailing bytes after parameter blocks");
    return net;
}

} // namespace trendlab
