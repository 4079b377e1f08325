#pragma once

// k -> h1 -> h2 -> 1 feed-forward classifier (ReLU, ReLU, sigmoid) trained
// with class-weighted binary cross-entropy and AdamW under k-fold
// cross-validation with early stopping.

#include "vadsk/common.hpp"
#include "vadsk/deduction.hpp"
#include "vadsk/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vadsk {

/// Fully connected layer; `weights` is row-major out x in.
struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in_dim, std::size_t out_dim)
        : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

    double& w(std::size_t row, std::size_t col) { return weights[row * in + col]; }
    double w(std::size_t row, std::size_t col) const { return weights[row * in + col]; }

    bool operator==(const DenseLayer&) const = default;
};

struct ClassifierParams {
    std::array<DenseLayer, 3> layers;

    static ClassifierParams zeros(std::size_t k, std::size_t h1, std::size_t h2) {
        return {{DenseLayer(k, h1), DenseLayer(h1, h2), DenseLayer(h2, 1)}};
    }

    /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    static ClassifierParams glorot(std::size_t k, std::size_t h1, std::size_t h2, Rng& rng) {
        auto p = zeros(k, h1, h2);
        for (auto& layer : p.layers) {
            const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
            for (double& w : layer.weights) w = rng.uniform(-limit, limit);
        }
        return p;
    }

    std::size_t input_dim() const { return layers[0].in; }

    /// Shape-compatible zeroed copy (gradient and moment buffers).
    ClassifierParams zeros_like() const { return zeros(layers[0].in, layers[0].out, layers[1].out); }

    bool well_formed() const {
        return layers[0].out == layers[1].in && layers[1].out == layers[2].in && layers[2].out == 1 &&
               std::all_of(layers.begin(), layers.end(), [](const DenseLayer& l) {
                   return l.weights.size() == l.in * l.out && l.bias.size() == l.out;
               });
    }

    bool finite() const {
        for (const auto& l : layers) {
            for (double v : l.weights)
                if (!std::isfinite(v)) return false;
            for (double v : l.bias)
                if (!std::isfinite(v)) return false;
        }
        return true;
    }

    bool operator==(const ClassifierParams&) const = default;
};

using Gradients = ClassifierParams;

inline bool same_shape(const ClassifierParams& a, const ClassifierParams& b) {
    for (std::size_t l = 0; l < 3; ++l) {
        const auto& x = a.layers[l];
        const auto& y = b.layers[l];
        if (x.in != y.in || x.out != y.out || x.weights.size() != y.weights.size() || x.bias.size() != y.bias.size())
            return false;
    }
    return true;
}

/// Sigmoid output clamped to the open interval (0, 1).
inline double sigmoid(double z) {
    const double p = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return std::clamp(p, std::numeric_limits<double>::denorm_min(), 1.0 - 0x1.0p-53);
}

namespace detail {

struct Activations {
    std::vector<double> pre1, post1, pre2, post2;
    double logit = 0.0;
};

inline void check_input(const ClassifierParams& params, std::size_t n) {
    if (n != params.input_dim())
        throw Error(ErrorKind::DimensionMismatch,
                    "encoding has " + std::to_string(n) + " values, network expects " +
                        std::to_string(params.input_dim()));
}

inline void forward_pass(const ClassifierParams& params, std::span<const double> x, Activations& act) {
    const auto& [l1, l2, l3] = params.layers;
    act.pre1.assign(l1.bias.begin(), l1.bias.end());
    // Encodings are sparse: skip absent keywords.
    for (std::size_t c = 0; c < l1.in; ++c) {
        if (x[c] == 0.0) continue;
        for (std::size_t r = 0; r < l1.out; ++r) act.pre1[r] += l1.w(r, c) * x[c];
    }
    act.post1.resize(l1.out);
    for (std::size_t r = 0; r < l1.out; ++r) act.post1[r] = std::max(0.0, act.pre1[r]);

    act.pre2.assign(l2.bias.begin(), l2.bias.end());
    for (std::size_t r = 0; r < l2.out; ++r)
        for (std::size_t c = 0; c < l2.in; ++c) act.pre2[r] += l2.w(r, c) * act.post1[c];
    act.post2.resize(l2.out);
    for (std::size_t r = 0; r < l2.out; ++r) act.post2[r] = std::max(0.0, act.pre2[r]);

    act.logit = l3.bias[0];
    for (std::size_t c = 0; c < l3.in; ++c) act.logit += l3.w(0, c) * act.post2[c];
}

} // namespace detail

/// Anomaly probability for one encoding vector.
inline double forward(const ClassifierParams& params, std::span<const double> x) {
    detail::check_input(params, x.size());
    detail::Activations act;
    detail::forward_pass(params, x, act);
    return sigmoid(act.logit);
}

inline double forward(const ClassifierParams& params, const Encoding& e) { return forward(params, e.values); }

inline constexpr double kLossClamp = 1e-7;

/// -[pos_weight * y * ln p + (1 - y) * ln(1 - p)], with p clamped to
/// [1e-7, 1 - 1e-7] inside the logarithms.
inline double weighted_bce(double pred, Label label, double pos_weight) {
    if (!(pred >= 0.0 && pred <= 1.0)) throw Error(ErrorKind::DomainError, "prediction " + format_double(pred));
    const double p = std::clamp(pred, kLossClamp, 1.0 - kLossClamp);
    return label == Label::Anomalous ? -pos_weight * std::log(p) : -std::log(1.0 - p);
}

/// Negative-to-positive count ratio of the training labels.
inline double compute_pos_weight(std::span<const Label> labels) {
    std::size_t pos = 0;
    for (auto l : labels) pos += l == Label::Anomalous;
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0)
        throw Error(ErrorKind::DegenerateLabels,
                    std::to_string(neg) + " normal / " + std::to_string(pos) + " anomalous labels");
    return static_cast<double>(neg) / static_cast<double>(pos);
}

struct Example {
    std::vector<double> x;
    Label label = Label::Normal;
};

namespace detail {

// Mean-loss gradient over the given examples. Returns the mean loss.
inline double accumulate_gradients(const ClassifierParams& params, std::span<const Example> data,
                                   std::span<const std::size_t> batch, double pos_weight, Gradients& grads) {
    const auto& [l1, l2, l3] = params.layers;
    auto& [g1, g2, g3] = grads.layers;
    const double scale = 1.0 / static_cast<double>(batch.size());
    Activations act;
    std::vector<double> d1(l1.out), d2(l2.out);
    double loss = 0.0;
    for (const auto idx : batch) {
        const auto& ex = data[idx];
        check_input(params, ex.x.size());
        forward_pass(params, ex.x, act);
        const double p = sigmoid(act.logit);
        loss += weighted_bce(p, ex.label, pos_weight);

        // d(loss)/d(logit) for weighted BCE composed with the sigmoid.
        const double y = ex.label == Label::Anomalous ? 1.0 : 0.0;
        const double dz = (p * (pos_weight * y + 1.0 - y) - pos_weight * y) * scale;

        g3.bias[0] += dz;
        for (std::size_t c = 0; c < l3.in; ++c) {
            g3.w(0, c) += dz * act.post2[c];
            d2[c] = act.pre2[c] > 0.0 ? l3.w(0, c) * dz : 0.0;
        }
        std::fill(d1.begin(), d1.end(), 0.0);
        for (std::size_t r = 0; r < l2.out; ++r) {
            if (d2[r] == 0.0) continue;
            g2.bias[r] += d2[r];
            for (std::size_t c = 0; c < l2.in; ++c) {
                g2.w(r, c) += d2[r] * act.post1[c];
                d1[c] += l2.w(r, c) * d2[r];
            }
        }
        for (std::size_t r = 0; r < l1.out; ++r) {
            if (act.pre1[r] <= 0.0) d1[r] = 0.0;
            g1.bias[r] += d1[r];
        }
        for (std::size_t c = 0; c < l1.in; ++c) {
            if (ex.x[c] == 0.0) continue;
            for (std::size_t r = 0; r < l1.out; ++r) g1.w(r, c) += d1[r] * ex.x[c];
        }
    }
    return loss * scale;
}

inline double mean_loss(const ClassifierParams& params, std::span<const Example> data,
                        std::span<const std::size_t> subset, double pos_weight) {
    Activations act;
    double loss = 0.0;
    for (const auto idx : subset) {
        forward_pass(params, data[idx].x, act);
        loss += weighted_bce(sigmoid(act.logit), data[idx].label, pos_weight);
    }
    return loss / static_cast<double>(subset.size());
}

} // namespace detail

/// Mean weighted BCE over a batch.
inline double batch_loss(const ClassifierParams& params, std::span<const Example> batch, double pos_weight) {
    if (batch.empty()) throw Error(ErrorKind::InsufficientSamples, "empty batch");
    for (const auto& ex : batch) detail::check_input(params, ex.x.size());
    std::vector<std::size_t> all(batch.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return detail::mean_loss(params, batch, all, pos_weight);
}

/// Analytic gradient of the mean weighted BCE over `batch`.
inline Gradients backward(const ClassifierParams& params, std::span<const Example> batch, double pos_weight) {
    if (batch.empty()) throw Error(ErrorKind::InsufficientSamples, "empty batch");
    std::vector<std::size_t> all(batch.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    Gradients g = params.zeros_like();
    detail::accumulate_gradients(params, batch, all, pos_weight, g);
    return g;
}

struct OptimizerState {
    Gradients first_moment;
    Gradients second_moment;
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    static OptimizerState for_params(const ClassifierParams& p) { return {p.zeros_like(), p.zeros_like()}; }
};

/// One AdamW update with bias-corrected moments. Decoupled decay applies to
/// weight matrices only, never to biases:
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * weight_decay * p
inline void adamw_step(ClassifierParams& params, const Gradients& grads, OptimizerState& state, double lr,
                       double weight_decay) {
    if (!params.well_formed() || !same_shape(params, grads) || !same_shape(params, state.first_moment) ||
        !same_shape(params, state.second_moment))
        throw Error(ErrorKind::DimensionMismatch, "parameter, gradient and moment shapes differ");
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v, double decay) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p[i] -= lr * (m_hat / (std::sqrt(v_hat) + state.epsilon)) + lr * decay * p[i];
        }
    };
    for (std::size_t l = 0; l < 3; ++l) {
        update(params.layers[l].weights, grads.layers[l].weights, state.first_moment.layers[l].weights,
               state.second_moment.layers[l].weights, weight_decay);
        update(params.layers[l].bias, grads.layers[l].bias, state.first_moment.layers[l].bias,
               state.second_moment.layers[l].bias, 0.0);
    }
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
    double learning_rate = 0.001;
    double weight_decay = 0.001;
    std::size_t max_epochs = 20;
    std::size_t patience = 3;
    std::size_t folds = 5;
    std::size_t batch_size = 200;
    std::size_t hidden1 = 64;
    std::size_t hidden2 = 32;
    /// Unset: the negative/positive ratio of each fold's training labels.
    std::optional<double> pos_weight;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw Error(ErrorKind::ConfigError, "learning_rate must be positive");
        if (!(weight_decay >= 0.0)) throw Error(ErrorKind::ConfigError, "weight_decay must be non-negative");
        if (max_epochs == 0) throw Error(ErrorKind::ConfigError, "max_epochs must be positive");
        if (patience >= max_epochs) throw Error(ErrorKind::ConfigError, "patience must be below max_epochs");
        if (folds < 2) throw Error(ErrorKind::ConfigError, "folds must be at least 2");
        if (batch_size == 0) throw Error(ErrorKind::ConfigError, "batch_size must be positive");
        if (hidden1 == 0 || hidden2 == 0) throw Error(ErrorKind::ConfigError, "hidden widths must be positive");
        if (pos_weight && !(*pos_weight > 0.0)) throw Error(ErrorKind::ConfigError, "pos_weight must be positive");
    }

    bool operator==(const TrainConfig&) const = default;
};

struct FoldMetrics {
    /// Full-pass mean training loss after each completed epoch.
    std::vector<double> train_losses;
    std::vector<double> val_losses;
    std::size_t best_epoch = 0;
    double best_val_loss = std::numeric_limits<double>::infinity();
    double pos_weight = 1.0;
    std::size_t n_train = 0;
    std::size_t n_val = 0;

    bool operator==(const FoldMetrics&) const = default;
};

struct TrainedModel {
    ClassifierParams params;
    std::vector<FoldMetrics> fold_metrics;
    std::size_t chosen_fold = 0;
    std::uint64_t keyword_model_hash = 0;
    TrainConfig config;

    bool operator==(const TrainedModel&) const = default;
};

namespace detail {

inline constexpr std::uint64_t kStreamShuffle = 10;
inline constexpr std::uint64_t kStreamInit = 100;
inline constexpr std::uint64_t kStreamBatches = 200;

inline FoldMetrics train_fold(std::span<const Example> data, std::span<const std::size_t> train_idx,
                              std::span<const std::size_t> val_idx, const TrainConfig& config, std::size_t fold,
                              ClassifierParams& best_params) {
    FoldMetrics fm;
    fm.n_train = train_idx.size();
    fm.n_val = val_idx.size();
    if (config.pos_weight) {
        fm.pos_weight = *config.pos_weight;
    } else {
        std::vector<Label> labels;
        labels.reserve(train_idx.size());
        for (auto i : train_idx) labels.push_back(data[i].label);
        fm.pos_weight = compute_pos_weight(labels);
    }

    const std::size_t k = data.front().x.size();
    Rng init_rng(config.seed, kStreamInit + fold);
    Rng batch_rng(config.seed, kStreamBatches + fold);
    ClassifierParams params = ClassifierParams::glorot(k, config.hidden1, config.hidden2, init_rng);
    OptimizerState state = OptimizerState::for_params(params);
    best_params = params;

    std::vector<std::size_t> order(train_idx.begin(), train_idx.end());
    std::size_t stale = 0;
    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        batch_rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const auto len = std::min(config.batch_size, order.size() - start);
            Gradients grads = params.zeros_like();
            accumulate_gradients(params, data, std::span(order).subspan(start, len), fm.pos_weight, grads);
            adamw_step(params, grads, state, config.learning_rate, config.weight_decay);
        }
        fm.train_losses.push_back(mean_loss(params, data, train_idx, fm.pos_weight));
        const double val = mean_loss(params, data, val_idx, fm.pos_weight);
        fm.val_losses.push_back(val);
        if (val < fm.best_val_loss) {
            fm.best_val_loss = val;
            fm.best_epoch = epoch;
            best_params = params;
            stale = 0;
        } else if (++stale >= config.patience) {
            break;
        }
    }
    return fm;
}

} // namespace detail

/// k-fold training: shuffle once, cut contiguous folds, train each fold with
/// early stopping on validation loss, keep the fold whose best epoch scored
/// the lowest validation loss.
inline TrainedModel train(const std::vector<LabeledEncoding>& samples, const TrainConfig& config) {
    config.validate();
    if (samples.empty()) throw Error(ErrorKind::InsufficientSamples, "no training samples");
    std::vector<Label> labels;
    for (const auto& s : samples) labels.push_back(s.label);
    compute_pos_weight(labels);  // both classes present

    const std::size_t k = samples.front().encoding.values.size();
    const std::uint64_t hash = samples.front().encoding.keyword_model_hash;
    std::vector<Example> data;
    data.reserve(samples.size());
    std::size_t n_pos = 0;
    for (const auto& s : samples) {
        if (s.encoding.values.size() != k) throw Error(ErrorKind::DimensionMismatch, s.encoding.frame_id);
        if (s.encoding.keyword_model_hash != hash) throw Error(ErrorKind::ModelEncodingMismatch, s.encoding.frame_id);
        data.push_back({s.encoding.values, s.label});
        n_pos += s.label == Label::Anomalous;
    }
    if (k == 0) throw Error(ErrorKind::DimensionMismatch, "zero-length encodings");
    const std::size_t n_neg = data.size() - n_pos;
    if (n_pos < config.folds || n_neg < config.folds)
        throw Error(ErrorKind::InsufficientSamples, "need at least " + std::to_string(config.folds) +
                                                        " samples per class, have " + std::to_string(n_neg) +
                                                        " normal / " + std::to_string(n_pos) + " anomalous");

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng(config.seed, detail::kStreamShuffle).shuffle(order);

    TrainedModel model;
    model.config = config;
    model.keyword_model_hash = hash;
    const std::size_t n = order.size();
    for (std::size_t f = 0; f < config.folds; ++f) {
        const std::size_t lo = f * n / config.folds;
        const std::size_t hi = (f + 1) * n / config.folds;
        std::vector<std::size_t> train_idx, val_idx;
        for (std::size_t i = 0; i < n; ++i) (i >= lo && i < hi ? val_idx : train_idx).push_back(order[i]);
        ClassifierParams fold_best;
        auto fm = detail::train_fold(data, train_idx, val_idx, config, f, fold_best);
        if (model.fold_metrics.empty() || fm.best_val_loss < model.fold_metrics[model.chosen_fold].best_val_loss) {
            model.chosen_fold = f;
            model.params = std::move(fold_best);
        }
        model.fold_metrics.push_back(std::move(fm));
    }
    return model;
}

inline double predict(const TrainedModel& model, const Encoding& encoding) {
    if (encoding.keyword_model_hash != model.keyword_model_hash)
        throw Error(ErrorKind::ModelEncodingMismatch, encoding.frame_id + ": encoding from keyword model " +
                                                           to_hex(encoding.keyword_model_hash) + ", classifier bound to " +
                                                           to_hex(model.keyword_model_hash));
    return forward(model.params, encoding.values);
}

// ---------------------------------------------------------------------------
// Model file: tab-separated `key<TAB>value...` lines; numbers use the
// shortest round-trip decimal form, so parse(serialize(m)) == m exactly.

namespace detail {

inline std::string join_doubles(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += format_double(v[i]);
    }
    return out;
}

inline std::vector<double> parse_doubles(std::string_view s) {
    std::vector<double> out;
    if (s.empty()) return out;
    for (auto part : split(s, ',')) {
        auto v = parse_double(part);
        if (!v) throw Error(ErrorKind::MalformedRecord, "bad number '" + std::string(part) + "'");
        out.push_back(*v);
    }
    return out;
}

} // namespace detail

inline std::string serialize(const TrainedModel& m) {
    const auto& c = m.config;
    const auto& L = m.params.layers;
    std::string out = "# vadsk classifier\n";
    auto line = [&](std::initializer_list<std::string> fields) {
        bool first = true;
        for (const auto& f : fields) {
            if (!first) out += '\t';
            out += f;
            first = false;
        }
        out += '\n';
    };
    line({"format", "vadsk-classifier/1"});
    line({"keyword_model_hash", to_hex(m.keyword_model_hash)});
    line({"dims", std::to_string(L[0].in), std::to_string(L[0].out), std::to_string(L[1].out), std::to_string(L[2].out)});
    line({"activations", "relu", "relu", "sigmoid"});
    line({"learning_rate", format_double(c.learning_rate)});
    line({"weight_decay", format_double(c.weight_decay)});
    line({"max_epochs", std::to_string(c.max_epochs)});
    line({"patience", std::to_string(c.patience)});
    line({"folds", std::to_string(c.folds)});
    line({"batch_size", std::to_string(c.batch_size)});
    line({"pos_weight", c.pos_weight ? format_double(*c.pos_weight) : "auto"});
    line({"seed", std::to_string(c.seed)});
    line({"chosen_fold", std::to_string(m.chosen_fold)});
    for (std::size_t f = 0; f < m.fold_metrics.size(); ++f) {
        const auto& fm = m.fold_metrics[f];
        line({"fold", std::to_string(f), std::to_string(fm.best_epoch), format_double(fm.best_val_loss),
              format_double(fm.pos_weight), std::to_string(fm.n_train), std::to_string(fm.n_val),
              detail::join_doubles(fm.train_losses), detail::join_doubles(fm.val_losses)});
    }
    for (std::size_t l = 0; l < 3; ++l) {
        line({"weights", std::to_string(l), detail::join_doubles(L[l].weights)});
        line({"bias", std::to_string(l), detail::join_doubles(L[l].bias)});
    }
    return out;
}

inline TrainedModel parse_trained_model(std::string_view text) {
    TrainedModel m;
    std::map<std::string, std::vector<std::string>, std::less<>> header;
    std::array<std::optional<std::vector<double>>, 3> weights, biases;
    std::size_t line_no = 0;
    auto malformed = [&](const std::string& why) {
        return Error(ErrorKind::MalformedRecord, "classifier line " + std::to_string(line_no) + ": " + why);
    };
    auto to_size = [&](std::string_view s) {
        auto v = parse_int<std::size_t>(s);
        if (!v) throw malformed("bad integer '" + std::string(s) + "'");
        return *v;
    };
    auto to_double = [&](std::string_view s) {
        auto v = parse_double(s);
        if (!v) throw malformed("bad number '" + std::string(s) + "'");
        return *v;
    };
    for (auto raw : io::lines(text)) {
        ++line_no;
        if (raw.empty() || raw.front() == '#') continue;
        const auto f = split(raw, '\t');
        if (f.size() < 2) throw malformed("expected key<TAB>value");
        if (f[0] == "fold") {
            if (f.size() != 9) throw malformed("fold line needs 9 fields");
            if (to_size(f[1]) != m.fold_metrics.size()) throw malformed("folds out of order");
            FoldMetrics fm;
            fm.best_epoch = to_size(f[2]);
            fm.best_val_loss = to_double(f[3]);
            fm.pos_weight = to_double(f[4]);
            fm.n_train = to_size(f[5]);
            fm.n_val = to_size(f[6]);
            fm.train_losses = detail::parse_doubles(f[7]);
            fm.val_losses = detail::parse_doubles(f[8]);
            m.fold_metrics.push_back(std::move(fm));
        } else if (f[0] == "weights" || f[0] == "bias") {
            if (f.size() != 3) throw malformed("parameter line needs 3 fields");
            const auto l = to_size(f[1]);
            if (l >= 3) throw malformed("layer index");
            (f[0] == "weights" ? weights : biases)[l] = detail::parse_doubles(f[2]);
        } else {
            header[std::string(f[0])] = std::vector<std::string>(f.begin() + 1, f.end());
        }
    }
    auto get = [&](std::string_view key, std::size_t n = 1) -> const std::vector<std::string>& {
        auto it = header.find(key);
        if (it == header.end() || it->second.size() != n)
            throw Error(ErrorKind::MalformedRecord, "classifier: missing or bad '" + std::string(key) + "'");
        return it->second;
    };
    if (get("format")[0] != "vadsk-classifier/1") throw Error(ErrorKind::MalformedRecord, "classifier: unknown format");
    const auto& act = get("activations", 3);
    if (act[0] != "relu" || act[1] != "relu" || act[2] != "sigmoid")
        throw Error(ErrorKind::MalformedRecord, "classifier: unsupported activations");
    const auto hash = parse_hex64(get("keyword_model_hash")[0]);
    if (!hash) throw Error(ErrorKind::MalformedRecord, "classifier: keyword_model_hash");
    m.keyword_model_hash = *hash;
    const auto& dims = get("dims", 4);
    m.params = ClassifierParams::zeros(to_size(dims[0]), to_size(dims[1]), to_size(dims[2]));
    if (to_size(dims[3]) != 1) throw Error(ErrorKind::MalformedRecord, "classifier: output width must be 1");
    auto& c = m.config;
    c.learning_rate = to_double(get("learning_rate")[0]);
    c.weight_decay = to_double(get("weight_decay")[0]);
    c.max_epochs = to_size(get("max_epochs")[0]);
    c.patience = to_size(get("patience")[0]);
    c.folds = to_size(get("folds")[0]);
    c.batch_size = to_size(get("batch_size")[0]);
    c.hidden1 = m.params.layers[0].out;
    c.hidden2 = m.params.layers[1].out;
    if (const auto& pw = get("pos_weight")[0]; pw != "auto") c.pos_weight = to_double(pw);
    auto seed = parse_int<std::uint64_t>(get("seed")[0]);
    if (!seed) throw Error(ErrorKind::MalformedRecord, "classifier: seed");
    c.seed = *seed;
    m.chosen_fold = to_size(get("chosen_fold")[0]);
    for (std::size_t l = 0; l < 3; ++l) {
        auto& layer = m.params.layers[l];
        if (!weights[l] || !biases[l] || weights[l]->size() != layer.weights.size() ||
            biases[l]->size() != layer.bias.size())
            throw Error(ErrorKind::MalformedRecord, "classifier: layer " + std::to_string(l) + " shape");
        layer.weights = std::move(*weights[l]);
        layer.bias = std::move(*biases[l]);
    }
    if (!m.params.finite()) throw Error(ErrorKind::MalformedRecord, "classifier: non-finite parameter");
    return m;
}

inline TrainedModel load_trained_model(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw Error(ErrorKind::MissingFile, path.string());
    return parse_trained_model(io::read_file(path));
}

/// One row per fold and epoch: fold, epoch, train_loss, val_loss.
inline std::string format_fold_metrics(const TrainedModel& m) {
    std::string out = "fold\tepoch\ttrain_loss\tval_loss\tbest\tchosen\n";
    for (std::size_t f = 0; f < m.fold_metrics.size(); ++f) {
        const auto& fm = m.fold_metrics[f];
        for (std::size_t e = 0; e < fm.val_losses.size(); ++e) {
            out += std::to_string(f) + "\t" + std::to_string(e) + "\t" + format_double(fm.train_losses[e]) + "\t" +
                   format_double(fm.val_losses[e]) + "\t" + (e == fm.best_epoch ? "1" : "0") + "\t" +
                   (f == m.chosen_fold ? "1" : "0") + "\n";
        }
    }
    return out;
}

} // namespace vadsk
