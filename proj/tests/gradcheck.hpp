#pragma once

// Finite-difference gradient check shared by the unit and acceptance tests.
// Numerical derivatives come from the oracle network, so the check does not
// reuse the library forward pass.

#include "oracles.hpp"

#include "vadsk/classifier.hpp"

#include <algorithm>
#include <cmath>

namespace vadsk::testing {

inline oracle::Net to_net(const ClassifierParams& p) {
    oracle::Net net;
    for (const auto& layer : p.layers) {
        std::vector<std::vector<double>> w(layer.out, std::vector<double>(layer.in));
        for (std::size_t r = 0; r < layer.out; ++r)
            for (std::size_t c = 0; c < layer.in; ++c) w[r][c] = layer.w(r, c);
        net.W.push_back(std::move(w));
        net.b.push_back(layer.bias);
    }
    return net;
}

struct GradCase {
    ClassifierParams params;
    std::vector<Example> batch;
    double pos_weight = 1.0;
};

/// Smallest |pre-activation| of any hidden unit over the batch.
inline double kink_margin(const GradCase& c) {
    const auto net = to_net(c.params);
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& ex : c.batch) oracle::net_logit(net, ex.x, &margin);
    return margin;
}

/// Random network with k, h1, h2 in [1, max_dim] and a small random batch.
/// Draws whose hidden pre-activations come within `min_margin` of the ReLU
/// kink are redrawn, since finite differences are meaningless there.
inline GradCase draw_grad_case(Rng& rng, std::size_t max_dim = 8, double min_margin = 1e-3) {
    for (;;) {
        GradCase c;
        const auto k = 1 + rng.below(max_dim);
        const auto h1 = 1 + rng.below(max_dim);
        const auto h2 = 1 + rng.below(max_dim);
        c.params = ClassifierParams::glorot(k, h1, h2, rng);
        for (auto& layer : c.params.layers)
            for (double& b : layer.bias) b = rng.uniform(-0.5, 0.5);
        const auto n = 1 + rng.below(8);
        for (std::size_t i = 0; i < n; ++i) {
            Example ex;
            ex.x.resize(k);
            for (double& v : ex.x) v = rng.below(3) == 0 ? 0.0 : rng.uniform(-1.0, 1.0);
            ex.label = rng.below(2) ? Label::Anomalous : Label::Normal;
            c.batch.push_back(std::move(ex));
        }
        c.pos_weight = rng.uniform(0.25, 5.0);
        if (kink_margin(c) >= min_margin) return c;
    }
}

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over all
/// parameters, using central differences with step `delta`.
inline double max_relative_gradient_error(const GradCase& c, double delta = 1e-5) {
    Gradients g = backward(c.params, c.batch, c.pos_weight);
    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    for (const auto& ex : c.batch) {
        xs.push_back(ex.x);
        ys.push_back(ex.label == Label::Anomalous);
    }
    double worst = 0.0;
    auto check = [&](auto select) {
        ClassifierParams p = c.params;
        double& slot = select(p);
        const double original = slot;
        slot = original + delta;
        const double up = oracle::net_loss(to_net(p), xs, ys, c.pos_weight);
        slot = original - delta;
        const double down = oracle::net_loss(to_net(p), xs, ys, c.pos_weight);
        const double numeric = (up - down) / (2.0 * delta);
        const double analytic = select(g);
        const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, rel);
    };
    for (std::size_t l = 0; l < 3; ++l) {
        for (std::size_t i = 0; i < c.params.layers[l].weights.size(); ++i)
            check([l, i](ClassifierParams& p) -> double& { return p.layers[l].weights[i]; });
        for (std::size_t i = 0; i < c.params.layers[l].bias.size(); ++i)
            check([l, i](ClassifierParams& p) -> double& { return p.layers[l].bias[i]; });
    }
    return worst;
}

} // namespace vadsk::testing
