// Shared finite-difference oracle for the end-to-end loss gradient with
// respect to the filter bank. Used by the attack unit tests and the
// acceptance suite. The analytic side composes the library's backward pieces
// exactly the way the attack driver does; the oracle side evaluates the loss
// twice per filter entry.
#pragma once

#include <cmath>
#include <random>

#include "mufia/attack.hpp"
#include "mufia/rng.hpp"

namespace e2e {

struct Instance {
    mufia::ClassifierWeights<double> weights;
    mufia::BasicImage<double> image;
    mufia::FilterBank<double> q;
    int label = 0;
    double kappa = 0.99;
    double lambda = 0.0;
};

inline double loss(const Instance& ins, const mufia::FilterBank<double>& q) {
    mufia::PipelineCache<double> cache;
    const auto adv = mufia::forward_pipeline(q, ins.image, &cache);
    const auto logits = mufia::forward(ins.weights, adv);
    const auto a = mufia::adversarial_loss(logits, ins.label, ins.kappa);
    const auto s = mufia::similarity_loss(cache.orig_dct.coeffs, cache.filtered_dct.coeffs);
    return a.value + ins.lambda * s.value;
}

inline std::vector<double> analytic_gradient(const Instance& ins) {
    mufia::PipelineCache<double> cache;
    const auto adv = mufia::forward_pipeline(ins.q, ins.image, &cache);
    mufia::ForwardCache<double> fcache;
    const auto logits = mufia::forward(ins.weights, adv, &fcache);
    const auto a = mufia::adversarial_loss(logits, ins.label, ins.kappa);
    const auto grad_img = mufia::input_gradient(ins.weights, fcache, a.grad);
    std::vector<double> grad = mufia::pipeline_gradient(cache, grad_img);
    if (ins.lambda > 0.0) {
        const auto s = mufia::similarity_loss(cache.orig_dct.coeffs, cache.filtered_dct.coeffs);
        mufia::BlockGrid<double> upstream = cache.filtered_dct;
        upstream.coeffs = s.grad;
        const auto gs = mufia::filter_bank_gradient(cache.orig_dct, upstream);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += ins.lambda * gs[i];
    }
    return grad;
}

inline std::vector<double> fd_gradient(const Instance& ins, double step = 1e-4) {
    std::vector<double> g(ins.q.q.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        mufia::FilterBank<double> hi = ins.q, lo = ins.q;
        hi.q[i] += step;
        lo.q[i] -= step;
        g[i] = (loss(ins, hi) - loss(ins, lo)) / (2 * step);
    }
    return g;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0.0, den = 1e-10;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max({den, std::abs(a[i]), std::abs(b[i])});
    }
    return num / den;
}

// Central differences sit badly on the ReLU, hinge and clamp kinks, so
// instances are drawn until the base point is safely away from all three.
inline Instance make_instance(int side, int block_size, double lambda, std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        std::mt19937_64 rng(seed * 1000003ull + attempt);
        Instance ins;
        mufia::NetworkSpec spec;
        spec.input_side = side;
        spec.num_classes = 3;
        ins.weights = mufia::init_weights<double>(spec, rng());
        ins.image = mufia::BasicImage<double>(side, side);
        for (double& v : ins.image.pixels) v = mufia::uniform_range(rng, 0.2, 0.8);
        ins.q = mufia::FilterBank<double>::ones(block_size);
        for (double& q : ins.q.q) q = mufia::uniform_range(rng, 0.8, 1.2);
        ins.label = static_cast<int>(mufia::uniform_index(rng, 3));
        ins.lambda = lambda;

        mufia::PipelineCache<double> cache;
        const auto adv = mufia::forward_pipeline(ins.q, ins.image, &cache);
        bool clamped = false;
        for (double v : adv.pixels)
            if (v < 1e-3 || v > 1.0 - 1e-3) clamped = true;
        if (clamped) continue;

        mufia::ForwardCache<double> fcache;
        const auto logits = mufia::forward(ins.weights, adv, &fcache);
        double min_z = 1e300;
        for (const auto* z : {&fcache.z1, &fcache.z2, &fcache.z3})
            for (double v : *z) min_z = std::min(min_z, std::abs(v));
        if (min_z < 1e-3) continue;

        const auto a = mufia::adversarial_loss(logits, ins.label, ins.kappa);
        if (a.cos_to_label + ins.kappa < 1e-3) continue;  // keep the hinge active

        return ins;
    }
}

}  // namespace e2e
