#pragma once

#include <cmath>
#include <cstring>
#include <vector>

#include "mufia/image.hpp"

namespace mufia {

template <typename T>
struct LossResult {
    T value = T(0);
    std::vector<T> grad;
};

template <typename T>
struct CosineResult {
    T value = T(0);
    std::vector<T> grad_a;
};

/// Cosine similarity a.b / (|a||b|) and its gradient w.r.t. a. Accumulation
/// runs in double. The gradient is evaluated as
///   (b - (a.b / |a|^2) a) / sqrt(|a|^2 |b|^2)
/// so that bitwise-identical inputs yield an exactly zero gradient, which
/// keeps converged fixed points from drifting.
template <typename T>
CosineResult<T> cosine_similarity(const std::vector<T>& a, const std::vector<T>& b) {
    require(a.size() == b.size() && !a.empty(), "cosine_similarity: length mismatch");

    double dot = 0.0, sa = 0.0, sb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = static_cast<double>(a[i]);
        const double y = static_cast<double>(b[i]);
        dot += x * y;
        sa += x * x;
        sb += y * y;
    }
    if (!(std::sqrt(sa) > 1e-12) || !(std::sqrt(sb) > 1e-12))
        throw std::domain_error("cosine_similarity: near-zero norm");

    const double denom = std::sqrt(sa * sb);
    const double ratio = dot / sa;
    CosineResult<T> out;
    out.value = static_cast<T>(dot / denom);
    out.grad_a.resize(a.size());
    const double inv_denom = 1.0 / denom;
    for (std::size_t i = 0; i < a.size(); ++i)
        out.grad_a[i] = static_cast<T>(
            (static_cast<double>(b[i]) - ratio * static_cast<double>(a[i])) * inv_denom);
    return out;
}

template <typename T>
std::vector<T> one_hot(int label, int num_classes) {
    require(label >= 0 && label < num_classes, "one_hot: label out of range");
    std::vector<T> c(num_classes, T(0));
    c[label] = T(1);
    return c;
}

template <typename T>
struct AdversarialLossResult {
    T value = T(0);
    std::vector<T> grad;
    T cos_to_label = T(0);
};

/// Hinged cosine alignment against the one-hot target:
///   max(S_cos(logits, c) + kappa, 0)
/// The gradient is zero once the hinge is inactive (subgradient 0 at the
/// kink), so optimization stops as soon as the margin is met.
template <typename T>
AdversarialLossResult<T> adversarial_loss(const std::vector<T>& logits, int label, T kappa) {
    require(kappa >= T(0) && kappa <= T(1), "adversarial_loss: kappa out of [0,1]");
    const std::vector<T> c = one_hot<T>(label, static_cast<int>(logits.size()));
    const CosineResult<T> cos = cosine_similarity(logits, c);

    AdversarialLossResult<T> out;
    out.cos_to_label = cos.value;
    const T shifted = cos.value + kappa;
    if (shifted > T(0)) {
        out.value = shifted;
        out.grad = cos.grad_a;
    } else {
        out.value = T(0);
        out.grad.assign(logits.size(), T(0));
    }
    return out;
}

/// DCT-domain similarity term 1 - S_cos(adv, original), gradient w.r.t. the
/// adversarial coefficients. Bitwise-equal spectra short-circuit to an exact
/// zero value and gradient.
template <typename T>
LossResult<T> similarity_loss(const std::vector<T>& original_coeffs,
                              const std::vector<T>& adv_coeffs) {
    require(original_coeffs.size() == adv_coeffs.size() && !adv_coeffs.empty(),
            "similarity_loss: length mismatch");

    if (std::memcmp(original_coeffs.data(), adv_coeffs.data(),
                    adv_coeffs.size() * sizeof(T)) == 0) {
        LossResult<T> out;
        out.value = T(0);
        out.grad.assign(adv_coeffs.size(), T(0));
        return out;
    }

    const CosineResult<T> cos = cosine_similarity(adv_coeffs, original_coeffs);
    LossResult<T> out;
    out.value = T(1) - cos.value;
    out.grad.resize(adv_coeffs.size());
    for (std::size_t i = 0; i < out.grad.size(); ++i) out.grad[i] = -cos.grad_a[i];
    return out;
}

template <typename T>
struct LossBreakdown {
    T adv = T(0);
    T sim = T(0);
    T total = T(0);
    T cos_to_label = T(0);
};

template <typename T>
LossBreakdown<T> total_loss(T adv, T sim, T lambda, T cos_to_label = T(0)) {
    require(lambda >= T(0), "total_loss: lambda must be >= 0");
    LossBreakdown<T> out;
    out.adv = adv;
    out.sim = sim;
    out.total = adv + lambda * sim;
    out.cos_to_label = cos_to_label;
    return out;
}

/// Standard softmax cross-entropy for training: value = -log softmax[label],
/// gradient = softmax - e_label. Log-sum-exp uses the max shift.
template <typename T>
LossResult<T> softmax_cross_entropy(const std::vector<T>& logits, int label) {
    require(label >= 0 && label < static_cast<int>(logits.size()),
            "softmax_cross_entropy: label out of range");
    double mx = static_cast<double>(logits[0]);
    for (const T& l : logits) mx = std::max(mx, static_cast<double>(l));
    double sum = 0.0;
    for (const T& l : logits) sum += std::exp(static_cast<double>(l) - mx);
    const double log_sum = std::log(sum);

    LossResult<T> out;
    out.value = static_cast<T>(-(static_cast<double>(logits[label]) - mx - log_sum));
    out.grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double p = std::exp(static_cast<double>(logits[i]) - mx) / sum;
        out.grad[i] = static_cast<T>(p - (static_cast<int>(i) == label ? 1.0 : 0.0));
    }
    return out;
}

/// Untargeted cross-entropy attack objective: value = log softmax[label], so
/// minimizing it drives the true-class probability down.
template <typename T>
LossResult<T> cross_entropy_adversarial_loss(const std::vector<T>& logits, int label) {
    LossResult<T> ce = softmax_cross_entropy(logits, label);
    ce.value = -ce.value;
    for (T& g : ce.grad) g = -g;
    return ce;
}

}  // namespace mufia
