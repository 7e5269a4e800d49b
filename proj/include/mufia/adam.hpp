#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mufia/image.hpp"

namespace mufia {

template <typename T>
struct AdamState {
    std::vector<T> m;
    std::vector<T> v;
    std::int64_t step = 0;

    static AdamState zeros(std::size_t n) {
        AdamState s;
        s.m.assign(n, T(0));
        s.v.assign(n, T(0));
        return s;
    }
};

/// Standard bias-corrected Adam update, in place.
template <typename T>
void adam_step(std::vector<T>& param, const std::vector<T>& grad, AdamState<T>& state, T lr,
               T beta1, T beta2, T eps) {
    require(param.size() == grad.size() && param.size() == state.m.size(),
            "adam_step: shape mismatch");
    state.step += 1;
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1),
                                                 static_cast<double>(state.step)));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2),
                                                 static_cast<double>(state.step)));
    for (std::size_t i = 0; i < param.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (T(1) - beta1) * grad[i];
        state.v[i] = beta2 * state.v[i] + (T(1) - beta2) * grad[i] * grad[i];
        const T m_hat = state.m[i] / bc1;
        const T v_hat = state.v[i] / bc2;
        param[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

}  // namespace mufia
