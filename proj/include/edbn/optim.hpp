#pragma once

#include "edbn/error.hpp"

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace edbn {

// Linear ramp to base_lr over the first warmup_steps steps, constant after.
struct WarmupSchedule {
    double base_lr = 0.001;
    std::size_t warmup_steps = 1000;

    void validate() const {
        if (base_lr <= 0) throw ValueError("warmup: base_lr must be > 0");
        if (warmup_steps < 1) throw ValueError("warmup: warmup_steps must be >= 1");
    }
};

// Step index starts at 1.
inline double warmup_lr(std::size_t t, const WarmupSchedule& s) {
    if (t >= s.warmup_steps) return s.base_lr;
    return s.base_lr * (static_cast<double>(t) / static_cast<double>(s.warmup_steps));
}

// Adam with bias correction. One state covers a whole parameter list; the
// step counter advances once per adam_step call. Bias-correction powers are
// kept as running products, not pow(), so the update sequence is exactly
// reproducible.
template <class T>
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    std::size_t t = 0;
    double beta1_pow = 1.0;
    double beta2_pow = 1.0;
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;

    static AdamState from_shapes(const std::vector<std::span<T>>& params) {
        AdamState s;
        s.m.reserve(params.size());
        s.v.reserve(params.size());
        for (const auto& p : params) {
            s.m.emplace_back(p.size(), T(0));
            s.v.emplace_back(p.size(), T(0));
        }
        return s;
    }
};

template <class T>
void adam_step(const std::vector<std::span<T>>& params, const std::vector<std::span<const T>>& grads,
               AdamState<T>& state, double lr_t) {
    if (lr_t < 0) throw ValueError("adam_step: negative learning rate");
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ValueError("adam_step: " + std::to_string(params.size()) + " parameter tensors vs " +
                         std::to_string(grads.size()) + " gradients and state of " +
                         std::to_string(state.m.size()));
    state.t += 1;
    state.beta1_pow *= state.beta1;
    state.beta2_pow *= state.beta2;
    const double bc1 = 1.0 - state.beta1_pow;
    const double bc2 = 1.0 - state.beta2_pow;
    const T b1 = static_cast<T>(state.beta1);
    const T b2 = static_cast<T>(state.beta2);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k];
        auto g = grads[k];
        auto& m = state.m[k];
        auto& v = state.v[k];
        if (p.size() != g.size() || p.size() != m.size())
            throw ValueError("adam_step: tensor " + std::to_string(k) + " size mismatch: param " +
                             std::to_string(p.size()) + ", grad " + std::to_string(g.size()) + ", state " +
                             std::to_string(m.size()));
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = b1 * m[i] + (T(1) - b1) * g[i];
            v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
            double m_hat = static_cast<double>(m[i]) / bc1;
            double v_hat = static_cast<double>(v[i]) / bc2;
            p[i] -= static_cast<T>(lr_t * m_hat / (std::sqrt(v_hat) + state.eps));
        }
    }
}

} // namespace edbn
