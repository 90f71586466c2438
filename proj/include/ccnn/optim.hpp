#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ops.hpp"
#include "tensor.hpp"

namespace ccnn {

// Linear warmup to `base_lr` over `warmup` epochs, then cosine annealing to
// zero across the remaining epochs. `epoch` is fractional (step granularity).
inline double lr_at(double epoch, double total_epochs, double warmup, double base_lr) {
    check(total_epochs > 0, "lr schedule: total epochs must be positive");
    if (warmup > 0 && epoch < warmup) return base_lr * epoch / warmup;
    double span = total_epochs - warmup;
    if (span <= 0) return base_lr;
    double t = (epoch - warmup) / span;
    if (t > 1) t = 1;
    return 0.5 * base_lr * (1.0 + std::cos(3.141592653589793238462643383279 * t));
}

// AdamW with decoupled weight decay. Decay is applied to the parameter
// before the adaptive update and only to matrix-shaped non-kernel-generator
// parameters: kernel generators are regularized through the generated-kernel
// L2 term instead, and biases/normalization parameters are conventionally
// exempt. Moment estimates are bias-corrected; eps sits outside the sqrt.
template <class T>
class AdamW {
public:
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double weight_decay = 0.0;

    template <class Net>
    explicit AdamW(Net& net, double wd = 0.0) : weight_decay(wd) {
        net.visit_params([&](const std::string&, Tensor<T>& p, bool is_kernel) {
            slots_.push_back(Slot{p, std::vector<T>(p.numel(), T(0)),
                                  std::vector<T>(p.numel(), T(0)),
                                  !is_kernel && p.rank() >= 2});
        });
    }

    void zero_grad() {
        for (auto& s : slots_) s.param.zero_grad();
    }

    void step(double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
        for (auto& s : slots_) {
            if (!s.param.has_grad()) continue;
            const auto& g = s.param.grad();
            T* p = s.param.data();
            const double decay = (s.decay && weight_decay > 0) ? 1.0 - lr * weight_decay : 1.0;
            for (size_t i = 0; i < g.size(); ++i) {
                if (decay != 1.0) p[i] = static_cast<T>(p[i] * decay);
                double m = beta1 * s.m[i] + (1.0 - beta1) * g[i];
                double v = beta2 * s.v[i] + (1.0 - beta2) * static_cast<double>(g[i]) * g[i];
                s.m[i] = static_cast<T>(m);
                s.v[i] = static_cast<T>(v);
                p[i] -= static_cast<T>(lr * (m / bc1) / (std::sqrt(v / bc2) + eps));
            }
        }
    }

    int64_t steps_taken() const { return t_; }

private:
    struct Slot {
        Tensor<T> param;
        std::vector<T> m, v;
        bool decay;
    };
    std::vector<Slot> slots_;
    int64_t t_ = 0;
};

// L2 penalty on the kernels a model generated during its last forward pass:
//   strength * 1/2 * sum_layers ||kernel_l||^2
// Differentiable through the kernel generators (this is the regularizer on
// sampled kernel values, not on generator parameters).
template <class T>
Tensor<T> kernel_l2_penalty(const std::vector<Tensor<T>>& kernels, T strength) {
    check(!kernels.empty(), "kernel penalty: no kernels collected");
    Tensor<T> acc = sum_all(square(kernels[0]));
    for (size_t i = 1; i < kernels.size(); ++i) acc = add(acc, sum_all(square(kernels[i])));
    return scale(acc, strength / T(2));
}

}  // namespace ccnn
