#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "tape.hpp"
#include "tensor.hpp"

namespace ccnn {

struct GradCheckReport {
    double max_rel = 0.0;   // worst relative error across checked coordinates
    double max_abs = 0.0;   // worst |analytic - numeric|
    int64_t checked = 0;
    std::string worst;      // "param[idx]" of the worst coordinate
};

// Central-difference gradient verification in double precision.
//
// `loss_fn` must rebuild the scalar loss from the current parameter values on
// every call (pure in the parameters: fixed inputs, dropout off or reseeded).
// One taped backward supplies analytic gradients; each sampled coordinate is
// then perturbed by ±h and the quotient compared. Coordinates where both
// gradients agree within `atol` count as exact, which keeps rounding noise on
// near-zero gradients from polluting the relative error.
template <class F>
GradCheckReport grad_check(std::vector<std::pair<std::string, Tensor<double>>> params,
                           F&& loss_fn, double h = 1e-5, int64_t max_coords = 40,
                           double atol = 1e-8, uint64_t pick_seed = 7) {
    for (auto& [name, p] : params) {
        p.set_tracked(true);
        p.zero_grad();
    }
    double base;
    {
        TapeScope<double> scope;
        Tensor<double> loss = loss_fn();
        check(loss.numel() == 1, "grad check: loss must be scalar");
        base = loss.at(0);
        scope.backward(loss);
    }
    check(std::isfinite(base), "grad check: loss is not finite");

    GradCheckReport rep;
    Rng pick(pick_seed, "gradcheck");
    for (auto& [name, p] : params) {
        const int64_t n = p.numel();
        std::vector<int64_t> coords;
        if (n <= max_coords)
            for (int64_t i = 0; i < n; ++i) coords.push_back(i);
        else
            for (int64_t i = 0; i < max_coords; ++i) coords.push_back(pick.index(n));
        auto grad_at = [&](int64_t i) { return p.has_grad() ? p.grad()[i] : 0.0; };
        for (int64_t idx : coords) {
            const double save = p.at(idx);
            p.at(idx) = save + h;
            const double lp = loss_fn().at(0);
            p.at(idx) = save - h;
            const double lm = loss_fn().at(0);
            p.at(idx) = save;
            const double fd = (lp - lm) / (2.0 * h);
            const double a = grad_at(idx);
            const double abs_err = std::abs(a - fd);
            const double rel = abs_err <= atol ? 0.0 : abs_err / std::max(std::abs(a), std::abs(fd));
            ++rep.checked;
            if (abs_err > rep.max_abs) rep.max_abs = abs_err;
            if (rel > rep.max_rel) {
                rep.max_rel = rel;
                rep.worst = name + "[" + std::to_string(idx) + "]";
            }
        }
    }
    return rep;
}

}  // namespace ccnn
