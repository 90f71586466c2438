#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "kernel_net.hpp"
#include "ops.hpp"
#include "rng.hpp"
#include "tape.hpp"
#include "tensor.hpp"

namespace ccnn {

enum class Mode { Train, Eval };

// Batch normalization over [B x C x S] (statistics per channel across batch
// and spatial positions). Running statistics live in plain tensors updated
// in-place during training; eval uses them. Fresh running stats (mean 0,
// var 1) make eval-mode normalization the identity up to eps.
template <class T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                     double momentum, double eps) {
    check(x.rank() == 3, "batch_norm: expected [B x C x S], got " + shape_str(x.shape()));
    const int64_t B = x.dim(0), C = x.dim(1), S = x.dim(2);
    check(gamma.shape() == Shape({C}) && beta.shape() == Shape({C}),
          "batch_norm: scale/shift must have shape [" + std::to_string(C) + "]");
    const int64_t n = B * S;
    auto mean = std::make_shared<std::vector<T>>(static_cast<size_t>(C));
    auto ivar = std::make_shared<std::vector<T>>(static_cast<size_t>(C));
    if (training) {
        check(n > 1, "batch_norm: need more than one value per channel in training mode");
        for (int64_t c = 0; c < C; ++c) {
            double m = 0;
            for (int64_t b = 0; b < B; ++b)
                for (int64_t s = 0; s < S; ++s) m += x.at((b * C + c) * S + s);
            m /= n;
            double v = 0;
            for (int64_t b = 0; b < B; ++b)
                for (int64_t s = 0; s < S; ++s) {
                    double d = x.at((b * C + c) * S + s) - m;
                    v += d * d;
                }
            v /= n;  // biased, used for normalization
            (*mean)[c] = static_cast<T>(m);
            (*ivar)[c] = static_cast<T>(1.0 / std::sqrt(v + eps));
            double unbiased = v * static_cast<double>(n) / static_cast<double>(n - 1);
            running_mean.at(c) =
                static_cast<T>((1.0 - momentum) * running_mean.at(c) + momentum * m);
            running_var.at(c) =
                static_cast<T>((1.0 - momentum) * running_var.at(c) + momentum * unbiased);
        }
    } else {
        for (int64_t c = 0; c < C; ++c) {
            (*mean)[c] = running_mean.at(c);
            (*ivar)[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(running_var.at(c)) + eps));
        }
    }
    bool rec = recording<T>({&x, &gamma, &beta});
    Tensor<T> out = detail::make_out<T>(x.shape(), rec);
    for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c) {
            T m = (*mean)[c], iv = (*ivar)[c], ga = gamma.at(c), be = beta.at(c);
            const T* xrow = x.data() + (b * C + c) * S;
            T* orow = out.data() + (b * C + c) * S;
            for (int64_t s = 0; s < S; ++s) orow[s] = ga * (xrow[s] - m) * iv + be;
        }
    if (rec) {
        Tensor<T> tx = x, tg = gamma, tb = beta, to = out;
        bool train_stats = training;
        Tape<T>::active()->record([tx, tg, tb, to, mean, ivar, B, C, S, n, train_stats]() mutable {
            const auto& g = to.grad();
            for (int64_t c = 0; c < C; ++c) {
                T m = (*mean)[c], iv = (*ivar)[c], ga = tg.at(c);
                double sum_g = 0, sum_gx = 0;
                for (int64_t b = 0; b < B; ++b) {
                    const T* grow = g.data() + (b * C + c) * S;
                    const T* xrow = tx.data() + (b * C + c) * S;
                    for (int64_t s = 0; s < S; ++s) {
                        sum_g += grow[s];
                        sum_gx += grow[s] * (xrow[s] - m) * iv;
                    }
                }
                if (tg.tracked()) tg.grad()[c] += static_cast<T>(sum_gx);
                if (tb.tracked()) tb.grad()[c] += static_cast<T>(sum_g);
                if (tx.tracked()) {
                    auto& gx = tx.grad();
                    for (int64_t b = 0; b < B; ++b) {
                        const T* grow = g.data() + (b * C + c) * S;
                        const T* xrow = tx.data() + (b * C + c) * S;
                        T* xg = gx.data() + (b * C + c) * S;
                        if (train_stats) {
                            for (int64_t s = 0; s < S; ++s) {
                                double xhat = (xrow[s] - m) * iv;
                                xg[s] += static_cast<T>(
                                    ga * iv * (grow[s] - sum_g / n - xhat * sum_gx / n));
                            }
                        } else {
                            // running statistics are constants
                            for (int64_t s = 0; s < S; ++s) xg[s] += ga * iv * grow[s];
                        }
                    }
                }
            }
        });
    }
    return out;
}

// Layer normalization across channels for every (batch, position) column of
// [B x C x P]; the per-point normalizer used by point-cloud models.
template <class T>
Tensor<T> layer_norm_channels(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                              double eps) {
    check(x.rank() == 3, "layer_norm: expected [B x C x P], got " + shape_str(x.shape()));
    const int64_t B = x.dim(0), C = x.dim(1), P = x.dim(2);
    check(gamma.shape() == Shape({C}) && beta.shape() == Shape({C}),
          "layer_norm: scale/shift must have shape [" + std::to_string(C) + "]");
    check(C > 1, "layer_norm: needs more than one channel");
    auto mean = std::make_shared<std::vector<T>>(static_cast<size_t>(B * P));
    auto ivar = std::make_shared<std::vector<T>>(static_cast<size_t>(B * P));
    for (int64_t b = 0; b < B; ++b)
        for (int64_t p = 0; p < P; ++p) {
            double m = 0;
            for (int64_t c = 0; c < C; ++c) m += x.at((b * C + c) * P + p);
            m /= C;
            double v = 0;
            for (int64_t c = 0; c < C; ++c) {
                double d = x.at((b * C + c) * P + p) - m;
                v += d * d;
            }
            v /= C;
            (*mean)[b * P + p] = static_cast<T>(m);
            (*ivar)[b * P + p] = static_cast<T>(1.0 / std::sqrt(v + eps));
        }
    bool rec = recording<T>({&x, &gamma, &beta});
    Tensor<T> out = detail::make_out<T>(x.shape(), rec);
    for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t p = 0; p < P; ++p) {
                T m = (*mean)[b * P + p], iv = (*ivar)[b * P + p];
                out.at((b * C + c) * P + p) =
                    gamma.at(c) * (x.at((b * C + c) * P + p) - m) * iv + beta.at(c);
            }
    if (rec) {
        Tensor<T> tx = x, tg = gamma, tb = beta, to = out;
        Tape<T>::active()->record([tx, tg, tb, to, mean, ivar, B, C, P]() mutable {
            const auto& g = to.grad();
            for (int64_t b = 0; b < B; ++b)
                for (int64_t p = 0; p < P; ++p) {
                    T m = (*mean)[b * P + p], iv = (*ivar)[b * P + p];
                    double sum_g = 0, sum_gx = 0;
                    for (int64_t c = 0; c < C; ++c) {
                        T gv = g[(b * C + c) * P + p] * tg.at(c);
                        T xhat = (tx.at((b * C + c) * P + p) - m) * iv;
                        sum_g += gv;
                        sum_gx += gv * xhat;
                    }
                    for (int64_t c = 0; c < C; ++c) {
                        T gout = g[(b * C + c) * P + p];
                        T xhat = (tx.at((b * C + c) * P + p) - m) * iv;
                        if (tg.tracked()) tg.grad()[c] += gout * xhat;
                        if (tb.tracked()) tb.grad()[c] += gout;
                        if (tx.tracked())
                            tx.grad()[(b * C + c) * P + p] += static_cast<T>(
                                iv * (gout * tg.at(c) - sum_g / C - xhat * sum_gx / C));
                    }
                }
        });
    }
    return out;
}

// Mean over all spatial positions: [B x C x S] -> [B x C].
template <class T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
    check(x.rank() == 3, "global_avg_pool: expected [B x C x S], got " + shape_str(x.shape()));
    const int64_t B = x.dim(0), C = x.dim(1), S = x.dim(2);
    check(S >= 1, "global_avg_pool: empty spatial extent");
    bool rec = recording<T>({&x});
    Tensor<T> out = detail::make_out<T>({B, C}, rec);
    for (int64_t bc = 0; bc < B * C; ++bc) {
        T acc = T(0);
        const T* row = x.data() + bc * S;
        for (int64_t s = 0; s < S; ++s) acc += row[s];
        out.at(bc) = acc / static_cast<T>(S);
    }
    if (rec) {
        Tensor<T> tx = x, to = out;
        Tape<T>::active()->record([tx, to, B, C, S]() mutable {
            const auto& g = to.grad();
            auto& gx = tx.grad();
            for (int64_t bc = 0; bc < B * C; ++bc) {
                T gv = g[bc] / static_cast<T>(S);
                T* row = gx.data() + bc * S;
                for (int64_t s = 0; s < S; ++s) row[s] += gv;
            }
        });
    }
    return out;
}

// Mean over unmasked points: [B x C x P] with mask [B x P] (1 keep, 0 drop).
template <class T>
Tensor<T> masked_mean_pool(const Tensor<T>& x, const Tensor<T>& mask) {
    check(x.rank() == 3 && mask.rank() == 2 && mask.dim(0) == x.dim(0) &&
              mask.dim(1) == x.dim(2),
          "masked_mean_pool: mask " + shape_str(mask.shape()) + " does not match input " +
              shape_str(x.shape()));
    const int64_t B = x.dim(0), C = x.dim(1), P = x.dim(2);
    std::vector<T> counts(static_cast<size_t>(B));
    for (int64_t b = 0; b < B; ++b) {
        T cnt = T(0);
        for (int64_t p = 0; p < P; ++p) cnt += mask.at(b * P + p);
        check(cnt > T(0), "masked_mean_pool: sample " + std::to_string(b) + " has no valid points");
        counts[b] = cnt;
    }
    bool rec = recording<T>({&x});
    Tensor<T> out = detail::make_out<T>({B, C}, rec);
    for (int64_t b = 0; b < B; ++b)
        for (int64_t c = 0; c < C; ++c) {
            T acc = T(0);
            const T* row = x.data() + (b * C + c) * P;
            const T* mrow = mask.data() + b * P;
            for (int64_t p = 0; p < P; ++p) acc += row[p] * mrow[p];
            out.at(b * C + c) = acc / counts[b];
        }
    if (rec) {
        Tensor<T> tx = x, tm = mask, to = out;
        Tape<T>::active()->record([tx, tm, to, counts, B, C, P]() mutable {
            const auto& g = to.grad();
            auto& gx = tx.grad();
            for (int64_t b = 0; b < B; ++b)
                for (int64_t c = 0; c < C; ++c) {
                    T gv = g[b * C + c] / counts[b];
                    T* row = gx.data() + (b * C + c) * P;
                    const T* mrow = tm.data() + b * P;
                    for (int64_t p = 0; p < P; ++p) row[p] += gv * mrow[p];
                }
        });
    }
    return out;
}

// --- parameter-holding wrappers ------------------------------------------

template <class T>
struct BatchNorm {
    Tensor<T> gamma, beta, running_mean, running_var;
    double momentum = 0.1, eps = 1e-5;

    BatchNorm() = default;
    explicit BatchNorm(int64_t channels)
        : gamma({channels}, T(1)), beta({channels}, T(0)), running_mean({channels}, T(0)),
          running_var({channels}, T(1)) {
        gamma.set_tracked(true);
        beta.set_tracked(true);
    }

    Tensor<T> forward(const Tensor<T>& x, Mode mode) {
        return batch_norm(x, gamma, beta, running_mean, running_var, mode == Mode::Train,
                          momentum, eps);
    }

    void visit_params(const std::string& prefix, const ParamVisitor<T>& fn) {
        fn(prefix + ".gamma", gamma, false);
        fn(prefix + ".beta", beta, false);
    }
    // running stats are serialized as buffers, not optimized
    void visit_buffers(const std::string& prefix,
                       const std::function<void(const std::string&, Tensor<T>&)>& fn) {
        fn(prefix + ".running_mean", running_mean);
        fn(prefix + ".running_var", running_var);
    }
};

template <class T>
struct LayerNorm {
    Tensor<T> gamma, beta;
    double eps = 1e-5;

    LayerNorm() = default;
    explicit LayerNorm(int64_t channels) : gamma({channels}, T(1)), beta({channels}, T(0)) {
        gamma.set_tracked(true);
        beta.set_tracked(true);
    }

    Tensor<T> forward(const Tensor<T>& x, Mode) {
        return layer_norm_channels(x, gamma, beta, eps);
    }

    void visit_params(const std::string& prefix, const ParamVisitor<T>& fn) {
        fn(prefix + ".gamma", gamma, false);
        fn(prefix + ".beta", beta, false);
    }
    void visit_buffers(const std::string&,
                       const std::function<void(const std::string&, Tensor<T>&)>&) {}
};

template <class T>
struct Dense {
    Tensor<T> w, b;

    Dense() = default;
    Dense(int64_t out_dim, int64_t in_dim, double w_std, Rng& rng) : w({out_dim, in_dim}), b({out_dim}) {
        for (int64_t i = 0; i < w.numel(); ++i) w.at(i) = static_cast<T>(rng.normal(0.0, w_std));
        w.set_tracked(true);
        b.set_tracked(true);
    }

    void visit_params(const std::string& prefix, const ParamVisitor<T>& fn) {
        fn(prefix + ".w", w, false);
        fn(prefix + ".b", b, false);
    }
};

}  // namespace ccnn
