#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rng.hpp"
#include "tape.hpp"
#include "tensor.hpp"
#include "threads.hpp"

namespace ccnn {

// Elementwise and dense primitives. Every op computes the forward result and,
// if a tape is active and an input is tracked, records a closure that
// accumulates (+=) into the input gradients. Shapes are exact; there is no
// implicit broadcasting.

namespace detail {

template <class T>
inline void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    check(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
}

template <class T>
inline Tensor<T> make_out(const Shape& shape, bool track) {
    Tensor<T> out(shape);
    if (track) out.set_tracked(true);
    return out;
}

}  // namespace detail

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape(a, b, "add");
    bool rec = recording<T>({&a, &b});
    Tensor<T> out = detail::make_out<T>(a.shape(), rec);
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) + b.at(i);
    if (rec) {
        Tensor<T> ta = a, tb = b, to = out;
        Tape<T>::active()->record([ta, tb, to]() mutable {
            const auto& g = to.grad();
            if (ta.tracked()) {
                auto& ga = ta.grad();
                for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (tb.tracked()) {
                auto& gb = tb.grad();
                for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            }
        });
    }
    return out;
}

template <class T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape(a, b, "sub");
    bool rec = recording<T>({&a, &b});
    Tensor<T> out = detail::make_out<T>(a.shape(), rec);
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) - b.at(i);
    if (rec) {
        Tensor<T> ta = a, tb = b, to = out;
        Tape<T>::active()->record([ta, tb, to]() mutable {
            const auto& g = to.grad();
            if (ta.tracked()) {
                auto& ga = ta.grad();
                for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (tb.tracked()) {
                auto& gb = tb.grad();
                for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
            }
        });
    }
    return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape(a, b, "mul");
    bool rec = recording<T>({&a, &b});
    Tensor<T> out = detail::make_out<T>(a.shape(), rec);
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) * b.at(i);
    if (rec) {
        Tensor<T> ta = a, tb = b, to = out;
        Tape<T>::active()->record([ta, tb, to]() mutable {
            const auto& g = to.grad();
            if (ta.tracked()) {
                auto& ga = ta.grad();
                for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * tb.at(i);
            }
            if (tb.tracked()) {
                auto& gb = tb.grad();
                for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ta.at(i);
            }
        });
    }
    return out;
}

template <class T>
Tensor<T> scale(const Tensor<T>& a, T c) {
    bool rec = recording<T>({&a});
    Tensor<T> out = detail::make_out<T>(a.shape(), rec);
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) * c;
    if (rec) {
        Tensor<T> ta = a, to = out;
        Tape<T>::active()->record([ta, to, c]() mutable {
            const auto& g = to.grad();
            auto& ga = ta.grad();
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
        });
    }
    return out;
}

template <class T>
Tensor<T> add_scalar(const Tensor<T>& a, T c) {
    bool rec = recording<T>({&a});
    Tensor<T> out = detail::make_out<T>(a.shape(), rec);
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.at(i) = a.at(i) + c;
    if (rec) {
        Tensor<T> ta = a, to = out;
        Tape<T>::active()->record([ta, to]() mutable {
            const auto& g = to.grad();
            auto& ga = ta.grad();
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        });
    }
    return out;
}

template <class T, class Fwd, class Dfwd>
Tensor<T> unary_op(const Tensor<T>& a, Fwd f, Dfwd df) {
    bool rec = recording<T>({&a});
    Tensor<T> out = detail::make_out<T>(a.shape(), rec);
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.at(i) = f(a.at(i));
    if (rec) {
        Tensor<T> ta = a, to = out;
        Tape<T>::active()->record([ta, to, df]() mutable {
            const auto& g = to.grad();
            auto& ga = ta.grad();
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(ta.at(i), to.at(i));
        });
    }
    return out;
}

template <class T>
Tensor<T> exp_op(const Tensor<T>& a) {
    return unary_op(
        a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <class T>
Tensor<T> log_op(const Tensor<T>& a) {
    return unary_op(
        a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <class T>
Tensor<T> sin_op(const Tensor<T>& a) {
    return unary_op(
        a, [](T x) { return std::sin(x); }, [](T x, T) { return std::cos(x); });
}

template <class T>
Tensor<T> square(const Tensor<T>& a) {
    return unary_op(
        a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

// Exact GELU: x * Phi(x) with the Gaussian CDF.
template <class T>
inline T gelu_scalar(T x) {
    return x * T(0.5) * (T(1) + std::erf(x * T(0.7071067811865475244)));
}

template <class T>
inline T gelu_deriv_scalar(T x) {
    T phi_cdf = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865475244)));
    T pdf = T(0.3989422804014326779) * std::exp(T(-0.5) * x * x);
    return phi_cdf + x * pdf;
}

template <class T>
Tensor<T> gelu(const Tensor<T>& a) {
    return unary_op(
        a, [](T x) { return gelu_scalar(x); }, [](T x, T) { return gelu_deriv_scalar(x); });
}

// A [M x K] * B [K x N] -> [M x N]
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    check(a.rank() == 2 && b.rank() == 2 && a.dim(1) == b.dim(0),
          "matmul: incompatible shapes " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
    const int64_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
    bool rec = recording<T>({&a, &b});
    Tensor<T> out = detail::make_out<T>({M, N}, rec);
    const T* pa = a.data();
    const T* pb = b.data();
    T* po = out.data();
    parallel_for(M, [&](int64_t i) {
        for (int64_t k = 0; k < K; ++k) {
            T av = pa[i * K + k];
            const T* row = pb + k * N;
            T* orow = po + i * N;
            for (int64_t j = 0; j < N; ++j) orow[j] += av * row[j];
        }
    });
    if (rec) {
        Tensor<T> ta = a, tb = b, to = out;
        Tape<T>::active()->record([ta, tb, to, M, K, N]() mutable {
            const auto& g = to.grad();
            if (ta.tracked()) {
                auto& ga = ta.grad();
                // dA = dY * B^T
                for (int64_t i = 0; i < M; ++i)
                    for (int64_t j = 0; j < N; ++j) {
                        T gv = g[i * N + j];
                        for (int64_t k = 0; k < K; ++k) ga[i * K + k] += gv * tb.at(k * N + j);
                    }
            }
            if (tb.tracked()) {
                auto& gb = tb.grad();
                // dB = A^T * dY
                for (int64_t i = 0; i < M; ++i)
                    for (int64_t k = 0; k < K; ++k) {
                        T av = ta.at(i * K + k);
                        for (int64_t j = 0; j < N; ++j) gb[k * N + j] += av * g[i * N + j];
                    }
            }
        });
    }
    return out;
}

// X [M x K], W [N x K], b [N] -> X * W^T + b, the layout used by all dense
// layers (rows of W are output units).
template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    check(x.rank() == 2 && w.rank() == 2 && x.dim(1) == w.dim(1),
          "linear: incompatible shapes " + shape_str(x.shape()) + ", W " + shape_str(w.shape()));
    check(b.rank() == 1 && b.dim(0) == w.dim(0),
          "linear: bias shape " + shape_str(b.shape()) + " does not match W " + shape_str(w.shape()));
    const int64_t M = x.dim(0), K = x.dim(1), N = w.dim(0);
    bool rec = recording<T>({&x, &w, &b});
    Tensor<T> out = detail::make_out<T>({M, N}, rec);
    const T* px = x.data();
    const T* pw = w.data();
    const T* pbias = b.data();
    T* po = out.data();
    parallel_for(M, [&](int64_t i) {
        const T* xrow = px + i * K;
        T* orow = po + i * N;
        for (int64_t j = 0; j < N; ++j) {
            const T* wrow = pw + j * K;
            T acc = pbias[j];
            for (int64_t k = 0; k < K; ++k) acc += xrow[k] * wrow[k];
            orow[j] = acc;
        }
    });
    if (rec) {
        Tensor<T> tx = x, tw = w, tbias = b, to = out;
        Tape<T>::active()->record([tx, tw, tbias, to, M, K, N]() mutable {
            const auto& g = to.grad();
            if (tx.tracked()) {
                auto& gx = tx.grad();
                for (int64_t i = 0; i < M; ++i)
                    for (int64_t j = 0; j < N; ++j) {
                        T gv = g[i * N + j];
                        const T* wrow = tw.data() + j * K;
                        for (int64_t k = 0; k < K; ++k) gx[i * K + k] += gv * wrow[k];
                    }
            }
            if (tw.tracked()) {
                auto& gw = tw.grad();
                for (int64_t i = 0; i < M; ++i)
                    for (int64_t j = 0; j < N; ++j) {
                        T gv = g[i * N + j];
                        const T* xrow = tx.data() + i * K;
                        for (int64_t k = 0; k < K; ++k) gw[j * K + k] += gv * xrow[k];
                    }
            }
            if (tbias.tracked()) {
                auto& gb = tbias.grad();
                for (int64_t i = 0; i < M; ++i)
                    for (int64_t j = 0; j < N; ++j) gb[j] += g[i * N + j];
            }
        });
    }
    return out;
}

template <class T>
Tensor<T> sum_all(const Tensor<T>& a) {
    bool rec = recording<T>({&a});
    Tensor<T> out = detail::make_out<T>({1}, rec);
    T acc = T(0);
    for (int64_t i = 0; i < a.numel(); ++i) acc += a.at(i);
    out.at(0) = acc;
    if (rec) {
        Tensor<T> ta = a, to = out;
        Tape<T>::active()->record([ta, to]() mutable {
            T g = to.grad()[0];
            auto& ga = ta.grad();
            for (size_t i = 0; i < ga.size(); ++i) ga[i] += g;
        });
    }
    return out;
}

template <class T>
Tensor<T> mean_all(const Tensor<T>& a) {
    return scale(sum_all(a), T(1) / static_cast<T>(a.numel()));
}

// X [N x C], idx (row per output) -> [len(idx) x C]; backward scatter-adds.
template <class T>
Tensor<T> gather_rows(const Tensor<T>& x, const std::vector<int64_t>& idx) {
    check(x.rank() == 2, "gather_rows: expected 2-d input, got " + shape_str(x.shape()));
    const int64_t C = x.dim(1), N = x.dim(0);
    for (int64_t r : idx)
        check(r >= 0 && r < N, "gather_rows: index " + std::to_string(r) + " out of range");
    bool rec = recording<T>({&x});
    Tensor<T> out = detail::make_out<T>({static_cast<int64_t>(idx.size()), C}, rec);
    for (size_t i = 0; i < idx.size(); ++i)
        for (int64_t c = 0; c < C; ++c) out.at(i * C + c) = x.at(idx[i] * C + c);
    if (rec) {
        Tensor<T> tx = x, to = out;
        Tape<T>::active()->record([tx, to, idx, C]() mutable {
            const auto& g = to.grad();
            auto& gx = tx.grad();
            for (size_t i = 0; i < idx.size(); ++i)
                for (int64_t c = 0; c < C; ++c) gx[idx[i] * C + c] += g[i * C + c];
        });
    }
    return out;
}

// Inverted dropout with a cached mask; identity when !training or p == 0.
template <class T>
Tensor<T> dropout(const Tensor<T>& a, double p, bool training, Rng& rng) {
    check(p >= 0.0 && p < 1.0, "dropout: rate must be in [0,1), got " + std::to_string(p));
    if (!training || p == 0.0) return a;
    bool rec = recording<T>({&a});
    Tensor<T> out = detail::make_out<T>(a.shape(), rec);
    auto mask = std::make_shared<std::vector<T>>(a.numel());
    const T keep_inv = T(1.0 / (1.0 - p));
    for (int64_t i = 0; i < a.numel(); ++i) {
        (*mask)[i] = (rng.uniform() < p) ? T(0) : keep_inv;
        out.at(i) = a.at(i) * (*mask)[i];
    }
    if (rec) {
        Tensor<T> ta = a, to = out;
        Tape<T>::active()->record([ta, to, mask]() mutable {
            const auto& g = to.grad();
            auto& ga = ta.grad();
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (*mask)[i];
        });
    }
    return out;
}

// X [P x C] scaled per row by v [P].
template <class T>
Tensor<T> mul_rows(const Tensor<T>& x, const Tensor<T>& v) {
    check(x.rank() == 2 && v.rank() == 1 && x.dim(0) == v.dim(0),
          "mul_rows: shapes " + shape_str(x.shape()) + " and " + shape_str(v.shape()));
    const int64_t P = x.dim(0), C = x.dim(1);
    bool rec = recording<T>({&x, &v});
    Tensor<T> out = detail::make_out<T>(x.shape(), rec);
    for (int64_t p = 0; p < P; ++p)
        for (int64_t c = 0; c < C; ++c) out.at(p * C + c) = x.at(p * C + c) * v.at(p);
    if (rec) {
        Tensor<T> tx = x, tv = v, to = out;
        Tape<T>::active()->record([tx, tv, to, P, C]() mutable {
            const auto& g = to.grad();
            if (tx.tracked()) {
                auto& gx = tx.grad();
                for (int64_t p = 0; p < P; ++p)
                    for (int64_t c = 0; c < C; ++c) gx[p * C + c] += g[p * C + c] * tv.at(p);
            }
            if (tv.tracked()) {
                auto& gv = tv.grad();
                for (int64_t p = 0; p < P; ++p) {
                    T acc = T(0);
                    for (int64_t c = 0; c < C; ++c) acc += g[p * C + c] * tx.at(p * C + c);
                    gv[p] += acc;
                }
            }
        });
    }
    return out;
}

// Kernel values laid out [K x C] with rows ordered oldest -> most recent
// become conv taps [C x K] where tap u is the offset u steps into the past:
// taps[c][u] = kv[K-1-u][c].
template <class T>
Tensor<T> to_causal_taps(const Tensor<T>& kv) {
    check(kv.rank() == 2, "to_causal_taps: expected [K x C], got " + shape_str(kv.shape()));
    const int64_t K = kv.dim(0), C = kv.dim(1);
    bool rec = recording<T>({&kv});
    Tensor<T> out = detail::make_out<T>({C, K}, rec);
    for (int64_t u = 0; u < K; ++u)
        for (int64_t c = 0; c < C; ++c) out.at(c * K + u) = kv.at((K - 1 - u) * C + c);
    if (rec) {
        Tensor<T> tk = kv, to = out;
        Tape<T>::active()->record([tk, to, K, C]() mutable {
            const auto& g = to.grad();
            auto& gk = tk.grad();
            for (int64_t u = 0; u < K; ++u)
                for (int64_t c = 0; c < C; ++c) gk[(K - 1 - u) * C + c] += g[c * K + u];
        });
    }
    return out;
}

// Plain [K x C] -> [C x K] transpose (centered kernels keep row order).
template <class T>
Tensor<T> transpose2d(const Tensor<T>& x) {
    check(x.rank() == 2, "transpose2d: expected 2-d, got " + shape_str(x.shape()));
    const int64_t R = x.dim(0), C = x.dim(1);
    bool rec = recording<T>({&x});
    Tensor<T> out = detail::make_out<T>({C, R}, rec);
    for (int64_t r = 0; r < R; ++r)
        for (int64_t c = 0; c < C; ++c) out.at(c * R + r) = x.at(r * C + c);
    if (rec) {
        Tensor<T> tx = x, to = out;
        Tape<T>::active()->record([tx, to, R, C]() mutable {
            const auto& g = to.grad();
            auto& gx = tx.grad();
            for (int64_t r = 0; r < R; ++r)
                for (int64_t c = 0; c < C; ++c) gx[r * C + c] += g[c * R + r];
        });
    }
    return out;
}

// Channel-mixing 1x1 convolution: x [B x Cin x S] -> [B x Cout x S] with
// W [Cout x Cin], b [Cout]. S is the flattened spatial extent.
template <class T>
Tensor<T> pointwise_channels(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    check(x.rank() == 3, "pointwise_channels: expected [B x C x S], got " + shape_str(x.shape()));
    const int64_t B = x.dim(0), Cin = x.dim(1), S = x.dim(2);
    check(w.rank() == 2 && w.dim(1) == Cin && b.rank() == 1 && b.dim(0) == w.dim(0),
          "pointwise_channels: weight " + shape_str(w.shape()) + " incompatible with input " +
              shape_str(x.shape()));
    const int64_t Cout = w.dim(0);
    bool rec = recording<T>({&x, &w, &b});
    Tensor<T> out = detail::make_out<T>({B, Cout, S}, rec);
    const T* px = x.data();
    const T* pw = w.data();
    T* po = out.data();
    parallel_for(B, [&](int64_t bi) {
        for (int64_t o = 0; o < Cout; ++o) {
            T* orow = po + (bi * Cout + o) * S;
            T bias = b.at(o);
            for (int64_t s = 0; s < S; ++s) orow[s] = bias;
            for (int64_t c = 0; c < Cin; ++c) {
                T wv = pw[o * Cin + c];
                const T* xrow = px + (bi * Cin + c) * S;
                for (int64_t s = 0; s < S; ++s) orow[s] += wv * xrow[s];
            }
        }
    });
    if (rec) {
        Tensor<T> tx = x, tw = w, tb = b, to = out;
        Tape<T>::active()->record([tx, tw, tb, to, B, Cin, Cout, S]() mutable {
            const auto& g = to.grad();
            if (tx.tracked()) {
                auto& gx = tx.grad();
                for (int64_t bi = 0; bi < B; ++bi)
                    for (int64_t o = 0; o < Cout; ++o) {
                        const T* grow = g.data() + (bi * Cout + o) * S;
                        for (int64_t c = 0; c < Cin; ++c) {
                            T wv = tw.at(o * Cin + c);
                            T* xg = gx.data() + (bi * Cin + c) * S;
                            for (int64_t s = 0; s < S; ++s) xg[s] += wv * grow[s];
                        }
                    }
            }
            if (tw.tracked()) {
                auto& gw = tw.grad();
                for (int64_t bi = 0; bi < B; ++bi)
                    for (int64_t o = 0; o < Cout; ++o) {
                        const T* grow = g.data() + (bi * Cout + o) * S;
                        for (int64_t c = 0; c < Cin; ++c) {
                            const T* xrow = tx.data() + (bi * Cin + c) * S;
                            T acc = T(0);
                            for (int64_t s = 0; s < S; ++s) acc += grow[s] * xrow[s];
                            gw[o * Cin + c] += acc;
                        }
                    }
            }
            if (tb.tracked()) {
                auto& gb = tb.grad();
                for (int64_t bi = 0; bi < B; ++bi)
                    for (int64_t o = 0; o < Cout; ++o) {
                        const T* grow = g.data() + (bi * Cout + o) * S;
                        T acc = T(0);
                        for (int64_t s = 0; s < S; ++s) acc += grow[s];
                        gb[o] += acc;
                    }
            }
        });
    }
    return out;
}

// Mean cross-entropy over rows of `logits` [B x n_classes]; fused softmax
// backward: d logits = (softmax - onehot) / B.
template <class T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int64_t>& labels) {
    check(logits.rank() == 2, "softmax_cross_entropy: logits must be 2-d, got " +
                                  shape_str(logits.shape()));
    const int64_t B = logits.dim(0), C = logits.dim(1);
    check(static_cast<int64_t>(labels.size()) == B,
          "softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch " +
              std::to_string(B));
    for (int64_t y : labels)
        check(y >= 0 && y < C, "softmax_cross_entropy: label " + std::to_string(y) + " out of range");
    bool rec = recording<T>({&logits});
    Tensor<T> out = detail::make_out<T>({1}, rec);
    auto probs = std::make_shared<std::vector<T>>(static_cast<size_t>(B * C));
    T loss = T(0);
    for (int64_t i = 0; i < B; ++i) {
        const T* row = logits.data() + i * C;
        T mx = row[0];
        for (int64_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
        T z = T(0);
        for (int64_t c = 0; c < C; ++c) z += std::exp(row[c] - mx);
        T logz = std::log(z) + mx;
        for (int64_t c = 0; c < C; ++c) (*probs)[i * C + c] = std::exp(row[c] - logz);
        loss += logz - row[labels[i]];
    }
    out.at(0) = loss / static_cast<T>(B);
    if (rec) {
        Tensor<T> tl = logits, to = out;
        Tape<T>::active()->record([tl, to, probs, labels, B, C]() mutable {
            T g = to.grad()[0] / static_cast<T>(B);
            auto& gl = tl.grad();
            for (int64_t i = 0; i < B; ++i)
                for (int64_t c = 0; c < C; ++c) {
                    T delta = (labels[i] == c) ? T(1) : T(0);
                    gl[i * C + c] += g * ((*probs)[i * C + c] - delta);
                }
        });
    }
    return out;
}

}  // namespace ccnn
