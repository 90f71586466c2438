#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "fft.hpp"
#include "ops.hpp"
#include "tape.hpp"
#include "tensor.hpp"
#include "threads.hpp"

namespace ccnn {

enum class ConvBackend { Auto, Direct, Fft };

// Relative-coordinate grids for kernel generators. Each axis spans [-1, 1]
// with n evenly spaced points; a single point degenerates to 0. For causal
// 1-d kernels row j corresponds to the offset (n-1-j) steps into the past,
// i.e. the most recent offset sits at +1.

inline std::vector<double> coord_axis(int64_t n) {
    check(n >= 1, "coord_axis: need at least one point");
    std::vector<double> v(static_cast<size_t>(n));
    if (n == 1) {
        v[0] = 0.0;
        return v;
    }
    for (int64_t i = 0; i < n; ++i)
        v[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

template <class T>
Tensor<T> relative_coords_1d(int64_t k) {
    auto ax = coord_axis(k);
    Tensor<T> out({k, 1});
    for (int64_t i = 0; i < k; ++i) out.at(i) = static_cast<T>(ax[i]);
    return out;
}

// Row-major D-dimensional lattice with n points per axis: [n^D x D].
template <class T>
Tensor<T> relative_coords_grid(int dims, int64_t n) {
    check(dims >= 1, "coords grid: dims must be positive");
    auto ax = coord_axis(n);
    int64_t rows = 1;
    for (int d = 0; d < dims; ++d) rows *= n;
    Tensor<T> out({rows, static_cast<int64_t>(dims)});
    for (int64_t r = 0; r < rows; ++r) {
        int64_t rem = r;
        for (int d = dims - 1; d >= 0; --d) {
            out.at(r * dims + d) = static_cast<T>(ax[rem % n]);
            rem /= n;
        }
    }
    return out;
}

// Row-major (y, x) grid: row i*kx + j = (axis_y[i], axis_x[j]).
template <class T>
Tensor<T> relative_coords_2d(int64_t ky, int64_t kx) {
    auto ay = coord_axis(ky), ax = coord_axis(kx);
    Tensor<T> out({ky * kx, 2});
    for (int64_t i = 0; i < ky; ++i)
        for (int64_t j = 0; j < kx; ++j) {
            out.at((i * kx + j) * 2) = static_cast<T>(ay[i]);
            out.at((i * kx + j) * 2 + 1) = static_cast<T>(ax[j]);
        }
    return out;
}

// --- depthwise 1-d convolution -------------------------------------------
//
// Shared semantics for both backends:
//   y[b,c,t] = sum_u taps[c,u] * f[b,c,t+off-u]    (zero outside [0,L))
// off = 0 gives the causal form (tap u reaches u steps into the past);
// off = (K-1)/2 gives the centered form.

template <class T>
Tensor<T> conv1d_depthwise_direct(const Tensor<T>& f, const Tensor<T>& taps, int64_t off) {
    check(f.rank() == 3, "conv1d: input must be [B x C x L], got " + shape_str(f.shape()));
    check(taps.rank() == 2 && taps.dim(0) == f.dim(1),
          "conv1d: taps " + shape_str(taps.shape()) + " do not match input channels " +
              std::to_string(f.dim(1)));
    const int64_t B = f.dim(0), C = f.dim(1), L = f.dim(2), K = taps.dim(1);
    bool rec = recording<T>({&f, &taps});
    Tensor<T> out = detail::make_out<T>({B, C, L}, rec);
    const T* pf = f.data();
    const T* pk = taps.data();
    T* po = out.data();
    parallel_for(B * C, [&](int64_t bc) {
        const int64_t c = bc % C;
        const T* frow = pf + bc * L;
        const T* krow = pk + c * K;
        T* orow = po + bc * L;
        for (int64_t t = 0; t < L; ++t) {
            int64_t ulo = std::max<int64_t>(0, t + off - (L - 1));
            int64_t uhi = std::min<int64_t>(K - 1, t + off);
            T acc = T(0);
            for (int64_t u = ulo; u <= uhi; ++u) acc += krow[u] * frow[t + off - u];
            orow[t] = acc;
        }
    });
    if (rec) {
        Tensor<T> tf = f, tk = taps, to = out;
        Tape<T>::active()->record([tf, tk, to, B, C, L, K, off]() mutable {
            const auto& g = to.grad();
            if (tf.tracked()) {
                auto& gf = tf.grad();
                parallel_for(B * C, [&](int64_t bc) {
                    const int64_t c = bc % C;
                    const T* grow = g.data() + bc * L;
                    const T* krow = tk.data() + c * K;
                    T* frow = gf.data() + bc * L;
                    // df[s] = sum_u taps[u] * g[s-off+u]
                    for (int64_t s = 0; s < L; ++s) {
                        int64_t ulo = std::max<int64_t>(0, off - s);
                        int64_t uhi = std::min<int64_t>(K - 1, L - 1 - s + off);
                        T acc = T(0);
                        for (int64_t u = ulo; u <= uhi; ++u) acc += krow[u] * grow[s - off + u];
                        frow[s] += acc;
                    }
                });
            }
            if (tk.tracked()) {
                auto& gk = tk.grad();
                parallel_for(C, [&](int64_t c) {
                    for (int64_t b = 0; b < B; ++b) {
                        const T* grow = g.data() + (b * C + c) * L;
                        const T* frow = tf.data() + (b * C + c) * L;
                        for (int64_t u = 0; u < K; ++u) {
                            int64_t tlo = std::max<int64_t>(0, u - off);
                            int64_t thi = std::min<int64_t>(L - 1, L - 1 + u - off);
                            T acc = T(0);
                            for (int64_t t = tlo; t <= thi; ++t) {
                                int64_t s = t + off - u;
                                if (s >= 0 && s < L) acc += grow[t] * frow[s];
                            }
                            gk[c * K + u] += acc;
                        }
                    }
                });
            }
        });
    }
    return out;
}

// Circular-padding variant (indices wrap modulo L). Exists to state the
// translation-equivariance property exactly: with wraparound, shifting the
// input then convolving equals convolving then shifting, bitwise.
template <class T>
Tensor<T> conv1d_depthwise_circular(const Tensor<T>& f, const Tensor<T>& taps, int64_t off) {
    check(f.rank() == 3 && taps.rank() == 2 && taps.dim(0) == f.dim(1),
          "conv1d_circular: bad shapes " + shape_str(f.shape()) + " / " + shape_str(taps.shape()));
    const int64_t B = f.dim(0), C = f.dim(1), L = f.dim(2), K = taps.dim(1);
    const auto wrap = [L](int64_t i) { return ((i % L) + L) % L; };
    bool rec = recording<T>({&f, &taps});
    Tensor<T> out = detail::make_out<T>({B, C, L}, rec);
    parallel_for(B * C, [&](int64_t bc) {
        const int64_t c = bc % C;
        const T* frow = f.data() + bc * L;
        const T* krow = taps.data() + c * K;
        T* orow = out.data() + bc * L;
        for (int64_t t = 0; t < L; ++t) {
            T acc = T(0);
            for (int64_t u = 0; u < K; ++u) acc += krow[u] * frow[wrap(t + off - u)];
            orow[t] = acc;
        }
    });
    if (rec) {
        Tensor<T> tf = f, tk = taps, to = out;
        Tape<T>::active()->record([tf, tk, to, B, C, L, K, off, wrap]() mutable {
            const auto& g = to.grad();
            if (tf.tracked()) {
                auto& gf = tf.grad();
                for (int64_t bc = 0; bc < B * C; ++bc) {
                    const int64_t c = bc % C;
                    for (int64_t t = 0; t < L; ++t)
                        for (int64_t u = 0; u < K; ++u)
                            gf[bc * L + wrap(t + off - u)] += tk.at(c * K + u) * g[bc * L + t];
                }
            }
            if (tk.tracked()) {
                auto& gk = tk.grad();
                for (int64_t bc = 0; bc < B * C; ++bc) {
                    const int64_t c = bc % C;
                    for (int64_t t = 0; t < L; ++t)
                        for (int64_t u = 0; u < K; ++u)
                            gk[c * K + u] += g[bc * L + t] * tf.at(bc * L + wrap(t + off - u));
                }
            }
        });
    }
    return out;
}

// FFT backend: identical semantics; O((L+K) log(L+K)) per row, with an
// O(M log M) backward built from cached forward spectra.
template <class T>
Tensor<T> conv1d_depthwise_fft(const Tensor<T>& f, const Tensor<T>& taps, int64_t off) {
    check(f.rank() == 3, "conv1d_fft: input must be [B x C x L], got " + shape_str(f.shape()));
    check(taps.rank() == 2 && taps.dim(0) == f.dim(1),
          "conv1d_fft: taps " + shape_str(taps.shape()) + " do not match input channels " +
              std::to_string(f.dim(1)));
    const int64_t B = f.dim(0), C = f.dim(1), L = f.dim(2), K = taps.dim(1);
    const int64_t M = next_pow2(L + K - 1);
    const int64_t nb = M / 2 + 1;
    using Cpx = std::complex<T>;
    auto fspec = std::make_shared<std::vector<Cpx>>(static_cast<size_t>(B * C * nb));
    auto kspec = std::make_shared<std::vector<Cpx>>(static_cast<size_t>(C * nb));
    bool rec = recording<T>({&f, &taps});
    Tensor<T> out = detail::make_out<T>({B, C, L}, rec);

    parallel_for(C, [&](int64_t c) {
        std::vector<T> buf(static_cast<size_t>(M), T(0));
        for (int64_t u = 0; u < K; ++u) buf[u] = taps.at(c * K + u);
        auto ks = fftdetail::rfft_raw(buf.data(), M);
        std::copy(ks.begin(), ks.end(), kspec->begin() + c * nb);
    });
    parallel_for(B * C, [&](int64_t bc) {
        const int64_t c = bc % C;
        std::vector<T> buf(static_cast<size_t>(M), T(0));
        for (int64_t i = 0; i < L; ++i) buf[i] = f.at(bc * L + i);
        auto fs = fftdetail::rfft_raw(buf.data(), M);
        std::copy(fs.begin(), fs.end(), fspec->begin() + bc * nb);
        std::vector<Cpx> prod(static_cast<size_t>(nb));
        for (int64_t k = 0; k < nb; ++k) prod[k] = fftdetail::cmul(fs[k], (*kspec)[c * nb + k]);
        std::vector<T> full(static_cast<size_t>(M));
        fftdetail::irfft_raw(prod, full.data(), M);
        for (int64_t t = 0; t < L; ++t) out.at(bc * L + t) = full[t + off];
    });

    if (rec) {
        Tensor<T> tf = f, tk = taps, to = out;
        Tape<T>::active()->record([tf, tk, to, fspec, kspec, B, C, L, K, M, nb, off]() mutable {
            const auto& g = to.grad();
            const bool need_f = tf.tracked();
            const bool need_k = tk.tracked();
            T* gf = need_f ? tf.grad().data() : nullptr;
            T* gk = need_k ? tk.grad().data() : nullptr;
            parallel_for(C, [&](int64_t c) {
                std::vector<Cpx> ksum(need_k ? static_cast<size_t>(nb) : 0);
                std::vector<T> buf(static_cast<size_t>(M));
                std::vector<Cpx> prod(static_cast<size_t>(nb));
                std::vector<T> full(static_cast<size_t>(M));
                for (int64_t b = 0; b < B; ++b) {
                    const int64_t bc = b * C + c;
                    std::fill(buf.begin(), buf.end(), T(0));
                    for (int64_t t = 0; t < L; ++t) buf[t] = g[bc * L + t];
                    auto gs = fftdetail::rfft_raw(buf.data(), M);
                    if (need_f) {
                        // df[s] = corr(g, taps)[s - off], spectrum conj(K) * G
                        for (int64_t k = 0; k < nb; ++k)
                            prod[k] = fftdetail::cmul_conj((*kspec)[c * nb + k], gs[k]);
                        fftdetail::irfft_raw(prod, full.data(), M);
                        for (int64_t s = 0; s < L; ++s)
                            gf[bc * L + s] += full[((s - off) % M + M) % M];
                    }
                    if (need_k)
                        for (int64_t k = 0; k < nb; ++k)
                            ksum[k] += fftdetail::cmul_conj(gs[k], (*fspec)[bc * nb + k]);
                }
                if (need_k) {
                    // dtaps[u] = sum_b corr(g, f)[off - u], spectrum conj(G) * F
                    fftdetail::irfft_raw(ksum, full.data(), M);
                    for (int64_t u = 0; u < K; ++u)
                        gk[c * K + u] += full[((off - u) % M + M) % M];
                }
            });
        });
    }
    return out;
}

// Depthwise centered 2-d convolution (zero padded, same-size output):
//   y[b,c,p,q] = sum_{i,j} taps[c,i,j] * f[b,c,p+offy-i,q+offx-j]
template <class T>
Tensor<T> conv2d_depthwise_direct(const Tensor<T>& f, const Tensor<T>& taps) {
    check(f.rank() == 4, "conv2d: input must be [B x C x H x W], got " + shape_str(f.shape()));
    check(taps.rank() == 3 && taps.dim(0) == f.dim(1),
          "conv2d: taps " + shape_str(taps.shape()) + " do not match input channels " +
              std::to_string(f.dim(1)));
    const int64_t B = f.dim(0), C = f.dim(1), H = f.dim(2), W = f.dim(3);
    const int64_t KH = taps.dim(1), KW = taps.dim(2);
    const int64_t offy = (KH - 1) / 2, offx = (KW - 1) / 2;
    bool rec = recording<T>({&f, &taps});
    Tensor<T> out = detail::make_out<T>({B, C, H, W}, rec);
    parallel_for(B * C, [&](int64_t bc) {
        const int64_t c = bc % C;
        const T* fim = f.data() + bc * H * W;
        const T* kim = taps.data() + c * KH * KW;
        T* oim = out.data() + bc * H * W;
        for (int64_t p = 0; p < H; ++p)
            for (int64_t q = 0; q < W; ++q) {
                T acc = T(0);
                for (int64_t i = 0; i < KH; ++i) {
                    int64_t sy = p + offy - i;
                    if (sy < 0 || sy >= H) continue;
                    for (int64_t j = 0; j < KW; ++j) {
                        int64_t sx = q + offx - j;
                        if (sx < 0 || sx >= W) continue;
                        acc += kim[i * KW + j] * fim[sy * W + sx];
                    }
                }
                oim[p * W + q] = acc;
            }
    });
    if (rec) {
        Tensor<T> tf = f, tk = taps, to = out;
        Tape<T>::active()->record([tf, tk, to, B, C, H, W, KH, KW, offy, offx]() mutable {
            const auto& g = to.grad();
            if (tf.tracked()) {
                auto& gf = tf.grad();
                parallel_for(B * C, [&](int64_t bc) {
                    const int64_t c = bc % C;
                    const T* gim = g.data() + bc * H * W;
                    const T* kim = tk.data() + c * KH * KW;
                    T* fim = gf.data() + bc * H * W;
                    for (int64_t p = 0; p < H; ++p)
                        for (int64_t q = 0; q < W; ++q) {
                            T gv = gim[p * W + q];
                            if (gv == T(0)) continue;
                            for (int64_t i = 0; i < KH; ++i) {
                                int64_t sy = p + offy - i;
                                if (sy < 0 || sy >= H) continue;
                                for (int64_t j = 0; j < KW; ++j) {
                                    int64_t sx = q + offx - j;
                                    if (sx < 0 || sx >= W) continue;
                                    fim[sy * W + sx] += gv * kim[i * KW + j];
                                }
                            }
                        }
                });
            }
            if (tk.tracked()) {
                auto& gk = tk.grad();
                parallel_for(C, [&](int64_t c) {
                    for (int64_t b = 0; b < B; ++b) {
                        const T* gim = g.data() + (b * C + c) * H * W;
                        const T* fim = tf.data() + (b * C + c) * H * W;
                        for (int64_t i = 0; i < KH; ++i)
                            for (int64_t j = 0; j < KW; ++j) {
                                T acc = T(0);
                                for (int64_t p = 0; p < H; ++p) {
                                    int64_t sy = p + offy - i;
                                    if (sy < 0 || sy >= H) continue;
                                    for (int64_t q = 0; q < W; ++q) {
                                        int64_t sx = q + offx - j;
                                        if (sx < 0 || sx >= W) continue;
                                        acc += gim[p * W + q] * fim[sy * W + sx];
                                    }
                                }
                                gk[(c * KH + i) * KW + j] += acc;
                            }
                    }
                });
            }
        });
    }
    return out;
}

// FFT backend for the centered depthwise 2-d convolution. Same semantics as
// conv2d_depthwise_direct: zero padding per axis to a power of two makes the
// circular product a linear convolution; backward uses correlation spectra.
template <class T>
Tensor<T> conv2d_depthwise_fft(const Tensor<T>& f, const Tensor<T>& taps) {
    check(f.rank() == 4, "conv2d_fft: input must be [B x C x H x W]");
    check(taps.rank() == 3 && taps.dim(0) == f.dim(1),
          "conv2d_fft: taps " + shape_str(taps.shape()) + " do not match input channels " +
              std::to_string(f.dim(1)));
    const int64_t B = f.dim(0), C = f.dim(1), H = f.dim(2), W = f.dim(3);
    const int64_t KH = taps.dim(1), KW = taps.dim(2);
    const int64_t offy = (KH - 1) / 2, offx = (KW - 1) / 2;
    const int64_t My = next_pow2(H + KH - 1), Mx = next_pow2(W + KW - 1);
    using Cpx = std::complex<T>;
    auto fspec = std::make_shared<std::vector<Cpx>>(static_cast<size_t>(B * C * My * Mx));
    auto kspec = std::make_shared<std::vector<Cpx>>(static_cast<size_t>(C * My * Mx));
    bool rec = recording<T>({&f, &taps});
    Tensor<T> out = detail::make_out<T>({B, C, H, W}, rec);

    parallel_for(C, [&](int64_t c) {
        std::vector<Cpx> buf(static_cast<size_t>(My * Mx));
        for (int64_t i = 0; i < KH; ++i)
            for (int64_t j = 0; j < KW; ++j) buf[i * Mx + j] = taps.at((c * KH + i) * KW + j);
        fftdetail::fft2_inplace(buf, My, Mx, false);
        std::copy(buf.begin(), buf.end(), kspec->begin() + c * My * Mx);
    });
    parallel_for(B * C, [&](int64_t bc) {
        const int64_t c = bc % C;
        std::vector<Cpx> buf(static_cast<size_t>(My * Mx));
        for (int64_t i = 0; i < H; ++i)
            for (int64_t j = 0; j < W; ++j) buf[i * Mx + j] = f.at((bc * H + i) * W + j);
        fftdetail::fft2_inplace(buf, My, Mx, false);
        std::copy(buf.begin(), buf.end(), fspec->begin() + bc * My * Mx);
        const Cpx* ks = kspec->data() + c * My * Mx;
        for (int64_t i = 0; i < My * Mx; ++i) buf[i] = fftdetail::cmul(buf[i], ks[i]);
        fftdetail::fft2_inplace(buf, My, Mx, true);
        for (int64_t p = 0; p < H; ++p)
            for (int64_t q = 0; q < W; ++q)
                out.at((bc * H + p) * W + q) = buf[(p + offy) * Mx + (q + offx)].real();
    });

    if (rec) {
        Tensor<T> tf = f, tk = taps, to = out;
        Tape<T>::active()->record(
            [tf, tk, to, fspec, kspec, B, C, H, W, KH, KW, My, Mx, offy, offx]() mutable {
                const auto& g = to.grad();
                const bool need_f = tf.tracked();
                const bool need_k = tk.tracked();
                T* gf = need_f ? tf.grad().data() : nullptr;
                T* gk = need_k ? tk.grad().data() : nullptr;
                parallel_for(C, [&](int64_t c) {
                    const int64_t n2 = My * Mx;
                    std::vector<Cpx> gs(static_cast<size_t>(n2));
                    std::vector<Cpx> prod(static_cast<size_t>(n2));
                    std::vector<Cpx> ksum(need_k ? static_cast<size_t>(n2) : 0);
                    const Cpx* ks = kspec->data() + c * n2;
                    for (int64_t b = 0; b < B; ++b) {
                        const int64_t bc = b * C + c;
                        std::fill(gs.begin(), gs.end(), Cpx(0));
                        for (int64_t p = 0; p < H; ++p)
                            for (int64_t q = 0; q < W; ++q) gs[p * Mx + q] = g[(bc * H + p) * W + q];
                        fftdetail::fft2_inplace(gs, My, Mx, false);
                        if (need_f) {
                            // df[sy,sx] = corr(g, taps) at (sy-offy, sx-offx)
                            for (int64_t i = 0; i < n2; ++i) prod[i] = fftdetail::cmul_conj(ks[i], gs[i]);
                            fftdetail::fft2_inplace(prod, My, Mx, true);
                            for (int64_t sy = 0; sy < H; ++sy)
                                for (int64_t sx = 0; sx < W; ++sx) {
                                    const int64_t iy = ((sy - offy) % My + My) % My;
                                    const int64_t ix = ((sx - offx) % Mx + Mx) % Mx;
                                    gf[(bc * H + sy) * W + sx] += prod[iy * Mx + ix].real();
                                }
                        }
                        if (need_k) {
                            const Cpx* fs = fspec->data() + bc * n2;
                            for (int64_t i = 0; i < n2; ++i) ksum[i] += fftdetail::cmul_conj(gs[i], fs[i]);
                        }
                    }
                    if (need_k) {
                        // dtaps[u,v] = sum_b corr(g, f) at (offy-u, offx-v)
                        fftdetail::fft2_inplace(ksum, My, Mx, true);
                        for (int64_t u = 0; u < KH; ++u)
                            for (int64_t v = 0; v < KW; ++v) {
                                const int64_t iy = ((offy - u) % My + My) % My;
                                const int64_t ix = ((offx - v) % Mx + Mx) % Mx;
                                gk[(c * KH + u) * KW + v] += ksum[iy * Mx + ix].real();
                            }
                    }
                });
            });
    }
    return out;
}

// Dense (channel-mixing) convolution, direct only; reference path and the
// building block for tests that need non-separable kernels.
//   y[b,o,t] = sum_{c,u} k[o,c,u] * f[b,c,t+off-u]
template <class T>
Tensor<T> conv1d_full_direct(const Tensor<T>& f, const Tensor<T>& kern, int64_t off) {
    check(f.rank() == 3 && kern.rank() == 3 && kern.dim(1) == f.dim(1),
          "conv1d_full: input " + shape_str(f.shape()) + " vs kernel " + shape_str(kern.shape()));
    const int64_t B = f.dim(0), Cin = f.dim(1), L = f.dim(2);
    const int64_t Cout = kern.dim(0), K = kern.dim(2);
    bool rec = recording<T>({&f, &kern});
    Tensor<T> out = detail::make_out<T>({B, Cout, L}, rec);
    parallel_for(B * Cout, [&](int64_t bo) {
        const int64_t b = bo / Cout, o = bo % Cout;
        T* orow = out.data() + bo * L;
        for (int64_t c = 0; c < Cin; ++c) {
            const T* frow = f.data() + (b * Cin + c) * L;
            const T* krow = kern.data() + (o * Cin + c) * K;
            for (int64_t t = 0; t < L; ++t) {
                int64_t ulo = std::max<int64_t>(0, t + off - (L - 1));
                int64_t uhi = std::min<int64_t>(K - 1, t + off);
                T acc = T(0);
                for (int64_t u = ulo; u <= uhi; ++u) acc += krow[u] * frow[t + off - u];
                orow[t] += acc;
            }
        }
    });
    if (rec) {
        Tensor<T> tf = f, tk = kern, to = out;
        Tape<T>::active()->record([tf, tk, to, B, Cin, Cout, L, K, off]() mutable {
            const auto& g = to.grad();
            if (tf.tracked()) {
                auto& gf = tf.grad();
                for (int64_t b = 0; b < B; ++b)
                    for (int64_t o = 0; o < Cout; ++o) {
                        const T* grow = g.data() + (b * Cout + o) * L;
                        for (int64_t c = 0; c < Cin; ++c) {
                            const T* krow = tk.data() + (o * Cin + c) * K;
                            T* frow = gf.data() + (b * Cin + c) * L;
                            for (int64_t s = 0; s < L; ++s) {
                                int64_t ulo = std::max<int64_t>(0, off - s);
                                int64_t uhi = std::min<int64_t>(K - 1, L - 1 - s + off);
                                T acc = T(0);
                                for (int64_t u = ulo; u <= uhi; ++u)
                                    acc += krow[u] * grow[s - off + u];
                                frow[s] += acc;
                            }
                        }
                    }
            }
            if (tk.tracked()) {
                auto& gk = tk.grad();
                for (int64_t b = 0; b < B; ++b)
                    for (int64_t o = 0; o < Cout; ++o) {
                        const T* grow = g.data() + (b * Cout + o) * L;
                        for (int64_t c = 0; c < Cin; ++c) {
                            const T* frow = tf.data() + (b * Cin + c) * L;
                            for (int64_t u = 0; u < K; ++u) {
                                T acc = T(0);
                                for (int64_t t = 0; t < L; ++t) {
                                    int64_t s = t + off - u;
                                    if (s >= 0 && s < L) acc += grow[t] * frow[s];
                                }
                                gk[(o * Cin + c) * K + u] += acc;
                            }
                        }
                    }
            }
        });
    }
    return out;
}

}  // namespace ccnn
