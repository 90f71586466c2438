#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "tape.hpp"
#include "tensor.hpp"

namespace ccnn {

// Iterative radix-2 FFT. Sizes are always padded to powers of two by the
// callers. Twiddles are computed in double and cast, so float transforms
// stay accurate at the lengths used here (<= 32768).

inline int64_t next_pow2(int64_t n) {
    int64_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace fftdetail {

// Forward roots e^{-2*pi*i*k/n} for k < n/2, cached per transform length.
// Explicit re/im butterflies below avoid the library complex-multiply call
// (which guards against inf/nan operands and costs ~10x).
template <class T>
const std::vector<std::complex<T>>& twiddles(size_t n) {
    thread_local std::vector<std::vector<std::complex<T>>> cache;  // index = log2(n)
    size_t lg = 0;
    while ((size_t(1) << lg) < n) ++lg;
    if (cache.size() <= lg) cache.resize(lg + 1);
    auto& tab = cache[lg];
    if (tab.size() != n / 2) {
        tab.resize(n / 2);
        const double two_pi = 6.283185307179586476925286766559;
        for (size_t k = 0; k < n / 2; ++k) {
            double ang = -two_pi * static_cast<double>(k) / static_cast<double>(n);
            tab[k] = {static_cast<T>(std::cos(ang)), static_cast<T>(std::sin(ang))};
        }
    }
    return tab;
}

// Explicit complex products (the library operator* routes through a checked
// helper call that dominates spectral loops).
template <class T>
inline std::complex<T> cmul(const std::complex<T>& a, const std::complex<T>& b) {
    return {a.real() * b.real() - a.imag() * b.imag(),
            a.real() * b.imag() + a.imag() * b.real()};
}

template <class T>
inline std::complex<T> cmul_conj(const std::complex<T>& a, const std::complex<T>& b) {
    // conj(a) * b
    return {a.real() * b.real() + a.imag() * b.imag(),
            a.real() * b.imag() - a.imag() * b.real()};
}

template <class T>
void fft_inplace(std::vector<std::complex<T>>& a, bool inverse) {
    const size_t n = a.size();
    if (n <= 1) return;
    check((n & (n - 1)) == 0, "fft: length must be a power of two, got " + std::to_string(n));
    // bit reversal
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const auto& tw = twiddles<T>(n);
    for (size_t len = 2; len <= n; len <<= 1) {
        const size_t stride = n / len, half = len / 2;
        for (size_t i = 0; i < n; i += len) {
            for (size_t j = 0; j < half; ++j) {
                const std::complex<T>& w = tw[j * stride];
                const T wr = w.real(), wi = inverse ? -w.imag() : w.imag();
                const T br = a[i + j + half].real(), bi = a[i + j + half].imag();
                const T vr = br * wr - bi * wi, vi = br * wi + bi * wr;
                const T ur = a[i + j].real(), ui = a[i + j].imag();
                a[i + j] = {ur + vr, ui + vi};
                a[i + j + half] = {ur - vr, ui - vi};
            }
        }
    }
    if (inverse) {
        T inv = T(1) / static_cast<T>(n);
        for (auto& x : a) x = {x.real() * inv, x.imag() * inv};
    }
}

// Real input of length n (power of two) -> n/2+1 spectrum bins.
template <class T>
std::vector<std::complex<T>> rfft_raw(const T* x, int64_t n) {
    std::vector<std::complex<T>> a(n);
    for (int64_t i = 0; i < n; ++i) a[i] = std::complex<T>(x[i], T(0));
    fft_inplace(a, false);
    a.resize(n / 2 + 1);
    return a;
}

// Inverse of rfft_raw: n/2+1 bins -> n real samples (hermitian completion).
template <class T>
void irfft_raw(const std::vector<std::complex<T>>& spec, T* out, int64_t n) {
    check(static_cast<int64_t>(spec.size()) == n / 2 + 1,
          "irfft: expected " + std::to_string(n / 2 + 1) + " bins, got " +
              std::to_string(spec.size()));
    std::vector<std::complex<T>> a(n);
    for (int64_t i = 0; i <= n / 2; ++i) a[i] = spec[i];
    for (int64_t i = n / 2 + 1; i < n; ++i) a[i] = std::conj(spec[n - i]);
    fft_inplace(a, true);
    for (int64_t i = 0; i < n; ++i) out[i] = a[i].real();
}

// Row-major [my x mx] complex 2-d transform (both sides powers of two):
// 1-d passes over rows, then over columns.
template <class T>
void fft2_inplace(std::vector<std::complex<T>>& a, int64_t my, int64_t mx, bool inverse) {
    check(static_cast<int64_t>(a.size()) == my * mx, "fft2: buffer size mismatch");
    std::vector<std::complex<T>> row(static_cast<size_t>(mx)), col(static_cast<size_t>(my));
    for (int64_t i = 0; i < my; ++i) {
        std::copy(a.begin() + i * mx, a.begin() + (i + 1) * mx, row.begin());
        fft_inplace(row, inverse);
        std::copy(row.begin(), row.end(), a.begin() + i * mx);
    }
    for (int64_t j = 0; j < mx; ++j) {
        for (int64_t i = 0; i < my; ++i) col[i] = a[i * mx + j];
        fft_inplace(col, inverse);
        for (int64_t i = 0; i < my; ++i) a[i * mx + j] = col[i];
    }
}

}  // namespace fftdetail

// Taped real FFT of a 1-d tensor, padded with zeros to `n` (power of two).
// Output layout: [n/2+1 x 2] (re, im) pairs. The adjoint of "zero-pad then
// DFT" maps a spectrum gradient to the first `len` input positions by
// evaluating the conjugated transform; it is NOT a hermitian-symmetrized
// inverse, because upper bins were never produced and carry no gradient.
template <class T>
Tensor<T> rfft(const Tensor<T>& x, int64_t n) {
    check(x.rank() == 1, "rfft: expected 1-d input, got " + shape_str(x.shape()));
    check(n >= x.dim(0) && (n & (n - 1)) == 0,
          "rfft: fft length " + std::to_string(n) + " invalid for input " + shape_str(x.shape()));
    const int64_t len = x.dim(0);
    std::vector<T> padded(static_cast<size_t>(n), T(0));
    for (int64_t i = 0; i < len; ++i) padded[i] = x.at(i);
    auto spec = fftdetail::rfft_raw(padded.data(), n);
    bool rec = recording<T>({&x});
    Tensor<T> out({n / 2 + 1, 2});
    if (rec) out.set_tracked(true);
    for (int64_t k = 0; k <= n / 2; ++k) {
        out.at(2 * k) = spec[k].real();
        out.at(2 * k + 1) = spec[k].imag();
    }
    if (rec) {
        Tensor<T> tx = x, to = out;
        Tape<T>::active()->record([tx, to, n, len]() mutable {
            const auto& g = to.grad();
            auto& gx = tx.grad();
            // dx[i] = sum_k Re(conj(exp(-2*pi*i*k*n)) adjoint) — explicit sum;
            // O(n^2) but this op is only used standalone (conv uses a fused node).
            const double two_pi = 6.283185307179586476925286766559;
            for (int64_t i = 0; i < len; ++i) {
                double acc = 0;
                for (int64_t k = 0; k <= n / 2; ++k) {
                    double ang = -two_pi * static_cast<double>(i) * static_cast<double>(k) /
                                 static_cast<double>(n);
                    // d spec_k.re / dx_i = cos(ang); d spec_k.im / dx_i = sin(ang)
                    acc += static_cast<double>(g[2 * k]) * std::cos(ang) +
                           static_cast<double>(g[2 * k + 1]) * std::sin(ang);
                }
                gx[i] += static_cast<T>(acc);
            }
        });
    }
    return out;
}

// Taped inverse: spectrum [n/2+1 x 2] -> first `out_len` real samples.
template <class T>
Tensor<T> irfft(const Tensor<T>& spec, int64_t n, int64_t out_len) {
    check(spec.rank() == 2 && spec.dim(1) == 2 && spec.dim(0) == n / 2 + 1,
          "irfft: spectrum shape " + shape_str(spec.shape()) + " does not match fft length " +
              std::to_string(n));
    check(out_len <= n, "irfft: out_len exceeds fft length");
    std::vector<std::complex<T>> bins(static_cast<size_t>(n / 2 + 1));
    for (int64_t k = 0; k <= n / 2; ++k) bins[k] = {spec.at(2 * k), spec.at(2 * k + 1)};
    std::vector<T> full(static_cast<size_t>(n));
    fftdetail::irfft_raw(bins, full.data(), n);
    bool rec = recording<T>({&spec});
    Tensor<T> out({out_len});
    if (rec) out.set_tracked(true);
    for (int64_t i = 0; i < out_len; ++i) out.at(i) = full[i];
    if (rec) {
        Tensor<T> ts = spec, to = out;
        Tape<T>::active()->record([ts, to, n, out_len]() mutable {
            const auto& g = to.grad();
            auto& gs = ts.grad();
            const double two_pi = 6.283185307179586476925286766559;
            // y_i = (1/n) * sum_k w_k * (re_k cos(a_ik) - im_k sin(a_ik)),
            // w_k = 1 for k in {0, n/2}, else 2 (hermitian completion).
            for (int64_t k = 0; k <= n / 2; ++k) {
                double w = (k == 0 || k == n / 2) ? 1.0 : 2.0;
                double gre = 0, gim = 0;
                for (int64_t i = 0; i < out_len; ++i) {
                    double ang = two_pi * static_cast<double>(i) * static_cast<double>(k) /
                                 static_cast<double>(n);
                    gre += static_cast<double>(g[i]) * std::cos(ang);
                    gim -= static_cast<double>(g[i]) * std::sin(ang);
                }
                gs[2 * k] += static_cast<T>(w / n * gre);
                gs[2 * k + 1] += static_cast<T>(w / n * gim);
            }
        });
    }
    return out;
}

}  // namespace ccnn
