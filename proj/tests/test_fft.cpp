#include <catch2/catch_amalgamated.hpp>
#include <ccnn/ccnn.hpp>

#include <cmath>
#include <complex>
#include <vector>

using namespace ccnn;
using Catch::Approx;

namespace {

// O(n^2) reference DFT, written directly from the definition.
std::vector<std::complex<double>> naive_dft(const std::vector<std::complex<double>>& x,
                                            bool inverse) {
    const size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    const double sign = inverse ? 1.0 : -1.0;
    for (size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0, 0);
        for (size_t t = 0; t < n; ++t) {
            double ang = sign * 2.0 * M_PI * double(k * t) / double(n);
            acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = inverse ? acc / double(n) : acc;
    }
    return out;
}

}  // namespace

TEST_CASE("fft matches the naive dft on random data") {
    for (size_t n : {2, 8, 64, 256}) {
        Rng rng(n, "fft-oracle");
        std::vector<std::complex<double>> x(n);
        for (auto& v : x) v = {rng.normal(), rng.normal()};
        auto want = naive_dft(x, false);
        auto got = x;
        fftdetail::fft_inplace(got, false);
        for (size_t k = 0; k < n; ++k) {
            CHECK(got[k].real() == Approx(want[k].real()).margin(1e-9));
            CHECK(got[k].imag() == Approx(want[k].imag()).margin(1e-9));
        }
    }
}

TEST_CASE("inverse fft matches the naive inverse dft") {
    const size_t n = 128;
    Rng rng(5, "ifft-oracle");
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {rng.normal(), rng.normal()};
    auto want = naive_dft(x, true);
    auto got = x;
    fftdetail::fft_inplace(got, true);
    for (size_t k = 0; k < n; ++k) {
        CHECK(got[k].real() == Approx(want[k].real()).margin(1e-10));
        CHECK(got[k].imag() == Approx(want[k].imag()).margin(1e-10));
    }
}

TEST_CASE("fft round trip is the identity") {
    const size_t n = 512;
    Rng rng(9, "roundtrip");
    std::vector<std::complex<double>> x(n);
    for (auto& v : x) v = {rng.normal(), rng.normal()};
    auto y = x;
    fftdetail::fft_inplace(y, false);
    fftdetail::fft_inplace(y, true);
    for (size_t i = 0; i < n; ++i) {
        CHECK(y[i].real() == Approx(x[i].real()).margin(1e-10));
        CHECK(y[i].imag() == Approx(x[i].imag()).margin(1e-10));
    }
}

TEST_CASE("impulse and single-tone spectra are analytic") {
    // delta at 0 -> flat spectrum of ones
    std::vector<std::complex<double>> d(64, {0, 0});
    d[0] = {1, 0};
    fftdetail::fft_inplace(d, false);
    for (auto& v : d) {
        CHECK(v.real() == Approx(1.0).margin(1e-12));
        CHECK(v.imag() == Approx(0.0).margin(1e-12));
    }
    // cos(2 pi 5 t / 64) -> bins 5 and 59 with weight n/2
    const size_t n = 64;
    std::vector<std::complex<double>> c(n);
    for (size_t t = 0; t < n; ++t) c[t] = {std::cos(2.0 * M_PI * 5.0 * double(t) / double(n)), 0};
    fftdetail::fft_inplace(c, false);
    for (size_t k = 0; k < n; ++k) {
        double want = (k == 5 || k == n - 5) ? double(n) / 2 : 0.0;
        CHECK(std::abs(c[k]) == Approx(want).margin(1e-9));
    }
}

TEST_CASE("parseval energy identity") {
    const size_t n = 256;
    Rng rng(11, "parseval");
    std::vector<std::complex<double>> x(n);
    double e_time = 0;
    for (auto& v : x) {
        v = {rng.normal(), 0};
        e_time += std::norm(v);
    }
    fftdetail::fft_inplace(x, false);
    double e_freq = 0;
    for (auto& v : x) e_freq += std::norm(v);
    CHECK(e_freq / double(n) == Approx(e_time).epsilon(1e-10));
}

TEST_CASE("rfft_raw agrees with the full dft lower half") {
    const int64_t n = 128;
    Rng rng(13, "rfft");
    std::vector<double> x(n);
    std::vector<std::complex<double>> xc(n);
    for (int64_t i = 0; i < n; ++i) {
        x[i] = rng.normal();
        xc[i] = {x[i], 0};
    }
    auto want = naive_dft(xc, false);
    auto got = fftdetail::rfft_raw(x.data(), n);
    REQUIRE(got.size() == size_t(n / 2 + 1));
    for (int64_t k = 0; k <= n / 2; ++k) {
        CHECK(got[k].real() == Approx(want[k].real()).margin(1e-9));
        CHECK(got[k].imag() == Approx(want[k].imag()).margin(1e-9));
    }
    std::vector<double> back(n);
    fftdetail::irfft_raw(got, back.data(), n);
    for (int64_t i = 0; i < n; ++i) CHECK(back[i] == Approx(x[i]).margin(1e-10));
}

TEST_CASE("fft2 equals nested naive dfts") {
    const int64_t my = 8, mx = 16;
    Rng rng(17, "fft2");
    std::vector<std::complex<double>> a(my * mx);
    for (auto& v : a) v = {rng.normal(), rng.normal()};
    // reference: dft along rows, then along columns
    std::vector<std::complex<double>> ref = a;
    for (int64_t i = 0; i < my; ++i) {
        std::vector<std::complex<double>> row(ref.begin() + i * mx, ref.begin() + (i + 1) * mx);
        row = naive_dft(row, false);
        std::copy(row.begin(), row.end(), ref.begin() + i * mx);
    }
    for (int64_t j = 0; j < mx; ++j) {
        std::vector<std::complex<double>> col(my);
        for (int64_t i = 0; i < my; ++i) col[i] = ref[i * mx + j];
        col = naive_dft(col, false);
        for (int64_t i = 0; i < my; ++i) ref[i * mx + j] = col[i];
    }
    auto got = a;
    fftdetail::fft2_inplace(got, my, mx, false);
    for (int64_t i = 0; i < my * mx; ++i) {
        CHECK(got[i].real() == Approx(ref[i].real()).margin(1e-9));
        CHECK(got[i].imag() == Approx(ref[i].imag()).margin(1e-9));
    }
    fftdetail::fft2_inplace(got, my, mx, true);
    for (int64_t i = 0; i < my * mx; ++i)
        CHECK(got[i].real() == Approx(a[i].real()).margin(1e-10));
}

TEST_CASE("taped rfft values match raw and gradients match finite differences") {
    const int64_t len = 10, n = 16;
    Rng rng(19, "taped");
    Tensor<double> x({len});
    for (int64_t i = 0; i < len; ++i) x.at(i) = rng.normal();
    auto spec = rfft(x, n);
    std::vector<double> padded(n, 0.0);
    for (int64_t i = 0; i < len; ++i) padded[i] = x.at(i);
    auto raw = fftdetail::rfft_raw(padded.data(), n);
    for (int64_t k = 0; k <= n / 2; ++k) {
        CHECK(spec.at(2 * k) == Approx(raw[k].real()).margin(1e-12));
        CHECK(spec.at(2 * k + 1) == Approx(raw[k].imag()).margin(1e-12));
    }
    auto report = grad_check({{"x", x}}, [&] {
        Rng w(4, "w");
        Tensor<double> weights({n / 2 + 1, 2});
        for (int64_t i = 0; i < weights.numel(); ++i) weights.at(i) = w.normal();
        return sum_all(mul(rfft(x, n), weights));
    });
    CHECK(report.max_rel < 1e-4);
}

TEST_CASE("taped irfft reconstructs and differentiates") {
    const int64_t n = 16, out_len = 12;
    Rng rng(23, "taped-inv");
    Tensor<double> spec({n / 2 + 1, 2});
    for (int64_t i = 0; i < spec.numel(); ++i) spec.at(i) = rng.normal();
    // imaginary parts of bins 0 and n/2 must vanish for a real signal
    spec.at(1) = 0;
    spec.at(2 * (n / 2) + 1) = 0;
    auto y = irfft(spec, n, out_len);
    REQUIRE(y.dim(0) == out_len);
    std::vector<std::complex<double>> bins(n / 2 + 1);
    for (int64_t k = 0; k <= n / 2; ++k) bins[k] = {spec.at(2 * k), spec.at(2 * k + 1)};
    std::vector<double> full(n);
    fftdetail::irfft_raw(bins, full.data(), n);
    for (int64_t i = 0; i < out_len; ++i) CHECK(y.at(i) == Approx(full[i]).margin(1e-12));
    auto report = grad_check({{"spec", spec}}, [&] {
        Rng w(5, "w");
        Tensor<double> weights({out_len});
        for (int64_t i = 0; i < out_len; ++i) weights.at(i) = w.normal();
        return sum_all(mul(irfft(spec, n, out_len), weights));
    });
    CHECK(report.max_rel < 1e-4);
}
