#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "ops.hpp"
#include "rng.hpp"
#include "tape.hpp"
#include "tensor.hpp"

namespace ccnn {

// Per-dimension second moment of the Gabor envelope exp(-gamma^2 t^2 / ...)
// under the init distributions (gamma ~ |N(0,1)|, centers and coordinates
// uniform on [-1,1]): E_{gamma,t}[exp(-gamma^2 t^2)] with t triangular on
// [-2,2]. Closed form: asinh(2*sqrt(2))/sqrt(2) - 1/2.
inline double gabor_envelope_moment() { return 0.746461898; }

// E[g^2] of one Gabor layer in D dimensions (the 0.5 is E[sin^2]).
inline double gabor_layer_second_moment(int d) {
    return 0.5 * std::pow(gabor_envelope_moment(), d);
}

template <class T>
using ParamVisitor = std::function<void(const std::string&, Tensor<T>&, bool is_kernel_param)>;

namespace detail {

// Anisotropic Gabor filter bank evaluated at coords [P x D]:
//   out[p,j] = exp(-0.5 * sum_d gamma[j,d]^2 (x[p,d]-mu[j,d])^2)
//            * sin(sum_d freq[j,d] x[p,d] + phase[j])
// Fused node with analytic parameter gradients (coords are constants).
template <class T>
Tensor<T> gabor_filter(const Tensor<T>& coords, const Tensor<T>& freq, const Tensor<T>& phase,
                       const Tensor<T>& gamma, const Tensor<T>& mu) {
    const int64_t P = coords.dim(0), D = coords.dim(1), H = freq.dim(0);
    check(freq.shape() == Shape({H, D}) && gamma.shape() == Shape({H, D}) &&
              mu.shape() == Shape({H, D}) && phase.shape() == Shape({H}),
          "gabor_filter: inconsistent parameter shapes for width " + std::to_string(H));
    bool rec = recording<T>({&freq, &phase, &gamma, &mu});
    Tensor<T> out = make_out<T>({P, H}, rec);
    auto env = std::make_shared<std::vector<T>>(static_cast<size_t>(P * H));
    auto arg = std::make_shared<std::vector<T>>(static_cast<size_t>(P * H));
    for (int64_t p = 0; p < P; ++p) {
        const T* x = coords.data() + p * D;
        for (int64_t j = 0; j < H; ++j) {
            T quad = T(0), a = phase.at(j);
            for (int64_t d = 0; d < D; ++d) {
                T t = x[d] - mu.at(j * D + d);
                T gm = gamma.at(j * D + d);
                quad += gm * gm * t * t;
                a += freq.at(j * D + d) * x[d];
            }
            T e = std::exp(T(-0.5) * quad);
            (*env)[p * H + j] = e;
            (*arg)[p * H + j] = a;
            out.at(p * H + j) = e * std::sin(a);
        }
    }
    if (rec) {
        Tensor<T> tc = coords, tf = freq, tp = phase, tg = gamma, tm = mu, to = out;
        Tape<T>::active()->record([tc, tf, tp, tg, tm, to, env, arg, P, D, H]() mutable {
            const auto& g = to.grad();
            auto& gf = tf.grad();
            auto& gp = tp.grad();
            auto& gg = tg.grad();
            auto& gm = tm.grad();
            for (int64_t p = 0; p < P; ++p) {
                const T* x = tc.data() + p * D;
                for (int64_t j = 0; j < H; ++j) {
                    T gv = g[p * H + j];
                    if (gv == T(0)) continue;
                    T e = (*env)[p * H + j];
                    T a = (*arg)[p * H + j];
                    T s = std::sin(a), c = std::cos(a);
                    T ge_s = gv * e * s;  // flows through the envelope
                    T ge_c = gv * e * c;  // flows through the sinusoid argument
                    gp[j] += ge_c;
                    for (int64_t d = 0; d < D; ++d) {
                        T t = x[d] - tm.at(j * D + d);
                        T gam = tg.at(j * D + d);
                        gf[j * D + d] += ge_c * x[d];
                        gg[j * D + d] += ge_s * (-gam * t * t);
                        gm[j * D + d] += ge_s * (gam * gam * t);
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace detail

// Gaussian window over relative coordinates with trainable center and
// per-dimension log bandwidth: m[p] = exp(-0.5 sum_d ((x[p,d]-mu[d])/sigma[d])^2).
template <class T>
Tensor<T> gaussian_mask(const Tensor<T>& coords, const Tensor<T>& center,
                        const Tensor<T>& log_sigma) {
    const int64_t P = coords.dim(0), D = coords.dim(1);
    check(center.shape() == Shape({D}) && log_sigma.shape() == Shape({D}),
          "gaussian_mask: center/log_sigma must have shape [" + std::to_string(D) + "]");
    bool rec = recording<T>({&center, &log_sigma});
    Tensor<T> out = detail::make_out<T>({P}, rec);
    std::vector<T> sigma(static_cast<size_t>(D));
    for (int64_t d = 0; d < D; ++d) sigma[d] = std::exp(log_sigma.at(d));
    for (int64_t p = 0; p < P; ++p) {
        T quad = T(0);
        for (int64_t d = 0; d < D; ++d) {
            T t = (coords.at(p * D + d) - center.at(d)) / sigma[d];
            quad += t * t;
        }
        out.at(p) = std::exp(T(-0.5) * quad);
    }
    if (rec) {
        Tensor<T> tc = coords, tcen = center, tls = log_sigma, to = out;
        Tape<T>::active()->record([tc, tcen, tls, to, sigma, P, D]() mutable {
            const auto& g = to.grad();
            auto& gc = tcen.grad();
            auto& gs = tls.grad();
            for (int64_t p = 0; p < P; ++p) {
                T gm = g[p] * to.at(p);
                if (gm == T(0)) continue;
                for (int64_t d = 0; d < D; ++d) {
                    T t = tc.at(p * D + d) - tcen.at(d);
                    gc[d] += gm * t / (sigma[d] * sigma[d]);
                    gs[d] += gm * t * t / (sigma[d] * sigma[d]);
                }
            }
        });
    }
    return out;
}

// Multiplicative anisotropic Gabor network: a small coordinate->value MLP
// whose hidden activations are gated by Gabor filters,
//   h_1 = g_1(x),  h_{l+1} = g_{l+1}(x) .* (W_l h_l + b_l),
//   out = correction * (W_L h_L + b_L).
// Initialized so the raw output has unit variance over [-1,1]^D; the
// correction factor then rescales generated kernels to the convolutional
// fan-in target (see variance_correction below).
template <class T>
class KernelNet {
public:
    KernelNet() = default;

    KernelNet(int dims, int hidden, int layers, int out_ch, T omega0, Rng& rng)
        : dims_(dims), hidden_(hidden), layers_(layers), out_ch_(out_ch), omega0_(omega0) {
        check(layers >= 1 && hidden >= 1 && dims >= 1 && out_ch >= 1,
              "kernel net: degenerate size (layers " + std::to_string(layers) + ", hidden " +
                  std::to_string(hidden) + ")");
        const double pi = 3.141592653589793238462643383279;
        double vg = gabor_layer_second_moment(dims);
        double w_std = std::sqrt(1.0 / (hidden * vg));
        for (int l = 0; l < layers; ++l) {
            Tensor<T> fr({hidden, dims}), ph({hidden}), ga({hidden, dims}), mu({hidden, dims});
            for (int64_t i = 0; i < fr.numel(); ++i)
                fr.at(i) = static_cast<T>(rng.uniform(-omega0 / layers, omega0 / layers));
            for (int64_t i = 0; i < ph.numel(); ++i)
                ph.at(i) = static_cast<T>(rng.uniform(-pi, pi));
            for (int64_t i = 0; i < ga.numel(); ++i)
                ga.at(i) = static_cast<T>(std::fabs(rng.normal()));
            for (int64_t i = 0; i < mu.numel(); ++i)
                mu.at(i) = static_cast<T>(rng.uniform(-1.0, 1.0));
            freq_.push_back(mark(fr));
            phase_.push_back(mark(ph));
            gamma_.push_back(mark(ga));
            mu_.push_back(mark(mu));
            if (l + 1 < layers) {
                Tensor<T> w({hidden, hidden}), b({hidden});
                for (int64_t i = 0; i < w.numel(); ++i)
                    w.at(i) = static_cast<T>(rng.normal(0.0, w_std));
                w_.push_back(mark(w));
                b_.push_back(mark(b));
            }
        }
        Tensor<T> wf({out_ch, hidden}), bf({out_ch});
        for (int64_t i = 0; i < wf.numel(); ++i) wf.at(i) = static_cast<T>(rng.normal(0.0, w_std));
        wf_ = mark(wf);
        bf_ = mark(bf);
    }

    // coords [P x D] -> kernel values [P x out_ch]
    Tensor<T> forward(const Tensor<T>& coords) const {
        check(coords.rank() == 2 && coords.dim(1) == dims_,
              "kernel net: coords " + shape_str(coords.shape()) + " do not match dims " +
                  std::to_string(dims_));
        Tensor<T> h = detail::gabor_filter(coords, freq_[0], phase_[0], gamma_[0], mu_[0]);
        for (int l = 1; l < layers_; ++l) {
            Tensor<T> gate = detail::gabor_filter(coords, freq_[l], phase_[l], gamma_[l], mu_[l]);
            h = mul(gate, linear(h, w_[l - 1], b_[l - 1]));
        }
        return scale(linear(h, wf_, bf_), correction_);
    }

    // Sets the output scale so Var(kernel) ~= gain^2 / (n_in * n_omega),
    // the fan-in variance target of the convolution the kernel feeds.
    void set_variance_correction(T gain, int64_t n_in, int64_t n_omega) {
        check(n_in > 0 && n_omega > 0, "variance correction: fan-in must be positive");
        correction_ = gain / static_cast<T>(std::sqrt(static_cast<double>(n_in * n_omega)));
    }

    void set_correction(T c) { correction_ = c; }
    T correction() const { return correction_; }
    int dims() const { return dims_; }
    int out_channels() const { return out_ch_; }
    T omega0() const { return omega0_; }
    int hidden() const { return hidden_; }
    int layers() const { return layers_; }

    void visit_params(const std::string& prefix, const ParamVisitor<T>& fn) {
        for (int l = 0; l < layers_; ++l) {
            std::string base = prefix + ".gabor" + std::to_string(l);
            fn(base + ".freq", freq_[l], true);
            fn(base + ".phase", phase_[l], true);
            fn(base + ".gamma", gamma_[l], true);
            fn(base + ".mu", mu_[l], true);
        }
        for (size_t l = 0; l < w_.size(); ++l) {
            fn(prefix + ".lin" + std::to_string(l) + ".w", w_[l], true);
            fn(prefix + ".lin" + std::to_string(l) + ".b", b_[l], true);
        }
        fn(prefix + ".out.w", wf_, true);
        fn(prefix + ".out.b", bf_, true);
    }

private:
    static Tensor<T> mark(Tensor<T> t) {
        t.set_tracked(true);
        return t;
    }

    int dims_ = 0, hidden_ = 0, layers_ = 0, out_ch_ = 0;
    T omega0_ = T(0);
    T correction_ = T(1);
    std::vector<Tensor<T>> freq_, phase_, gamma_, mu_, w_, b_;
    Tensor<T> wf_, bf_;
};

}  // namespace ccnn
