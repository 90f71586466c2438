#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "conv.hpp"
#include "kernel_net.hpp"
#include "layers.hpp"
#include "ops.hpp"
#include "pointcloud.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace ccnn {

// Depthwise-separable continuous convolution layers. The kernel generator
// produces one channelwise kernel (fan-in 1 per channel), a Gaussian window
// masks it, and a pointwise linear mixes channels. `gain` feeds the variance
// correction (sqrt(2) when a GELU follows, 1 otherwise).

template <class T>
struct SepFlexConv1d {
    KernelNet<T> knet;
    Tensor<T> mask_center, mask_log_sigma;
    Dense<T> pw;
    int64_t in_channels = 0, out_channels = 0;
    int64_t kernel_size = 0;  // taps used at training resolution
    bool causal = true;
    ConvBackend backend = ConvBackend::Auto;
    Tensor<T> last_kernel;  // kernel generated by the most recent forward

    SepFlexConv1d() = default;
    SepFlexConv1d(int64_t cin, int64_t cout, int64_t k, int knet_hidden, int knet_layers,
                  T omega0, T gain, bool causal_conv, ConvBackend be, Rng& rng)
        : knet(1, knet_hidden, knet_layers, static_cast<int>(cin), omega0, rng),
          mask_center({1}), mask_log_sigma({1}),
          pw(cout, cin, 1.0 / std::sqrt(static_cast<double>(cin)), rng),
          in_channels(cin), out_channels(cout), kernel_size(k), causal(causal_conv), backend(be) {
        knet.set_variance_correction(gain, 1, k);
        // window centered on the most recent offset (+1) for causal kernels
        mask_center.at(0) = causal_conv ? T(1) : T(0);
        mask_log_sigma.at(0) = static_cast<T>(std::log(2.0));
        mask_center.set_tracked(true);
        mask_log_sigma.set_tracked(true);
    }

    // Generated kernel values [K x C_in] in coordinate order (oldest first
    // for causal layers), after masking and resolution rescaling.
    Tensor<T> kernel_values(int64_t k_eval) const {
        int64_t K = k_eval > 0 ? k_eval : kernel_size;
        Tensor<T> coords = relative_coords_1d<T>(K);
        Tensor<T> kv = knet.forward(coords);
        kv = mul_rows(kv, gaussian_mask(coords, mask_center, mask_log_sigma));
        if (K != kernel_size)
            kv = scale(kv, static_cast<T>(kernel_size) / static_cast<T>(K));
        return kv;
    }

    // Raw continuous function (generator x window) sampled at `res` points,
    // without the resolution rescale; for inspection/export.
    std::pair<Tensor<T>, Tensor<T>> sample_kernel(int64_t res) const {
        Tensor<T> coords = relative_coords_1d<T>(res);
        Tensor<T> kv = knet.forward(coords);
        kv = mul_rows(kv, gaussian_mask(coords, mask_center, mask_log_sigma));
        return {coords, kv};
    }

    Tensor<T> forward(const Tensor<T>& f, Mode, Rng&, int64_t k_eval = 0) {
        check(f.rank() == 3 && f.dim(1) == in_channels,
              "sep conv1d: input " + shape_str(f.shape()) + " does not match channels " +
                  std::to_string(in_channels));
        int64_t K = k_eval > 0 ? k_eval : kernel_size;
        Tensor<T> kv = kernel_values(K);
        last_kernel = kv;
        Tensor<T> taps = causal ? to_causal_taps(kv) : transpose2d(kv);
        int64_t off = causal ? 0 : (K - 1) / 2;
        bool use_fft = backend == ConvBackend::Fft ||
                       (backend == ConvBackend::Auto && f.dim(2) * K >= 4096);
        Tensor<T> y = use_fft ? conv1d_depthwise_fft(f, taps, off)
                              : conv1d_depthwise_direct(f, taps, off);
        return pointwise_channels(y, pw.w, pw.b);
    }

    void visit_params(const std::string& prefix, const ParamVisitor<T>& fn) {
        knet.visit_params(prefix + ".knet", fn);
        fn(prefix + ".mask.center", mask_center, true);
        fn(prefix + ".mask.log_sigma", mask_log_sigma, true);
        pw.visit_params(prefix + ".pw", fn);
    }
};

template <class T>
struct SepFlexConv2d {
    KernelNet<T> knet;
    Tensor<T> mask_center, mask_log_sigma;
    Dense<T> pw;
    int64_t in_channels = 0, out_channels = 0;
    int64_t kernel_size = 0;  // taps per axis
    ConvBackend backend = ConvBackend::Direct;
    Tensor<T> last_kernel;

    SepFlexConv2d() = default;
    SepFlexConv2d(int64_t cin, int64_t cout, int64_t k, int knet_hidden, int knet_layers,
                  T omega0, T gain, bool /*causal*/, ConvBackend be, Rng& rng)
        : knet(2, knet_hidden, knet_layers, static_cast<int>(cin), omega0, rng),
          mask_center({2}, T(0)), mask_log_sigma({2}),
          pw(cout, cin, 1.0 / std::sqrt(static_cast<double>(cin)), rng),
          in_channels(cin), out_channels(cout), kernel_size(k), backend(be) {
        knet.set_variance_correction(gain, 1, k * k);
        mask_log_sigma.at(0) = mask_log_sigma.at(1) = static_cast<T>(std::log(2.0));
        mask_center.set_tracked(true);
        mask_log_sigma.set_tracked(true);
    }

    Tensor<T> kernel_values(int64_t k_eval) const {
        int64_t K = k_eval > 0 ? k_eval : kernel_size;
        Tensor<T> coords = relative_coords_2d<T>(K, K);
        Tensor<T> kv = knet.forward(coords);
        kv = mul_rows(kv, gaussian_mask(coords, mask_center, mask_log_sigma));
        if (K != kernel_size)
            kv = scale(kv, static_cast<T>(kernel_size * kernel_size) / static_cast<T>(K * K));
        return kv;
    }

    std::pair<Tensor<T>, Tensor<T>> sample_kernel(int64_t res) const {
        Tensor<T> coords = relative_coords_2d<T>(res, res);
        Tensor<T> kv = knet.forward(coords);
        kv = mul_rows(kv, gaussian_mask(coords, mask_center, mask_log_sigma));
        return {coords, kv};
    }

    Tensor<T> forward(const Tensor<T>& f, Mode, Rng&, int64_t k_eval = 0) {
        check(f.rank() == 4 && f.dim(1) == in_channels,
              "sep conv2d: input " + shape_str(f.shape()) + " does not match channels " +
                  std::to_string(in_channels));
        int64_t K = k_eval > 0 ? k_eval : kernel_size;
        Tensor<T> kv = kernel_values(K);                       // [K*K x C]
        last_kernel = kv;
        Tensor<T> taps = transpose2d(kv).reshaped({in_channels, K, K});
        Tensor<T> y = backend == ConvBackend::Fft ? conv2d_depthwise_fft(f, taps)
                                                  : conv2d_depthwise_direct(f, taps);
        Tensor<T> y3 = y.reshaped({f.dim(0), in_channels, f.dim(2) * f.dim(3)});
        Tensor<T> z = pointwise_channels(y3, pw.w, pw.b);
        return z.reshaped({f.dim(0), out_channels, f.dim(2), f.dim(3)});
    }

    void visit_params(const std::string& prefix, const ParamVisitor<T>& fn) {
        knet.visit_params(prefix + ".knet", fn);
        fn(prefix + ".mask.center", mask_center, true);
        fn(prefix + ".mask.log_sigma", mask_log_sigma, true);
        pw.visit_params(prefix + ".pw", fn);
    }
};

// Precomputed geometry for one point-cloud batch: neighbour lists and the
// relative offsets the kernel generator is evaluated at. Built once per
// batch and shared by every layer.
template <class T>
struct PointContext {
    Tensor<T> positions;  // [B x P x D], plain data
    Tensor<T> mask;       // [B x P]
    std::vector<int64_t> nbr;  // [B x P x k] indices into each sample's points
    Tensor<T> offsets;    // [B*P*k x D] query minus neighbour position
    int64_t k = 0;

    static PointContext build(const Tensor<T>& positions, const Tensor<T>& mask, int64_t k) {
        check(positions.rank() == 3, "point context: positions must be [B x P x D]");
        const int64_t B = positions.dim(0), P = positions.dim(1), D = positions.dim(2);
        PointContext ctx;
        ctx.positions = positions;
        ctx.mask = mask;
        ctx.k = k;
        ctx.nbr.assign(static_cast<size_t>(B * P * k), 0);
        ctx.offsets = Tensor<T>({B * P * k, D});
        for (int64_t b = 0; b < B; ++b) {
            std::vector<double> pos(static_cast<size_t>(P * D));
            std::vector<char> valid(static_cast<size_t>(P));
            for (int64_t p = 0; p < P; ++p) {
                valid[p] = mask.at(b * P + p) != T(0);
                for (int64_t d = 0; d < D; ++d)
                    pos[p * D + d] = static_cast<double>(positions.at((b * P + p) * D + d));
            }
            auto nb = knn_indices(pos, P, D, valid, k);
            std::copy(nb.begin(), nb.end(), ctx.nbr.begin() + b * P * k);
            for (int64_t p = 0; p < P; ++p)
                for (int64_t j = 0; j < k; ++j) {
                    int64_t q = nb[p * k + j];
                    for (int64_t d = 0; d < D; ++d)
                        ctx.offsets.at(((b * P + p) * k + j) * D + d) =
                            positions.at((b * P + p) * D + d) - positions.at((b * P + q) * D + d);
                }
        }
        return ctx;
    }
};

template <class T>
struct PointSepConv {
    KernelNet<T> knet;
    Tensor<T> mask_center, mask_log_sigma;
    Dense<T> pw;
    int64_t in_channels = 0, out_channels = 0;
    int64_t k_neighbors = 0;
    int dims = 3;
    Tensor<T> last_kernel;

    PointSepConv() = default;
    PointSepConv(int64_t cin, int64_t cout, int64_t k_nb, int knet_hidden, int knet_layers,
                 T omega0, T gain, int d, Rng& rng)
        : knet(d, knet_hidden, knet_layers, static_cast<int>(cin), omega0, rng),
          mask_center({d}, T(0)), mask_log_sigma({d}),
          pw(cout, cin, 1.0 / std::sqrt(static_cast<double>(cin)), rng),
          in_channels(cin), out_channels(cout), k_neighbors(k_nb), dims(d) {
        knet.set_variance_correction(gain, 1, k_nb);
        for (int i = 0; i < d; ++i) mask_log_sigma.at(i) = static_cast<T>(std::log(2.0));
        mask_center.set_tracked(true);
        mask_log_sigma.set_tracked(true);
    }

    std::pair<Tensor<T>, Tensor<T>> sample_kernel(int64_t res) const {
        Tensor<T> coords = relative_coords_grid<T>(dims, res);
        Tensor<T> kv = knet.forward(coords);
        kv = mul_rows(kv, gaussian_mask(coords, mask_center, mask_log_sigma));
        return {coords, kv};
    }

    Tensor<T> forward(const Tensor<T>& f, Mode, Rng&, const PointContext<T>& ctx) {
        check(f.rank() == 3 && f.dim(1) == in_channels,
              "point conv: features " + shape_str(f.shape()) + " do not match channels " +
                  std::to_string(in_channels));
        Tensor<T> kv = knet.forward(ctx.offsets);  // [B*P*k x C_in]
        kv = mul_rows(kv, gaussian_mask(ctx.offsets, mask_center, mask_log_sigma));
        last_kernel = kv;
        Tensor<T> kv3 = kv.reshaped({f.dim(0), f.dim(2) * ctx.k, in_channels});
        Tensor<T> y = conv_pointcloud_depthwise(f, kv3, ctx.nbr, ctx.k, ctx.mask);
        return pointwise_channels(y, pw.w, pw.b);
    }

    void visit_params(const std::string& prefix, const ParamVisitor<T>& fn) {
        knet.visit_params(prefix + ".knet", fn);
        fn(prefix + ".mask.center", mask_center, true);
        fn(prefix + ".mask.log_sigma", mask_log_sigma, true);
        pw.visit_params(prefix + ".pw", fn);
    }
};

// --- residual blocks ------------------------------------------------------

// Three residual block styles sharing one code path:
//   S4:      y = x + Linear(Dropout(GELU(Conv(Norm(x)))))
//   CCNN:    y = GELU(S4 body)      (same body, outer activation added)
//   FlexNet: y = x + GELU(Conv2(Norm2(GELU(Conv1(Norm1(x))))))
enum class BlockStyle { Ccnn, S4, FlexNet };

enum class NormKind { Batch, Layer };

template <class T>
struct NormLayer {
    NormKind kind = NormKind::Batch;
    BatchNorm<T> bn;
    LayerNorm<T> ln;

    NormLayer() = default;
    NormLayer(NormKind k, int64_t channels) : kind(k) {
        if (k == NormKind::Batch)
            bn = BatchNorm<T>(channels);
        else
            ln = LayerNorm<T>(channels);
    }

    Tensor<T> forward(const Tensor<T>& x3, Mode mode) {
        return kind == NormKind::Batch ? bn.forward(x3, mode) : ln.forward(x3, mode);
    }
    void visit_params(const std::string& prefix, const ParamVisitor<T>& fn) {
        if (kind == NormKind::Batch)
            bn.visit_params(prefix, fn);
        else
            ln.visit_params(prefix, fn);
    }
    void visit_buffers(const std::string& prefix,
                       const std::function<void(const std::string&, Tensor<T>&)>& fn) {
        if (kind == NormKind::Batch) bn.visit_buffers(prefix, fn);
    }
};

namespace detail {

// Norm layers see [B x C x S] regardless of the conv's native rank.
template <class T>
Tensor<T> as3d(const Tensor<T>& x) {
    if (x.rank() == 3) return x;
    check(x.rank() == 4, "block: expected rank 3 or 4, got " + shape_str(x.shape()));
    return x.reshaped({x.dim(0), x.dim(1), x.dim(2) * x.dim(3)});
}

template <class T>
Tensor<T> like(const Tensor<T>& shaped, const Tensor<T>& x3) {
    return x3.reshaped(shaped.shape());
}

}  // namespace detail

template <class T, class Conv>
struct ConvBlock {
    BlockStyle style = BlockStyle::Ccnn;
    double dropout_rate = 0.0;
    NormLayer<T> norm1, norm2;
    Conv conv1, conv2;
    Dense<T> lin;

    template <class... A>
    Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng& drop_rng, A&&... conv_args) {
        Tensor<T> u = detail::like(x, norm1.forward(detail::as3d(x), mode));
        Tensor<T> v = conv1.forward(u, mode, drop_rng, conv_args...);
        if (style == BlockStyle::FlexNet) {
            Tensor<T> h = dropout(gelu(v), dropout_rate, mode == Mode::Train, drop_rng);
            Tensor<T> h2 = detail::like(h, norm2.forward(detail::as3d(h), mode));
            Tensor<T> w = conv2.forward(h2, mode, drop_rng, conv_args...);
            Tensor<T> w2 = dropout(gelu(w), dropout_rate, mode == Mode::Train, drop_rng);
            return add(x, w2);
        }
        Tensor<T> w = dropout(gelu(v), dropout_rate, mode == Mode::Train, drop_rng);
        Tensor<T> w3 = detail::as3d(w);
        Tensor<T> z = detail::like(x, pointwise_channels(w3, lin.w, lin.b));
        Tensor<T> res = add(x, z);
        return style == BlockStyle::Ccnn ? gelu(res) : res;
    }

    void visit_params(const std::string& prefix, const ParamVisitor<T>& fn) {
        norm1.visit_params(prefix + ".norm1", fn);
        conv1.visit_params(prefix + ".conv1", fn);
        if (style == BlockStyle::FlexNet) {
            norm2.visit_params(prefix + ".norm2", fn);
            conv2.visit_params(prefix + ".conv2", fn);
        } else {
            lin.visit_params(prefix + ".lin", fn);
        }
    }
    void visit_buffers(const std::string& prefix,
                       const std::function<void(const std::string&, Tensor<T>&)>& fn) {
        norm1.visit_buffers(prefix + ".norm1", fn);
        if (style == BlockStyle::FlexNet) norm2.visit_buffers(prefix + ".norm2", fn);
    }
};

}  // namespace ccnn
