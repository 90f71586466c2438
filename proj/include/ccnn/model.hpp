#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "blocks.hpp"
#include "layers.hpp"
#include "ops.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace ccnn {

struct ModelConfig {
    int dims = 1;                  // 1 = sequences, 2 = images, 3 = point clouds
    bool pointcloud = false;
    bool causal = true;            // 1-d grids only
    int64_t in_channels = 1;
    int64_t channels = 32;
    int64_t n_blocks = 2;
    int64_t n_classes = 10;
    int64_t kernel_size = 33;      // taps per axis (grid) — set to the input length for global kernels
    int64_t k_neighbors = 16;      // point clouds
    int knet_hidden = 32;
    int knet_layers = 3;
    double omega0 = 30.0;
    double dropout = 0.1;
    BlockStyle style = BlockStyle::Ccnn;
    NormKind norm = NormKind::Batch;
    ConvBackend backend = ConvBackend::Auto;
};

namespace detail {

template <class T>
SepFlexConv1d<T> make_conv(const ModelConfig& cfg, int64_t cin, int64_t cout, T gain, Rng& rng,
                           const SepFlexConv1d<T>*) {
    return SepFlexConv1d<T>(cin, cout, cfg.kernel_size, cfg.knet_hidden, cfg.knet_layers,
                            static_cast<T>(cfg.omega0), gain, cfg.causal, cfg.backend, rng);
}

template <class T>
SepFlexConv2d<T> make_conv(const ModelConfig& cfg, int64_t cin, int64_t cout, T gain, Rng& rng,
                           const SepFlexConv2d<T>*) {
    return SepFlexConv2d<T>(cin, cout, cfg.kernel_size, cfg.knet_hidden, cfg.knet_layers,
                            static_cast<T>(cfg.omega0), gain, false, cfg.backend, rng);
}

template <class T>
PointSepConv<T> make_conv(const ModelConfig& cfg, int64_t cin, int64_t cout, T gain, Rng& rng,
                          const PointSepConv<T>*) {
    return PointSepConv<T>(cin, cout, cfg.k_neighbors, cfg.knet_hidden, cfg.knet_layers,
                           static_cast<T>(cfg.omega0), gain, cfg.dims, rng);
}

}  // namespace detail

// The full classifier: stem separable conv lifting the input channels, a
// stack of residual blocks, a final norm, global average pooling (masked for
// point clouds) and a dense head.
template <class T, class Conv>
struct Network {
    ModelConfig cfg;
    Conv stem;
    std::vector<ConvBlock<T, Conv>> blocks;
    NormLayer<T> final_norm;
    Dense<T> head;

    Network() = default;

    Network(const ModelConfig& c, Rng& rng) : cfg(c) {
        const Conv* tag = nullptr;
        const T g_act = static_cast<T>(std::sqrt(2.0));  // conv followed by GELU
        stem = detail::make_conv<T>(cfg, cfg.in_channels, cfg.channels, T(1), rng, tag);
        for (int64_t i = 0; i < cfg.n_blocks; ++i) {
            ConvBlock<T, Conv> blk;
            blk.style = cfg.style;
            blk.dropout_rate = cfg.dropout;
            blk.norm1 = NormLayer<T>(cfg.norm, cfg.channels);
            blk.conv1 = detail::make_conv<T>(cfg, cfg.channels, cfg.channels, g_act, rng, tag);
            if (cfg.style == BlockStyle::FlexNet) {
                blk.norm2 = NormLayer<T>(cfg.norm, cfg.channels);
                blk.conv2 = detail::make_conv<T>(cfg, cfg.channels, cfg.channels, g_act, rng, tag);
            } else {
                blk.lin = Dense<T>(cfg.channels, cfg.channels,
                                   std::sqrt(2.0 / static_cast<double>(cfg.channels)), rng);
            }
            blocks.push_back(std::move(blk));
        }
        final_norm = NormLayer<T>(cfg.norm, cfg.channels);
        head = Dense<T>(cfg.n_classes, cfg.channels,
                        std::sqrt(2.0 / static_cast<double>(cfg.channels)), rng);
    }

    // Grid input [B x C_in x spatial...] or point features [B x C_in x P].
    // conv_args: kernel-size override for grids, PointContext for clouds.
    template <class... A>
    Tensor<T> forward(const Tensor<T>& x, Mode mode, Rng& drop_rng, A&&... conv_args) {
        Tensor<T> h = stem.forward(x, mode, drop_rng, conv_args...);
        for (auto& blk : blocks) h = blk.forward(h, mode, drop_rng, conv_args...);
        Tensor<T> h3 = detail::as3d(h);
        Tensor<T> n = final_norm.forward(h3, mode);
        Tensor<T> pooled = pool(n, conv_args...);
        return linear(pooled, head.w, head.b);
    }

    void visit_params(const ParamVisitor<T>& fn) {
        stem.visit_params("stem", fn);
        for (size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit_params("block" + std::to_string(i), fn);
        final_norm.visit_params("final_norm", fn);
        head.visit_params("head", fn);
    }
    void visit_buffers(const std::function<void(const std::string&, Tensor<T>&)>& fn) {
        for (size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit_buffers("block" + std::to_string(i), fn);
        final_norm.visit_buffers("final_norm", fn);
    }

    // Forces correction_factor = 1 on every kernel generator (the
    // "uncorrected init" used when demonstrating the variance growth).
    void disable_variance_correction() {
        for_each_conv([](auto& conv) { conv.knet.set_correction(T(1)); });
    }

    template <class F>
    void for_each_conv(F&& f) {
        f(stem);
        for (auto& blk : blocks) {
            f(blk.conv1);
            if (blk.style == BlockStyle::FlexNet) f(blk.conv2);
        }
    }

    // Kernels generated during the most recent forward pass, one per conv
    // layer; feeds the generated-kernel L2 penalty.
    std::vector<Tensor<T>> collect_kernels() {
        std::vector<Tensor<T>> out;
        for_each_conv([&](auto& conv) { out.push_back(conv.last_kernel); });
        return out;
    }

private:
    template <class... A>
    Tensor<T> pool(const Tensor<T>& n, A&&...) {
        return global_avg_pool(n);
    }
    Tensor<T> pool(const Tensor<T>& n, const PointContext<T>& ctx) {
        return masked_mean_pool(n, ctx.mask);
    }
};

template <class T>
using Model1d = Network<T, SepFlexConv1d<T>>;
template <class T>
using Model2d = Network<T, SepFlexConv2d<T>>;
template <class T>
using PointModel = Network<T, PointSepConv<T>>;

// Reference model sizes: 4 blocks x 140 channels (~200K parameters, kernel
// net hidden width 32) and 6 blocks x 380 channels (~2M, hidden width 64).
inline ModelConfig preset_small(int64_t kernel_size) {
    ModelConfig c;
    c.channels = 140;
    c.n_blocks = 4;
    c.knet_hidden = 32;
    c.kernel_size = kernel_size;
    return c;
}

inline ModelConfig preset_large(int64_t kernel_size) {
    ModelConfig c;
    c.channels = 380;
    c.n_blocks = 6;
    c.knet_hidden = 64;
    c.kernel_size = kernel_size;
    return c;
}

template <class T, class Conv>
int64_t param_count(Network<T, Conv>& net) {
    int64_t n = 0;
    net.visit_params([&](const std::string&, Tensor<T>& t, bool) { n += t.numel(); });
    return n;
}

}  // namespace ccnn
