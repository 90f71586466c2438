#pragma once

// Randomized finite-difference verification of every differentiable
// operation in the library, shared by the CLI `gradcheck` subcommand and the
// acceptance suite. All checks run in double precision with h = 1e-5 and a
// 1e-4 relative-error bound.

#include <functional>
#include <iomanip>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "blocks.hpp"
#include "conv.hpp"
#include "fft.hpp"
#include "gradcheck.hpp"
#include "kernel_net.hpp"
#include "layers.hpp"
#include "model.hpp"
#include "ops.hpp"
#include "optim.hpp"
#include "pointcloud.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace ccnn {

struct OpCheckResult {
    std::string op;
    int instances = 0;
    double worst_rel = 0;
    std::string worst_at;
    bool pass = false;
};

namespace gcdetail {

using D = double;
using P = std::vector<std::pair<std::string, Tensor<D>>>;

inline Tensor<D> randn(const Shape& s, Rng& rng, double scl = 1.0) {
    Tensor<D> t(s);
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = rng.normal() * scl;
    return t;
}

// Fixed random weighting turns any tensor-valued output into a scalar loss
// that is sensitive to every coordinate.
inline Tensor<D> wsum(const Tensor<D>& t, Rng& rng) {
    Tensor<D> w(t.shape());
    for (int64_t i = 0; i < w.numel(); ++i) w.at(i) = rng.normal();
    return sum_all(mul(t, w));
}

template <class L>
P layer_params(L& layer, const std::string& prefix) {
    P out;
    layer.visit_params(prefix, [&](const std::string& n, Tensor<D>& t, bool) {
        out.emplace_back(n, t);
    });
    return out;
}

using InstanceFn = std::function<GradCheckReport(Rng&)>;

inline GradCheckReport run_op(const InstanceFn& fn, int instances, OpCheckResult& res) {
    GradCheckReport worst;
    for (int i = 0; i < instances; ++i) {
        Rng rng(static_cast<uint64_t>(9000 + i), res.op);
        GradCheckReport r = fn(rng);
        if (r.max_rel >= worst.max_rel) worst = r;
    }
    res.instances = instances;
    res.worst_rel = worst.max_rel;
    res.worst_at = worst.worst;
    res.pass = worst.max_rel < 1e-4;
    return worst;
}

}  // namespace gcdetail

inline std::vector<OpCheckResult> run_gradient_suite(int instances, std::ostream* log) {
    using namespace gcdetail;
    std::vector<OpCheckResult> results;
    auto reg = [&](const std::string& name, const InstanceFn& fn) {
        OpCheckResult res;
        res.op = name;
        run_op(fn, instances, res);
        results.push_back(res);
        if (log) {
            (*log) << "  " << std::left << std::setw(20) << name << " instances=" << res.instances
                   << "  worst_rel=" << std::scientific << std::setprecision(3) << res.worst_rel
                   << (res.pass ? "  ok" : "  FAIL") << std::defaultfloat;
            if (!res.pass) (*log) << "  at " << res.worst_at;
            (*log) << "\n";
        }
    };

    reg("arith", [](Rng& rng) {
        Tensor<D> a = randn({2, 5}, rng), b = randn({2, 5}, rng);
        return grad_check({{"a", a}, {"b", b}}, [&] {
            Rng w(1, "w");
            return wsum(add(scale(a, 1.7), sub(b, add_scalar(mul(a, b), 0.3))), w);
        });
    });
    reg("exp_log_sin", [](Rng& rng) {
        Tensor<D> a = randn({3, 4}, rng, 0.5);
        return grad_check({{"a", a}}, [&] {
            Rng w(2, "w");
            return wsum(add(exp_op(a), add(log_op(add_scalar(square(a), 0.5)), sin_op(a))), w);
        });
    });
    reg("gelu", [](Rng& rng) {
        Tensor<D> a = randn({4, 3}, rng, 1.5);
        return grad_check({{"a", a}}, [&] {
            Rng w(3, "w");
            return wsum(gelu(a), w);
        });
    });
    reg("matmul", [](Rng& rng) {
        Tensor<D> a = randn({3, 4}, rng), b = randn({4, 2}, rng);
        return grad_check({{"a", a}, {"b", b}}, [&] {
            Rng w(4, "w");
            return wsum(matmul(a, b), w);
        });
    });
    reg("linear", [](Rng& rng) {
        Tensor<D> x = randn({5, 3}, rng), w = randn({2, 3}, rng), b = randn({2}, rng);
        return grad_check({{"x", x}, {"w", w}, {"b", b}}, [&] {
            Rng r(5, "w");
            return wsum(linear(x, w, b), r);
        });
    });
    reg("reductions", [](Rng& rng) {
        Tensor<D> a = randn({2, 6}, rng), b = randn({7}, rng);
        return grad_check({{"a", a}, {"b", b}},
                          [&] { return add(sum_all(a), mean_all(b)); });
    });
    reg("gather_rows", [](Rng& rng) {
        Tensor<D> x = randn({6, 3}, rng);
        std::vector<int64_t> idx;
        for (int i = 0; i < 8; ++i) idx.push_back(rng.index(6));
        return grad_check({{"x", x}}, [&] {
            Rng w(6, "w");
            return wsum(gather_rows(x, idx), w);
        });
    });
    reg("mul_rows", [](Rng& rng) {
        Tensor<D> x = randn({5, 3}, rng), v = randn({5}, rng);
        return grad_check({{"x", x}, {"v", v}}, [&] {
            Rng w(7, "w");
            return wsum(mul_rows(x, v), w);
        });
    });
    reg("pointwise", [](Rng& rng) {
        Tensor<D> x = randn({2, 3, 4}, rng), w = randn({2, 3}, rng), b = randn({2}, rng);
        return grad_check({{"x", x}, {"w", w}, {"b", b}}, [&] {
            Rng r(8, "w");
            return wsum(pointwise_channels(x, w, b), r);
        });
    });
    reg("reorder", [](Rng& rng) {
        Tensor<D> x = randn({5, 3}, rng);
        return grad_check({{"x", x}}, [&] {
            Rng w(9, "w");
            return add(wsum(transpose2d(x), w), wsum(to_causal_taps(x), w));
        });
    });
    reg("softmax_ce", [](Rng& rng) {
        Tensor<D> logits = randn({4, 5}, rng, 2.0);
        std::vector<int64_t> labels;
        for (int i = 0; i < 4; ++i) labels.push_back(rng.index(5));
        return grad_check({{"logits", logits}},
                          [&] { return softmax_cross_entropy(logits, labels); });
    });
    reg("dropout", [](Rng& rng) {
        Tensor<D> x = randn({3, 6}, rng);
        const uint64_t mask_seed = rng.index(1 << 20);
        return grad_check({{"x", x}}, [&] {
            Rng d(mask_seed, "mask");
            Rng w(10, "w");
            return wsum(dropout(x, 0.4, true, d), w);
        });
    });
    reg("rfft", [](Rng& rng) {
        const int64_t len = 5 + rng.index(4), n = 16;
        Tensor<D> x = randn({len}, rng);
        return grad_check({{"x", x}}, [&] {
            Rng w(11, "w");
            return wsum(rfft(x, n), w);
        });
    });
    reg("irfft", [](Rng& rng) {
        const int64_t n = 16, out_len = 6 + rng.index(8);
        Tensor<D> spec = randn({n / 2 + 1, 2}, rng);
        return grad_check({{"spec", spec}}, [&] {
            Rng w(12, "w");
            return wsum(irfft(spec, n, out_len), w);
        });
    });
    reg("gaussian_mask", [](Rng& rng) {
        Tensor<D> coords = randn({7, 2}, rng, 0.7);
        Tensor<D> center = randn({2}, rng, 0.3), logsig = randn({2}, rng, 0.3);
        return grad_check({{"center", center}, {"log_sigma", logsig}}, [&] {
            Rng w(13, "w");
            return wsum(gaussian_mask(coords, center, logsig), w);
        });
    });
    reg("magnet_forward", [](Rng& rng) {
        const int dims = 1 + static_cast<int>(rng.index(3));
        KernelNet<D> knet(dims, 6, 2, 3, 2.0 + 4.0 * rng.uniform(), rng);
        Tensor<D> coords = randn({5, dims}, rng, 0.6);
        P params = layer_params(knet, "knet");
        return grad_check(params, [&] {
            Rng w(14, "w");
            return wsum(knet.forward(coords), w);
        });
    });
    reg("conv1d_direct", [](Rng& rng) {
        const int64_t B = 2, C = 2, L = 9, K = 4;
        const int64_t off = rng.index(2) ? 0 : (K - 1) / 2;
        Tensor<D> f = randn({B, C, L}, rng), taps = randn({C, K}, rng);
        return grad_check({{"f", f}, {"taps", taps}}, [&] {
            Rng w(15, "w");
            return wsum(conv1d_depthwise_direct(f, taps, off), w);
        });
    });
    reg("conv1d_fft", [](Rng& rng) {
        const int64_t B = 2, C = 2, L = 9, K = 5;
        const int64_t off = rng.index(2) ? 0 : (K - 1) / 2;
        Tensor<D> f = randn({B, C, L}, rng), taps = randn({C, K}, rng);
        return grad_check({{"f", f}, {"taps", taps}}, [&] {
            Rng w(16, "w");
            return wsum(conv1d_depthwise_fft(f, taps, off), w);
        });
    });
    reg("conv1d_full", [](Rng& rng) {
        const int64_t B = 2, Cin = 2, Cout = 3, L = 7, K = 3;
        const int64_t off = rng.index(2) ? 0 : (K - 1) / 2;
        Tensor<D> f = randn({B, Cin, L}, rng), k = randn({Cout, Cin, K}, rng);
        return grad_check({{"f", f}, {"k", k}}, [&] {
            Rng w(17, "w");
            return wsum(conv1d_full_direct(f, k, off), w);
        });
    });
    reg("conv1d_circular", [](Rng& rng) {
        const int64_t B = 2, C = 2, L = 8, K = 3;
        Tensor<D> f = randn({B, C, L}, rng), taps = randn({C, K}, rng);
        return grad_check({{"f", f}, {"taps", taps}}, [&] {
            Rng w(18, "w");
            return wsum(conv1d_depthwise_circular(f, taps, 1), w);
        });
    });
    reg("conv2d_direct", [](Rng& rng) {
        const int64_t B = 2, C = 2, H = 5, W = 6, K = 3;
        Tensor<D> f = randn({B, C, H, W}, rng), taps = randn({C, K, K}, rng);
        return grad_check({{"f", f}, {"taps", taps}}, [&] {
            Rng w(19, "w");
            return wsum(conv2d_depthwise_direct(f, taps), w);
        });
    });
    reg("conv2d_fft", [](Rng& rng) {
        const int64_t B = 2, C = 2, H = 5, W = 4, K = 3;
        Tensor<D> f = randn({B, C, H, W}, rng), taps = randn({C, K, K}, rng);
        return grad_check({{"f", f}, {"taps", taps}}, [&] {
            Rng w(20, "w");
            return wsum(conv2d_depthwise_fft(f, taps), w);
        });
    });
    reg("sep_flexconv1d", [](Rng& rng) {
        const bool causal = rng.index(2) == 0;
        SepFlexConv1d<D> conv(3, 2, 5, 6, 2, D(3), D(1), causal,
                              rng.index(2) ? ConvBackend::Fft : ConvBackend::Direct, rng);
        Tensor<D> f = randn({2, 3, 8}, rng);
        P params = layer_params(conv, "conv");
        params.emplace_back("f", f);
        return grad_check(params, [&] {
            Rng r(21, "r"), w(21, "w");
            return wsum(conv.forward(f, Mode::Train, r), w);
        });
    });
    reg("sep_flexconv2d", [](Rng& rng) {
        SepFlexConv2d<D> conv(2, 3, 3, 6, 2, D(3), D(1), false,
                              rng.index(2) ? ConvBackend::Fft : ConvBackend::Direct, rng);
        Tensor<D> f = randn({2, 2, 4, 5}, rng);
        P params = layer_params(conv, "conv");
        params.emplace_back("f", f);
        return grad_check(params, [&] {
            Rng r(22, "r"), w(22, "w");
            return wsum(conv.forward(f, Mode::Train, r), w);
        });
    });
    reg("conv_pointcloud", [](Rng& rng) {
        const int64_t B = 2, P_ = 6, k = 3;
        PointSepConv<D> conv(2, 3, k, 6, 2, D(3), D(1), 3, rng);
        Tensor<D> pos = randn({B, P_, 3}, rng, 0.5);
        Tensor<D> mask({B, P_}, D(1));
        auto ctx = PointContext<D>::build(pos, mask, k);
        Tensor<D> f = randn({B, 2, P_}, rng);
        P params = layer_params(conv, "conv");
        params.emplace_back("f", f);
        return grad_check(params, [&] {
            Rng r(23, "r"), w(23, "w");
            return wsum(conv.forward(f, Mode::Train, r, ctx), w);
        });
    });
    reg("batch_norm", [](Rng& rng) {
        const bool training = rng.index(2) == 0;
        BatchNorm<D> bn(3);
        for (int64_t i = 0; i < 3; ++i) {
            bn.gamma.at(i) = 1.0 + 0.3 * rng.normal();
            bn.beta.at(i) = 0.3 * rng.normal();
            bn.running_mean.at(i) = 0.2 * rng.normal();
            bn.running_var.at(i) = 1.0 + 0.2 * rng.uniform();
        }
        Tensor<D> x = randn({3, 3, 4}, rng);
        return grad_check({{"x", x}, {"gamma", bn.gamma}, {"beta", bn.beta}}, [&] {
            Rng w(24, "w");
            return wsum(bn.forward(x, training ? Mode::Train : Mode::Eval), w);
        });
    });
    reg("layer_norm", [](Rng& rng) {
        LayerNorm<D> ln(4);
        Tensor<D> x = randn({2, 4, 3}, rng);
        return grad_check({{"x", x}, {"gamma", ln.gamma}, {"beta", ln.beta}}, [&] {
            Rng w(25, "w");
            return wsum(ln.forward(x, Mode::Train), w);
        });
    });
    reg("pool", [](Rng& rng) {
        Tensor<D> x = randn({2, 3, 5}, rng);
        Tensor<D> mask({2, 5}, D(1));
        mask.at(3) = 0;
        mask.at(7) = 0;
        return grad_check({{"x", x}}, [&] {
            Rng w(26, "w");
            return add(wsum(global_avg_pool(x), w), wsum(masked_mean_pool(x, mask), w));
        });
    });
    reg("block_forward", [](Rng& rng) {
        const BlockStyle style = static_cast<BlockStyle>(rng.index(3));
        ConvBlock<D, SepFlexConv1d<D>> blk;
        blk.style = style;
        blk.dropout_rate = 0.2;
        blk.norm1 = NormLayer<D>(NormKind::Batch, 3);
        blk.conv1 = SepFlexConv1d<D>(3, 3, 4, 6, 2, D(3), D(1), true, ConvBackend::Direct, rng);
        if (style == BlockStyle::FlexNet) {
            blk.norm2 = NormLayer<D>(NormKind::Batch, 3);
            blk.conv2 = SepFlexConv1d<D>(3, 3, 4, 6, 2, D(3), D(1), true, ConvBackend::Direct, rng);
        } else {
            blk.lin = Dense<D>(3, 3, 0.5, rng);
        }
        Tensor<D> x = randn({2, 3, 6}, rng);
        const uint64_t drop_seed = rng.index(1 << 20);
        P params = layer_params(blk, "block");
        params.emplace_back("x", x);
        return grad_check(params, [&] {
            Rng d(drop_seed, "drop");
            Rng w(27, "w");
            return wsum(blk.forward(x, Mode::Train, d), w);
        }, 1e-5, 24);
    });
    reg("kernel_l2_loss", [](Rng& rng) {
        SepFlexConv1d<D> conv(2, 2, 5, 6, 2, D(3), D(1), true, ConvBackend::Direct, rng);
        P params = layer_params(conv, "conv");
        return grad_check(params, [&] {
            std::vector<Tensor<D>> ks{conv.kernel_values(0), conv.kernel_values(7)};
            return kernel_l2_penalty(ks, D(0.37));
        });
    });
    reg("model_forward", [](Rng& rng) {
        ModelConfig mc;
        mc.in_channels = 1;
        mc.channels = 4;
        mc.n_blocks = 1;
        mc.n_classes = 3;
        mc.kernel_size = 5;
        mc.knet_hidden = 6;
        mc.knet_layers = 2;
        mc.omega0 = 3;
        mc.dropout = 0.1;
        mc.style = static_cast<BlockStyle>(rng.index(3));
        mc.norm = rng.index(2) ? NormKind::Batch : NormKind::Layer;
        mc.backend = rng.index(2) ? ConvBackend::Fft : ConvBackend::Direct;
        Rng init(rng.index(1 << 20), "init");
        Network<D, SepFlexConv1d<D>> net(mc, init);
        Tensor<D> x = randn({2, 1, 8}, rng);
        std::vector<int64_t> labels{rng.index(3), rng.index(3)};
        const uint64_t drop_seed = rng.index(1 << 20);
        P params;
        net.visit_params([&](const std::string& n, Tensor<D>& t, bool) {
            params.emplace_back(n, t);
        });
        return grad_check(params, [&] {
            Rng d(drop_seed, "drop");
            Tensor<D> logits = net.forward(x, Mode::Train, d, 0);
            Tensor<D> loss = softmax_cross_entropy(logits, labels);
            return add(loss, kernel_l2_penalty(net.collect_kernels(), D(0.01)));
        }, 1e-5, 8);
    });

    return results;
}

inline bool gradient_suite_passed(const std::vector<OpCheckResult>& results) {
    for (const auto& r : results)
        if (!r.pass) return false;
    return true;
}

}  // namespace ccnn
