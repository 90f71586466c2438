#include <catch2/catch_amalgamated.hpp>
#include <ccnn/ccnn.hpp>

#include <cmath>
#include <set>

using namespace ccnn;
using Catch::Approx;

namespace {

template <class T>
Tensor<T> randn_t(std::vector<int64_t> shape, Rng& rng, double s = 1.0) {
    Tensor<T> t(shape);
    for (int64_t i = 0; i < t.numel(); ++i) t.at(i) = static_cast<T>(s * rng.normal());
    return t;
}

}  // namespace

TEST_CASE("separable conv 1-d maps channels and preserves length") {
    Rng rng(1, "sep1d");
    SepFlexConv1d<double> conv(3, 8, 9, 16, 3, 10.0, 1.0, true, ConvBackend::Direct, rng);
    Rng drop(0, "d");
    auto x = randn_t<double>({2, 3, 20}, rng);
    auto y = conv.forward(x, Mode::Train, drop);
    REQUIRE(y.rank() == 3);
    CHECK(y.dim(0) == 2);
    CHECK(y.dim(1) == 8);
    CHECK(y.dim(2) == 20);
    CHECK(conv.last_kernel.dim(0) == 9);
    CHECK(conv.last_kernel.dim(1) == 3);
}

TEST_CASE("kernel resolution rescale preserves discrete mass") {
    // evaluating the kernel with fewer taps multiplies values by K_train/K_eval,
    // the Riemann factor that keeps sum_u k[u] * f[u] comparable across rates
    Rng rng(2, "rescale");
    SepFlexConv1d<double> conv(2, 2, 32, 16, 3, 10.0, 1.0, true, ConvBackend::Direct, rng);
    auto full = conv.kernel_values(0);
    auto half = conv.kernel_values(16);
    REQUIRE(full.dim(0) == 32);
    REQUIRE(half.dim(0) == 16);
    // compare against an unscaled independent sample at the same coords
    auto [coords, raw] = conv.sample_kernel(16);
    for (int64_t i = 0; i < half.numel(); ++i)
        CHECK(half.at(i) == Approx(raw.at(i) * 2.0).margin(1e-12));
    // native resolution has no rescale
    auto [c2, raw_full] = conv.sample_kernel(32);
    for (int64_t i = 0; i < full.numel(); ++i) CHECK(full.at(i) == raw_full.at(i));
}

TEST_CASE("fft and direct backends agree inside the separable layer") {
    Rng ra(3, "be"), rb(3, "be");
    SepFlexConv1d<float> ca(2, 4, 7, 8, 2, 5.0, 1.0, true, ConvBackend::Direct, ra);
    SepFlexConv1d<float> cb(2, 4, 7, 8, 2, 5.0, 1.0, true, ConvBackend::Fft, rb);
    Rng rx(4, "x"), drop(0, "d");
    auto x = randn_t<float>({2, 2, 25}, rx);
    auto ya = ca.forward(x, Mode::Eval, drop);
    auto yb = cb.forward(x, Mode::Eval, drop);
    for (int64_t i = 0; i < ya.numel(); ++i) CHECK(ya.at(i) == Approx(yb.at(i)).margin(1e-4));
}

TEST_CASE("ccnn block is exactly gelu of the s4 block") {
    for (int seed : {10, 11, 12}) {
        Rng ra(seed, "blk"), rb(seed, "blk");
        ModelConfig cfg;
        cfg.channels = 6;
        cfg.kernel_size = 5;
        cfg.knet_hidden = 8;
        cfg.knet_layers = 2;
        cfg.dropout = 0.0;
        auto mk = [&](BlockStyle st, Rng& r) {
            ConvBlock<double, SepFlexConv1d<double>> blk;
            blk.style = st;
            blk.dropout_rate = 0.0;
            blk.norm1 = NormLayer<double>(NormKind::Batch, cfg.channels);
            blk.conv1 = SepFlexConv1d<double>(cfg.channels, cfg.channels, cfg.kernel_size, 8, 2,
                                              10.0, std::sqrt(2.0), true, ConvBackend::Direct, r);
            blk.lin = Dense<double>(cfg.channels, cfg.channels, 0.3, r);
            return blk;
        };
        auto bc = mk(BlockStyle::Ccnn, ra);
        auto bs = mk(BlockStyle::S4, rb);
        Rng rx(seed, "x"), d1(0, "d"), d2(0, "d");
        auto x = randn_t<double>({3, 6, 12}, rx);
        auto yc = bc.forward(x, Mode::Train, d1);
        auto ys = bs.forward(x, Mode::Train, d2);
        auto want = gelu(ys);
        REQUIRE(yc.numel() == want.numel());
        for (int64_t i = 0; i < yc.numel(); ++i) CHECK(yc.at(i) == want.at(i));  // bitwise
    }
}

TEST_CASE("flexnet block uses two convolutions and no linear mixer") {
    Rng rng(5, "flex");
    ModelConfig cfg;
    cfg.channels = 4;
    cfg.n_blocks = 1;
    cfg.kernel_size = 5;
    cfg.knet_hidden = 8;
    cfg.knet_layers = 2;
    cfg.style = BlockStyle::FlexNet;
    cfg.dropout = 0.0;
    Model1d<double> net(cfg, rng);
    std::set<std::string> names;
    net.visit_params([&](const std::string& n, Tensor<double>&, bool) { names.insert(n); });
    CHECK(names.count("block0.conv2.pw.w") == 1);
    CHECK(names.count("block0.norm2.gamma") == 1);
    CHECK(names.count("block0.lin.w") == 0);
    Rng rx(6, "x"), drop(0, "d");
    auto x = randn_t<double>({2, 1, 10}, rx);
    auto y = net.forward(x, Mode::Train, drop);
    CHECK(y.dim(0) == 2);
    CHECK(y.dim(1) == cfg.n_classes);
}

TEST_CASE("model forward shapes for all three geometries") {
    ModelConfig c1;
    c1.channels = 8;
    c1.n_blocks = 2;
    c1.kernel_size = 7;
    c1.knet_hidden = 8;
    c1.knet_layers = 2;
    c1.n_classes = 5;
    c1.dropout = 0.0;
    Rng r1(7, "m1");
    Model1d<float> m1(c1, r1);
    Rng rx(8, "x"), drop(0, "d");
    auto y1 = m1.forward(randn_t<float>({3, 1, 30}, rx), Mode::Train, drop);
    CHECK(y1.dim(0) == 3);
    CHECK(y1.dim(1) == 5);

    ModelConfig c2 = c1;
    c2.dims = 2;
    c2.kernel_size = 3;
    Rng r2(9, "m2");
    Model2d<float> m2(c2, r2);
    auto y2 = m2.forward(randn_t<float>({2, 1, 8, 8}, rx), Mode::Train, drop);
    CHECK(y2.dim(0) == 2);
    CHECK(y2.dim(1) == 5);

    ModelConfig c3 = c1;
    c3.dims = 3;
    c3.pointcloud = true;
    c3.in_channels = 3;
    c3.k_neighbors = 4;
    c3.norm = NormKind::Layer;
    Rng r3(10, "m3");
    PointModel<float> m3(c3, r3);
    const int64_t B = 2, P = 12;
    Tensor<float> positions({B, P, 3}), mask({B, P});
    for (int64_t i = 0; i < positions.numel(); ++i) positions.at(i) = (float)rx.uniform(-1, 1);
    for (int64_t i = 0; i < mask.numel(); ++i) mask.at(i) = 1;
    auto ctx = PointContext<float>::build(positions, mask, c3.k_neighbors);
    Tensor<float> feat({B, 3, P});
    for (int64_t b = 0; b < B; ++b)
        for (int64_t d = 0; d < 3; ++d)
            for (int64_t p = 0; p < P; ++p)
                feat.at((b * 3 + d) * P + p) = positions.at((b * P + p) * 3 + d);
    auto y3 = m3.forward(feat, Mode::Train, drop, ctx);
    CHECK(y3.dim(0) == B);
    CHECK(y3.dim(1) == 5);
}

TEST_CASE("model construction is deterministic in the seed") {
    ModelConfig cfg;
    cfg.channels = 8;
    cfg.n_blocks = 1;
    cfg.kernel_size = 9;
    cfg.knet_hidden = 8;
    cfg.knet_layers = 2;
    cfg.dropout = 0.0;
    Rng ra(77, "init"), rb(77, "init");
    Model1d<double> ma(cfg, ra), mb(cfg, rb);
    Rng rx(1, "x"), d1(5, "d"), d2(5, "d");
    auto x = randn_t<double>({2, 1, 16}, rx);
    auto ya = ma.forward(x, Mode::Train, d1);
    auto yb = mb.forward(x, Mode::Train, d2);
    for (int64_t i = 0; i < ya.numel(); ++i) CHECK(ya.at(i) == yb.at(i));
}

TEST_CASE("parameter names are unique and partition into kernel and direct") {
    ModelConfig cfg;
    cfg.channels = 8;
    cfg.n_blocks = 2;
    cfg.kernel_size = 7;
    cfg.knet_hidden = 8;
    cfg.knet_layers = 2;
    Rng rng(11, "names");
    Model1d<double> net(cfg, rng);
    std::set<std::string> names;
    int64_t kernel_params = 0, direct_params = 0, total = 0;
    net.visit_params([&](const std::string& n, Tensor<double>& p, bool is_kernel) {
        CHECK(names.insert(n).second);
        (is_kernel ? kernel_params : direct_params) += p.numel();
        total += p.numel();
    });
    CHECK(kernel_params > 0);
    CHECK(direct_params > 0);
    CHECK(total == param_count(net));
    CHECK(names.count("head.w") == 1);
    CHECK(names.count("stem.knet.gabor0.freq") == 1);
    CHECK(names.count("block1.lin.b") == 1);
    CHECK(names.count("final_norm.gamma") == 1);
    // pointwise mixers inside conv layers are not kernel-generator params
    bool pw_flag_checked = false;
    net.visit_params([&](const std::string& n, Tensor<double>&, bool is_kernel) {
        if (n == "stem.pw.w") {
            CHECK_FALSE(is_kernel);
            pw_flag_checked = true;
        }
        if (n.find(".knet.") != std::string::npos) CHECK(is_kernel);
    });
    CHECK(pw_flag_checked);
}

TEST_CASE("disabling variance correction rescales generated kernels") {
    ModelConfig cfg;
    cfg.channels = 4;
    cfg.n_blocks = 1;
    cfg.kernel_size = 9;
    cfg.knet_hidden = 8;
    cfg.knet_layers = 3;
    Rng rng(13, "vc");
    Model1d<double> net(cfg, rng);
    double corr = net.stem.knet.correction();
    CHECK(corr == Approx(1.0 / 3.0));  // gain 1, n_in 1, n_omega 9
    auto before = net.stem.kernel_values(0);
    net.disable_variance_correction();
    CHECK(net.stem.knet.correction() == 1.0);
    auto after = net.stem.kernel_values(0);
    for (int64_t i = 0; i < before.numel(); ++i)
        CHECK(after.at(i) == Approx(before.at(i) / corr).margin(1e-12));
}

TEST_CASE("eval kernel-size override keeps output shape and changes taps") {
    ModelConfig cfg;
    cfg.channels = 6;
    cfg.n_blocks = 1;
    cfg.kernel_size = 16;
    cfg.knet_hidden = 8;
    cfg.knet_layers = 2;
    cfg.dropout = 0.0;
    Rng rng(14, "keval");
    Model1d<float> net(cfg, rng);
    Rng rx(15, "x"), drop(0, "d");
    auto x = randn_t<float>({2, 1, 32}, rx);
    auto y_full = net.forward(x, Mode::Eval, drop);
    CHECK(net.stem.last_kernel.dim(0) == 16);
    auto y_half = net.forward(x, Mode::Eval, drop, int64_t(8));
    CHECK(net.stem.last_kernel.dim(0) == 8);
    CHECK(y_half.dim(0) == 2);
    CHECK(y_half.dim(1) == cfg.n_classes);
    bool identical = true;
    for (int64_t i = 0; i < y_full.numel(); ++i)
        if (y_full.at(i) != y_half.at(i)) identical = false;
    CHECK_FALSE(identical);
}

TEST_CASE("train-mode forward is reproducible given the dropout stream") {
    ModelConfig cfg;
    cfg.channels = 6;
    cfg.n_blocks = 1;
    cfg.kernel_size = 5;
    cfg.knet_hidden = 8;
    cfg.knet_layers = 2;
    cfg.dropout = 0.5;
    Rng rng(16, "dr");
    Model1d<float> net(cfg, rng);
    Rng rx(17, "x");
    auto x = randn_t<float>({2, 1, 12}, rx);
    Rng d1(21, "drop"), d2(21, "drop"), d3(22, "drop");
    auto y1 = net.forward(x, Mode::Train, d1);
    auto y2 = net.forward(x, Mode::Train, d2);
    auto y3 = net.forward(x, Mode::Train, d3);
    bool same12 = true, same13 = true;
    for (int64_t i = 0; i < y1.numel(); ++i) {
        if (y1.at(i) != y2.at(i)) same12 = false;
        if (y1.at(i) != y3.at(i)) same13 = false;
    }
    CHECK(same12);
    CHECK_FALSE(same13);
}
