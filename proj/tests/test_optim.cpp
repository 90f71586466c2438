#include <catch2/catch_amalgamated.hpp>
#include <ccnn/ccnn.hpp>

#include <cmath>

using namespace ccnn;
using Catch::Approx;

namespace {

// Minimal one-parameter "network" for optimizer unit tests.
template <class T>
struct OneParamNet {
    Tensor<T> p;
    bool kernel_flag;
    OneParamNet(std::vector<int64_t> shape, bool is_kernel) : p(shape), kernel_flag(is_kernel) {
        p.set_tracked(true);
    }
    void visit_params(const ParamVisitor<T>& fn) { fn("p", p, kernel_flag); }
};

}  // namespace

TEST_CASE("learning-rate schedule endpoints and shape") {
    const double base = 0.4, total = 10, warmup = 2;
    CHECK(lr_at(0, total, warmup, base) == 0.0);
    CHECK(lr_at(1, total, warmup, base) == Approx(base / 2));
    CHECK(lr_at(2, total, warmup, base) == Approx(base));  // warmup complete
    // cosine midpoint of the remaining 8 epochs: epoch 6 -> base/2
    CHECK(lr_at(6, total, warmup, base) == Approx(base / 2).epsilon(1e-12));
    CHECK(lr_at(10, total, warmup, base) == Approx(0.0).margin(1e-12));
    CHECK(lr_at(12, total, warmup, base) == Approx(0.0).margin(1e-12));  // clamped past the end
    // monotone decay after warmup
    double prev = lr_at(2, total, warmup, base);
    for (double e = 2.25; e <= 10; e += 0.25) {
        double cur = lr_at(e, total, warmup, base);
        CHECK(cur <= prev + 1e-15);
        prev = cur;
    }
    // no warmup
    CHECK(lr_at(0, 10, 0, base) == Approx(base));
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
    // with bias correction, the very first update is lr * g/|g| (eps aside)
    OneParamNet<double> net({3}, false);
    net.p.at(0) = 1.0;
    net.p.at(1) = -2.0;
    net.p.at(2) = 0.5;
    AdamW<double> opt(net, 0.0);
    {
        TapeScope<double> scope;
        auto loss = sum_all(mul(net.p, net.p));  // d/dp = 2p
        scope.backward(loss);
    }
    opt.step(0.1);
    CHECK(net.p.at(0) == Approx(1.0 - 0.1).epsilon(1e-6));
    CHECK(net.p.at(1) == Approx(-2.0 + 0.1).epsilon(1e-6));
    CHECK(net.p.at(2) == Approx(0.5 - 0.1).epsilon(1e-6));
    CHECK(opt.steps_taken() == 1);
}

TEST_CASE("adam converges on a quadratic") {
    OneParamNet<double> net({2}, false);
    net.p.at(0) = 5.0;
    net.p.at(1) = -3.0;
    AdamW<double> opt(net, 0.0);
    for (int i = 0; i < 400; ++i) {
        opt.zero_grad();
        {
            TapeScope<double> scope;
            auto loss = sum_all(square(add_scalar(net.p, -1.0)));  // min at p = 1
            scope.backward(loss);
        }
        opt.step(0.05);
    }
    CHECK(net.p.at(0) == Approx(1.0).margin(1e-2));
    CHECK(net.p.at(1) == Approx(1.0).margin(1e-2));
}

TEST_CASE("weight decay is decoupled and multiplicative") {
    // zero gradient => pure decay: p <- p * (1 - lr * wd), no adam movement
    OneParamNet<double> net({2, 2}, false);
    for (int64_t i = 0; i < 4; ++i) net.p.at(i) = 2.0;
    AdamW<double> opt(net, 0.1);
    {
        TapeScope<double> scope;
        auto loss = scale(sum_all(net.p), 0.0);  // gradient identically zero
        scope.backward(loss);
    }
    opt.step(0.5);
    for (int64_t i = 0; i < 4; ++i) CHECK(net.p.at(i) == Approx(2.0 * (1 - 0.5 * 0.1)).epsilon(1e-12));
}

TEST_CASE("vectors, biases, and kernel-generator params are exempt from decay") {
    auto decay_of = [](std::vector<int64_t> shape, bool is_kernel) {
        OneParamNet<double> net(shape, is_kernel);
        for (int64_t i = 0; i < net.p.numel(); ++i) net.p.at(i) = 1.0;
        AdamW<double> opt(net, 0.5);
        {
            TapeScope<double> scope;
            auto loss = scale(sum_all(net.p), 0.0);
            scope.backward(loss);
        }
        opt.step(1.0);
        return net.p.at(0);
    };
    CHECK(decay_of({4, 4}, false) == Approx(0.5));  // matrix, not kernel: decayed
    CHECK(decay_of({4}, false) == 1.0);             // rank-1: exempt
    CHECK(decay_of({4, 4}, true) == 1.0);           // kernel generator: exempt
}

TEST_CASE("zero_grad clears accumulated gradients") {
    OneParamNet<double> net({2}, false);
    AdamW<double> opt(net, 0.0);
    {
        TapeScope<double> scope;
        auto loss = sum_all(net.p);
        scope.backward(loss);
    }
    CHECK(net.p.grad()[0] == 1.0);
    opt.zero_grad();
    CHECK(net.p.grad()[0] == 0.0);
}

TEST_CASE("generated-kernel penalty value and gradient route") {
    Tensor<double> k1({2, 2}), k2({3});
    for (int64_t i = 0; i < 4; ++i) k1.at(i) = double(i + 1);  // sum sq = 30
    for (int64_t i = 0; i < 3; ++i) k2.at(i) = 2.0;            // sum sq = 12
    k1.set_tracked(true);
    k2.set_tracked(true);
    {
        TapeScope<double> scope;
        auto pen = kernel_l2_penalty<double>({k1, k2}, 0.1);
        CHECK(pen.at(0) == Approx(0.1 * 0.5 * 42.0));
        scope.backward(pen);
    }
    // d/dk (s/2 ||k||^2) = s * k
    for (int64_t i = 0; i < 4; ++i) CHECK(k1.grad()[i] == Approx(0.1 * k1.at(i)));
    for (int64_t i = 0; i < 3; ++i) CHECK(k2.grad()[i] == Approx(0.1 * k2.at(i)));
}

TEST_CASE("kernel penalty reaches generator parameters through the sampler") {
    Rng rng(1, "pen");
    SepFlexConv1d<double> conv(2, 2, 9, 8, 2, 5.0, 1.0, true, ConvBackend::Direct, rng);
    Rng drop(0, "d");
    Tensor<double> x({1, 2, 12});
    for (int64_t i = 0; i < x.numel(); ++i) x.at(i) = 0.1 * double(i % 5);
    double g_with = 0, g_without = 0;
    for (bool with_pen : {false, true}) {
        conv.knet.visit_params("k", [](const std::string&, Tensor<double>& p, bool) {
            p.zero_grad();
        });
        {
            TapeScope<double> scope;
            auto y = conv.forward(x, Mode::Train, drop);
            auto loss = sum_all(y);
            if (with_pen) loss = add(loss, kernel_l2_penalty<double>({conv.last_kernel}, 10.0));
            scope.backward(loss);
        }
        double gsum = 0;
        conv.knet.visit_params("k", [&](const std::string&, Tensor<double>& p, bool) {
            if (p.has_grad())
                for (double g : p.grad()) gsum += std::abs(g);
        });
        (with_pen ? g_with : g_without) = gsum;
    }
    CHECK(g_with > g_without * 1.01);  // the penalty adds generator gradient
}
