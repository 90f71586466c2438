#include <catch2/catch_amalgamated.hpp>
#include <ccnn/ccnn.hpp>

#include <cmath>

using namespace ccnn;
using Catch::Approx;

namespace {

Tensor<double> filled(std::vector<int64_t> shape, std::initializer_list<double> vals) {
    Tensor<double> t(shape);
    int64_t i = 0;
    for (double v : vals) t.at(i++) = v;
    REQUIRE(i == t.numel());
    return t;
}

}  // namespace

TEST_CASE("tensor shape bookkeeping") {
    Tensor<double> t({2, 3, 4});
    CHECK(t.rank() == 3);
    CHECK(t.numel() == 24);
    CHECK(t.dim(0) == 2);
    CHECK(t.dim(2) == 4);
    t.at(23) = 7.5;
    CHECK(t.at(23) == 7.5);
    CHECK(t.at(0) == 0.0);  // zero initialized
}

TEST_CASE("tensor handles share storage") {
    Tensor<double> a({3});
    Tensor<double> b = a;
    b.at(1) = 42.0;
    CHECK(a.at(1) == 42.0);
}

TEST_CASE("elementwise arithmetic values") {
    auto a = filled({2, 2}, {1, 2, 3, 4});
    auto b = filled({2, 2}, {10, 20, 30, 40});
    auto s = add(a, b);
    auto d = sub(b, a);
    auto m = mul(a, b);
    for (int64_t i = 0; i < 4; ++i) {
        CHECK(s.at(i) == a.at(i) + b.at(i));
        CHECK(d.at(i) == b.at(i) - a.at(i));
        CHECK(m.at(i) == a.at(i) * b.at(i));
    }
    auto sc = scale(a, -0.5);
    auto off = add_scalar(a, 3.0);
    for (int64_t i = 0; i < 4; ++i) {
        CHECK(sc.at(i) == -0.5 * a.at(i));
        CHECK(off.at(i) == a.at(i) + 3.0);
    }
}

TEST_CASE("transcendental ops match libm") {
    auto a = filled({4}, {0.2, -1.3, 2.5, 0.0});
    auto e = exp_op(a);
    auto s = sin_op(a);
    auto q = square(a);
    for (int64_t i = 0; i < 4; ++i) {
        CHECK(e.at(i) == Approx(std::exp(a.at(i))));
        CHECK(s.at(i) == Approx(std::sin(a.at(i))));
        CHECK(q.at(i) == Approx(a.at(i) * a.at(i)));
    }
    auto pos = filled({3}, {0.5, 1.0, 7.3});
    auto l = log_op(pos);
    for (int64_t i = 0; i < 3; ++i) CHECK(l.at(i) == Approx(std::log(pos.at(i))));
}

TEST_CASE("gelu matches the exact gaussian form") {
    // gelu(x) = x * Phi(x) with Phi the standard normal CDF
    auto x = filled({5}, {-2.0, -0.5, 0.0, 0.5, 2.0});
    auto y = gelu(x);
    for (int64_t i = 0; i < 5; ++i) {
        double phi = 0.5 * (1.0 + std::erf(x.at(i) / std::sqrt(2.0)));
        CHECK(y.at(i) == Approx(x.at(i) * phi).margin(1e-12));
    }
    CHECK(y.at(2) == 0.0);
}

TEST_CASE("matmul against hand-computed product") {
    auto a = filled({2, 3}, {1, 2, 3, 4, 5, 6});
    auto b = filled({3, 2}, {7, 8, 9, 10, 11, 12});
    auto c = matmul(a, b);
    REQUIRE(c.rank() == 2);
    CHECK(c.dim(0) == 2);
    CHECK(c.dim(1) == 2);
    CHECK(c.at(0) == 58.0);   // 1*7+2*9+3*11
    CHECK(c.at(1) == 64.0);   // 1*8+2*10+3*12
    CHECK(c.at(2) == 139.0);  // 4*7+5*9+6*11
    CHECK(c.at(3) == 154.0);
}

TEST_CASE("linear is x W^T + b") {
    auto x = filled({1, 3}, {1, 2, 3});
    auto w = filled({2, 3}, {1, 0, 0, 0, 1, 1});
    auto b = filled({2}, {10, 20});
    auto y = linear(x, w, b);
    CHECK(y.at(0) == 11.0);  // 1 + 10
    CHECK(y.at(1) == 25.0);  // 2+3 + 20
}

TEST_CASE("reductions") {
    auto a = filled({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(sum_all(a).at(0) == 21.0);
    CHECK(mean_all(a).at(0) == Approx(3.5));
}

TEST_CASE("gather_rows picks rows with repetition") {
    auto x = filled({3, 2}, {1, 2, 3, 4, 5, 6});
    auto g = gather_rows(x, {2, 0, 2});
    REQUIRE(g.dim(0) == 3);
    CHECK(g.at(0) == 5.0);
    CHECK(g.at(1) == 6.0);
    CHECK(g.at(2) == 1.0);
    CHECK(g.at(4) == 5.0);
}

TEST_CASE("softmax cross entropy on a known distribution") {
    // logits [0, log(3)] with label 1: p = [0.25, 0.75], loss = -log(0.75)
    auto logits = filled({1, 2}, {0.0, std::log(3.0)});
    auto loss = softmax_cross_entropy(logits, {1});
    CHECK(loss.at(0) == Approx(-std::log(0.75)).epsilon(1e-12));
    // uniform logits over 10 classes: loss = log(10)
    Tensor<double> u({4, 10});
    auto l2 = softmax_cross_entropy(u, {0, 3, 7, 9});
    CHECK(l2.at(0) == Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("softmax cross entropy is shift invariant and overflow safe") {
    auto a = filled({1, 3}, {1.0, 2.0, 3.0});
    auto b = filled({1, 3}, {1001.0, 1002.0, 1003.0});
    auto la = softmax_cross_entropy(a, {2});
    auto lb = softmax_cross_entropy(b, {2});
    CHECK(la.at(0) == Approx(lb.at(0)).epsilon(1e-10));
    CHECK(std::isfinite(lb.at(0)));
}

TEST_CASE("dropout scales kept units by 1/(1-p) and is identity in eval") {
    Rng rng(3, "drop");
    Tensor<double> x({1, 1000});
    for (int64_t i = 0; i < x.numel(); ++i) x.at(i) = 1.0;
    auto y = dropout(x, 0.25, true, rng);
    int64_t kept = 0;
    for (int64_t i = 0; i < y.numel(); ++i) {
        if (y.at(i) != 0.0) {
            CHECK(y.at(i) == Approx(1.0 / 0.75));
            ++kept;
        }
    }
    CHECK(kept > 650);
    CHECK(kept < 850);
    Rng rng2(3, "drop");
    auto z = dropout(x, 0.25, false, rng2);
    for (int64_t i = 0; i < z.numel(); ++i) CHECK(z.at(i) == 1.0);
}

TEST_CASE("transpose2d and to_causal_taps layouts") {
    auto x = filled({2, 3}, {1, 2, 3, 4, 5, 6});
    auto t = transpose2d(x);
    REQUIRE(t.dim(0) == 3);
    REQUIRE(t.dim(1) == 2);
    CHECK(t.at(0) == 1.0);
    CHECK(t.at(1) == 4.0);
    CHECK(t.at(5) == 6.0);
    // causal taps reverse the row axis after transposing: row j of the input
    // (kernel sample at coordinate index j) becomes tap K-1-j
    auto c = to_causal_taps(x);  // [K x C] -> [C x K]
    REQUIRE(c.dim(0) == 3);
    REQUIRE(c.dim(1) == 2);
    CHECK(c.at(0) == 4.0);  // channel 0, tap 0 = input row K-1=1, col 0
    CHECK(c.at(1) == 1.0);
    CHECK(c.at(2) == 5.0);
}

TEST_CASE("backward through a composite expression") {
    // z = sum((a*b + exp(a))^2); dz/da = 2(ab+e^a)(b+e^a), dz/db = 2(ab+e^a)a
    auto a = filled({3}, {0.5, -1.0, 2.0});
    auto b = filled({3}, {1.5, 0.7, -0.3});
    a.set_tracked(true);
    b.set_tracked(true);
    {
        TapeScope<double> scope;
        auto z = sum_all(square(add(mul(a, b), exp_op(a))));
        scope.backward(z);
    }
    for (int64_t i = 0; i < 3; ++i) {
        double ea = std::exp(a.at(i));
        double inner = a.at(i) * b.at(i) + ea;
        CHECK(a.grad()[i] == Approx(2 * inner * (b.at(i) + ea)).epsilon(1e-10));
        CHECK(b.grad()[i] == Approx(2 * inner * a.at(i)).epsilon(1e-10));
    }
}

TEST_CASE("gradients accumulate across uses and reset on zero_grad") {
    auto a = filled({2}, {3.0, -1.0});
    a.set_tracked(true);
    {
        TapeScope<double> scope;
        auto z = sum_all(add(a, a));  // dz/da = 2
        scope.backward(z);
    }
    CHECK(a.grad()[0] == 2.0);
    {
        TapeScope<double> scope;
        auto z = sum_all(a);
        scope.backward(z);
    }
    CHECK(a.grad()[0] == 3.0);  // accumulated 2 + 1
    a.zero_grad();
    CHECK(a.grad()[0] == 0.0);
}

TEST_CASE("no recording outside a tape scope") {
    auto a = filled({2}, {1.0, 2.0});
    a.set_tracked(true);
    auto y = square(a);  // outside any TapeScope
    CHECK_FALSE(y.tracked());
}

TEST_CASE("rng streams are independent and reproducible") {
    Rng a(123, "alpha"), b(123, "alpha"), c(123, "beta"), d(124, "alpha");
    bool same_ab = true, same_ac = true, same_ad = true;
    std::vector<double> va, vb, vc, vd;
    for (int i = 0; i < 16; ++i) {
        va.push_back(a.uniform());
        vb.push_back(b.uniform());
        vc.push_back(c.uniform());
        vd.push_back(d.uniform());
    }
    CHECK(va == vb);
    CHECK(va != vc);
    CHECK(va != vd);
    for (double v : va) {
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
    }
}

TEST_CASE("rng normal moments") {
    Rng r(7, "moments");
    const int n = 20000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        double x = r.normal();
        s1 += x;
        s2 += x * x;
    }
    CHECK(std::abs(s1 / n) < 0.03);
    CHECK(s2 / n == Approx(1.0).margin(0.05));
}

TEST_CASE("shape mismatches are rejected") {
    Tensor<double> a({2, 3}), b({3, 2});
    CHECK_THROWS(add(a, b));
    CHECK_THROWS(matmul(a, a));
}
