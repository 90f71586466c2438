#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "blocks.hpp"
#include "data.hpp"
#include "model.hpp"
#include "ops.hpp"
#include "optim.hpp"
#include "rng.hpp"
#include "tape.hpp"
#include "tensor.hpp"

namespace ccnn {

// Raised when a training step produces a non-finite loss; the CLI maps it
// to exit code 3.
struct NumericalError : std::runtime_error {
    int64_t step;
    NumericalError(int64_t at, const std::string& msg) : std::runtime_error(msg), step(at) {}
};

struct TrainSettings {
    int64_t epochs = 10;
    int64_t batch_size = 32;
    double learning_rate = 1e-2;
    double weight_decay = 0.0;
    double kernel_decay = 0.0;   // strength of the generated-kernel L2 term
    double warmup_epochs = 1.0;
    uint64_t seed = 0;
};

struct EpochRow {
    int64_t epoch = 0;
    double lr = 0, train_loss = 0, train_acc = 0, val_loss = 0, val_acc = 0;
};

struct RunResult {
    std::vector<EpochRow> rows;
    double best_val_acc = -1.0;
    int64_t best_epoch = -1;
    double wall_seconds = 0;
};

using EpochCallback = std::function<void(const EpochRow&)>;
using BestCallback = std::function<void(const EpochRow&)>;

inline std::vector<int64_t> shuffled_indices(int64_t n, Rng& rng) {
    std::vector<int64_t> idx(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    for (int64_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.index(i + 1)]);
    return idx;
}

template <class T>
int64_t count_correct(const Tensor<T>& logits, const std::vector<int64_t>& labels) {
    const int64_t B = logits.dim(0), C = logits.dim(1);
    int64_t correct = 0;
    for (int64_t b = 0; b < B; ++b) {
        int64_t best = 0;
        for (int64_t c = 1; c < C; ++c)
            if (logits.at(b * C + c) > logits.at(b * C + best)) best = c;
        if (best == labels[static_cast<size_t>(b)]) ++correct;
    }
    return correct;
}

// [B x P x D] positions -> [B x D x P] features (coordinates as channels).
template <class T>
Tensor<T> cloud_features(const Tensor<T>& positions) {
    const int64_t B = positions.dim(0), P = positions.dim(1), D = positions.dim(2);
    Tensor<T> f({B, D, P});
    for (int64_t b = 0; b < B; ++b)
        for (int64_t p = 0; p < P; ++p)
            for (int64_t d = 0; d < D; ++d)
                f.at((b * D + d) * P + p) = positions.at((b * P + p) * D + d);
    return f;
}

namespace detail {

inline std::vector<int64_t> range_indices(int64_t lo, int64_t hi) {
    std::vector<int64_t> idx(static_cast<size_t>(hi - lo));
    for (int64_t i = lo; i < hi; ++i) idx[static_cast<size_t>(i - lo)] = i;
    return idx;
}

}  // namespace detail

// Mean loss and accuracy over a grid dataset (eval mode, no tape).
// k_eval > 0 re-samples kernels at that size (resolution override).
template <class T, class Net>
std::pair<double, double> evaluate_grid(Net& net, const GridDataset<T>& ds, int64_t batch_size,
                                        int64_t k_eval = 0) {
    Rng unused(0);
    const int64_t N = ds.size();
    check(N > 0, "evaluate: empty dataset");
    double loss_sum = 0;
    int64_t correct = 0;
    for (int64_t start = 0; start < N; start += batch_size) {
        const int64_t stop = std::min(N, start + batch_size);
        GridDataset<T> b = gather_grid(ds, detail::range_indices(start, stop));
        Tensor<T> logits = net.forward(b.x, Mode::Eval, unused, k_eval);
        Tensor<T> loss = softmax_cross_entropy(logits, b.labels);
        loss_sum += static_cast<double>(loss.at(0)) * static_cast<double>(stop - start);
        correct += count_correct(logits, b.labels);
    }
    return {loss_sum / static_cast<double>(N), static_cast<double>(correct) / static_cast<double>(N)};
}

template <class T, class Net>
std::pair<double, double> evaluate_cloud(Net& net, const CloudDataset<T>& ds, int64_t batch_size,
                                         int64_t k_neighbors) {
    Rng unused(0);
    const int64_t N = ds.size();
    check(N > 0, "evaluate: empty dataset");
    double loss_sum = 0;
    int64_t correct = 0;
    for (int64_t start = 0; start < N; start += batch_size) {
        const int64_t stop = std::min(N, start + batch_size);
        CloudDataset<T> b = gather_cloud(ds, detail::range_indices(start, stop));
        auto ctx = PointContext<T>::build(b.positions, b.mask, k_neighbors);
        Tensor<T> logits = net.forward(cloud_features(b.positions), Mode::Eval, unused, ctx);
        Tensor<T> loss = softmax_cross_entropy(logits, b.labels);
        loss_sum += static_cast<double>(loss.at(0)) * static_cast<double>(stop - start);
        correct += count_correct(logits, b.labels);
    }
    return {loss_sum / static_cast<double>(N), static_cast<double>(correct) / static_cast<double>(N)};
}

namespace detail {

// Shared epoch loop. `step_fn(indices, lr)` runs one optimization step and
// returns (total loss value, correct count); `val_fn()` returns (loss, acc).
template <class StepFn, class ValFn>
RunResult run_epochs(int64_t n_train, const TrainSettings& s, StepFn&& step_fn, ValFn&& val_fn,
                     const EpochCallback& on_epoch, const BestCallback& on_best) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult res;
    const int64_t B = s.batch_size;
    const int64_t steps_per_epoch = n_train / B;  // partial batches dropped
    check(steps_per_epoch >= 1, "training set smaller than one batch");
    int64_t gstep = 0;
    for (int64_t e = 0; e < s.epochs; ++e) {
        Rng shuffle_rng(s.seed, "shuffle-" + std::to_string(e));
        const std::vector<int64_t> order = shuffled_indices(n_train, shuffle_rng);
        double loss_sum = 0, lr_last = 0;
        int64_t correct = 0, seen = 0;
        for (int64_t step = 0; step < steps_per_epoch; ++step) {
            const double epoch_frac =
                static_cast<double>(gstep) / static_cast<double>(steps_per_epoch);
            const double lr = lr_at(epoch_frac, static_cast<double>(s.epochs), s.warmup_epochs,
                                    s.learning_rate);
            std::vector<int64_t> idx(order.begin() + step * B, order.begin() + (step + 1) * B);
            auto [lv, ncorrect] = step_fn(idx, lr);
            if (!std::isfinite(lv))
                throw NumericalError(gstep, "non-finite loss at epoch " + std::to_string(e) +
                                                ", step " + std::to_string(step));
            loss_sum += lv * static_cast<double>(B);
            correct += ncorrect;
            seen += B;
            lr_last = lr;
            ++gstep;
        }
        auto [vl, va] = val_fn();
        EpochRow row{e, lr_last, loss_sum / static_cast<double>(seen),
                     static_cast<double>(correct) / static_cast<double>(seen), vl, va};
        res.rows.push_back(row);
        if (on_epoch) on_epoch(row);
        if (va > res.best_val_acc) {
            res.best_val_acc = va;
            res.best_epoch = e;
            if (on_best) on_best(row);
        }
    }
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

}  // namespace detail

template <class T, class Net>
RunResult train_grid(Net& net, AdamW<T>& opt, const GridDataset<T>& train,
                     const GridDataset<T>& val, const TrainSettings& s,
                     const EpochCallback& on_epoch = nullptr, const BestCallback& on_best = nullptr) {
    Rng drop_rng(s.seed, "dropout");
    auto step_fn = [&](const std::vector<int64_t>& idx, double lr) {
        GridDataset<T> b = gather_grid(train, idx);
        TapeScope<T> scope;
        Tensor<T> logits = net.forward(b.x, Mode::Train, drop_rng, 0);
        Tensor<T> loss = softmax_cross_entropy(logits, b.labels);
        if (s.kernel_decay > 0)
            loss = add(loss, kernel_l2_penalty(net.collect_kernels(),
                                               static_cast<T>(s.kernel_decay)));
        const double lv = loss.at(0);
        opt.zero_grad();
        scope.backward(loss);
        opt.step(lr);
        return std::pair<double, int64_t>(lv, count_correct(logits, b.labels));
    };
    auto val_fn = [&]() { return evaluate_grid(net, val, s.batch_size, 0); };
    return detail::run_epochs(train.size(), s, step_fn, val_fn, on_epoch, on_best);
}

template <class T, class Net>
RunResult train_cloud(Net& net, AdamW<T>& opt, const CloudDataset<T>& train,
                      const CloudDataset<T>& val, int64_t k_neighbors, const TrainSettings& s,
                      const EpochCallback& on_epoch = nullptr,
                      const BestCallback& on_best = nullptr) {
    Rng drop_rng(s.seed, "dropout");
    auto step_fn = [&](const std::vector<int64_t>& idx, double lr) {
        CloudDataset<T> b = gather_cloud(train, idx);
        auto ctx = PointContext<T>::build(b.positions, b.mask, k_neighbors);
        TapeScope<T> scope;
        Tensor<T> logits = net.forward(cloud_features(b.positions), Mode::Train, drop_rng, ctx);
        Tensor<T> loss = softmax_cross_entropy(logits, b.labels);
        if (s.kernel_decay > 0)
            loss = add(loss, kernel_l2_penalty(net.collect_kernels(),
                                               static_cast<T>(s.kernel_decay)));
        const double lv = loss.at(0);
        opt.zero_grad();
        scope.backward(loss);
        opt.step(lr);
        return std::pair<double, int64_t>(lv, count_correct(logits, b.labels));
    };
    auto val_fn = [&]() { return evaluate_cloud(net, val, s.batch_size, k_neighbors); };
    return detail::run_epochs(train.size(), s, step_fn, val_fn, on_epoch, on_best);
}

inline const char* kMetricsHeader = "epoch,lr,train_loss,train_acc,val_loss,val_acc";

}  // namespace ccnn
