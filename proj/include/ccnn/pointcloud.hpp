#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ops.hpp"
#include "tape.hpp"
#include "tensor.hpp"
#include "threads.hpp"

namespace ccnn {

// Brute-force k-nearest-neighbour indices among unmasked points. Distances
// tie-break by index so the result is deterministic. A point is its own
// nearest neighbour (offset zero). Queries on masked rows are not emitted.
// pos: [P x D] positions, valid: per-point validity, k clamped to the number
// of valid points.
inline std::vector<int64_t> knn_indices(const std::vector<double>& pos, int64_t P, int64_t D,
                                        const std::vector<char>& valid, int64_t k) {
    check(static_cast<int64_t>(valid.size()) == P, "knn: validity size mismatch");
    int64_t nvalid = std::count(valid.begin(), valid.end(), char(1));
    check(nvalid >= 1, "knn: no valid points");
    check(k >= 1 && k <= nvalid,
          "knn: k=" + std::to_string(k) + " but only " + std::to_string(nvalid) + " valid points");
    std::vector<int64_t> out(static_cast<size_t>(P * k), 0);
    parallel_for(P, [&](int64_t p) {
        if (!valid[p]) return;
        std::vector<std::pair<double, int64_t>> dist;
        dist.reserve(nvalid);
        for (int64_t q = 0; q < P; ++q) {
            if (!valid[q]) continue;
            double d2 = 0;
            for (int64_t d = 0; d < D; ++d) {
                double diff = pos[p * D + d] - pos[q * D + d];
                d2 += diff * diff;
            }
            dist.emplace_back(d2, q);
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        for (int64_t j = 0; j < k; ++j) out[p * k + j] = dist[j].second;
    });
    return out;
}

// Depthwise continuous convolution over a point neighbourhood:
//   y[b,c,p] = (1/k) * sum_j kv[b, p*k+j, c] * feat[b, c, nbr[p,j]]
// kv holds the kernel values generated at the relative offsets of each
// neighbour pair (so it is batch- and point-dependent), feat the input
// features. Masked points produce zero output rows.
template <class T>
Tensor<T> conv_pointcloud_depthwise(const Tensor<T>& feat, const Tensor<T>& kv,
                                    const std::vector<int64_t>& nbr, int64_t k,
                                    const Tensor<T>& mask) {
    check(feat.rank() == 3, "conv_pointcloud: features must be [B x C x P], got " +
                                shape_str(feat.shape()));
    const int64_t B = feat.dim(0), C = feat.dim(1), P = feat.dim(2);
    check(kv.rank() == 3 && kv.dim(0) == B && kv.dim(1) == P * k && kv.dim(2) == C,
          "conv_pointcloud: kernel values " + shape_str(kv.shape()) + " do not match [B x P*k x C]");
    check(static_cast<int64_t>(nbr.size()) == B * P * k, "conv_pointcloud: neighbour list size");
    check(mask.rank() == 2 && mask.dim(0) == B && mask.dim(1) == P,
          "conv_pointcloud: mask " + shape_str(mask.shape()) + " does not match [B x P]");
    bool rec = recording<T>({&feat, &kv});
    Tensor<T> out = detail::make_out<T>({B, C, P}, rec);
    const T inv_k = T(1) / static_cast<T>(k);
    parallel_for(B, [&](int64_t b) {
        for (int64_t p = 0; p < P; ++p) {
            if (mask.at(b * P + p) == T(0)) continue;
            const int64_t* np = nbr.data() + (b * P + p) * k;
            for (int64_t c = 0; c < C; ++c) {
                T acc = T(0);
                for (int64_t j = 0; j < k; ++j)
                    acc += kv.at(((b * P + p) * k + j) * C + c) * feat.at((b * C + c) * P + np[j]);
                out.at((b * C + c) * P + p) = acc * inv_k;
            }
        }
    });
    if (rec) {
        Tensor<T> tf = feat, tk = kv, tm = mask, to = out;
        auto nbr_copy = std::make_shared<std::vector<int64_t>>(nbr);
        Tape<T>::active()->record([tf, tk, tm, to, nbr_copy, B, C, P, k, inv_k]() mutable {
            const auto& g = to.grad();
            const bool need_f = tf.tracked();
            const bool need_k = tk.tracked();
            T* gf = need_f ? tf.grad().data() : nullptr;
            T* gk = need_k ? tk.grad().data() : nullptr;
            for (int64_t b = 0; b < B; ++b)
                for (int64_t p = 0; p < P; ++p) {
                    if (tm.at(b * P + p) == T(0)) continue;
                    const int64_t* np = nbr_copy->data() + (b * P + p) * k;
                    for (int64_t c = 0; c < C; ++c) {
                        T gv = g[(b * C + c) * P + p] * inv_k;
                        if (gv == T(0)) continue;
                        for (int64_t j = 0; j < k; ++j) {
                            int64_t kidx = ((b * P + p) * k + j) * C + c;
                            int64_t fidx = (b * C + c) * P + np[j];
                            if (need_k) gk[kidx] += gv * tf.at(fidx);
                            if (need_f) gf[fidx] += gv * tk.at(kidx);
                        }
                    }
                }
        });
    }
    return out;
}

}  // namespace ccnn
