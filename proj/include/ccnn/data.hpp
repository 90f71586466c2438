#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <zlib.h>

#include "rng.hpp"
#include "tensor.hpp"

namespace ccnn {

// --- IDX files ------------------------------------------------------------

struct IdxData {
    std::vector<int64_t> dims;
    std::vector<uint8_t> bytes;  // row-major payload, one byte per element
};

namespace detail {

inline std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(static_cast<bool>(in), "cannot open file: " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

inline std::vector<uint8_t> gunzip(const std::vector<uint8_t>& in, const std::string& path) {
    z_stream zs{};
    check(inflateInit2(&zs, 16 + MAX_WBITS) == Z_OK, "zlib init failed");
    std::vector<uint8_t> out;
    out.reserve(in.size() * 4);
    std::vector<uint8_t> buf(1 << 16);
    zs.next_in = const_cast<uint8_t*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = buf.data();
        zs.avail_out = static_cast<uInt>(buf.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            fail("gzip decompression failed for " + path);
        }
        out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
    }
    inflateEnd(&zs);
    return out;
}

inline uint32_t read_be32(const std::vector<uint8_t>& b, size_t at) {
    return (uint32_t(b[at]) << 24) | (uint32_t(b[at + 1]) << 16) | (uint32_t(b[at + 2]) << 8) |
           uint32_t(b[at + 3]);
}

}  // namespace detail

// Parses the IDX binary format (big-endian header, unsigned-byte payload).
// Gzipped files are detected by magic and inflated transparently.
inline IdxData load_idx(const std::string& path) {
    std::vector<uint8_t> raw = detail::read_file_bytes(path);
    if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) raw = detail::gunzip(raw, path);
    check(raw.size() >= 4, "idx file truncated: " + path);
    check(raw[0] == 0 && raw[1] == 0, "bad idx magic in " + path);
    check(raw[2] == 0x08, "idx file " + path + " is not unsigned-byte typed");
    const int ndims = raw[3];
    check(ndims >= 1 && ndims <= 4, "unsupported idx rank in " + path);
    check(raw.size() >= 4 + 4 * static_cast<size_t>(ndims), "idx header truncated: " + path);
    IdxData d;
    int64_t total = 1;
    for (int i = 0; i < ndims; ++i) {
        int64_t n = detail::read_be32(raw, 4 + 4 * static_cast<size_t>(i));
        d.dims.push_back(n);
        total *= n;
    }
    const size_t off = 4 + 4 * static_cast<size_t>(ndims);
    check(raw.size() == off + static_cast<size_t>(total),
          "idx payload size mismatch in " + path);
    d.bytes.assign(raw.begin() + static_cast<int64_t>(off), raw.end());
    return d;
}

inline void save_idx(const std::string& path, const IdxData& d) {
    std::ofstream out(path, std::ios::binary);
    check(static_cast<bool>(out), "cannot write file: " + path);
    const auto put_be32 = [&](uint32_t v) {
        uint8_t b[4] = {uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    uint8_t head[4] = {0, 0, 0x08, static_cast<uint8_t>(d.dims.size())};
    out.write(reinterpret_cast<const char*>(head), 4);
    int64_t total = 1;
    for (int64_t n : d.dims) {
        put_be32(static_cast<uint32_t>(n));
        total *= n;
    }
    check(static_cast<size_t>(total) == d.bytes.size(), "idx payload size mismatch on save");
    out.write(reinterpret_cast<const char*>(d.bytes.data()),
              static_cast<std::streamsize>(d.bytes.size()));
}

// --- datasets -------------------------------------------------------------

template <class T>
struct GridDataset {
    Tensor<T> x;  // [N x C x L] sequences or [N x C x H x W] images
    std::vector<int64_t> labels;
    int64_t size() const { return x.dim(0); }
};

template <class T>
struct CloudDataset {
    Tensor<T> positions;  // [N x P x D]
    Tensor<T> mask;       // [N x P], 1 = real point
    std::vector<int64_t> labels;
    int64_t size() const { return positions.dim(0); }
};

// --- MNIST ----------------------------------------------------------------

template <class T>
struct MnistData {
    Tensor<T> train_images, test_images;  // [N x 28 x 28], values in [0,1]
    std::vector<int64_t> train_labels, test_labels;
};

namespace detail {

inline std::string pick_existing(const std::string& dir, const std::string& base) {
    for (const std::string& cand : {dir + "/" + base + ".gz", dir + "/" + base}) {
        std::ifstream probe(cand, std::ios::binary);
        if (probe) return cand;
    }
    fail("missing MNIST file " + base + "[.gz] in " + dir);
    return {};
}

template <class T>
Tensor<T> images_to_tensor(const IdxData& d, const std::string& path) {
    check(d.dims.size() == 3, "expected [N x H x W] image file: " + path);
    Tensor<T> t({d.dims[0], d.dims[1], d.dims[2]});
    for (size_t i = 0; i < d.bytes.size(); ++i)
        t.at(static_cast<int64_t>(i)) = static_cast<T>(d.bytes[i]) / T(255);
    return t;
}

inline std::vector<int64_t> labels_to_vector(const IdxData& d, const std::string& path) {
    check(d.dims.size() == 1, "expected [N] label file: " + path);
    return std::vector<int64_t>(d.bytes.begin(), d.bytes.end());
}

}  // namespace detail

template <class T>
MnistData<T> load_mnist(const std::string& dir) {
    MnistData<T> m;
    std::string p;
    p = detail::pick_existing(dir, "train-images-idx3-ubyte");
    m.train_images = detail::images_to_tensor<T>(load_idx(p), p);
    p = detail::pick_existing(dir, "train-labels-idx1-ubyte");
    m.train_labels = detail::labels_to_vector(load_idx(p), p);
    p = detail::pick_existing(dir, "t10k-images-idx3-ubyte");
    m.test_images = detail::images_to_tensor<T>(load_idx(p), p);
    p = detail::pick_existing(dir, "t10k-labels-idx1-ubyte");
    m.test_labels = detail::labels_to_vector(load_idx(p), p);
    check(m.train_images.dim(0) == static_cast<int64_t>(m.train_labels.size()),
          "mnist: train image/label count mismatch");
    check(m.test_images.dim(0) == static_cast<int64_t>(m.test_labels.size()),
          "mnist: test image/label count mismatch");
    return m;
}

// First 55K images for training, last 5K held out for validation.
constexpr int64_t kMnistTrainSplit = 55000;

// 2x2 average pooling, e.g. 28x28 -> 14x14.
template <class T>
Tensor<T> avgpool2x2(const Tensor<T>& images) {
    check(images.rank() == 3 && images.dim(1) % 2 == 0 && images.dim(2) % 2 == 0,
          "avgpool2x2 expects [N x H x W] with even H, W");
    const int64_t N = images.dim(0), H = images.dim(1), W = images.dim(2);
    Tensor<T> out({N, H / 2, W / 2});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t i = 0; i < H / 2; ++i)
            for (int64_t j = 0; j < W / 2; ++j) {
                const T* base = images.data() + (n * H + 2 * i) * W + 2 * j;
                out.at((n * (H / 2) + i) * (W / 2) + j) =
                    (base[0] + base[1] + base[W] + base[W + 1]) / T(4);
            }
    return out;
}

// [N x H x W] images -> [N x 1 x H*W] sequences in row-major raster order.
template <class T>
Tensor<T> flatten_to_sequence(const Tensor<T>& images) {
    check(images.rank() == 3, "flatten expects [N x H x W]");
    return images.clone().reshaped({images.dim(0), int64_t(1), images.dim(1) * images.dim(2)});
}

inline std::vector<int64_t> make_permutation(int64_t n, uint64_t seed) {
    std::vector<int64_t> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), int64_t(0));
    Rng rng(seed, "permutation");
    for (int64_t i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.index(i + 1)]);
    return perm;
}

// out[..., i] = in[..., perm[i]], the same permutation for every sample.
template <class T>
Tensor<T> permute_sequence(const Tensor<T>& x, const std::vector<int64_t>& perm) {
    check(x.rank() == 3, "permute expects [N x C x L]");
    const int64_t L = x.dim(2);
    check(static_cast<int64_t>(perm.size()) == L, "permutation length mismatch");
    std::vector<char> seen(static_cast<size_t>(L), 0);
    for (int64_t p : perm) {
        check(p >= 0 && p < L && !seen[p], "invalid permutation");
        seen[p] = 1;
    }
    Tensor<T> out(x.shape());
    const int64_t rows = x.dim(0) * x.dim(1);
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t i = 0; i < L; ++i) out.at(r * L + i) = x.at(r * L + perm[i]);
    return out;
}

// Keeps every factor-th sample starting at index 0; output length ceil(L/f).
template <class T>
Tensor<T> subsample_sequence(const Tensor<T>& x, int64_t factor) {
    check(x.rank() == 3, "subsample expects [N x C x L]");
    check(factor >= 1, "subsample factor must be >= 1");
    const int64_t L = x.dim(2), Lo = (L + factor - 1) / factor;
    check(Lo >= 1, "subsample produced empty sequence");
    Tensor<T> out({x.dim(0), x.dim(1), Lo});
    const int64_t rows = x.dim(0) * x.dim(1);
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t i = 0; i < Lo; ++i) out.at(r * Lo + i) = x.at(r * L + i * factor);
    return out;
}

template <class T>
GridDataset<T> take_subset(const GridDataset<T>& ds, int64_t n) {
    check(n >= 1 && n <= ds.size(), "subset size out of range");
    Shape s = ds.x.shape();
    int64_t per = ds.x.numel() / s[0];
    s[0] = n;
    GridDataset<T> out;
    out.x = Tensor<T>(s);
    std::copy(ds.x.data(), ds.x.data() + n * per, out.x.data());
    out.labels.assign(ds.labels.begin(), ds.labels.begin() + n);
    return out;
}

// Mean/std over every element of the training tensor; both splits are
// shifted and scaled by the training statistics.
template <class T>
struct Standardizer {
    T mean = 0, std = 1;
    static Standardizer fit(const Tensor<T>& x) {
        double m = 0, s = 0;
        const int64_t n = x.numel();
        for (int64_t i = 0; i < n; ++i) m += x.at(i);
        m /= static_cast<double>(n);
        for (int64_t i = 0; i < n; ++i) {
            double d = x.at(i) - m;
            s += d * d;
        }
        s = std::sqrt(s / static_cast<double>(n));
        check(s > 0, "standardizer: zero variance");
        return Standardizer{static_cast<T>(m), static_cast<T>(s)};
    }
    void apply(Tensor<T>& x) const {
        for (int64_t i = 0; i < x.numel(); ++i) x.at(i) = (x.at(i) - mean) / std;
    }
};

// --- synthetic waveforms --------------------------------------------------

// Class-conditioned band-limited signals: distinct fundamental frequencies
// (cycles per sequence), a weaker second harmonic, random amplitude and
// phase, plus white noise. The highest component (24 cycles) stays well
// below the Nyquist limit of a half-resolution evaluation, so subsampled
// sequences remain classifiable.
template <class T>
GridDataset<T> synth_waveforms(int64_t n, int64_t length, int64_t n_classes, uint64_t seed,
                               const std::string& stream = "waveforms") {
    check(n_classes >= 2 && n_classes <= 4, "waveforms support 2..4 classes");
    check(length >= 8, "waveform length too short");
    static const double kFreqs[4] = {3.0, 5.0, 8.0, 12.0};
    const double noise_std = 0.4, harmonic = 0.3, two_pi = 6.283185307179586476925286766559;
    GridDataset<T> ds;
    ds.x = Tensor<T>({n, 1, length});
    ds.labels.resize(static_cast<size_t>(n));
    Rng rng(seed, stream);
    for (int64_t i = 0; i < n; ++i) {
        const int64_t c = i % n_classes;
        ds.labels[static_cast<size_t>(i)] = c;
        const double f = kFreqs[c];
        const double a = rng.uniform(0.8, 1.2);
        const double p1 = rng.uniform(0.0, two_pi);
        const double p2 = rng.uniform(0.0, two_pi);
        for (int64_t j = 0; j < length; ++j) {
            const double t = static_cast<double>(j) / static_cast<double>(length);
            const double v = a * std::sin(two_pi * f * t + p1) +
                             harmonic * a * std::sin(two_pi * 2.0 * f * t + p2) +
                             noise_std * rng.normal();
            ds.x.at((i * length) + j) = static_cast<T>(v);
        }
    }
    return ds;
}

// --- synthetic 3D shapes --------------------------------------------------

// Surface-sampled sphere / cube / pyramid with random rotation about the
// vertical axis and scale jitter. Base sizes keep every rotated point inside
// [-1,1]^3 (planar corner radius 0.6*1.1*sqrt(2) < 1).
constexpr double kShapeSphereRadius = 0.8;
constexpr double kShapeBoxHalf = 0.6;

template <class T>
CloudDataset<T> synth_shapes(int64_t n, int64_t points_per_cloud, uint64_t seed,
                             const std::string& stream = "shapes") {
    check(points_per_cloud >= 32, "need at least 32 points per cloud");
    CloudDataset<T> ds;
    ds.positions = Tensor<T>({n, points_per_cloud, 3});
    ds.mask = Tensor<T>({n, points_per_cloud}, T(1));
    ds.labels.resize(static_cast<size_t>(n));
    Rng rng(seed, stream);
    for (int64_t i = 0; i < n; ++i) {
        const int64_t label = i % 3;
        ds.labels[static_cast<size_t>(i)] = label;
        const double jitter = rng.uniform(0.85, 1.1);
        const double theta = rng.uniform(0.0, 6.283185307179586476925286766559);
        const double ct = std::cos(theta), st = std::sin(theta);
        for (int64_t p = 0; p < points_per_cloud; ++p) {
            double x = 0, y = 0, z = 0;
            if (label == 0) {  // sphere surface
                double r = 0;
                while (r < 1e-9) {
                    x = rng.normal();
                    y = rng.normal();
                    z = rng.normal();
                    r = std::sqrt(x * x + y * y + z * z);
                }
                const double s = kShapeSphereRadius * jitter / r;
                x *= s;
                y *= s;
                z *= s;
            } else if (label == 1) {  // cube surface: uniform over the six faces
                const double h = kShapeBoxHalf * jitter;
                const int64_t face = rng.index(6);
                const double u = rng.uniform(-1.0, 1.0) * h;
                const double v = rng.uniform(-1.0, 1.0) * h;
                const double w = (face % 2 == 0) ? h : -h;
                if (face < 2) {
                    x = w, y = u, z = v;
                } else if (face < 4) {
                    x = u, y = w, z = v;
                } else {
                    x = u, y = v, z = w;
                }
            } else {  // square pyramid: base at z=-h, apex at (0,0,h)
                const double h = kShapeBoxHalf * jitter;
                // face areas: base 4h^2, each of the four sides sqrt(5) h^2
                const double side = std::sqrt(5.0), total = 4.0 + 4.0 * side;
                const double pickv = rng.uniform(0.0, total);
                if (pickv < 4.0) {
                    x = rng.uniform(-1.0, 1.0) * h;
                    y = rng.uniform(-1.0, 1.0) * h;
                    z = -h;
                } else {
                    const int64_t f = std::min<int64_t>(3, static_cast<int64_t>((pickv - 4.0) / side));
                    // base corners in ccw order
                    static const double cx[4] = {1, -1, -1, 1};
                    static const double cy[4] = {1, 1, -1, -1};
                    const double ax = cx[f] * h, ay = cy[f] * h;
                    const double bx = cx[(f + 1) % 4] * h, by = cy[(f + 1) % 4] * h;
                    double u = rng.uniform(0.0, 1.0), v = rng.uniform(0.0, 1.0);
                    if (u + v > 1.0) {
                        u = 1.0 - u;
                        v = 1.0 - v;
                    }
                    // triangle (apex, cornerA, cornerB)
                    x = u * ax + v * bx;
                    y = u * ay + v * by;
                    z = h + u * (-2.0 * h) + v * (-2.0 * h);
                }
            }
            const double rx = ct * x - st * y, ry = st * x + ct * y;
            T* out = ds.positions.data() + ((i * points_per_cloud) + p) * 3;
            out[0] = static_cast<T>(rx);
            out[1] = static_cast<T>(ry);
            out[2] = static_cast<T>(z);
        }
    }
    return ds;
}

// --- voxelization ---------------------------------------------------------

// Point p in [-1,1] maps to voxel floor((p+1)/2 * grid_n), clamped into range.
inline int64_t voxel_index(double p, int64_t grid_n) {
    int64_t i = static_cast<int64_t>(std::floor((p + 1.0) / 2.0 * static_cast<double>(grid_n)));
    return std::clamp<int64_t>(i, 0, grid_n - 1);
}

inline double voxel_center(int64_t idx, int64_t grid_n) {
    return (static_cast<double>(idx) + 0.5) / static_cast<double>(grid_n) * 2.0 - 1.0;
}

// Bins each cloud into grid_n^3 voxels and emits the occupied voxel centers
// as a fixed-budget point cloud (features are the center coordinates).
// Overfull clouds keep a seeded random subset of occupied voxels; underfull
// clouds are zero-padded with mask 0.
template <class T>
CloudDataset<T> voxelize_clouds(const CloudDataset<T>& clouds, int64_t grid_n, int64_t budget,
                                uint64_t seed) {
    check(clouds.positions.rank() == 3 && clouds.positions.dim(2) == 3,
          "voxelize expects [N x P x 3] positions");
    const int64_t N = clouds.positions.dim(0), P = clouds.positions.dim(1);
    CloudDataset<T> out;
    out.positions = Tensor<T>({N, budget, 3});
    out.mask = Tensor<T>({N, budget});
    out.labels = clouds.labels;
    for (int64_t i = 0; i < N; ++i) {
        std::vector<int64_t> occ;
        for (int64_t p = 0; p < P; ++p) {
            if (clouds.mask.numel() > 0 && clouds.mask.at(i * P + p) == T(0)) continue;
            const T* q = clouds.positions.data() + (i * P + p) * 3;
            const int64_t ix = voxel_index(q[0], grid_n), iy = voxel_index(q[1], grid_n),
                          iz = voxel_index(q[2], grid_n);
            occ.push_back((ix * grid_n + iy) * grid_n + iz);
        }
        std::sort(occ.begin(), occ.end());
        occ.erase(std::unique(occ.begin(), occ.end()), occ.end());
        if (static_cast<int64_t>(occ.size()) > budget) {
            Rng sub(seed + static_cast<uint64_t>(i), "voxel-subset");
            for (size_t j = occ.size() - 1; j > 0; --j)
                std::swap(occ[j], occ[sub.index(static_cast<int64_t>(j + 1))]);
            occ.resize(static_cast<size_t>(budget));
            std::sort(occ.begin(), occ.end());
        }
        for (int64_t j = 0; j < budget; ++j) {
            T* o = out.positions.data() + (i * budget + j) * 3;
            if (j < static_cast<int64_t>(occ.size())) {
                const int64_t lin = occ[static_cast<size_t>(j)];
                o[0] = static_cast<T>(voxel_center(lin / (grid_n * grid_n), grid_n));
                o[1] = static_cast<T>(voxel_center((lin / grid_n) % grid_n, grid_n));
                o[2] = static_cast<T>(voxel_center(lin % grid_n, grid_n));
                out.mask.at(i * budget + j) = T(1);
            } else {
                o[0] = o[1] = o[2] = T(0);
                out.mask.at(i * budget + j) = T(0);
            }
        }
    }
    return out;
}

// --- batch assembly -------------------------------------------------------

template <class T>
GridDataset<T> gather_grid(const GridDataset<T>& ds, const std::vector<int64_t>& idx) {
    Shape s = ds.x.shape();
    const int64_t per = ds.x.numel() / s[0];
    s[0] = static_cast<int64_t>(idx.size());
    GridDataset<T> out;
    out.x = Tensor<T>(s);
    out.labels.resize(idx.size());
    for (size_t b = 0; b < idx.size(); ++b) {
        std::copy(ds.x.data() + idx[b] * per, ds.x.data() + (idx[b] + 1) * per,
                  out.x.data() + static_cast<int64_t>(b) * per);
        out.labels[b] = ds.labels[static_cast<size_t>(idx[b])];
    }
    return out;
}

template <class T>
CloudDataset<T> gather_cloud(const CloudDataset<T>& ds, const std::vector<int64_t>& idx) {
    const int64_t P = ds.positions.dim(1), D = ds.positions.dim(2);
    CloudDataset<T> out;
    out.positions = Tensor<T>({static_cast<int64_t>(idx.size()), P, D});
    out.mask = Tensor<T>({static_cast<int64_t>(idx.size()), P});
    out.labels.resize(idx.size());
    for (size_t b = 0; b < idx.size(); ++b) {
        std::copy(ds.positions.data() + idx[b] * P * D, ds.positions.data() + (idx[b] + 1) * P * D,
                  out.positions.data() + static_cast<int64_t>(b) * P * D);
        std::copy(ds.mask.data() + idx[b] * P, ds.mask.data() + (idx[b] + 1) * P,
                  out.mask.data() + static_cast<int64_t>(b) * P);
        out.labels[b] = ds.labels[static_cast<size_t>(idx[b])];
    }
    return out;
}

}  // namespace ccnn
