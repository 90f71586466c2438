#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tensor.hpp"

namespace ccnn {

// Tensor snapshot: little-endian u32 rank, u64 extent per axis, then the
// payload as raw 32-bit floats. Host is assumed little-endian (x86/arm64).

template <class T>
void save_tensor_stream(std::ostream& out, const Tensor<T>& t) {
    const uint32_t rank = static_cast<uint32_t>(t.rank());
    out.write(reinterpret_cast<const char*>(&rank), 4);
    for (int i = 0; i < t.rank(); ++i) {
        const uint64_t n = static_cast<uint64_t>(t.dim(i));
        out.write(reinterpret_cast<const char*>(&n), 8);
    }
    std::vector<float> payload(static_cast<size_t>(t.numel()));
    for (int64_t i = 0; i < t.numel(); ++i) payload[static_cast<size_t>(i)] = static_cast<float>(t.at(i));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * 4));
}

template <class T>
Tensor<T> load_tensor_stream(std::istream& in, const std::string& what) {
    uint32_t rank = 0;
    in.read(reinterpret_cast<char*>(&rank), 4);
    check(static_cast<bool>(in) && rank <= 8, "snapshot header corrupt: " + what);
    Shape shape;
    int64_t total = 1;
    for (uint32_t i = 0; i < rank; ++i) {
        uint64_t n = 0;
        in.read(reinterpret_cast<char*>(&n), 8);
        check(static_cast<bool>(in), "snapshot extents truncated: " + what);
        shape.push_back(static_cast<int64_t>(n));
        total *= static_cast<int64_t>(n);
    }
    std::vector<float> payload(static_cast<size_t>(total));
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(total * 4));
    check(static_cast<bool>(in), "snapshot payload truncated: " + what);
    Tensor<T> t(shape);
    for (int64_t i = 0; i < total; ++i) t.at(i) = static_cast<T>(payload[static_cast<size_t>(i)]);
    return t;
}

template <class T>
void save_tensor(const std::string& path, const Tensor<T>& t) {
    std::ofstream out(path, std::ios::binary);
    check(static_cast<bool>(out), "cannot write " + path);
    save_tensor_stream(out, t);
}

template <class T>
Tensor<T> load_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(static_cast<bool>(in), "cannot read " + path);
    return load_tensor_stream<T>(in, path);
}

// --- checkpoints ----------------------------------------------------------
//
// Directory layout: manifest.json plus params/<path>.bin per parameter and
// buffer, keyed by hierarchical parameter path.

template <class T, class Net>
void save_checkpoint(const std::string& dir, Net& net, nlohmann::json extra) {
    namespace fs = std::filesystem;
    fs::create_directories(fs::path(dir) / "params");
    nlohmann::json manifest = std::move(extra);
    manifest["format_version"] = 1;
    nlohmann::json pj = nlohmann::json::object(), bj = nlohmann::json::object();
    net.visit_params([&](const std::string& name, Tensor<T>& p, bool) {
        save_tensor((fs::path(dir) / "params" / (name + ".bin")).string(), p);
        pj[name] = p.shape();
    });
    net.visit_buffers([&](const std::string& name, Tensor<T>& b) {
        save_tensor((fs::path(dir) / "params" / (name + ".bin")).string(), b);
        bj[name] = b.shape();
    });
    manifest["params"] = pj;
    manifest["buffers"] = bj;
    std::ofstream out(fs::path(dir) / "manifest.json");
    check(static_cast<bool>(out), "cannot write checkpoint manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

inline nlohmann::json load_manifest(const std::string& dir) {
    std::ifstream in(std::filesystem::path(dir) / "manifest.json");
    check(static_cast<bool>(in), "missing checkpoint manifest in " + dir);
    return nlohmann::json::parse(in);
}

template <class T, class Net>
nlohmann::json load_checkpoint(const std::string& dir, Net& net) {
    namespace fs = std::filesystem;
    nlohmann::json manifest = load_manifest(dir);
    const auto load_into = [&](const std::string& name, Tensor<T>& dst) {
        Tensor<T> t = load_tensor<T>((fs::path(dir) / "params" / (name + ".bin")).string());
        check(t.shape() == dst.shape(), "checkpoint tensor " + name + " has shape " +
                                            shape_str(t.shape()) + ", model expects " +
                                            shape_str(dst.shape()));
        std::copy(t.data(), t.data() + t.numel(), dst.data());
    };
    net.visit_params([&](const std::string& name, Tensor<T>& p, bool) { load_into(name, p); });
    net.visit_buffers([&](const std::string& name, Tensor<T>& b) { load_into(name, b); });
    return manifest;
}

// CSV numbers print at 9 significant digits so files round-trip losslessly
// for float-valued metrics.
inline std::string fmt_g9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace ccnn
