#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccnn {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

[[noreturn]] inline void fail(const std::string& msg) { throw std::runtime_error(msg); }

inline void check(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

// Shared value/grad storage. Tensors are cheap handles; reshapes alias the
// same storage. Gradients are allocated lazily on first use.
template <class T>
struct Storage {
    std::vector<T> value;
    std::vector<T> grad;
    bool tracked = false;  // participates in autodiff on the active tape
};

template <class T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T(0))
        : shape_(std::move(shape)), s_(std::make_shared<Storage<T>>()) {
        s_->value.assign(static_cast<size_t>(shape_numel(shape_)), fill);
    }

    Tensor(Shape shape, std::vector<T> values)
        : shape_(std::move(shape)), s_(std::make_shared<Storage<T>>()) {
        check(static_cast<int64_t>(values.size()) == shape_numel(shape_),
              "tensor: value count " + std::to_string(values.size()) +
                  " does not match shape " + shape_str(shape_));
        s_->value = std::move(values);
    }

    bool defined() const { return static_cast<bool>(s_); }
    const Shape& shape() const { return shape_; }
    int64_t dim(size_t i) const { return shape_.at(i); }
    size_t rank() const { return shape_.size(); }
    int64_t numel() const { return shape_numel(shape_); }

    T* data() { return s_->value.data(); }
    const T* data() const { return s_->value.data(); }
    std::vector<T>& values() { return s_->value; }
    const std::vector<T>& values() const { return s_->value; }

    T& at(int64_t i) { return s_->value[static_cast<size_t>(i)]; }
    const T& at(int64_t i) const { return s_->value[static_cast<size_t>(i)]; }

    bool tracked() const { return s_ && s_->tracked; }
    void set_tracked(bool t) { s_->tracked = t; }

    bool has_grad() const { return s_ && !s_->grad.empty(); }
    std::vector<T>& grad() {
        if (s_->grad.empty()) s_->grad.assign(s_->value.size(), T(0));
        return s_->grad;
    }
    const std::vector<T>& grad() const { return s_->grad; }
    void zero_grad() {
        if (!s_->grad.empty()) std::fill(s_->grad.begin(), s_->grad.end(), T(0));
    }

    // Same storage, new shape (element count must match).
    Tensor reshaped(Shape shape) const {
        check(shape_numel(shape) == numel(),
              "reshape: cannot view " + shape_str(shape_) + " as " + shape_str(shape));
        Tensor out;
        out.shape_ = std::move(shape);
        out.s_ = s_;
        return out;
    }

    Tensor clone() const {
        Tensor out(shape_);
        out.s_->value = s_->value;
        return out;
    }

    bool same_storage(const Tensor& other) const { return s_ == other.s_; }

private:
    Shape shape_;
    std::shared_ptr<Storage<T>> s_;
};

}  // namespace ccnn
