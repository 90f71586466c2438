#pragma once

#include <functional>
#include <vector>

#include "tensor.hpp"

namespace ccnn {

// Reverse-mode tape. Ops that see an active tape push a backward closure;
// backward() replays them in reverse. One tape per forward pass, activated
// with an RAII TapeScope. The active tape is thread-local so batch shards
// can run on separate threads without sharing tapes.
template <class T>
class Tape {
public:
    static Tape*& active() {
        thread_local Tape* cur = nullptr;
        return cur;
    }

    void record(std::function<void()> backward) { nodes_.push_back(std::move(backward)); }

    size_t size() const { return nodes_.size(); }

    // Runs backward closures newest-first. The caller seeds the output
    // gradient before calling (see backward(loss) below).
    void backward() {
        for (size_t i = nodes_.size(); i-- > 0;) nodes_[i]();
    }

    void clear() { nodes_.clear(); }

private:
    std::vector<std::function<void()>> nodes_;
};

template <class T>
class TapeScope {
public:
    TapeScope() : prev_(Tape<T>::active()) { Tape<T>::active() = &tape_; }
    ~TapeScope() { Tape<T>::active() = prev_; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

    Tape<T>& tape() { return tape_; }

    // Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be a scalar.
    void backward(Tensor<T>& loss) {
        check(loss.numel() == 1, "backward: loss must be scalar, got " + shape_str(loss.shape()));
        loss.grad()[0] = T(1);
        tape_.backward();
    }

private:
    Tape<T> tape_;
    Tape<T>* prev_;
};

// True when gradients should be recorded for this op invocation.
template <class T>
inline bool recording(std::initializer_list<const Tensor<T>*> inputs) {
    if (!Tape<T>::active()) return false;
    for (const Tensor<T>* t : inputs)
        if (t->tracked()) return true;
    return false;
}

}  // namespace ccnn
