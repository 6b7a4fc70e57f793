#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "segt/tensor.hpp"

namespace segt {

/// Handle to a value recorded on a Tape.
struct Var {
    static constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::size_t id = none;

    bool valid() const noexcept { return id != none; }
};

/// Records forward values in creation order; `backward` walks them in reverse,
/// which is a reverse topological order because an op's inputs always precede it.
template <typename T>
class Tape {
public:
    using Backward = std::function<void(Tape&, Var out)>;

    /// `track_grad = false` builds an inference-only tape: no backward closures are kept.
    explicit Tape(bool track_grad = true) : track_grad_(track_grad) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;
    Tape(Tape&&) noexcept = default;
    Tape& operator=(Tape&&) noexcept = default;

    Var constant(Tensor<T> value) { return push(std::move(value), false, nullptr); }
    Var parameter(Tensor<T> value) { return push(std::move(value), track_grad_, nullptr); }

    /// Records an op output. `backward` runs only if some input requires grad.
    Var record(Tensor<T> value, std::initializer_list<Var> inputs, Backward backward);
    Var record(Tensor<T> value, const std::vector<Var>& inputs, Backward backward);

    const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return v.valid() && nodes_.at(v.id).requires_grad; }

    /// Gradient accumulated so far (zeros if nothing flowed into `v`).
    Tensor<T> grad(Var v) const;
    /// Mutable gradient buffer, allocated on first use. For op authors.
    Tensor<T>& grad_buffer(Var v);

    /// Seeds d(root)/d(root) = 1 and propagates. `root` must hold one element.
    void backward(Var root);

    std::size_t size() const noexcept { return nodes_.size(); }
    bool tracks_grad() const noexcept { return track_grad_; }
    /// Number of backward closures run by the last `backward` call.
    std::size_t last_backward_visits() const noexcept { return visits_; }

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        bool requires_grad = false;
        Backward backward;
    };

    Var push(Tensor<T> value, bool requires_grad, Backward backward);

    std::deque<Node> nodes_;  // deque: values stay put while ops append
    bool track_grad_;
    std::size_t visits_ = 0;
};

extern template class Tape<float>;
extern template class Tape<double>;

} // namespace segt
