#include "segt/autograd.hpp"

namespace segt {

template <typename T>
Var Tape<T>::push(Tensor<T> value, bool requires_grad, Backward backward) {
    if (!value.all_finite()) {
        throw NumericError("non-finite value produced at tape node " + std::to_string(nodes_.size()));
    }
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::initializer_list<Var> inputs, Backward backward) {
    bool needs = false;
    if (track_grad_) {
        for (Var in : inputs) needs = needs || requires_grad(in);
    }
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, const std::vector<Var>& inputs, Backward backward) {
    bool needs = false;
    if (track_grad_) {
        for (Var in : inputs) needs = needs || requires_grad(in);
    }
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
}

template <typename T>
Tensor<T> Tape<T>::grad(Var v) const {
    const Node& node = nodes_.at(v.id);
    if (node.grad.size() == 0) return Tensor<T>(node.value.dims());
    return node.grad;
}

template <typename T>
Tensor<T>& Tape<T>::grad_buffer(Var v) {
    Node& node = nodes_.at(v.id);
    if (node.grad.size() == 0) node.grad = Tensor<T>(node.value.dims());
    return node.grad;
}

template <typename T>
void Tape<T>::backward(Var root) {
    if (!track_grad_) throw Error("backward called on an inference-only tape");
    if (value(root).size() != 1) {
        throw ShapeError("backward root must be a single element, got " + dims_to_string(value(root).dims()));
    }
    grad_buffer(root)[0] = T{1};
    visits_ = 0;
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.backward || node.grad.size() == 0) continue;
        node.backward(*this, Var{i});
        ++visits_;
    }
}

template class Tape<float>;
template class Tape<double>;

} // namespace segt
