#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "segt/error.hpp"

namespace segt {

using Dims = std::vector<std::size_t>;

inline std::size_t dims_product(const Dims& dims) {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

std::string dims_to_string(const Dims& dims);

/// Dense row-major tensor. Storage type is `float` for models and files,
/// `double` for gradient checking.
template <typename T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Dims dims, T fill = T{0}) : dims_(std::move(dims)) {
        check_dims();
        data_.assign(dims_product(dims_), fill);
    }

    Tensor(Dims dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
        check_dims();
        if (data_.size() != dims_product(dims_)) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match dims " + dims_to_string(dims_));
        }
    }

    const Dims& dims() const noexcept { return dims_; }
    std::size_t rank() const noexcept { return dims_.size(); }
    std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    /// Size of the last axis (1 for rank-0).
    std::size_t inner() const noexcept { return dims_.empty() ? 1 : dims_.back(); }
    /// Product of all axes but the last.
    std::size_t outer() const noexcept { return inner() == 0 ? 0 : size() / inner(); }

    /// Same data, new shape of equal element count.
    Tensor reshaped(Dims dims) const {
        if (dims_product(dims) != size()) {
            throw ShapeError("cannot reshape " + dims_to_string(dims_) + " to " + dims_to_string(dims));
        }
        return Tensor(std::move(dims), data_);
    }

    bool all_finite() const noexcept;

    bool requires_grad = false;

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.dims_ == b.dims_ && a.data_ == b.data_;
    }

private:
    void check_dims() const {
        for (std::size_t d : dims_) {
            if (d == 0) throw ShapeError("tensor dims must be positive: " + dims_to_string(dims_));
        }
    }

    Dims dims_;
    std::vector<T> data_;
};

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& src) {
    std::vector<To> out(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) out[i] = static_cast<To>(src[i]);
    Tensor<To> t(src.dims(), std::move(out));
    t.requires_grad = src.requires_grad;
    return t;
}

/// True when every element of `a` and `b` has the same bit pattern.
template <typename T>
bool bitwise_equal(std::span<const T> a, std::span<const T> b);

} // namespace segt
