#include "segt/tensor.hpp"

#include <cmath>
#include <cstring>

namespace segt {

std::string dims_to_string(const Dims& dims) {
    std::string out = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(dims[i]);
    }
    return out + "]";
}

template <typename T>
bool Tensor<T>::all_finite() const noexcept {
    for (T v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

template <typename T>
bool bitwise_equal(std::span<const T> a, std::span<const T> b) {
    if (a.size() != b.size()) return false;
    return a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

template class Tensor<float>;
template class Tensor<double>;
template bool bitwise_equal<float>(std::span<const float>, std::span<const float>);
template bool bitwise_equal<double>(std::span<const double>, std::span<const double>);

} // namespace segt
