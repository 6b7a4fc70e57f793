#include "segt/kernels.hpp"

namespace segt::kernels::detail {

namespace {

template <typename T>
double dot_ref(const T* a, const T* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

template <typename T>
void axpy_acc_ref(double alpha, const T* x, double* acc, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) acc[i] += alpha * static_cast<double>(x[i]);
}

template <typename T>
void axpy_ref(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

} // namespace

const Table& scalar_table() {
    static const Table table{
        &dot_ref<float>, &dot_ref<double>,
        &axpy_acc_ref<float>, &axpy_acc_ref<double>,
        &axpy_ref<float>, &axpy_ref<double>,
    };
    return table;
}

} // namespace segt::kernels::detail
