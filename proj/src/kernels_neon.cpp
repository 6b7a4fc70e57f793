#include "segt/kernels.hpp"

#include <arm_neon.h>

namespace segt::kernels::detail {

namespace {

double dot_f(const float* a, const float* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t va = vld1q_f32(a + i);
        const float32x4_t vb = vld1q_f32(b + i);
        acc0 = vfmaq_f64(acc0, vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
        acc1 = vfmaq_f64(acc1, vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return sum;
}

double dot_d(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_acc_f(double alpha, const float* x, double* acc, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t vx = vld1q_f32(x + i);
        vst1q_f64(acc + i, vfmaq_f64(vld1q_f64(acc + i), va, vcvt_f64_f32(vget_low_f32(vx))));
        vst1q_f64(acc + i + 2, vfmaq_f64(vld1q_f64(acc + i + 2), va, vcvt_high_f64_f32(vx)));
    }
    for (; i < n; ++i) acc[i] += alpha * static_cast<double>(x[i]);
}

void axpy_acc_d(double alpha, const double* x, double* acc, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(acc + i, vfmaq_f64(vld1q_f64(acc + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) acc[i] += alpha * x[i];
}

void axpy_f(float alpha, const float* x, float* y, std::size_t n) {
    const float32x4_t va = vdupq_n_f32(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_d(double alpha, const double* x, double* y, std::size_t n) { axpy_acc_d(alpha, x, y, n); }

} // namespace

const Table& neon_table() {
    static const Table table{&dot_f, &dot_d, &axpy_acc_f, &axpy_acc_d, &axpy_f, &axpy_d};
    return table;
}

} // namespace segt::kernels::detail
