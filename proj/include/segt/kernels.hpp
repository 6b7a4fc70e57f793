#pragma once

// Inner-loop arithmetic used by every layer. Each kernel has a scalar
// reference implementation and, where the host supports it, a SIMD variant.
// The variant is picked once at startup (override with SEGT_KERNELS=scalar|avx2|neon).
//
// All kernels vectorize along a single contiguous feature axis, so a result
// depends only on that vector's length and never on how many rows surround it.

#include <cstddef>
#include <string_view>
#include <vector>

namespace segt::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);

/// Best variant the host CPU supports.
Isa detected_isa();
/// Variant currently dispatched to.
Isa active_isa();
/// Switch variants; throws segt::Error when the host cannot run `isa`.
void set_active_isa(Isa isa);
/// Variants runnable on this host, scalar first.
std::vector<Isa> available_isas();

/// Sum of a[i]*b[i], accumulated in double.
double dot(const float* a, const float* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);

/// acc[i] += alpha * x[i], with a double accumulator.
void axpy_acc(double alpha, const float* x, double* acc, std::size_t n);
void axpy_acc(double alpha, const double* x, double* acc, std::size_t n);

/// y[i] += alpha * x[i] in storage precision.
void axpy(float alpha, const float* x, float* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);

struct Table {
    double (*dot_f)(const float*, const float*, std::size_t);
    double (*dot_d)(const double*, const double*, std::size_t);
    void (*axpy_acc_f)(double, const float*, double*, std::size_t);
    void (*axpy_acc_d)(double, const double*, double*, std::size_t);
    void (*axpy_f)(float, const float*, float*, std::size_t);
    void (*axpy_d)(double, const double*, double*, std::size_t);
};

/// Direct access to one variant's table (equivalence tests call these side by side).
const Table& table_for(Isa isa);

namespace detail {
const Table& scalar_table();
#if defined(SEGT_HAVE_AVX2)
const Table& avx2_table();
#endif
#if defined(SEGT_HAVE_NEON)
const Table& neon_table();
#endif
} // namespace detail

} // namespace segt::kernels
