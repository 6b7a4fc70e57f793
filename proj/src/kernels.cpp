#include "segt/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "segt/error.hpp"

namespace segt::kernels {

namespace {

bool host_supports(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return true;
    case Isa::avx2:
#if defined(SEGT_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Isa::neon:
#if defined(SEGT_HAVE_NEON)
        return true;
#else
        return false;
#endif
    }
    return false;
}

Isa initial_isa() {
    if (const char* env = std::getenv("SEGT_KERNELS")) {
        const std::string_view want(env);
        for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
            if (want == isa_name(isa) && host_supports(isa)) return isa;
        }
    }
    return detected_isa();
}

std::atomic<const Table*>& active_table() {
    static std::atomic<const Table*> table{&table_for(initial_isa())};
    return table;
}

std::atomic<Isa>& active_isa_slot() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

} // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
    }
    return "unknown";
}

Isa detected_isa() {
    if (host_supports(Isa::avx2)) return Isa::avx2;
    if (host_supports(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

Isa active_isa() { return active_isa_slot().load(); }

void set_active_isa(Isa isa) {
    if (!host_supports(isa)) {
        throw Error("kernel variant not supported on this host: " + std::string(isa_name(isa)));
    }
    active_table().store(&table_for(isa));
    active_isa_slot().store(isa);
}

std::vector<Isa> available_isas() {
    std::vector<Isa> out;
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
        if (host_supports(isa)) out.push_back(isa);
    }
    return out;
}

const Table& table_for(Isa isa) {
    switch (isa) {
#if defined(SEGT_HAVE_AVX2)
    case Isa::avx2:
        if (host_supports(isa)) return detail::avx2_table();
        break;
#endif
#if defined(SEGT_HAVE_NEON)
    case Isa::neon:
        return detail::neon_table();
#endif
    default:
        break;
    }
    if (isa != Isa::scalar) {
        throw Error("kernel variant not supported on this host: " + std::string(isa_name(isa)));
    }
    return detail::scalar_table();
}

double dot(const float* a, const float* b, std::size_t n) { return active_table().load()->dot_f(a, b, n); }
double dot(const double* a, const double* b, std::size_t n) { return active_table().load()->dot_d(a, b, n); }

void axpy_acc(double alpha, const float* x, double* acc, std::size_t n) {
    active_table().load()->axpy_acc_f(alpha, x, acc, n);
}
void axpy_acc(double alpha, const double* x, double* acc, std::size_t n) {
    active_table().load()->axpy_acc_d(alpha, x, acc, n);
}

void axpy(float alpha, const float* x, float* y, std::size_t n) { active_table().load()->axpy_f(alpha, x, y, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { active_table().load()->axpy_d(alpha, x, y, n); }

} // namespace segt::kernels
