#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "segt/autograd.hpp"

namespace segt {

struct GradCheckOptions {
    double eps = 1e-3;
    /// Gradients smaller than this in magnitude are compared absolutely.
    double abs_floor = 1e-6;
    /// Entries checked per parameter tensor; 0 means every entry.
    /// When capped, entries are taken at an even stride.
    std::size_t max_entries_per_tensor = 0;
    /// When > 0, an entry whose two-point relative error exceeds `refine_above`
    /// is re-estimated with the fourth-order central stencil
    /// (8(f(x+h) - f(x-h)) - (f(x+2h) - f(x-2h))) / 12h at h = refine_eps.
    /// Its truncation error is O(h^4), so a step large enough to keep roundoff
    /// small stays accurate where the two-point rule cannot be.
    double refine_eps = 0.0;
    double refine_above = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t worst_tensor = 0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t entries_checked = 0;
    std::size_t entries_refined = 0;
};

/// Builds a scalar loss from parameter Vars on a fresh tape.
using ScalarFunction = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

/// Compares reverse-mode gradients of `f` with central finite differences,
/// entirely in double precision. Throws CheckFailed on a non-finite loss.
GradCheckReport grad_check(const ScalarFunction& f, const std::vector<Tensor<double>>& params,
                           const GradCheckOptions& options = {});

} // namespace segt
