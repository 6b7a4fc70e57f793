#include "segt/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace segt {

namespace {

double evaluate(const ScalarFunction& f, const std::vector<Tensor<double>>& params) {
    Tape<double> tape(false);
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const auto& p : params) vars.push_back(tape.parameter(p));
    double loss = 0.0;
    try {
        loss = tape.value(f(tape, vars))[0];
    } catch (const NumericError& e) {
        throw CheckFailed(std::string("loss evaluation failed: ") + e.what());
    }
    if (!std::isfinite(loss)) throw CheckFailed("non-finite loss");
    return loss;
}

} // namespace

GradCheckReport grad_check(const ScalarFunction& f, const std::vector<Tensor<double>>& params,
                           const GradCheckOptions& options) {
    std::vector<Tensor<double>> analytic;
    {
        Tape<double> tape;
        std::vector<Var> vars;
        for (const auto& p : params) vars.push_back(tape.parameter(p));
        Var loss;
        try {
            loss = f(tape, vars);
        } catch (const NumericError& e) {
            throw CheckFailed(std::string("loss evaluation failed: ") + e.what());
        }
        if (tape.value(loss).size() != 1) throw CheckFailed("grad_check needs a scalar loss");
        if (!std::isfinite(tape.value(loss)[0])) throw CheckFailed("non-finite loss");
        tape.backward(loss);
        for (Var v : vars) analytic.push_back(tape.grad(v));
    }

    GradCheckReport report;
    std::vector<Tensor<double>> probe = params;
    for (std::size_t t = 0; t < params.size(); ++t) {
        const std::size_t n = params[t].size();
        const std::size_t stride =
            options.max_entries_per_tensor == 0 ? 1 : std::max<std::size_t>(1, n / options.max_entries_per_tensor);
        for (std::size_t i = 0; i < n; i += stride) {
            const double original = probe[t][i];
            auto diff = [&](double h) {
                probe[t][i] = original + h;
                const double up = evaluate(f, probe);
                probe[t][i] = original - h;
                const double down = evaluate(f, probe);
                probe[t][i] = original;
                return up - down;
            };
            const double a = analytic[t][i];
            auto rel_error = [&](double numeric) {
                return std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), options.abs_floor});
            };

            double numeric = diff(options.eps) / (2.0 * options.eps);
            double rel = rel_error(numeric);
            if (options.refine_eps > 0.0 && rel > options.refine_above) {
                const double h = options.refine_eps;
                numeric = (8.0 * diff(h) - diff(2.0 * h)) / (12.0 * h);
                rel = rel_error(numeric);
                ++report.entries_refined;
            }
            ++report.entries_checked;
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_tensor = t;
                report.worst_index = i;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

} // namespace segt
