#include "tlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tlab {

namespace {

struct Eval {
    double value;
    std::vector<std::uint8_t> kinks;
};

Eval evaluate(const TapeFn& f, const std::vector<Tensor>& params) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Tensor& p : params) vars.push_back(tape.leaf(p, /*requires_grad=*/false));
    Var loss = f(tape, vars);
    if (!loss->is_scalar()) throw std::invalid_argument("finite_diff_check: f must return a scalar");
    return Eval{loss->item(), tape.kink_signature()};
}

}  // namespace

GradCheckReport finite_diff_check(const TapeFn& f, const std::vector<Tensor>& params, double epsilon,
                                  double rel_tol, double abs_tol, const std::vector<std::string>& names) {
    if (epsilon <= 0.0) throw std::invalid_argument("finite_diff_check: epsilon must be positive");

    // Analytic pass.
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : params) {
        Tensor t = p;
        t.set_requires_grad(true);
        vars.push_back(tape.leaf(std::move(t)));
    }
    Var loss = f(tape, vars);
    if (!loss->is_scalar()) throw std::invalid_argument("finite_diff_check: f must return a scalar");
    tape.backward(loss);
    const std::vector<std::uint8_t> base_kinks = tape.kink_signature();

    GradCheckReport report;
    std::vector<Tensor> work = params;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        const std::string name = pi < names.size() ? names[pi] : "param" + std::to_string(pi);
        for (std::size_t i = 0; i < params[pi].size(); ++i) {
            const double saved = work[pi][i];
            work[pi][i] = saved + epsilon;
            const Eval plus = evaluate(f, work);
            work[pi][i] = saved - epsilon;
            const Eval minus = evaluate(f, work);
            work[pi][i] = saved;

            GradCheckEntry entry;
            entry.param = name;
            entry.index = i;
            entry.analytic = vars[pi]->grad()[i];

            if (plus.kinks != minus.kinks || plus.kinks != base_kinks) {
                entry.skipped_kink = true;
                ++report.skipped;
                continue;
            }

            entry.numeric = (plus.value - minus.value) / (2.0 * epsilon);
            entry.abs_err = std::fabs(entry.analytic - entry.numeric);
            const double denom = std::max(std::fabs(entry.analytic), std::fabs(entry.numeric));
            entry.rel_err = denom > 0.0 ? entry.abs_err / denom : 0.0;
            entry.pass = denom >= 1e-6 ? entry.rel_err <= rel_tol : entry.abs_err <= abs_tol;

            ++report.checked;
            report.max_rel_err = std::max(report.max_rel_err, denom >= 1e-6 ? entry.rel_err : 0.0);
            report.max_abs_err = std::max(report.max_abs_err, entry.abs_err);
            if (!entry.pass) {
                report.pass = false;
                report.failures.push_back(entry);
            }
        }
    }
    return report;
}

}  // namespace tlab
