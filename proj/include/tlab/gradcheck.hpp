#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tlab/autodiff.hpp"

namespace tlab {

// Builds a scalar loss from parameter leaves. Must be deterministic: two
// calls with the same parameter values have to execute the same ops (fix
// any rng seeds inside).
using TapeFn = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheckEntry {
    std::string param;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
    double abs_err = 0.0;
    bool skipped_kink = false;
    bool pass = true;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;
    bool pass = true;
    std::vector<GradCheckEntry> failures;  // failing entries only
};

// Central differences (f(p+eps) - f(p-eps)) / 2eps against the tape's
// analytic gradients, parameter by parameter. A parameter whose +/-eps
// evaluations land in different linear cells (any relu/abs mask flip) is
// skipped: the function is piecewise linear and the derivative jumps there.
// Pass rule per parameter: rel_err <= rel_tol when max(|a|,|n|) >= 1e-6,
// otherwise |a - n| <= abs_tol.
GradCheckReport finite_diff_check(const TapeFn& f, const std::vector<Tensor>& params,
                                  double epsilon = 1e-5, double rel_tol = 1e-4,
                                  double abs_tol = 1e-7,
                                  const std::vector<std::string>& names = {});

}  // namespace tlab
