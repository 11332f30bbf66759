#pragma once

#include <cstddef>
#include <functional>

#include "tamopt/vecmath.hpp"

namespace tamopt {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
};

/// Compares `analytic` against central differences of `loss` at `theta`.
/// Relative error per component is |analytic - fd| / max(1, |analytic|).
GradCheckResult check_gradient(const std::function<double(const ParamVector&)>& loss,
                               const ParamVector& theta, const ParamVector& analytic,
                               double h = 1e-5);

} // namespace tamopt
