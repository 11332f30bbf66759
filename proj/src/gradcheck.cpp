#include "tamopt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace tamopt {

GradCheckResult check_gradient(const std::function<double(const ParamVector&)>& loss,
                               const ParamVector& theta, const ParamVector& analytic, double h) {
    require_same_size(theta, analytic, "gradcheck");
    if (!(h > 0.0)) {
        throw DomainError("gradcheck step h must be > 0");
    }
    GradCheckResult result;
    ParamVector probe = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        probe[i] = theta[i] + h;
        const double up = loss(probe);
        probe[i] = theta[i] - h;
        const double down = loss(probe);
        probe[i] = theta[i];
        const double fd = (up - down) / (2.0 * h);
        const double err = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(analytic[i]));
        if (err > result.max_rel_error || !std::isfinite(err)) {
            result.max_rel_error = err;
            result.worst_index = i;
        }
    }
    return result;
}

} // namespace tamopt
