#include "tamopt/transfer.hpp"

#include <cmath>
#include <string>

#include "tamopt/errors.hpp"

namespace tamopt {

namespace {

void require_beta(double beta, const char* name) {
    if (!(beta >= 0.0 && beta < 1.0)) {
        throw DomainError(std::string(name) + " must lie in [0, 1), got " + std::to_string(beta));
    }
}

void require_eta(double eta, const char* name) {
    if (!(std::isfinite(eta) && eta > 0.0)) {
        throw DomainError(std::string(name) + " must be finite and > 0");
    }
}

} // namespace

double eta_eff_sgdm(double eta, double beta) {
    require_beta(beta, "beta");
    return eta / (1.0 - beta);
}

double eta_eff_tam(double eta, double beta, double s_star) {
    require_beta(beta, "beta");
    if (!(s_star >= -1.0 && s_star <= 1.0)) {
        throw DomainError("s_star must lie in [-1, 1]");
    }
    return (1.0 + s_star) / (2.0 * (1.0 - beta)) * eta;
}

double transfer_lr(const TransferInputs& inp) {
    require_eta(inp.eta_sgdm, "eta_sgdm");
    require_beta(inp.beta_sgdm, "beta_sgdm");
    require_beta(inp.beta_tam, "beta_tam");
    if (!(inp.s_star > -1.0 && inp.s_star <= 1.0)) {
        throw DomainError("s_star must lie in (-1, 1] for a finite transfer");
    }
    return 2.0 * (1.0 - inp.beta_tam) / ((1.0 + inp.s_star) * (1.0 - inp.beta_sgdm)) *
           inp.eta_sgdm;
}

} // namespace tamopt
