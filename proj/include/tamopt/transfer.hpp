#pragma once

namespace tamopt {

/// Inputs for carrying a tuned SGDM learning rate over to TAM.
struct TransferInputs {
    double eta_sgdm = 0.1;
    double beta_sgdm = 0.9;
    double beta_tam = 0.9;
    double s_star = 0.0; ///< stabilized smoothed cosine; must be > -1
};

/// eta / (1 - beta).
double eta_eff_sgdm(double eta, double beta);

/// (1 + s_star) / (2 (1 - beta)) * eta. The epsilon floor is neglected.
double eta_eff_tam(double eta, double beta, double s_star);

/// Learning rate for TAM whose effective rate equals SGDM's:
/// 2 (1 - beta_tam) / ((1 + s_star)(1 - beta_sgdm)) * eta_sgdm.
/// With equal betas and s_star = 0 this is twice the SGDM rate.
double transfer_lr(const TransferInputs& inp);

} // namespace tamopt
