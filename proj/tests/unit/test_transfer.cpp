#include <gtest/gtest.h>

#include <cmath>

#include "tamopt/errors.hpp"
#include "tamopt/transfer.hpp"
#include "tamopt/vecmath.hpp"

using namespace tamopt;

TEST(Transfer, EffectiveRates) {
    EXPECT_DOUBLE_EQ(eta_eff_sgdm(0.1, 0.9), 1.0);
    EXPECT_EQ(eta_eff_sgdm(0.37, 0.0), 0.37);
    EXPECT_NEAR(eta_eff_sgdm(0.01, 0.99), 1.0, 1e-14);
    EXPECT_DOUBLE_EQ(eta_eff_tam(0.2, 0.9, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(eta_eff_tam(0.3, 0.8, 1.0), eta_eff_sgdm(0.3, 0.8));
    EXPECT_EQ(eta_eff_tam(0.3, 0.8, -1.0), 0.0);
}

TEST(Transfer, DomainErrors) {
    EXPECT_THROW(eta_eff_sgdm(0.1, 1.0), DomainError);
    EXPECT_THROW(eta_eff_tam(0.1, 0.9, 1.5), DomainError);
    EXPECT_THROW(transfer_lr({0.1, 0.9, 0.9, -1.0}), DomainError);
    EXPECT_THROW(transfer_lr({0.0, 0.9, 0.9, 0.0}), DomainError);
}

TEST(Transfer, DoublesSgdmRate) {
    EXPECT_EQ(transfer_lr({0.1, 0.9, 0.9, 0.0}), 0.2);
    EXPECT_DOUBLE_EQ(transfer_lr({0.05, 0.8, 0.8, 1.0}), 0.05);
}

TEST(Transfer, RoundTripAndMonotone) {
    RngStream rng(4);
    for (int k = 0; k < 100; ++k) {
        const TransferInputs in{rng.uniform(1e-4, 1.0), rng.uniform(0.0, 0.999),
                                rng.uniform(0.0, 0.999), rng.uniform(-0.99, 1.0)};
        const double lhs = eta_eff_tam(transfer_lr(in), in.beta_tam, in.s_star);
        const double rhs = eta_eff_sgdm(in.eta_sgdm, in.beta_sgdm);
        EXPECT_LE(std::fabs(lhs - rhs) / rhs, 1e-15);

        TransferInputs higher = in;
        higher.s_star = std::min(1.0, in.s_star + 0.01);
        if (higher.s_star > in.s_star) {
            EXPECT_LT(transfer_lr(higher), transfer_lr(in));
        }
    }
}
