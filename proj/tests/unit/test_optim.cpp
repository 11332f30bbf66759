#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "tamopt/optim.hpp"

using namespace tamopt;

namespace {

HyperParams params(double eta, double beta, double gamma, double eps) {
    HyperParams hp;
    hp.eta = eta;
    hp.beta = beta;
    hp.gamma = gamma;
    hp.epsilon = eps;
    return hp;
}

OptimizerState state1(double m, double s_hat = 0.0) {
    OptimizerState s = OptimizerState::zeros(1, s_hat);
    s.m[0] = m;
    return s;
}

} // namespace

TEST(HyperParams, Defaults) {
    const HyperParams hp;
    EXPECT_EQ(hp.gamma, 0.9);
    EXPECT_EQ(hp.epsilon, 1e-8);
    EXPECT_EQ(hp.beta, 0.9);
    EXPECT_EQ(hp.beta2, 0.999);
    EXPECT_EQ(hp.c, 1e-8);
    EXPECT_EQ(hp.weight_decay, 0.0);
}

TEST(HyperParams, Validation) {
    HyperParams hp;
    hp.beta = 1.0;
    EXPECT_THROW(hp.validate(), DomainError);
    hp = HyperParams{};
    hp.gamma = 1.5;
    EXPECT_THROW(hp.validate(), DomainError);
    hp = HyperParams{};
    hp.c = 0.0;
    EXPECT_THROW(hp.validate(), DomainError);
    hp = HyperParams{};
    hp.damping_override = 1.2;
    EXPECT_THROW(hp.validate(), DomainError);
}

TEST(Cosine, Examples) {
    EXPECT_EQ(cosine_similarity({1, 0}, {1, 0}), 1.0);
    EXPECT_EQ(cosine_similarity({1, 0}, {0, 1}), 0.0);
    EXPECT_EQ(cosine_similarity({0, 0}, {1, 1}), 0.0);
    EXPECT_EQ(cosine_similarity({1, 0}, {-1, 0}), -1.0);
    EXPECT_THROW(cosine_similarity({1}, {1, 2}), DimensionError);
}

TEST(Cosine, ClampedOnRoundoff) {
    RngStream rng(5);
    for (int i = 0; i < 1000; ++i) {
        const ParamVector v = rng.normal_vector(7);
        const double c = cosine_similarity(v, scaled(3.0, v));
        ASSERT_LE(c, 1.0);
        ASSERT_GE(c, 1.0 - 1e-15);
    }
}

TEST(TamStep, FirstStep) {
    const auto r = tam_step({0}, {1}, OptimizerState::zeros(1), params(1.0, 0.9, 0.9, 0.0));
    EXPECT_EQ(r.telemetry.S, 0.0);
    EXPECT_EQ(r.state.s_hat, 0.0);
    EXPECT_EQ(r.telemetry.d, 0.5);
    EXPECT_EQ(r.state.m[0], 0.5);
    EXPECT_EQ(r.theta[0], -0.5);
    EXPECT_EQ(r.state.t, 1u);
}

TEST(TamStep, Aligned) {
    const auto r = tam_step({0}, {1}, state1(1.0, -0.3), params(0.1, 0.9, 0.0, 1e-8));
    EXPECT_EQ(r.telemetry.S, 1.0);
    EXPECT_EQ(r.state.s_hat, 1.0);
    EXPECT_EQ(r.telemetry.d, 1.0);
    EXPECT_DOUBLE_EQ(r.state.m[0], 1.9 + 1e-8);
}

TEST(TamStep, Opposed) {
    const auto r = tam_step({0}, {-1}, state1(1.0), params(0.1, 0.9, 0.0, 1e-8));
    EXPECT_EQ(r.telemetry.S, -1.0);
    EXPECT_EQ(r.state.s_hat, -1.0);
    EXPECT_EQ(r.telemetry.d, 0.0);
    EXPECT_DOUBLE_EQ(r.state.m[0], 0.9 - 1e-8);
}

TEST(TamStep, FiveStepOracle2D) {
    RngStream rng(11);
    const HyperParams hp = params(0.1, 0.9, 0.9, 1e-8);
    oracle::Params p;
    ParamVector theta = rng.normal_vector(2);
    OptimizerState st = OptimizerState::zeros(2);
    oracle::Vec ot = theta.to_vector();
    oracle::State os(2);
    for (int k = 0; k < 5; ++k) {
        const ParamVector g = rng.normal_vector(2);
        auto r = tam_step(theta, g, st, hp);
        oracle::step(oracle::Rule::tam, ot, g.to_vector(), os, p);
        theta = r.theta;
        st = r.state;
        for (int i = 0; i < 2; ++i) {
            EXPECT_NEAR(theta[i], ot[i], 1e-12);
            EXPECT_NEAR(st.m[i], os.m[i], 1e-12);
        }
        EXPECT_NEAR(st.s_hat, os.s_hat, 1e-12);
    }
}

TEST(TamStep, AffineInDamping) {
    RngStream rng(12);
    const ParamVector g = rng.normal_vector(4);
    OptimizerState st = OptimizerState::zeros(4);
    st.m = rng.normal_vector(4);
    HyperParams hp = params(0.1, 0.9, 0.9, 1e-3);
    hp.damping_override = 1.0;
    const auto one = tam_step(ParamVector(4), g, st, hp);
    hp.damping_override = 0.0;
    const auto zero = tam_step(ParamVector(4), g, st, hp);
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(one.state.m[i] - zero.state.m[i], g[i], 1e-15 * (1 + std::fabs(st.m[i])));
    }
}

TEST(TamStep, NonFiniteInputNamesField) {
    try {
        tam_step({0, 0}, {1, NAN}, OptimizerState::zeros(2), HyperParams{});
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_EQ(e.field(), "g");
    }
    EXPECT_THROW(tam_step({0, INFINITY}, {1, 1}, OptimizerState::zeros(2), HyperParams{}),
                 NumericError);
    EXPECT_THROW(tam_step({0}, {1, 1}, OptimizerState::zeros(2), HyperParams{}), DimensionError);
}

TEST(TamStep, PermutationEquivariance) {
    RngStream rng(13);
    const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
    const auto permute = [&](const ParamVector& v) {
        ParamVector out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            out[i] = v[perm[i]];
        }
        return out;
    };
    ParamVector theta = rng.normal_vector(5);
    OptimizerState st = OptimizerState::zeros(5);
    ParamVector ptheta = permute(theta);
    OptimizerState pst = OptimizerState::zeros(5);
    for (int k = 0; k < 20; ++k) {
        const ParamVector g = rng.normal_vector(5);
        auto r = adatam_step(theta, g, st, HyperParams{});
        auto pr = adatam_step(ptheta, permute(g), pst, HyperParams{});
        theta = r.theta;
        st = r.state;
        ptheta = pr.theta;
        pst = pr.state;
        const auto expect = permute(theta);
        for (std::size_t i = 0; i < 5; ++i) {
            EXPECT_NEAR(ptheta[i], expect[i], 1e-14);
        }
    }
}

TEST(SgdmStep, Examples) {
    const auto r = sgdm_step({0}, {1}, state1(1.0), params(0.1, 0.9, 0.9, 0.0));
    EXPECT_DOUBLE_EQ(r.state.m[0], 1.9);
    EXPECT_DOUBLE_EQ(r.theta[0], -0.19);
    EXPECT_EQ(r.telemetry.d, 1.0);

    const auto plain = sgdm_step({2, 3}, {1, -2}, OptimizerState::zeros(2), params(0.1, 0.0, 0.9, 0));
    EXPECT_EQ(plain.theta, (ParamVector{2 - 0.1 * 1, 3 - 0.1 * -2}));
}

TEST(SgdmStep, TamWithUnitDampingIsBitwiseEqual) {
    RngStream rng(14);
    HyperParams hp = params(0.05, 0.9, 0.9, 0.0);
    HyperParams tam_hp = hp;
    tam_hp.damping_override = 1.0;
    ParamVector a = rng.normal_vector(6);
    ParamVector b = a;
    OptimizerState sa = OptimizerState::zeros(6);
    OptimizerState sb = sa;
    for (int k = 0; k < 100; ++k) {
        const ParamVector g = rng.normal_vector(6);
        auto ra = sgdm_step(a, g, sa, hp);
        auto rb = tam_step(b, g, sb, tam_hp);
        ASSERT_EQ(ra.theta, rb.theta);
        ASSERT_EQ(ra.state, rb.state);
        ASSERT_EQ(ra.telemetry, rb.telemetry);
        a = ra.theta;
        b = rb.theta;
        sa = ra.state;
        sb = rb.state;
    }
}

TEST(SgdStep, Examples) {
    const auto r = sgd_step({0, 0}, {1, -2}, params(0.1, 0.9, 0.9, 0));
    EXPECT_DOUBLE_EQ(r.theta[0], -0.1);
    EXPECT_DOUBLE_EQ(r.theta[1], 0.2);
    const ParamVector theta{1.25, -3};
    EXPECT_EQ(sgd_step(theta, ParamVector(2), HyperParams{}).theta, theta);
}

TEST(SgdStep, EqualsSgdmWithZeroBeta) {
    RngStream rng(15);
    const HyperParams hp = params(0.07, 0.0, 0.9, 0);
    ParamVector a = rng.normal_vector(3);
    ParamVector b = a;
    OptimizerState sb = OptimizerState::zeros(3);
    for (int k = 0; k < 100; ++k) {
        const ParamVector g = rng.normal_vector(3);
        a = sgd_step(a, g, hp).theta;
        auto rb = sgdm_step(b, g, sb, hp);
        b = rb.theta;
        sb = rb.state;
        ASSERT_EQ(a, b);
    }
}

TEST(AdamStep, ZeroGradientLeavesTheta) {
    const ParamVector theta{0.3, -1};
    EXPECT_EQ(adam_step(theta, ParamVector(2), OptimizerState::zeros(2), HyperParams{}).theta, theta);
}

TEST(AdamStep, ConstantGradientStepTendsToEta) {
    HyperParams hp;
    hp.eta = 0.01;
    hp.c = 1e-12;
    ParamVector theta(2);
    OptimizerState st = OptimizerState::zeros(2);
    StepResult r;
    for (int k = 0; k < 5000; ++k) {
        r = adam_step(theta, {0.3, -7}, st, hp);
        theta = r.theta;
        st = r.state;
    }
    EXPECT_NEAR(r.telemetry.update_norm, hp.eta * std::sqrt(2.0), 1e-8);
}

TEST(AdamStep, ThreeStepOracle) {
    RngStream rng(16);
    oracle::Params p;
    p.bias_correction = true;
    ParamVector theta = rng.normal_vector(2);
    OptimizerState st = OptimizerState::zeros(2);
    oracle::Vec ot = theta.to_vector();
    oracle::State os(2);
    for (int k = 0; k < 3; ++k) {
        const ParamVector g = rng.normal_vector(2);
        auto r = adam_step(theta, g, st, HyperParams{});
        oracle::step(oracle::Rule::adam, ot, g.to_vector(), os, p);
        theta = r.theta;
        st = r.state;
        EXPECT_NEAR(theta[0], ot[0], 1e-12);
        EXPECT_NEAR(theta[1], ot[1], 1e-12);
    }
}

TEST(AdatamStep, ZeroGradientZeroMomentum) {
    const ParamVector theta{0.5, 2};
    EXPECT_EQ(adatam_step(theta, ParamVector(2), OptimizerState::zeros(2), HyperParams{}).theta,
              theta);
}

TEST(AdatamStep, UnitDampingUsesSgdmMomentum) {
    RngStream rng(17);
    HyperParams hp = params(0.01, 0.9, 0.9, 0.0);
    hp.damping_override = 1.0;
    OptimizerState st = OptimizerState::zeros(3);
    st.m = rng.normal_vector(3);
    const ParamVector g = rng.normal_vector(3);
    const auto r = adatam_step(ParamVector(3), g, st, hp);
    const auto s = sgdm_step(ParamVector(3), g, st, hp);
    EXPECT_EQ(r.state.m, s.state.m);
    EXPECT_NE(r.theta, s.theta);
}

TEST(AdatamStep, FiveStepOracles) {
    for (auto [rule, fn] : {std::pair{oracle::Rule::adatam, &adatam_step},
                            std::pair{oracle::Rule::adatam2, &adatam2_step}}) {
        RngStream rng(18);
        ParamVector theta = rng.normal_vector(2);
        OptimizerState st = OptimizerState::zeros(2);
        oracle::Vec ot = theta.to_vector();
        oracle::State os(2);
        for (int k = 0; k < 5; ++k) {
            const ParamVector g = rng.normal_vector(2);
            auto r = fn(theta, g, st, HyperParams{});
            oracle::step(rule, ot, g.to_vector(), os, oracle::Params{});
            theta = r.theta;
            st = r.state;
            EXPECT_NEAR(theta[0], ot[0], 1e-12);
            EXPECT_NEAR(theta[1], ot[1], 1e-12);
        }
    }
}

TEST(Adatam2Step, DampingExtremes) {
    RngStream rng(19);
    OptimizerState st = OptimizerState::zeros(3);
    st.m = rng.normal_vector(3);
    const ParamVector g = rng.normal_vector(3);
    HyperParams hp = params(0.01, 0.9, 0.9, 0.0);
    hp.damping_override = 1.0;
    EXPECT_EQ(adatam2_step(ParamVector(3), g, st, hp).state.m, g);
    hp.damping_override = 0.0;
    EXPECT_EQ(adatam2_step(ParamVector(3), g, st, hp).state.m, st.m);
}

TEST(Adatam2Step, ComplementMayBeNegative) {
    HyperParams hp = params(0.01, 0.9, 0.0, 0.25);
    hp.damping_override = 1.0;
    const auto r = adatam2_step({0}, {1}, state1(2.0), hp);
    EXPECT_DOUBLE_EQ(r.state.m[0], -0.25 * 2.0 + 1.25 * 1.0);
}

TEST(WeightDecay, ZeroLambdaIsIdentity) {
    RngStream rng(20);
    const auto wrapped = with_decoupled_weight_decay(tam_step, 0.0);
    const ParamVector theta = rng.normal_vector(4);
    const ParamVector g = rng.normal_vector(4);
    const auto a = wrapped(theta, g, OptimizerState::zeros(4), HyperParams{});
    const auto b = tam_step(theta, g, OptimizerState::zeros(4), HyperParams{});
    EXPECT_EQ(a.theta, b.theta);
    EXPECT_EQ(a.state, b.state);
}

TEST(WeightDecay, ShrinksPreStepTheta) {
    HyperParams hp;
    hp.eta = 1.0;
    const auto sgd = make_step_function("sgd");
    const auto wrapped = with_decoupled_weight_decay(sgd, 0.1);
    EXPECT_DOUBLE_EQ(wrapped({1}, {0}, OptimizerState::zeros(1), hp).theta[0], 0.9);
    EXPECT_THROW(with_decoupled_weight_decay(sgd, -1.0), DomainError);
}

TEST(WeightDecay, AdamwDiffersFromL2Adam) {
    const std::vector<double> A = {0.1, 10.0};
    const double lambda = 0.1;
    HyperParams hp;
    hp.eta = 0.01;
    hp.weight_decay = lambda;
    HyperParams plain = hp;
    plain.weight_decay = 0.0;
    const auto adamw = make_step_function("adamw");
    ParamVector a{1, 1};
    ParamVector b{1, 1};
    OptimizerState sa = OptimizerState::zeros(2);
    OptimizerState sb = sa;
    double gap = 0.0;
    for (int k = 0; k < 50; ++k) {
        const ParamVector ga{A[0] * a[0], A[1] * a[1]};
        const ParamVector gb{A[0] * b[0] + lambda * b[0], A[1] * b[1] + lambda * b[1]};
        auto ra = adamw(a, ga, sa, hp);
        auto rb = adam_step(b, gb, sb, plain);
        a = ra.theta;
        b = rb.theta;
        sa = ra.state;
        sb = rb.state;
        gap = std::max(gap, norm(difference(a, b)));
    }
    EXPECT_GT(gap, 1e-6);
}

TEST(Registry, Names) {
    for (const auto& name : optimizer_names()) {
        EXPECT_TRUE(is_known_optimizer(name));
        EXPECT_NO_THROW(make_step_function(name));
    }
    EXPECT_FALSE(is_known_optimizer("tamm"));
    EXPECT_THROW(make_step_function("tamm"), DomainError);
}

TEST(Cosine, HugeVectorsDoNotOverflow) {
    EXPECT_NEAR(cosine_similarity({1e300, 1e300}, {-1e300, -1e300}), -1.0, 1e-15);
    EXPECT_NEAR(cosine_similarity({1e300, 0}, {1e300, 1e300}), std::sqrt(0.5), 1e-15);
}

TEST(Bounds, RandomWalkKeepsTelemetryInRange) {
    RngStream rng(21);
    for (const char* name : {"tam", "adatam", "adatam2"}) {
        const auto step = make_step_function(name);
        ParamVector theta = rng.normal_vector(8);
        OptimizerState st = OptimizerState::zeros(8);
        for (int k = 0; k < 2000; ++k) {
            ParamVector g = rng.normal_vector(8);
            if (k % 7 == 0) {
                g = axpy(-5.0, st.m, g); // torqued against the momentum
            }
            auto r = step(theta, g, st, HyperParams{});
            ASSERT_GE(r.telemetry.S, -1.0);
            ASSERT_LE(r.telemetry.S, 1.0);
            ASSERT_GE(r.telemetry.s_hat, -1.0);
            ASSERT_LE(r.telemetry.s_hat, 1.0);
            ASSERT_GE(r.telemetry.d, 0.0);
            ASSERT_LE(r.telemetry.d, 1.0);
            theta = r.theta;
            st = r.state;
        }
    }
}
