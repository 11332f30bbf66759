#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "tamopt/vecmath.hpp"

using namespace tamopt;

TEST(Dot, SmallCases) {
    EXPECT_EQ(dot({1, 2}, {3, 4}), 11.0);
    EXPECT_EQ(dot({1.5, -2, 7}, ParamVector(3)), 0.0);
}

TEST(Dot, MatchesCompensatedOracle) {
    RngStream rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const ParamVector a = rng.normal_vector(100);
        const ParamVector b = rng.normal_vector(100);
        const double ref = oracle::compensated_dot(a.to_vector(), b.to_vector());
        EXPECT_NEAR(dot(a, b), ref, 1e-12 * std::max(1.0, std::fabs(ref)));
    }
}

TEST(Dot, SymmetricAndCauchySchwarz) {
    RngStream rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const ParamVector a = rng.normal_vector(37);
        const ParamVector b = rng.normal_vector(37);
        EXPECT_EQ(dot(a, b), dot(b, a));
        EXPECT_LE(std::fabs(dot(a, b)), norm(a) * norm(b) * (1.0 + 1e-12));
    }
}

TEST(Dot, LengthMismatchThrows) {
    EXPECT_THROW(dot({1, 2}, {1, 2, 3}), DimensionError);
    EXPECT_THROW(axpy(1.0, {1}, {1, 2}), DimensionError);
}

TEST(Norm, Basics) {
    EXPECT_EQ(norm({3, 4}), 5.0);
    EXPECT_EQ(norm(ParamVector(9)), 0.0);
    for (std::size_t n : {1u, 5u, 64u}) {
        ParamVector e(n);
        e[n - 1] = 1.0;
        EXPECT_EQ(norm(e), 1.0);
    }
}

TEST(Axpy, Examples) {
    const ParamVector x{1.5, -2};
    const ParamVector y{0.25, 8};
    EXPECT_EQ(axpy(0.0, x, y), y);
    EXPECT_EQ(axpy(1.0, x, ParamVector(2)), x);
    EXPECT_EQ(axpy(2.0, {1, 1}, {1, 2}), (ParamVector{3, 4}));
}

TEST(RequireFinite, NamesField) {
    try {
        require_finite({1.0, NAN}, "grad");
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_EQ(e.field(), "grad");
    }
    EXPECT_NO_THROW(require_finite({1.0, 2.0}, "theta"));
}

TEST(Rng, SameSeedSameSequence) {
    RngStream a(42);
    RngStream b(42);
    for (int i = 0; i < 1000; ++i) {
        ASSERT_EQ(a.next_u64(), b.next_u64());
    }
    RngStream c(42);
    RngStream d(42);
    for (int i = 0; i < 101; ++i) {
        ASSERT_EQ(c.normal(), d.normal());
    }
}

TEST(Rng, KnownFirstOutput) {
    // xoshiro256** seeded through splitmix64 from 0.
    RngStream r(0);
    EXPECT_EQ(r.next_u64(), 0x99EC5F36CB75F2B4ULL);
}

TEST(Rng, DifferentSeedsDiffer) {
    RngStream a(1);
    RngStream b(2);
    EXPECT_NE(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformAndIndexRanges) {
    RngStream r(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ASSERT_LT(r.index(7), 7u);
    }
}

TEST(Rng, NormalMoments) {
    RngStream r(9);
    double sum = 0.0;
    double sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsPermutation) {
    RngStream r(3);
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) {
        v[i] = i;
    }
    r.shuffle(std::span<int>(v));
    EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 50u);
}

TEST(SplitSeed, Rule) {
    EXPECT_EQ(split_seed(123, 0), 123u);
    EXPECT_EQ(split_seed(0, 1), 0x9E3779B97F4A7C15ULL);
    EXPECT_EQ(split_seed(5, 2), 5ULL ^ (2ULL * 0x9E3779B97F4A7C15ULL));
}
