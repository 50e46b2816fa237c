#include "aos/policies.hpp"
#include "aos/shs.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace aos;
using aos::testing::random_model;

namespace {

ShsModel<double> two_state(double ab = 1.0, double ba = 1.0) {
    ShsModel<double> m;
    m.add_state("A", 1, 1);
    m.add_state("B", 0, 0);
    m.add_transition(0, 1, ab, 0);
    m.add_transition(1, 0, ba, 1);
    return m;
}

bool has_kind(const std::vector<Diagnostic> &d, Diagnostic::Kind k) {
    return std::any_of(d.begin(), d.end(), [&](const auto &x) { return x.kind == k; });
}

bool mentions(const std::vector<Diagnostic> &d, const std::string &text) {
    return std::any_of(d.begin(), d.end(), [&](const auto &x) { return x.message.find(text) != std::string::npos; });
}

} // namespace

// =============================================================================
// validate_model
// =============================================================================

TEST(ValidateModel, MinimalChainIsValid) { EXPECT_TRUE(validate_model(two_state()).empty()); }

TEST(ValidateModel, AbsorbingState) {
    ShsModel<double> m;
    m.add_state("A", 0, 0);
    m.add_state("B", 0, 0);
    m.add_transition(0, 1, 1.0);
    const auto d = validate_model(m);
    EXPECT_TRUE(has_kind(d, Diagnostic::Kind::AbsorbingState));
    EXPECT_TRUE(mentions(d, "absorbing state"));
}

TEST(ValidateModel, NonpositiveRate) {
    auto m = two_state(0.0, 1.0);
    const auto d = validate_model(m);
    EXPECT_TRUE(has_kind(d, Diagnostic::Kind::NonpositiveRate));
    EXPECT_TRUE(mentions(d, "nonpositive rate"));

    m.transitions[0].rate = std::numeric_limits<double>::infinity();
    EXPECT_TRUE(has_kind(validate_model(m), Diagnostic::Kind::NonpositiveRate));
}

TEST(ValidateModel, NonBinaryResetAndGrowth) {
    auto m = two_state();
    m.transitions[0].reset = 0.5;
    m.states[1].annotation.growth = 2;
    const auto d = validate_model(m);
    EXPECT_TRUE(has_kind(d, Diagnostic::Kind::NonBinaryReset));
    EXPECT_TRUE(has_kind(d, Diagnostic::Kind::NonBinaryGrowth));
}

TEST(ValidateModel, DanglingStateId) {
    auto m = two_state();
    m.add_transition(0, 7, 1.0);
    EXPECT_TRUE(has_kind(validate_model(m), Diagnostic::Kind::DanglingState));
}

TEST(ValidateModel, UnreachableState) {
    auto m = two_state();
    m.add_state("C", 0, 0);
    m.add_transition(2, 0, 1.0); // C leaves but is never entered
    const auto d = validate_model(m);
    EXPECT_TRUE(has_kind(d, Diagnostic::Kind::UnreachableState));
    EXPECT_FALSE(has_kind(d, Diagnostic::Kind::AbsorbingState));
}

TEST(ValidateModel, NegativePowerAndEmpty) {
    auto m = two_state();
    m.states[0].annotation.power = -1;
    EXPECT_TRUE(has_kind(validate_model(m), Diagnostic::Kind::NegativePower));
    EXPECT_TRUE(has_kind(validate_model(ShsModel<double>{}), Diagnostic::Kind::EmptyModel));
}

// =============================================================================
// solve_stationary
// =============================================================================

TEST(SolveStationary, SymmetricTwoState) {
    const auto pi = solve_stationary(two_state());
    EXPECT_NEAR(pi.pi(0), 0.5, 1e-15);
    EXPECT_NEAR(pi.pi(1), 0.5, 1e-15);
}

TEST(SolveStationary, NPolicyUnitParameters) {
    // Hand solution of the 4-state chain B, ID, SL, 1 with unit rates:
    // pi_B mu = pi_N / theta + pi_ID lambda, ... gives (2, 1, 1, 1) / 5.
    PolicyParams p;
    p.n = 1;
    const auto pi = solve_stationary(build_n_policy(p));
    ASSERT_EQ(pi.pi.size(), 4);
    EXPECT_NEAR(pi.pi(0), 0.4, 1e-14);
    EXPECT_NEAR(pi.pi(1), 0.2, 1e-14);
    EXPECT_NEAR(pi.pi(2), 0.2, 1e-14);
    EXPECT_NEAR(pi.pi(3), 0.2, 1e-14);
}

TEST(SolveStationary, MultiSleepUnitParametersWithSelfLoop) {
    PolicyParams p;
    const auto pi = solve_stationary(build_multi_sleep(p));
    const double expected[] = {1.0 / 6, 1.0 / 6, 1.0 / 6, 2.0 / 6, 1.0 / 6};
    for (int i = 0; i < 5; ++i)
        EXPECT_NEAR(pi.pi(i), expected[i], 1e-14) << "state " << i;
}

TEST(SolveStationary, TwoClosedClassesAreSingular) {
    ShsModel<double> m;
    for (int i = 0; i < 4; ++i)
        m.add_state("q" + std::to_string(i), 0, 0);
    m.add_transition(0, 1, 1.0, 0);
    m.add_transition(1, 0, 1.0, 0);
    m.add_transition(2, 3, 1.0, 0);
    m.add_transition(3, 2, 1.0, 0);
    EXPECT_FALSE(validate_model(m).empty());
    EXPECT_THROW(solve_stationary(m), SingularSystem);
}

// =============================================================================
// solve_correlation / average_aos / average_power
// =============================================================================

TEST(SolveCorrelation, ZeroGrowthGivesZeroVector) {
    auto m = two_state();
    m.states[0].annotation.growth = 0;
    const auto v = solve_correlation(m, solve_stationary(m));
    EXPECT_EQ(v.v.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(average_aos(v), 0.0);
}

TEST(SolveCorrelation, NoResetAnywhereIsSingular) {
    auto m = two_state();
    m.transitions[0].reset = 1;
    EXPECT_THROW(solve_correlation(m, solve_stationary(m)), SingularSystem);
}

TEST(SolveCorrelation, SizeMismatchRejected) {
    const auto m = two_state();
    StationaryDistribution<double> wrong{Vector<double>::Constant(3, 1.0 / 3)};
    EXPECT_THROW(solve_correlation(m, wrong), std::invalid_argument);
}

TEST(SolveCorrelation, NPolicyUnitParameters) {
    PolicyParams p;
    const auto m = build_n_policy(p);
    const auto v = solve_correlation(m, solve_stationary(m));
    EXPECT_NEAR(average_aos(v), 0.8, 1e-14);
}

TEST(SolveCorrelation, MultiSleepUnitParameters) {
    // lambda (s^2 mu^2 + s theta mu^2 + s mu + theta^2 mu^2 + theta mu + d lambda + 1)
    //   / (mu (mu + lambda + d lambda^2 + d mu lambda + s mu lambda + theta mu lambda))
    // = 7 / 6 with every parameter equal to 1.
    const auto m = build_multi_sleep(PolicyParams{});
    const auto v = solve_correlation(m, solve_stationary(m));
    EXPECT_NEAR(average_aos(v), 7.0 / 6.0, 1e-14);
}

TEST(SolveCorrelation, SingleSleepUnitParameters) {
    // B = 21 and C = 20 by direct substitution, so lambda C / (mu B) = 20 / 21.
    const auto m = build_single_sleep(PolicyParams{});
    const auto v = solve_correlation(m, solve_stationary(m));
    EXPECT_NEAR(average_aos(v), 20.0 / 21.0, 1e-14);
}

TEST(AverageAos, ZeroVector) { EXPECT_EQ(average_aos(CorrelationVector<double>{Vector<double>::Zero(4)}), 0.0); }

TEST(AveragePower, ConstantPowerIsThatConstant) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto m = random_model(rng, 5);
        for (auto &s : m.states)
            s.annotation.power = 0.37;
        EXPECT_NEAR(average_power(solve_stationary(m), m), 0.37, 1e-14);
    }
}

TEST(AveragePower, NPolicyUnitParameters) {
    const PolicyParams p; // P = (1, 0.5, 0, 0.5)
    const auto m = build_n_policy(p);
    EXPECT_NEAR(average_power(solve_stationary(m), m), 0.6, 1e-14);
}

TEST(AveragePower, ZeroPowerSleepChainIsNearZero) {
    // Two zero-power states plus one powered state entered at a negligible rate.
    ShsModel<double> m;
    m.add_state("SL", 0, 0);
    m.add_state("SL'", 0, 0);
    m.add_state("B", 1, 1);
    m.add_transition(0, 1, 1.0);
    m.add_transition(1, 0, 1.0);
    m.add_transition(1, 2, 1e-12);
    m.add_transition(2, 0, 1.0, 0);
    EXPECT_TRUE(validate_model(m).empty());
    EXPECT_NEAR(average_power(solve_stationary(m), m), 0.0, 1e-11);
}

// =============================================================================
// Properties over random models
// =============================================================================

TEST(ShsProperties, StationaryAndCorrelationInvariants) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 3 + trial % 4;
        const auto m = random_model(rng, n);
        ASSERT_TRUE(validate_model(m).empty());
        const auto pi = solve_stationary(m);
        EXPECT_GE(pi.pi.minCoeff(), 0.0);
        EXPECT_NEAR(pi.pi.sum(), 1.0, 1e-12);
        EXPECT_LE(balance_residual(m, pi.pi), 1e-10);

        const auto v = solve_correlation(m, pi);
        EXPECT_GE(v.v.minCoeff(), 0.0);
        EXPECT_LE(correlation_residual(m, pi.pi, v.v), 1e-10);
    }
}

TEST(ShsProperties, SelfLoopInvariance) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> rate(0.01, 50);
    for (int trial = 0; trial < 200; ++trial) {
        auto m = random_model(rng, 3 + trial % 4);
        const auto pi0 = solve_stationary(m);
        const auto v0 = solve_correlation(m, pi0);

        const std::size_t q = trial % m.size();
        m.add_transition(q, q, rate(rng), 1.0);
        const auto pi1 = solve_stationary(m);
        const auto v1 = solve_correlation(m, pi1);
        EXPECT_LE((pi1.pi - pi0.pi).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((v1.v - v0.v).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(ShsProperties, RateRescalingCovariance) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        auto m = random_model(rng, 3 + trial % 4);
        const double c = aos::testing::log_uniform(rng, 0.01, 100);
        const auto pi0 = solve_stationary(m);
        const double aos0 = average_aos(solve_correlation(m, pi0));
        for (auto &t : m.transitions)
            t.rate *= c;
        const auto pi1 = solve_stationary(m);
        const double aos1 = average_aos(solve_correlation(m, pi1));
        EXPECT_LE((pi1.pi - pi0.pi).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(aos1 * c, aos0, 1e-10 * std::max(1.0, aos0));
    }
}

TEST(ShsProperties, ExtendedPrecisionAgrees) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = random_model(rng, 5);
        ShsModel<long double> ml;
        for (const auto &s : m.states)
            ml.add_state(s.id.label, s.annotation.growth, s.annotation.power);
        for (const auto &t : m.transitions)
            ml.add_transition(t.from, t.to, t.rate, t.reset);
        const auto pil = solve_stationary(ml);
        const long double aosl = average_aos(solve_correlation(ml, pil));
        const double aosd = average_aos(solve_correlation(m, solve_stationary(m)));
        EXPECT_NEAR(static_cast<double>(aosl), aosd, 1e-11 * std::max(1.0, aosd));
    }
}
