#include "aos/desim.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace aos;
using aos::testing::random_model;

namespace {

SimConfig config(double horizon, std::uint64_t seed = 1, int batches = 10, double warmup = 1e3) {
    SimConfig c;
    c.horizon = horizon;
    c.warmup = std::min(warmup, horizon / 10);
    c.seed = seed;
    c.batches = batches;
    return c;
}

// |x - target| in units of the estimate's standard error.
double z_score(const Estimate &e, double target) { return std::abs(e.mean - target) / e.std_error; }

double z_score(const Estimate &a, const Estimate &b) {
    return std::abs(a.mean - b.mean) / std::hypot(a.std_error, b.std_error);
}

} // namespace

// =============================================================================
// simulate
// =============================================================================

TEST(Simulate, NPolicyUnitParameters) {
    const auto e = simulate(PolicyKind::NPolicy, PolicyParams{}, config(1e6));
    EXPECT_LE(z_score(e.avg_aos, 0.8), 3.0) << e.avg_aos.mean << " +- " << e.avg_aos.std_error;
    EXPECT_LE(z_score(e.avg_power, 0.6), 3.0) << e.avg_power.mean << " +- " << e.avg_power.std_error;
}

TEST(Simulate, RareUpdatesStaySynchronizedAndAsleep) {
    PolicyParams p;
    p.lambda = 1e-6;
    for (auto k : kAllPolicies) {
        const auto e = simulate(k, p, config(1e4));
        EXPECT_LT(e.avg_aos.mean, 1e-2) << to_string(k);
        // Single-sleep wakes up once and then idles at P_I; the others sleep.
        if (k == PolicyKind::SingleSleep)
            EXPECT_NEAR(e.avg_power.mean, p.p_idle, 1e-2);
        else
            EXPECT_NEAR(e.avg_power.mean, p.p_sleep, 1e-2) << to_string(k);
    }
}

TEST(Simulate, Deterministic) {
    std::mt19937_64 rng(21);
    for (auto k : kAllPolicies) {
        const auto p = aos::testing::random_params(rng, 0.3, 3);
        const auto a = simulate(k, p, config(2e4, 99));
        const auto b = simulate(k, p, config(2e4, 99));
        EXPECT_TRUE(a == b) << to_string(k);
        const auto c = simulate(k, p, config(2e4, 100));
        EXPECT_FALSE(a == c) << to_string(k);
    }
}

TEST(Simulate, TimeFractionsSumToOne) {
    for (auto k : kAllPolicies) {
        const auto e = simulate(k, PolicyParams{}, config(1e4));
        double total = 0;
        for (const auto &[name, f] : e.time_fraction)
            total += f;
        EXPECT_NEAR(total, 1.0, 1e-9);
        EXPECT_GE(e.avg_aos.mean, 0.0);
    }
}

TEST(Simulate, PhaseFractionsMatchStationaryMass) {
    std::mt19937_64 rng(31);
    for (auto k : kAllPolicies) {
        const auto p = aos::testing::random_params(rng, 0.3, 3, 4);
        const auto e = simulate(k, p, config(1e5, 7));
        const auto expected = phase_fractions(k, p, analyze(k, p).pi);
        for (const auto &[phase, mass] : expected) {
            const double se = e.time_fraction_se.at(phase);
            EXPECT_LE(std::abs(e.time_fraction.at(phase) - mass), 3 * se + 1e-12)
                << to_string(k) << " " << phase << ": " << e.time_fraction.at(phase) << " vs " << mass;
        }
    }
}

TEST(Simulate, WarmupInsensitivity) {
    for (auto k : kAllPolicies) {
        double total = 0;
        const int seeds = 5;
        for (int seed = 0; seed < seeds; ++seed) {
            auto short_warm = config(1e5, seed, 10, 1e3);
            auto long_warm = short_warm;
            long_warm.warmup = 2e3;
            const auto a = simulate(k, PolicyParams{}, short_warm);
            const auto b = simulate(k, PolicyParams{}, long_warm);
            total += std::abs(a.avg_aos.mean - b.avg_aos.mean) / a.avg_aos.std_error;
        }
        EXPECT_LT(total / seeds, 1.0) << to_string(k);
    }
}

TEST(Simulate, InvalidConfigRejected) {
    SimConfig c;
    c.warmup = c.horizon;
    EXPECT_THROW(simulate(PolicyKind::NPolicy, PolicyParams{}, c), InvalidConfig);
    c = {};
    c.batches = 1;
    EXPECT_THROW(simulate(PolicyKind::NPolicy, PolicyParams{}, c), InvalidConfig);
    c = {};
    c.horizon = -1;
    EXPECT_THROW(simulate(PolicyKind::NPolicy, PolicyParams{}, c), InvalidConfig);
    PolicyParams p;
    p.lambda = 0;
    EXPECT_THROW(simulate(PolicyKind::NPolicy, p, SimConfig{}), InvalidParams);
}

TEST(Simulate, EventCapGuard) {
    SimConfig c;
    c.horizon = 1e9;
    c.max_events = 1e6;
    EXPECT_THROW(simulate(PolicyKind::MultiSleep, PolicyParams{}, c), InvalidConfig);
}

// =============================================================================
// Sample paths
// =============================================================================

TEST(SamplePath, SawtoothShape) {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 10; ++trial) {
        for (auto k : kAllPolicies) {
            const auto p = aos::testing::random_params(rng, 0.2, 5, 4);
            const auto path = sample_path(k, p, config(1e6, trial), 5000);
            ASSERT_GT(path.size(), 10u);
            EXPECT_EQ(path.front().event, EventKind::Start);
            EXPECT_EQ(path.front().aos, 0.0);
            std::size_t resets = 0;
            for (std::size_t i = 1; i < path.size(); ++i) {
                const auto &a = path[i - 1], &b = path[i];
                const double dt = b.time - a.time;
                ASSERT_GE(dt, 0.0);
                ASSERT_GE(b.aos, 0.0);
                if (b.event == EventKind::ServiceCompletion) {
                    ASSERT_EQ(b.aos, 0.0);
                    ++resets;
                    continue;
                }
                // Between events the age either stays at zero (slope 0) or
                // grows with slope 1 from where it was.
                const bool flat_at_zero = a.aos == 0.0 && b.aos == 0.0;
                const bool unit_slope = std::abs(b.aos - (a.aos + dt)) <= 1e-9 * std::max(1.0, b.time);
                ASSERT_TRUE(flat_at_zero || unit_slope)
                    << to_string(k) << " row " << i << ": " << a.aos << " -> " << b.aos << " over " << dt;
                ASSERT_GE(b.aos, a.aos) << "age dropped without a service completion at row " << i;
            }
            EXPECT_GT(resets, 0u);
        }
    }
}

TEST(SamplePath, MatchesFirstReplicationAndWritesCsv) {
    const auto path = sample_path(PolicyKind::SingleSleep, PolicyParams{}, config(1e3), 3);
    ASSERT_EQ(path.size(), 3u);
    std::ostringstream os;
    write_path_csv(path, os);
    const auto text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "time,aos,phase_label");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}

TEST(SyncTracker, EarliestUnsyncedUpdate) {
    SyncTracker s;
    EXPECT_TRUE(s.synchronized());
    EXPECT_EQ(s.aos(5.0), 0.0);
    s.on_update(1.0);
    s.on_update(2.0);
    EXPECT_DOUBLE_EQ(s.aos(4.0), 3.0);
    s.on_refresh(4.5);
    EXPECT_TRUE(s.synchronized());
    EXPECT_EQ(s.last_refresh(), 4.5);
    EXPECT_EQ(s.aos(10.0), 0.0);
}

// =============================================================================
// simulate_generic
// =============================================================================

TEST(SimulateGeneric, ZeroGrowthIsExactlyZero) {
    std::mt19937_64 rng(2);
    auto m = random_model(rng, 4);
    for (auto &s : m.states)
        s.annotation.growth = 0;
    EXPECT_EQ(simulate_generic(m, config(1e4)).avg_aos.mean, 0.0);
}

TEST(SimulateGeneric, NPolicyModel) {
    const auto e = simulate_generic(build_n_policy(PolicyParams{}), config(1e6));
    EXPECT_LE(z_score(e.avg_aos, 0.8), 3.0) << e.avg_aos.mean << " +- " << e.avg_aos.std_error;
    EXPECT_LE(z_score(e.avg_power, 0.6), 3.0);
}

TEST(SimulateGeneric, RandomModelsMatchShsSolution) {
    std::mt19937_64 rng(123);
    for (int trial = 0; trial < 12; ++trial) {
        const auto m = random_model(rng, 3 + trial % 4);
        const auto pi = solve_stationary(m);
        const double aos = average_aos(solve_correlation(m, pi));
        const auto e = simulate_generic(m, config(2e5, trial));
        EXPECT_LE(z_score(e.avg_aos, aos), 3.0) << "trial " << trial << ": " << e.avg_aos.mean << " vs " << aos;
        EXPECT_LE(z_score(e.avg_power, average_power(pi, m)), 3.0) << "trial " << trial;
    }
}

TEST(SimulateGeneric, RejectsInvalidModel) {
    ShsModel<double> m;
    m.add_state("A", 1, 0);
    EXPECT_THROW(simulate_generic(m, config(10)), std::invalid_argument);
}

// Physical dynamics against the SHS encoding of each policy.
TEST(SimulateGeneric, PhysicalAndShsSimulationsAgree) {
    std::mt19937_64 rng(777);
    int checked = 0;
    for (auto k : kAllPolicies) {
        for (int trial = 0; trial < 20; ++trial) {
            const auto p = aos::testing::random_params(rng, 0.3, 3, 4);
            const auto cfg = config(2e4, 1000 + trial);
            const auto phys = simulate(k, p, cfg);
            const auto shs = simulate_generic(build_model(k, p), cfg);
            EXPECT_LE(z_score(phys.avg_aos, shs.avg_aos), 3.0)
                << to_string(k) << " trial " << trial << ": " << phys.avg_aos.mean << " vs " << shs.avg_aos.mean;
            EXPECT_LE(z_score(phys.avg_power, shs.avg_power), 3.0) << to_string(k) << " trial " << trial;
            ++checked;
        }
    }
    EXPECT_EQ(checked, 60);
}
