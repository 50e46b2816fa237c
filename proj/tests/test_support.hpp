// Random generators shared by the property tests.
#pragma once

#include "aos/policies.hpp"
#include "aos/shs.hpp"

#include <cmath>
#include <random>

namespace aos::testing {

inline double log_uniform(std::mt19937_64 &rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

/// Strongly connected model with `n` states: a ring through every state plus
/// a few random chords. At least one transition resets the age.
inline ShsModel<double> random_model(std::mt19937_64 &rng, std::size_t n) {
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_real_distribution<double> power(0.0, 2.0);
    ShsModel<double> m;
    for (std::size_t i = 0; i < n; ++i)
        m.add_state("q" + std::to_string(i), coin(rng) ? 1.0 : 0.0, power(rng));
    for (std::size_t i = 0; i < n; ++i)
        m.add_transition(i, (i + 1) % n, log_uniform(rng, 0.1, 10), coin(rng) ? 1.0 : 0.0);
    const std::size_t chords = n;
    for (std::size_t c = 0; c < chords; ++c) {
        const auto from = pick(rng), to = pick(rng);
        if (from != to)
            m.add_transition(from, to, log_uniform(rng, 0.1, 10), coin(rng) ? 1.0 : 0.0);
    }
    m.transitions.front().reset = 0.0;
    return m;
}

inline PolicyParams random_params(std::mt19937_64 &rng, double lo = 0.1, double hi = 10, int max_n = 8) {
    PolicyParams p;
    p.lambda = log_uniform(rng, lo, hi);
    p.mu = log_uniform(rng, lo, hi);
    p.d = log_uniform(rng, lo, hi);
    p.theta = log_uniform(rng, lo, hi);
    p.s = log_uniform(rng, lo, hi);
    p.n = std::uniform_int_distribution<int>(1, max_n)(rng);
    return p;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

} // namespace aos::testing
