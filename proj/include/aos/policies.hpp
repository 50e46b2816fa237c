// Server wake-up policies: SHS model builders and closed-form results.
//
// States and transitions follow the chains of the three policies:
//   N-policy      B, ID, SL, 1..N          (N doubles as the wake-up state)
//   single-sleep  SL, SL1, WK, WK1, B, ID0, ID
//   multi-sleep   SL, SL1, WK, B, ID       (SL -> SL self-loop per sleep period)
// A "1" suffix marks a state holding an unprocessed packet.
#pragma once

#include "aos/shs.hpp"

#include <array>
#include <charconv>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace aos {

enum class PolicyKind { NPolicy, SingleSleep, MultiSleep };

inline constexpr std::array<PolicyKind, 3> kAllPolicies{PolicyKind::NPolicy, PolicyKind::SingleSleep,
                                                        PolicyKind::MultiSleep};

inline std::string_view to_string(PolicyKind kind) {
    switch (kind) {
    case PolicyKind::NPolicy:
        return "n_policy";
    case PolicyKind::SingleSleep:
        return "single_sleep";
    case PolicyKind::MultiSleep:
        return "multi_sleep";
    }
    return "?";
}

inline std::optional<PolicyKind> parse_policy(std::string_view name) {
    for (auto k : kAllPolicies)
        if (to_string(k) == name)
            return k;
    if (name == "n" || name == "npolicy" || name == "n-policy")
        return PolicyKind::NPolicy;
    if (name == "single" || name == "single-sleep")
        return PolicyKind::SingleSleep;
    if (name == "multi" || name == "multi-sleep")
        return PolicyKind::MultiSleep;
    return std::nullopt;
}

/// Raised for parameter tuples outside the model's domain; names the field.
class InvalidParams : public std::invalid_argument {
  public:
    InvalidParams(std::string param, std::string why)
        : std::invalid_argument("invalid parameter '" + param + "': " + why), param_(std::move(param)),
          reason_(std::move(why)) {}
    const std::string &param() const noexcept { return param_; }
    const std::string &reason() const noexcept { return reason_; }

  private:
    std::string param_;
    std::string reason_;
};

inline constexpr int kMaxN = 10000;

/// Rates are per unit time, d/theta/s are mean durations. Power defaults are
/// P_B=1, P_I=P_W=0.5, P_S=0.
template <typename Scalar = double> struct BasicPolicyParams {
    Scalar lambda{1};
    Scalar mu{1};
    Scalar d{1};
    Scalar theta{1};
    Scalar s{1};
    int n = 1;
    Scalar p_busy{1};
    Scalar p_idle{0.5};
    Scalar p_sleep{0};
    Scalar p_wake{0.5};

    template <typename To> BasicPolicyParams<To> cast() const {
        return {To(lambda), To(mu), To(d),      To(theta),   To(s),
                n,          To(p_busy), To(p_idle), To(p_sleep), To(p_wake)};
    }
};

using PolicyParams = BasicPolicyParams<double>;

namespace detail {
inline std::string shortest(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}
} // namespace detail

template <typename Scalar> void validate(const BasicPolicyParams<Scalar> &p) {
    auto positive = [](const char *name, Scalar x) {
        if (!(x > Scalar(0)) || !std::isfinite(static_cast<double>(x)))
            throw InvalidParams(name, "must be positive and finite, got " + detail::shortest(double(x)));
    };
    auto nonnegative = [](const char *name, Scalar x) {
        if (!(x >= Scalar(0)) || !std::isfinite(static_cast<double>(x)))
            throw InvalidParams(name, "must be nonnegative and finite, got " + detail::shortest(double(x)));
    };
    positive("lambda", p.lambda);
    positive("mu", p.mu);
    positive("d", p.d);
    positive("theta", p.theta);
    positive("s", p.s);
    if (p.n < 1 || p.n > kMaxN)
        throw InvalidParams("n", "must be in [1, " + std::to_string(kMaxN) + "], got " + std::to_string(p.n));
    nonnegative("p_busy", p.p_busy);
    nonnegative("p_idle", p.p_idle);
    nonnegative("p_sleep", p.p_sleep);
    nonnegative("p_wake", p.p_wake);
}

template <typename Scalar = double> struct AnalyticalResult {
    Scalar avg_aos{0};
    Scalar avg_power{0};
    StationaryDistribution<Scalar> pi;
};

// ---------------------------------------------------------------------------
// Model builders
// ---------------------------------------------------------------------------

template <typename Scalar> ShsModel<Scalar> build_n_policy(const BasicPolicyParams<Scalar> &p) {
    validate(p);
    const Scalar one(1), zero(0);
    ShsModel<Scalar> m;
    const auto busy = m.add_state("B", one, p.p_busy);
    const auto idle = m.add_state("ID", zero, p.p_idle);
    const auto sleep = m.add_state("SL", zero, p.p_sleep);
    std::size_t prev = sleep;
    for (int k = 1; k <= p.n; ++k) {
        const auto cur = m.add_state(std::to_string(k), one, k == p.n ? p.p_wake : p.p_sleep);
        m.add_transition(prev, cur, p.lambda);
        prev = cur;
    }
    m.add_transition(busy, idle, p.mu, zero);
    m.add_transition(idle, busy, p.lambda);
    m.add_transition(idle, sleep, one / p.d);
    m.add_transition(prev, busy, one / p.theta);
    return m;
}

template <typename Scalar> ShsModel<Scalar> build_single_sleep(const BasicPolicyParams<Scalar> &p) {
    validate(p);
    const Scalar one(1), zero(0);
    ShsModel<Scalar> m;
    const auto sl = m.add_state("SL", zero, p.p_sleep);
    const auto sl1 = m.add_state("SL1", one, p.p_sleep);
    const auto wk = m.add_state("WK", zero, p.p_wake);
    const auto wk1 = m.add_state("WK1", one, p.p_wake);
    const auto b = m.add_state("B", one, p.p_busy);
    const auto id0 = m.add_state("ID0", zero, p.p_idle);
    const auto id = m.add_state("ID", zero, p.p_idle);
    m.add_transition(sl, sl1, p.lambda);
    m.add_transition(sl, wk, one / p.s);
    m.add_transition(sl1, wk1, one / p.s);
    m.add_transition(wk, wk1, p.lambda);
    m.add_transition(wk, id0, one / p.theta);
    m.add_transition(wk1, b, one / p.theta);
    m.add_transition(id0, b, p.lambda);
    m.add_transition(b, id, p.mu, zero);
    m.add_transition(id, b, p.lambda);
    m.add_transition(id, sl, one / p.d);
    return m;
}

template <typename Scalar> ShsModel<Scalar> build_multi_sleep(const BasicPolicyParams<Scalar> &p) {
    validate(p);
    const Scalar one(1), zero(0);
    ShsModel<Scalar> m;
    const auto sl = m.add_state("SL", zero, p.p_sleep);
    const auto sl1 = m.add_state("SL1", one, p.p_sleep);
    // Unlike single-sleep, the wake-up state always carries a packet.
    const auto wk = m.add_state("WK", one, p.p_wake);
    const auto b = m.add_state("B", one, p.p_busy);
    const auto id = m.add_state("ID", zero, p.p_idle);
    m.add_transition(sl, sl1, p.lambda);
    m.add_transition(sl, sl, one / p.s);
    m.add_transition(sl1, wk, one / p.s);
    m.add_transition(wk, b, one / p.theta);
    m.add_transition(b, id, p.mu, zero);
    m.add_transition(id, b, p.lambda);
    m.add_transition(id, sl, one / p.d);
    return m;
}

template <typename Scalar> ShsModel<Scalar> build_model(PolicyKind kind, const BasicPolicyParams<Scalar> &p) {
    switch (kind) {
    case PolicyKind::NPolicy:
        return build_n_policy(p);
    case PolicyKind::SingleSleep:
        return build_single_sleep(p);
    case PolicyKind::MultiSleep:
        return build_multi_sleep(p);
    }
    throw std::invalid_argument("unknown policy kind");
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

namespace detail {

template <typename Scalar> AnalyticalResult<Scalar> n_policy_closed_form(const BasicPolicyParams<Scalar> &p) {
    const Scalar l = p.lambda, mu = p.mu, d = p.d, th = p.theta;
    const Scalar n(p.n);
    const Scalar denom = n / l + Scalar(1) / mu + th + d * (Scalar(1) + l / mu);
    const Scalar a = Scalar(1) / denom;

    AnalyticalResult<Scalar> r;
    r.pi.pi.resize(p.n + 3);
    r.pi.pi(0) = a * (Scalar(1) + d * l) / mu;
    r.pi.pi(1) = a * d;
    for (int k = 2; k < p.n + 2; ++k)
        r.pi.pi(k) = a / l;
    r.pi.pi(p.n + 2) = a * th;

    // Every numerator term has units of time^2, including (1 + d lambda) / mu^2.
    const Scalar aos_num = (Scalar(1) + d * l) / (mu * mu) + th / mu + th * th + n * (n - Scalar(1)) / (Scalar(2) * l * l) +
                           (n - Scalar(1)) / l * (th + Scalar(1) / mu);
    r.avg_aos = aos_num * a;
    r.avg_power =
        ((Scalar(1) + d * l) / mu * p.p_busy + d * p.p_idle + n / l * p.p_sleep + th * p.p_wake) * a;
    return r;
}

template <typename Scalar>
AnalyticalResult<Scalar> single_sleep_closed_form(const BasicPolicyParams<Scalar> &p) {
    const Scalar l = p.lambda, mu = p.mu, d = p.d, s = p.s, th = p.theta;
    const Scalar l2 = l * l, l3 = l2 * l, l4 = l3 * l;
    const Scalar one(1);

    const Scalar big_b = mu + l + d * s * th * l4 + (d + s + th) * (l2 + mu * l + s * th * mu * l3) +
                         (s * s + th * th + Scalar(2) * s * th + d * s + d * th) * mu * l2 +
                         (d * s + s * th + th * d) * l3;
    const Scalar big_c = (mu * mu * l2 * s * th + mu * l) * (s * s + s * th + th * th) +
                         mu * mu * l * (s * s * s + s * s * th + s * th * th + th * th * th) +
                         mu * l2 * s * th * (s + th) + l3 * d * s * th + l2 * (d * s + s * th + th * d) +
                         l * (d + s + th) + one;
    const Scalar big_d = l * (s * l + one) * (th * l + one);

    AnalyticalResult<Scalar> r;
    r.pi.pi.resize(7);
    r.pi.pi << s * mu * l * (th * l + one),         // SL
        s * s * mu * l2 * (th * l + one),            // SL1
        th * mu * l,                                 // WK
        th * mu * l2 * (s + th + s * th * l),        // WK1
        l * (d * l + one) * (s * l + one) * (th * l + one), // B
        mu,                                          // ID0
        d * mu * l * (s * l + one) * (th * l + one); // ID
    r.pi.pi /= big_b;

    r.avg_aos = l * big_c / (mu * big_b);
    r.avg_power = (s * p.p_sleep + th * p.p_wake + (d + one / big_d) * p.p_idle + (d * l + one) / mu * p.p_busy) /
                  (big_b / (mu * big_d));
    return r;
}

template <typename Scalar>
AnalyticalResult<Scalar> multi_sleep_closed_form(const BasicPolicyParams<Scalar> &p) {
    const Scalar l = p.lambda, mu = p.mu, d = p.d, s = p.s, th = p.theta;
    const Scalar one(1);
    const Scalar denom = mu + l + d * l * l + d * mu * l + s * mu * l + th * mu * l;
    const Scalar e = one / denom;

    AnalyticalResult<Scalar> r;
    r.pi.pi.resize(5);
    r.pi.pi << mu, s * mu * l, th * mu * l, l * (one + d * l), d * mu * l;
    r.pi.pi *= e;

    r.avg_aos = l * (s * s * mu * mu + s * th * mu * mu + s * mu + th * th * mu * mu + th * mu + d * l + one) /
                (mu * denom);
    r.avg_power =
        (mu * (s * l + one) * p.p_sleep + th * mu * l * p.p_wake + l * (d * l + one) * p.p_busy + d * mu * l * p.p_idle) /
        denom;
    return r;
}

} // namespace detail

/// Closed-form average AoS, average power, and stationary distribution. The
/// stationary vector is ordered like the corresponding build_* model.
template <typename Scalar> AnalyticalResult<Scalar> closed_form(PolicyKind kind, const BasicPolicyParams<Scalar> &p) {
    validate(p);
    switch (kind) {
    case PolicyKind::NPolicy:
        return detail::n_policy_closed_form(p);
    case PolicyKind::SingleSleep:
        return detail::single_sleep_closed_form(p);
    case PolicyKind::MultiSleep:
        return detail::multi_sleep_closed_form(p);
    }
    throw std::invalid_argument("unknown policy kind");
}

/// Builds the policy model and solves it with the generic SHS engine.
template <typename Scalar> AnalyticalResult<Scalar> analyze(PolicyKind kind, const BasicPolicyParams<Scalar> &p) {
    const auto model = build_model(kind, p);
    auto pi = solve_stationary(model);
    const auto v = solve_correlation(model, pi);
    AnalyticalResult<Scalar> r;
    r.avg_aos = average_aos(v);
    r.avg_power = average_power(pi, model);
    r.pi = std::move(pi);
    return r;
}

// ---------------------------------------------------------------------------
// Server phases
// ---------------------------------------------------------------------------

/// Physical server phase of a model state: "busy", "idle", "sleep" or "wakeup".
inline std::string_view phase_of(PolicyKind kind, std::string_view label, int n) {
    if (label == "B")
        return "busy";
    if (label == "ID" || label == "ID0")
        return "idle";
    if (label == "SL" || label == "SL1")
        return "sleep";
    if (label == "WK" || label == "WK1")
        return "wakeup";
    if (kind == PolicyKind::NPolicy)
        return label == std::to_string(n) ? "wakeup" : "sleep";
    throw std::invalid_argument("unknown state label '" + std::string(label) + "'");
}

/// Stationary mass aggregated by server phase.
template <typename Scalar>
std::map<std::string, Scalar> phase_fractions(PolicyKind kind, const BasicPolicyParams<Scalar> &p,
                                              const StationaryDistribution<Scalar> &pi) {
    const auto model = build_model(kind, p);
    std::map<std::string, Scalar> out{{"busy", Scalar(0)}, {"idle", Scalar(0)}, {"sleep", Scalar(0)}, {"wakeup", Scalar(0)}};
    for (const auto &s : model.states)
        out[std::string(phase_of(kind, s.id.label, p.n))] += pi.pi(s.id.index);
    return out;
}

} // namespace aos
