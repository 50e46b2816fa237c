// Stochastic hybrid system (SHS) engine for a scalar age process.
//
// A model is a finite continuous-time Markov chain whose states carry an
// age-growth slope and a power level, and whose transitions carry a rate and
// a reset coefficient applied to the age when they fire. Stationary
// quantities follow from two small dense linear systems:
//
//   pi_q * sum_{l out of q} rate_l          = sum_{l into q} rate_l * pi_{from(l)}
//   v_q  * sum_{l out of q} rate_l = b_q pi_q + sum_{l into q} rate_l * v_{from(l)} * A_l
//
// The average age is sum_q v_q and the average power is sum_q pi_q P_q.
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace aos {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Raised when a stationary or correlation system has no unique admissible
/// solution (non-ergodic chain, no age reset anywhere, or infeasible output).
class SingularSystem : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct StateId {
    std::size_t index = 0;
    std::string label;
};

template <typename Scalar = double> struct StateAnnotation {
    Scalar growth{0}; ///< age slope b_q, 0 or 1
    Scalar power{0};  ///< energy per unit time P_q
};

template <typename Scalar = double> struct State {
    StateId id;
    StateAnnotation<Scalar> annotation;
};

template <typename Scalar = double> struct Transition {
    std::size_t from = 0;
    std::size_t to = 0;
    Scalar rate{0};
    Scalar reset{1}; ///< A_l: 0 clears the age, 1 keeps it
};

template <typename Scalar = double> struct ShsModel {
    std::vector<State<Scalar>> states;
    std::vector<Transition<Scalar>> transitions;

    std::size_t size() const { return states.size(); }

    std::size_t add_state(std::string label, Scalar growth, Scalar power) {
        const std::size_t index = states.size();
        states.push_back({StateId{index, std::move(label)}, {growth, power}});
        return index;
    }

    void add_transition(std::size_t from, std::size_t to, Scalar rate, Scalar reset = Scalar(1)) {
        transitions.push_back({from, to, rate, reset});
    }

    /// Index of the state with the given label; throws std::out_of_range.
    std::size_t index_of(const std::string &label) const {
        for (const auto &s : states)
            if (s.id.label == label)
                return s.id.index;
        throw std::out_of_range("no state labelled '" + label + "'");
    }

    Vector<Scalar> growth() const {
        Vector<Scalar> b(size());
        for (std::size_t i = 0; i < size(); ++i)
            b(i) = states[i].annotation.growth;
        return b;
    }

    Vector<Scalar> power() const {
        Vector<Scalar> p(size());
        for (std::size_t i = 0; i < size(); ++i)
            p(i) = states[i].annotation.power;
        return p;
    }

    /// Total outgoing rate per state (diagonal of D), self-loops included.
    Vector<Scalar> exit_rates() const {
        Vector<Scalar> d = Vector<Scalar>::Zero(size());
        for (const auto &t : transitions)
            d(t.from) += t.rate;
        return d;
    }

    /// Q(i, j) = total rate of transitions i -> j, self-loops on the diagonal.
    Matrix<Scalar> transfer_rates() const {
        Matrix<Scalar> q = Matrix<Scalar>::Zero(size(), size());
        for (const auto &t : transitions)
            q(t.from, t.to) += t.rate;
        return q;
    }

    Scalar max_rate() const {
        Scalar m{0};
        for (const auto &t : transitions)
            m = std::max(m, t.rate);
        return m;
    }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct Diagnostic {
    enum class Kind {
        EmptyModel,
        BadStateIndex,
        NonBinaryGrowth,
        NegativePower,
        DanglingState,
        NonpositiveRate,
        NonBinaryReset,
        AbsorbingState,
        UnreachableState,
    };
    Kind kind;
    std::string message;
};

namespace detail {

inline std::vector<bool> reachable(const std::vector<std::vector<std::size_t>> &adj, std::size_t root) {
    std::vector<bool> seen(adj.size(), false);
    std::vector<std::size_t> stack{root};
    seen[root] = true;
    while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        for (auto w : adj[u])
            if (!seen[w]) {
                seen[w] = true;
                stack.push_back(w);
            }
    }
    return seen;
}

template <typename Scalar> bool is_binary(Scalar x) { return x == Scalar(0) || x == Scalar(1); }

} // namespace detail

/// Empty result iff the model is a well-formed, strongly connected chain.
template <typename Scalar> std::vector<Diagnostic> validate_model(const ShsModel<Scalar> &model) {
    using K = Diagnostic::Kind;
    std::vector<Diagnostic> out;
    const std::size_t n = model.size();
    if (n == 0) {
        out.push_back({K::EmptyModel, "model has no states"});
        return out;
    }

    for (std::size_t i = 0; i < n; ++i) {
        const auto &s = model.states[i];
        const std::string name = "state '" + s.id.label + "'";
        if (s.id.index != i)
            out.push_back({K::BadStateIndex, name + " has index " + std::to_string(s.id.index) +
                                                 " at position " + std::to_string(i)});
        if (!detail::is_binary(s.annotation.growth))
            out.push_back({K::NonBinaryGrowth, "non-binary growth on " + name});
        if (!(s.annotation.power >= Scalar(0)) || !std::isfinite(static_cast<double>(s.annotation.power)))
            out.push_back({K::NegativePower, "negative or non-finite power on " + name});
    }

    std::vector<std::vector<std::size_t>> fwd(n), bwd(n);
    std::vector<bool> has_exit(n, false);
    for (std::size_t l = 0; l < model.transitions.size(); ++l) {
        const auto &t = model.transitions[l];
        const std::string name = "transition #" + std::to_string(l);
        if (t.from >= n || t.to >= n) {
            out.push_back({K::DanglingState, "dangling state index on " + name});
            continue;
        }
        if (!(t.rate > Scalar(0)) || !std::isfinite(static_cast<double>(t.rate)))
            out.push_back({K::NonpositiveRate, "nonpositive rate on " + name});
        if (!detail::is_binary(t.reset))
            out.push_back({K::NonBinaryReset, "non-binary reset on " + name});
        has_exit[t.from] = true;
        fwd[t.from].push_back(t.to);
        bwd[t.to].push_back(t.from);
    }

    for (std::size_t i = 0; i < n; ++i)
        if (!has_exit[i])
            out.push_back({K::AbsorbingState, "absorbing state '" + model.states[i].id.label + "'"});

    // Strong connectivity: everything reachable from state 0 and state 0
    // reachable from everything.
    const auto from_root = detail::reachable(fwd, 0);
    const auto to_root = detail::reachable(bwd, 0);
    for (std::size_t i = 0; i < n; ++i)
        if (!from_root[i] || !to_root[i])
            out.push_back({K::UnreachableState, "unreachable state '" + model.states[i].id.label +
                                                    "' (chain is not strongly connected)"});
    return out;
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

template <typename Scalar> struct SolveTolerance {
    static constexpr Scalar residual = Scalar(1e-10);
    static constexpr Scalar normalization = Scalar(1e-12);
    static constexpr Scalar clamp = Scalar(1e-14);
};

template <typename Scalar = double> struct StationaryDistribution {
    Vector<Scalar> pi;
};

template <typename Scalar = double> struct CorrelationVector {
    Vector<Scalar> v;
};

/// Infinity norm of pi (D - Q).
template <typename Scalar>
Scalar balance_residual(const ShsModel<Scalar> &model, const Vector<Scalar> &pi) {
    const Vector<Scalar> r =
        pi.cwiseProduct(model.exit_rates()).transpose() - pi.transpose() * model.transfer_rates();
    return r.cwiseAbs().maxCoeff();
}

/// Matrix M with M v = b .* pi encoding the correlation equations.
template <typename Scalar> Matrix<Scalar> correlation_matrix(const ShsModel<Scalar> &model) {
    Matrix<Scalar> m = model.exit_rates().asDiagonal();
    for (const auto &t : model.transitions)
        m(t.to, t.from) -= t.rate * t.reset;
    return m;
}

template <typename Scalar>
Scalar correlation_residual(const ShsModel<Scalar> &model, const Vector<Scalar> &pi, const Vector<Scalar> &v) {
    const Vector<Scalar> r = correlation_matrix(model) * v - model.growth().cwiseProduct(pi);
    return r.cwiseAbs().maxCoeff();
}

namespace detail {

template <typename Scalar>
Vector<Scalar> lu_solve(const Matrix<Scalar> &a, const Vector<Scalar> &rhs, const char *what) {
    Eigen::PartialPivLU<Matrix<Scalar>> lu(a);
    // PartialPivLU never reports rank; a vanishing reciprocal condition
    // estimate is the singular case.
    if (!(lu.rcond() > std::numeric_limits<Scalar>::epsilon() * Scalar(a.rows())))
        throw SingularSystem(std::string(what) + ": matrix is singular to working precision");
    Vector<Scalar> x = lu.solve(rhs);
    if (!x.allFinite())
        throw SingularSystem(std::string(what) + ": non-finite solution");
    return x;
}

template <typename Scalar> void clamp_nonnegative(Vector<Scalar> &x, const char *what) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x(i) >= Scalar(0))
            continue;
        if (x(i) < -SolveTolerance<Scalar>::clamp)
            throw SingularSystem(std::string(what) + ": negative entry " + std::to_string(double(x(i))) +
                                 " at state " + std::to_string(i));
        x(i) = Scalar(0);
    }
}

// Residuals scale with the largest rate in the chain.
template <typename Scalar> Scalar residual_bound(const ShsModel<Scalar> &model) {
    return SolveTolerance<Scalar>::residual * std::max(Scalar(1), model.max_rate());
}

} // namespace detail

/// Solves pi D = pi Q with sum(pi) = 1. The last balance equation is
/// replaced by the normalization constraint.
template <typename Scalar> StationaryDistribution<Scalar> solve_stationary(const ShsModel<Scalar> &model) {
    const auto n = static_cast<Eigen::Index>(model.size());
    if (n == 0)
        throw SingularSystem("stationary: empty model");

    Matrix<Scalar> a = (Matrix<Scalar>(model.exit_rates().asDiagonal()) - model.transfer_rates()).transpose();
    a.row(n - 1).setOnes();
    Vector<Scalar> rhs = Vector<Scalar>::Zero(n);
    rhs(n - 1) = Scalar(1);

    Vector<Scalar> pi = detail::lu_solve(a, rhs, "stationary");
    detail::clamp_nonnegative(pi, "stationary");

    if (std::abs(pi.sum() - Scalar(1)) > SolveTolerance<Scalar>::normalization)
        throw SingularSystem("stationary: normalization violated");
    if (balance_residual(model, pi) > detail::residual_bound(model))
        throw SingularSystem("stationary: balance residual too large");
    return {std::move(pi)};
}

/// Solves the age-correlation equations given the stationary distribution.
template <typename Scalar>
CorrelationVector<Scalar> solve_correlation(const ShsModel<Scalar> &model, const StationaryDistribution<Scalar> &pi) {
    if (pi.pi.size() != static_cast<Eigen::Index>(model.size()))
        throw std::invalid_argument("correlation: stationary vector size mismatch");

    bool any_reset = false;
    for (const auto &t : model.transitions)
        any_reset = any_reset || t.reset == Scalar(0);
    if (!any_reset)
        throw SingularSystem("correlation: no transition resets the age, so no unique solution exists");

    const Vector<Scalar> rhs = model.growth().cwiseProduct(pi.pi);
    Vector<Scalar> v = detail::lu_solve(correlation_matrix(model), rhs, "correlation");
    detail::clamp_nonnegative(v, "correlation");

    if (correlation_residual(model, pi.pi, v) > detail::residual_bound(model) * std::max(Scalar(1), v.cwiseAbs().maxCoeff()))
        throw SingularSystem("correlation: residual too large");
    return {std::move(v)};
}

template <typename Scalar> Scalar average_aos(const CorrelationVector<Scalar> &v) { return v.v.sum(); }

template <typename Scalar>
Scalar average_power(const StationaryDistribution<Scalar> &pi, const ShsModel<Scalar> &model) {
    return pi.pi.dot(model.power());
}

} // namespace aos
