#include "drpg/mdp.hpp"

#include "drpg/errors.hpp"

#include <cmath>
#include <limits>

namespace drpg {

namespace {

// c^pi[s] = sum_a pi[s][a] sum_s' p[s][a][s'] c[s][a][s']
Vector expected_costs(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p) {
    const std::size_t S = mdp.states();
    Vector out = Vector::Zero(static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s) {
        double acc = 0.0;
        for (std::size_t a = 0; a < mdp.actions(); ++a) {
            acc += pi(s, a) * p.row(s, a).dot(mdp.cost().row(s, a));
        }
        out(static_cast<Eigen::Index>(s)) = acc;
    }
    return out;
}

Matrix action_values(const TabularMdp& mdp, const TransitionKernel& p, const Vector& v) {
    const std::size_t S = mdp.states();
    const std::size_t A = mdp.actions();
    Matrix q(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) =
                p.row(s, a).dot(mdp.cost().row(s, a) + mdp.gamma() * v);
        }
    }
    return q;
}

void check_inputs(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p) {
    check_shapes(mdp, pi);
    check_shapes(mdp, p);
}

// Fixed-point iteration for large state spaces.
Vector iterate_values(const Matrix& transitions, const Vector& costs, double gamma, double tol) {
    Vector v = Vector::Zero(costs.size());
    constexpr std::size_t kMaxIter = 10'000'000;
    for (std::size_t it = 0; it < kMaxIter; ++it) {
        Vector next = costs + gamma * (transitions * v);
        const double change = (next - v).lpNorm<Eigen::Infinity>();
        v = std::move(next);
        if (change <= tol) {
            return v;
        }
    }
    throw ConvergenceError("policy evaluation did not converge", tol, kMaxIter);
}

Vector iterate_occupancy(const Matrix& transitions, const Vector& rho, double gamma) {
    Vector d = (1.0 - gamma) * rho;
    constexpr std::size_t kMaxIter = 10'000'000;
    for (std::size_t it = 0; it < kMaxIter; ++it) {
        Vector next = (1.0 - gamma) * rho + gamma * (transitions.transpose() * d);
        const double change = (next - d).lpNorm<1>();
        d = std::move(next);
        if (change <= 1e-12) {
            return d;
        }
    }
    throw ConvergenceError("occupancy iteration did not converge", 1e-12, kMaxIter);
}

} // namespace

Matrix state_transition_matrix(const Policy& pi, const TransitionKernel& p) {
    const std::size_t S = p.states();
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < p.actions(); ++a) {
            out.row(static_cast<Eigen::Index>(s)) += pi(s, a) * p.row(s, a).transpose();
        }
    }
    return out;
}

Evaluation evaluate(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p, double tol) {
    if (!(tol > 0.0)) {
        throw InvalidArgument("evaluation tolerance must be positive");
    }
    check_inputs(mdp, pi, p);
    const double gamma = mdp.gamma();
    const Matrix transitions = state_transition_matrix(pi, p);
    const Vector costs = expected_costs(mdp, pi, p);

    Evaluation ev;
    if (mdp.states() <= kDenseSolveLimit) {
        const Matrix system =
            Matrix::Identity(transitions.rows(), transitions.cols()) - gamma * transitions;
        const Eigen::PartialPivLU<Matrix> lu(system);
        ev.v = lu.solve(costs);
        ev.d = (1.0 - gamma) * Eigen::PartialPivLU<Matrix>(system.transpose()).solve(mdp.rho());
    } else {
        ev.v = iterate_values(transitions, costs, gamma, tol);
        ev.d = iterate_occupancy(transitions, mdp.rho(), gamma);
    }
    ev.q = action_values(mdp, p, ev.v);
    ev.objective = mdp.rho().dot(ev.v);
    return ev;
}

ValueFunction policy_evaluate(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p,
                              double tol) {
    Evaluation ev = evaluate(mdp, pi, p, tol);
    return {std::move(ev.v), std::move(ev.q)};
}

OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const Policy& pi,
                                   const TransitionKernel& p) {
    return {evaluate(mdp, pi, p).d};
}

double return_value(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p) {
    return evaluate(mdp, pi, p).objective;
}

Matrix policy_gradient(const TabularMdp& mdp, const Policy&, const Evaluation& ev) {
    const double scale = 1.0 / (1.0 - mdp.gamma());
    return scale * (ev.d.asDiagonal() * ev.q);
}

Matrix policy_gradient(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p) {
    return policy_gradient(mdp, pi, evaluate(mdp, pi, p));
}

Tensor3 transition_gradient(const TabularMdp& mdp, const Policy& pi, const Evaluation& ev) {
    const std::size_t S = mdp.states();
    const std::size_t A = mdp.actions();
    const double gamma = mdp.gamma();
    const double scale = 1.0 / (1.0 - gamma);
    Tensor3 grad(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        const double ds = ev.d(static_cast<Eigen::Index>(s));
        for (std::size_t a = 0; a < A; ++a) {
            const double weight = scale * ds * pi(s, a);
            grad.row(s, a) = weight * (mdp.cost().row(s, a) + gamma * ev.v);
        }
    }
    return grad;
}

Tensor3 transition_gradient(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p) {
    return transition_gradient(mdp, pi, evaluate(mdp, pi, p));
}

PerformanceDifference performance_difference(const TabularMdp& mdp, const Policy& pi,
                                             const Policy& pi_prime, const TransitionKernel& p) {
    const Evaluation ev = evaluate(mdp, pi, p);
    const Evaluation ev_prime = evaluate(mdp, pi_prime, p);
    const Matrix advantage = ev_prime.q.colwise() - ev_prime.v;
    double rhs = 0.0;
    for (Eigen::Index s = 0; s < advantage.rows(); ++s) {
        rhs += ev.d(s) * pi.probs().row(s).dot(advantage.row(s));
    }
    rhs /= 1.0 - mdp.gamma();
    return {ev.objective - ev_prime.objective, rhs};
}

std::optional<double> mismatch_ratio(const TabularMdp& mdp, const Vector& d) {
    if (mdp.rho().minCoeff() <= 0.0) {
        return std::nullopt;
    }
    return d.cwiseQuotient(mdp.rho()).maxCoeff();
}

SmoothnessConstants smoothness_constants(const TabularMdp& mdp, const TransitionKernel& nominal) {
    const double S = static_cast<double>(mdp.states());
    const double A = static_cast<double>(mdp.actions());
    const double g = mdp.gamma();
    const double one_minus = 1.0 - g;
    SmoothnessConstants out{};
    out.l_pi = std::sqrt(A) / (one_minus * one_minus);
    out.ell_pi = 2.0 * g * A / (one_minus * one_minus * one_minus);
    out.l_p = std::sqrt(S * A) / (one_minus * one_minus);
    out.ell_p = 2.0 * g * S * S / (one_minus * one_minus * one_minus);
    const Policy uniform = Policy::uniform(mdp.states(), mdp.actions());
    out.d_hat = mismatch_ratio(mdp, occupancy_measure(mdp, uniform, nominal).d);
    return out;
}

double outer_iteration_bound(const TabularMdp& mdp, double mismatch, double delta, double eps) {
    if (!(delta > 0.0) || !(eps > 0.0)) {
        throw InvalidArgument("delta and eps must be positive");
    }
    const double S = static_cast<double>(mdp.states());
    const double A = static_cast<double>(mdp.actions());
    const double g = mdp.gamma();
    const double one_minus = 1.0 - g;
    const double l_pi = std::sqrt(A) / (one_minus * one_minus);
    const double ell_pi = 2.0 * g * A / (one_minus * one_minus * one_minus);
    const double dominance = mismatch * std::sqrt(S * A) / one_minus + l_pi / (2.0 * ell_pi);
    const double step_terms =
        4.0 * ell_pi * S / delta + 2.0 * delta * ell_pi * l_pi * l_pi + 4.0 * ell_pi / one_minus;
    return std::pow(dominance, 4) * step_terms * step_terms / std::pow(eps, 4);
}

double inner_iteration_bound(const TabularMdp& mdp, double mismatch, double eps) {
    if (!(eps > 0.0)) {
        throw InvalidArgument("eps must be positive");
    }
    const double S = static_cast<double>(mdp.states());
    const double A = static_cast<double>(mdp.actions());
    const double g = mdp.gamma();
    return 32.0 * g * S * S * S * A * mismatch * mismatch /
           (std::pow(1.0 - g, 6) * eps * eps);
}

} // namespace drpg
