#include "drpg/robust.hpp"

#include "drpg/errors.hpp"

#include <cmath>
#include <string>

namespace drpg {

namespace {

void check_spec(const TabularMdp& mdp, const AmbiguitySpec& spec) {
    if (spec.states() != mdp.states() || spec.actions() != mdp.actions()) {
        throw InvalidInput("ambiguity set shape does not match the MDP");
    }
}

// z[a][s'] = c[s][a][s'] + gamma v[s']
Matrix bellman_coefficients(const TabularMdp& mdp, std::size_t s, const Vector& v) {
    const auto A = static_cast<Eigen::Index>(mdp.actions());
    Matrix z(A, v.size());
    for (Eigen::Index a = 0; a < A; ++a) {
        z.row(a) = (mdp.cost().row(s, static_cast<std::size_t>(a)) + mdp.gamma() * v).transpose();
    }
    return z;
}

double stopping_threshold(double gamma, double tol) {
    return tol * (1.0 - gamma) / (2.0 * gamma);
}

// Per-state worst-case action values (independent of pi for (s,a)-rectangular kinds).
Matrix robust_action_values(const TabularMdp& mdp, const AmbiguitySpec& spec, const Vector& v,
                            Tensor3* rows_out) {
    const std::size_t S = mdp.states();
    const std::size_t A = mdp.actions();
    const Vector weights = Vector::Constant(static_cast<Eigen::Index>(A), 1.0 / static_cast<double>(A));
    Matrix q(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        const WorstCaseResponse r =
            worst_case_linear(spec, {s, bellman_coefficients(mdp, s, v), weights});
        q.row(static_cast<Eigen::Index>(s)) = r.action_values.transpose();
        if (rows_out != nullptr) {
            for (std::size_t a = 0; a < A; ++a) {
                rows_out->row(s, a) = r.rows.row(static_cast<Eigen::Index>(a)).transpose();
            }
        }
    }
    return q;
}

} // namespace

BellmanUpdate robust_bellman_policy_update(const TabularMdp& mdp, const Policy& pi,
                                           const AmbiguitySpec& spec, const Vector& v) {
    check_shapes(mdp, pi);
    check_spec(mdp, spec);
    if (v.size() != static_cast<Eigen::Index>(mdp.states()) || !v.allFinite()) {
        throw InvalidInput("value vector must be finite with one entry per state");
    }
    const std::size_t S = mdp.states();
    const std::size_t A = mdp.actions();
    Vector next(v.size());
    Tensor3 rows(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        const Vector pi_row = pi.probs().row(static_cast<Eigen::Index>(s)).transpose();
        const WorstCaseResponse r = worst_case_linear(spec, {s, bellman_coefficients(mdp, s, v), pi_row});
        next(static_cast<Eigen::Index>(s)) = r.value;
        for (std::size_t a = 0; a < A; ++a) {
            rows.row(s, a) = r.rows.row(static_cast<Eigen::Index>(a)).transpose();
        }
    }
    return {std::move(next), TransitionKernel(std::move(rows))};
}

RobustEvalResult robust_policy_evaluate(const TabularMdp& mdp, const Policy& pi,
                                        const AmbiguitySpec& spec, double tol,
                                        std::size_t max_iter) {
    if (!(tol > 0.0)) {
        throw InvalidArgument("robust evaluation tolerance must be positive");
    }
    const double threshold = stopping_threshold(mdp.gamma(), tol);
    Vector v = Vector::Zero(static_cast<Eigen::Index>(mdp.states()));
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= max_iter; ++it) {
        BellmanUpdate up = robust_bellman_policy_update(mdp, pi, spec, v);
        residual = (up.v - v).lpNorm<Eigen::Infinity>();
        v = std::move(up.v);
        if (residual <= threshold) {
            RobustEvalResult out;
            out.phi = mdp.rho().dot(v);
            out.v.v = std::move(v);
            out.worst_kernel = std::move(up.kernel);
            out.residual = residual;
            out.iterations = it;
            return out;
        }
    }
    throw ConvergenceError("robust policy evaluation hit the iteration cap", residual, max_iter,
                           std::vector<double>(v.data(), v.data() + v.size()));
}

RobustOptimum robust_optimal_value_iteration(const TabularMdp& mdp, const AmbiguitySpec& spec,
                                             double tol, std::size_t max_iter) {
    check_spec(mdp, spec);
    if (is_s_rectangular(spec.kind())) {
        throw UnsupportedKind("optimal value iteration does not support s-rectangular sets");
    }
    if (!(tol > 0.0)) {
        throw InvalidArgument("value iteration tolerance must be positive");
    }
    const double threshold = stopping_threshold(mdp.gamma(), tol);
    Vector v = Vector::Zero(static_cast<Eigen::Index>(mdp.states()));
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= max_iter; ++it) {
        const Vector next = robust_action_values(mdp, spec, v, nullptr).rowwise().minCoeff();
        residual = (next - v).lpNorm<Eigen::Infinity>();
        v = next;
        if (residual <= threshold) {
            const Matrix q = robust_action_values(mdp, spec, v, nullptr);
            std::vector<std::size_t> greedy(mdp.states());
            for (Eigen::Index s = 0; s < q.rows(); ++s) {
                Eigen::Index best = 0;
                for (Eigen::Index a = 1; a < q.cols(); ++a) {
                    if (q(s, a) < q(s, best)) {
                        best = a;
                    }
                }
                greedy[static_cast<std::size_t>(s)] = static_cast<std::size_t>(best);
            }
            RobustOptimum out;
            out.j_star = mdp.rho().dot(v);
            out.v = std::move(v);
            out.pi = Policy::deterministic(greedy, mdp.actions());
            out.iterations = it;
            return out;
        }
    }
    throw ConvergenceError("robust value iteration hit the iteration cap", residual, max_iter,
                           std::vector<double>(v.data(), v.data() + v.size()));
}

double default_inner_step(const TabularMdp& mdp) {
    const double g = mdp.gamma();
    const double S = static_cast<double>(mdp.states());
    return std::pow(1.0 - g, 3) / (2.0 * g * S * S);
}

namespace {

Tensor3 ascent_step(const TabularMdp& mdp, const Policy& pi, const AmbiguitySpec& spec,
                    const TransitionKernel& p, const Evaluation& ev, double beta) {
    Tensor3 raw = p.tensor();
    raw.as_vector() += beta * transition_gradient(mdp, pi, ev).as_vector();
    return project_kernel(spec, raw);
}

} // namespace

double gradient_mapping(const TabularMdp& mdp, const Policy& pi, const AmbiguitySpec& spec,
                        const TransitionKernel& p, double beta) {
    if (!(beta > 0.0)) {
        throw InvalidArgument("gradient mapping step must be positive");
    }
    check_spec(mdp, spec);
    const Evaluation ev = evaluate(mdp, pi, p);
    const Tensor3 next = ascent_step(mdp, pi, spec, p, ev, beta);
    return (next.as_vector() - p.tensor().as_vector()).norm() / beta;
}

InnerResult inner_pgd(const TabularMdp& mdp, const Policy& pi, const AmbiguitySpec& spec,
                      const TransitionKernel& p0, const InnerPgdConfig& cfg) {
    check_spec(mdp, spec);
    check_shapes(mdp, p0);
    const double beta = cfg.beta > 0.0 ? cfg.beta : default_inner_step(mdp);
    if (!(cfg.target_gap > 0.0)) {
        throw InvalidArgument("inner target gap must be positive");
    }

    TransitionKernel p = contains(spec, p0, kStochasticTol)
                             ? p0
                             : TransitionKernel(project_kernel(spec, p0.tensor()));
    InnerResult out;
    out.j_best = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0;; ++t) {
        const Evaluation ev = evaluate(mdp, pi, p);
        out.trace.push_back(ev.objective);
        if (ev.objective > out.j_best) {
            out.j_best = ev.objective;
            out.p_best = p;
        }
        TransitionKernel next(ascent_step(mdp, pi, spec, p, ev, beta));
        out.grad_map_norm = (next.tensor().as_vector() - p.tensor().as_vector()).norm() / beta;
        out.iterations = t;
        if (t >= cfg.max_iter || out.grad_map_norm <= cfg.grad_map_tol) {
            out.p_last = std::move(p);
            return out;
        }
        p = std::move(next);
    }
}

} // namespace drpg
