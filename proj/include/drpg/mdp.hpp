#pragma once

#include "drpg/types.hpp"

#include <optional>

namespace drpg {

struct ValueFunction {
    Vector v;
    /// q[s][a] = sum_s' p[s][a][s'] (c[s][a][s'] + gamma v[s']).
    std::optional<Matrix> q;
};

struct OccupancyMeasure {
    Vector d;
};

/// Policy evaluation, occupancy and action values for one (pi, p) pair.
/// Shares a single factorization of (I - gamma P^pi).
struct Evaluation {
    Vector v;
    Matrix q;
    Vector d;
    double objective; ///< rho^T v
};

/// States up to this size are solved by a dense LU factorization.
inline constexpr std::size_t kDenseSolveLimit = 512;

Evaluation evaluate(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p,
                    double tol = kDefaultTol);

/**
Value function of pi under p. The returned v satisfies
||v - T_pi v||_inf <= tol (dense solve for S <= 512, value iteration above).
*/
ValueFunction policy_evaluate(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p,
                              double tol = kDefaultTol);

/// d = (1 - gamma) rho^T (I - gamma P^pi)^{-1}.
OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const Policy& pi,
                                   const TransitionKernel& p);

/// J(pi, p) = rho^T v^{pi,p}.
double return_value(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p);

/// dJ/dpi[s][a] = d(s) q[s][a] / (1 - gamma).
Matrix policy_gradient(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p);

/// dJ/dp[s][a][s'] = d(s) pi[s][a] (c[s][a][s'] + gamma v[s']) / (1 - gamma).
Tensor3 transition_gradient(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p);

/// Both gradients from one evaluation.
Matrix policy_gradient(const TabularMdp& mdp, const Policy& pi, const Evaluation& ev);
Tensor3 transition_gradient(const TabularMdp& mdp, const Policy& pi, const Evaluation& ev);

struct PerformanceDifference {
    double lhs; ///< J(pi, p) - J(pi', p)
    double rhs; ///< sum_s d^{pi}(s) sum_a pi[s][a] A^{pi'}[s][a] / (1 - gamma)
};

PerformanceDifference performance_difference(const TabularMdp& mdp, const Policy& pi,
                                             const Policy& pi_prime, const TransitionKernel& p);

struct SmoothnessConstants {
    double l_pi;   ///< sqrt(A) / (1-gamma)^2
    double ell_pi; ///< 2 gamma A / (1-gamma)^3
    double l_p;    ///< sqrt(SA) / (1-gamma)^2
    double ell_p;  ///< 2 gamma S^2 / (1-gamma)^3
    /// Lower estimate of the mismatch coefficient sup ||d/rho||_inf; empty when min rho = 0.
    std::optional<double> d_hat;
};

/// Constants from (S, A, gamma); d_hat seeded with the uniform policy at the nominal kernel.
SmoothnessConstants smoothness_constants(const TabularMdp& mdp, const TransitionKernel& nominal);

/// max_s d(s) / rho(s), or empty when some rho(s) = 0.
std::optional<double> mismatch_ratio(const TabularMdp& mdp, const Vector& d);

/// Worst-case iteration counts for the outer and inner gradient loops. Both are extremely conservative.
double outer_iteration_bound(const TabularMdp& mdp, double mismatch, double delta, double eps);
double inner_iteration_bound(const TabularMdp& mdp, double mismatch, double eps);

/// Row sums P^pi[s][s'] = sum_a pi[s][a] p[s][a][s'].
Matrix state_transition_matrix(const Policy& pi, const TransitionKernel& p);

} // namespace drpg
