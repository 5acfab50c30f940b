#pragma once

#include "drpg/ambiguity.hpp"
#include "drpg/mdp.hpp"

#include <cstddef>
#include <vector>

namespace drpg {

struct BellmanUpdate {
    Vector v;
    TransitionKernel kernel; ///< maximizing rows at every state
};

/// One application of the robust Bellman policy operator T_pi to v.
BellmanUpdate robust_bellman_policy_update(const TabularMdp& mdp, const Policy& pi,
                                           const AmbiguitySpec& spec, const Vector& v);

struct RobustEvalResult {
    ValueFunction v;
    TransitionKernel worst_kernel;
    double phi = 0.0; ///< rho^T v
    double residual = 0.0;
    std::size_t iterations = 0;
};

inline constexpr std::size_t kRobustViMaxIter = 1'000'000;

/**
Robust value of pi by iterating T_pi from v = 0.

Stops once ||v_{t+1} - v_t||_inf <= tol (1 - gamma) / (2 gamma), so v is
within tol / 2 of the fixed point. Because the iterates increase
monotonically, worst_kernel (the maximizer of the last update) satisfies
J(pi, worst_kernel) >= phi - tol / 2.
*/
RobustEvalResult robust_policy_evaluate(const TabularMdp& mdp, const Policy& pi,
                                        const AmbiguitySpec& spec, double tol,
                                        std::size_t max_iter = kRobustViMaxIter);

struct RobustOptimum {
    Vector v;
    Policy pi; ///< greedy, lowest action index on ties
    double j_star = 0.0;
    std::size_t iterations = 0;
};

/// min_pi max_p value iteration. (s,a)-rectangular kinds, RContamination and Singleton only.
RobustOptimum robust_optimal_value_iteration(const TabularMdp& mdp, const AmbiguitySpec& spec,
                                             double tol, std::size_t max_iter = kRobustViMaxIter);

struct InnerPgdConfig {
    double beta = 0.0;            ///< 0 selects default_inner_step
    std::size_t max_iter = 5000;
    double target_gap = 1e-3;
    double grad_map_tol = 1e-10;
};

/// (1 - gamma)^3 / (2 gamma S^2), the reciprocal of the kernel smoothness constant.
double default_inner_step(const TabularMdp& mdp);

struct InnerResult {
    TransitionKernel p_best;
    double j_best = 0.0;
    TransitionKernel p_last;
    std::vector<double> trace; ///< J at every visited iterate
    double grad_map_norm = 0.0; ///< at p_last
    std::size_t iterations = 0;
};

/// Projected gradient ascent on p -> J(pi, p) over the ambiguity set.
InnerResult inner_pgd(const TabularMdp& mdp, const Policy& pi, const AmbiguitySpec& spec,
                      const TransitionKernel& p0, const InnerPgdConfig& cfg);

/// ||(Proj(p + beta grad) - p) / beta||_2.
double gradient_mapping(const TabularMdp& mdp, const Policy& pi, const AmbiguitySpec& spec,
                        const TransitionKernel& p, double beta);

} // namespace drpg
