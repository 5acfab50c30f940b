#pragma once

#include "drpg/mdp.hpp"
#include "drpg/robust.hpp"

#include <vector>

namespace drpg {

/// Per-state features phi[s][i]; centers and sigmas are kept when built radially.
struct FeatureMap {
    Matrix phi;
    std::vector<double> centers;
    std::vector<double> sigmas;

    Eigen::Index dim() const noexcept { return phi.cols(); }
};

/// xi = (theta, lambda); lambda is S x A.
struct XiParams {
    Vector theta;
    Matrix lam;
};

enum class XiNorm { L1, Linf };

inline constexpr double kLambdaMin = 1e-3;
inline constexpr double kDefaultXiStep = 0.01;

/// Xi = {||theta - theta_c|| <= kappa_theta, ||lam - lam_c|| <= kappa_lambda, lam >= lambda_min}.
struct XiSet {
    XiParams center;
    double kappa_theta = 1.0;
    double kappa_lambda = 1.0;
    double lambda_min = kLambdaMin;
    XiNorm norm = XiNorm::L1;
};

/// lam_c = 1, theta_c = (0.4, 0.9) for two features and 0.5 otherwise, unit radii.
XiSet default_xi_set(std::size_t states, std::size_t actions, Eigen::Index dim);

/// Throws ConfigError if the set is malformed or its shapes disagree with (S, A, m).
void validate_xi_set(const XiSet& set, std::size_t states, std::size_t actions, Eigen::Index dim);

/**
p[s][a][s'] proportional to nominal[s][a][s'] exp(theta^T phi(s') / lam[s][a]).
Rows whose tilt is constant on the support are copied from the nominal kernel
unchanged, so theta = 0 reproduces it bit for bit.
*/
TransitionKernel kernel_from_xi(const XiParams& xi, const TransitionKernel& nominal,
                                const FeatureMap& features, double lambda_min = kLambdaMin);

/// d log p[s][a][s'] / d theta and / d lam[s][a]. Requires nominal[s][a][s'] > 0.
struct Score {
    Vector d_theta;
    double d_lambda = 0.0;
};

Score score_functions(const XiParams& xi, const TransitionKernel& nominal,
                      const FeatureMap& features, std::size_t s, std::size_t a, std::size_t s2);

struct XiGradient {
    Vector theta;
    Matrix lam;
};

/// Exact dJ/dxi: the score-weighted expectation over s ~ d, a ~ pi, s' ~ p^xi.
XiGradient xi_gradient(const TabularMdp& mdp, const Policy& pi, const XiParams& xi,
                       const TransitionKernel& nominal, const FeatureMap& features);

/// Euclidean projection onto Xi (theta and lam independently).
XiParams project_xi(const XiParams& xi, const XiSet& set);

struct ParamInnerResult {
    XiParams xi_best;
    double j_best = 0.0;
    XiParams xi_last;
    std::vector<double> trace; ///< J at every accepted iterate
    std::size_t iterations = 0;
    double final_step = 0.0;
};

/**
Projected gradient ascent on xi -> J(pi, p^xi). A step that lowers J is
retried with half the step size, and the smaller step is kept. No optimality
certificate is available for this loop.
*/
ParamInnerResult inner_pgd_param(const TabularMdp& mdp, const Policy& pi, const XiParams& xi0,
                                 const XiSet& set, const TransitionKernel& nominal,
                                 const FeatureMap& features, const InnerPgdConfig& cfg);

} // namespace drpg
