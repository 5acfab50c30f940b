#pragma once

#include "drpg/ambiguity.hpp"
#include "drpg/param.hpp"
#include "drpg/robust.hpp"

#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace drpg {

/// alpha = delta / sqrt(T).
struct ConstantDeltaOverSqrtT {
    double delta = 1.0;
};

struct FixedStep {
    double alpha = 0.1;
};

using StepMode = std::variant<ConstantDeltaOverSqrtT, FixedStep>;

/// Robust value iteration at tolerance max(eps_t / 2, floor).
struct ExactVi {
    double floor = 1e-11;
};

/// Projected gradient ascent on the kernel, stopped by the gradient-mapping certificate.
struct PgdInner {
    InnerPgdConfig cfg;
};

/// Ascent over the parametric family around the nominal kernel. Uncertified.
struct ParamInner {
    InnerPgdConfig cfg;
    XiSet set;
    FeatureMap features;
};

using InnerSolver = std::variant<ExactVi, PgdInner, ParamInner>;

struct DrpgConfig {
    std::size_t iterations = 100;
    StepMode step = ConstantDeltaOverSqrtT{};
    double eps0 = 1.0;
    /// Per-iteration tolerance factor in (0, 1]; defaults to gamma.
    std::optional<double> eps_decay;
    InnerSolver inner = ExactVi{};
    /// When false, wall_ms is recorded as 0 so traces are reproducible byte for byte.
    bool record_wall_clock = true;
};

struct TraceRecord {
    std::size_t iter = 0;
    double objective = 0.0; ///< J(pi_t, p_t)
    /// Certified bound on max_p J(pi_t, p) - J(pi_t, p_t); empty when uncertified.
    std::optional<double> inner_gap_bound;
    double epsilon_t = 0.0;
    double policy_grad_norm = 0.0;
    double best_so_far = 0.0;
    double wall_ms = 0.0;
};

struct RunTrace {
    std::vector<TraceRecord> records;
};

struct DrpgResult {
    Policy pi_best; ///< pi_t at the smallest recorded J(pi_t, p_t); pi0 when T = 0
    double j_best = 0.0;
    RunTrace trace;
};

/// Called after each iteration with the record, pi_t and p_t.
using IterationCallback =
    std::function<void(const TraceRecord&, const Policy&, const TransitionKernel&)>;

/// Row-wise simplex projection.
Policy project_policy(const Matrix& raw);

/**
Double-loop robust policy gradient. Each iteration finds p_t within eps_t of
the worst case for pi_t, then takes a projected gradient step on pi.

ParamInner uses spec only for its nominal kernel and requires a Singleton
spec. With a Singleton spec the kernel-space solvers return the nominal kernel
directly.
*/
DrpgResult drpg_run(const TabularMdp& mdp, const AmbiguitySpec& spec, const Policy& pi0,
                    const DrpgConfig& cfg, const IterationCallback& on_iteration = {});

/// The same outer loop with p_t fixed at the nominal kernel.
DrpgResult nominal_pg_run(const TabularMdp& mdp, const TransitionKernel& nominal, const Policy& pi0,
                          const DrpgConfig& cfg, const IterationCallback& on_iteration = {});

/// Phi(pi) by robust value iteration.
double evaluate_robustly(const TabularMdp& mdp, const Policy& pi, const AmbiguitySpec& spec,
                         double tol);

struct ParamRobustValue {
    double value = 0.0;
    bool lower_bound = true; ///< ascent finds a feasible xi, not a certified maximum
};

/// Phi(pi) over the parametric family, estimated by inner_pgd_param from the set centre.
ParamRobustValue evaluate_robustly(const TabularMdp& mdp, const Policy& pi,
                                   const TransitionKernel& nominal, const ParamInner& param);

} // namespace drpg
