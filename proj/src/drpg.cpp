#include "drpg/drpg.hpp"

#include "drpg/errors.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace drpg {

Policy project_policy(const Matrix& raw) {
    if (!raw.allFinite()) {
        throw InvalidInput("policy step produced non-finite entries");
    }
    Matrix out(raw.rows(), raw.cols());
    for (Eigen::Index s = 0; s < raw.rows(); ++s) {
        out.row(s) = project_simplex(raw.row(s).transpose()).transpose();
    }
    return Policy(std::move(out));
}

namespace {

struct StepSize {
    double operator()(const ConstantDeltaOverSqrtT& m) const { return m.delta / std::sqrt(iterations); }
    double operator()(const FixedStep& m) const { return m.alpha; }
    double iterations;
};

void validate(const TabularMdp& mdp, const AmbiguitySpec& spec, const DrpgConfig& cfg) {
    if (spec.states() != mdp.states() || spec.actions() != mdp.actions()) {
        throw InvalidInput("ambiguity set shape does not match the MDP");
    }
    const double decay = cfg.eps_decay.value_or(mdp.gamma());
    if (!(decay > 0.0 && decay <= 1.0)) {
        throw ConfigError("eps_decay must lie in (0, 1]");
    }
    if (!(cfg.eps0 > 0.0)) {
        throw ConfigError("eps0 must be positive");
    }
    if (const auto* m = std::get_if<ConstantDeltaOverSqrtT>(&cfg.step)) {
        if (!(m->delta > 0.0)) {
            throw ConfigError("delta must be positive");
        }
        if (cfg.iterations > 0 && cfg.eps0 > std::sqrt(static_cast<double>(cfg.iterations))) {
            throw ConfigError("with alpha = delta / sqrt(T) the initial tolerance must not exceed sqrt(T)");
        }
    } else if (!(std::get<FixedStep>(cfg.step).alpha > 0.0)) {
        throw ConfigError("step size must be positive");
    }
    if (const auto* param = std::get_if<ParamInner>(&cfg.inner)) {
        if (spec.kind() != AmbiguityKind::Singleton) {
            throw ConfigError("the parametric inner solver replaces the ambiguity set; pass a "
                              "singleton set holding the nominal kernel");
        }
        if (param->features.phi.rows() != static_cast<Eigen::Index>(mdp.states())) {
            throw ConfigError("feature map must have one row per state");
        }
        validate_xi_set(param->set, mdp.states(), mdp.actions(), param->features.dim());
    }
}

} // namespace

DrpgResult drpg_run(const TabularMdp& mdp, const AmbiguitySpec& spec, const Policy& pi0,
                    const DrpgConfig& cfg, const IterationCallback& on_iteration) {
    check_shapes(mdp, pi0);
    validate(mdp, spec, cfg);

    DrpgResult out;
    out.pi_best = pi0;
    out.j_best = std::numeric_limits<double>::quiet_NaN();
    if (cfg.iterations == 0) {
        return out;
    }

    const double alpha = std::visit(StepSize{static_cast<double>(cfg.iterations)}, cfg.step);
    const double decay = cfg.eps_decay.value_or(mdp.gamma());
    const double gamma = mdp.gamma();
    const double sqrt_sa = std::sqrt(static_cast<double>(mdp.states() * mdp.actions()));
    const TransitionKernel& nominal = spec.nominal();
    const bool singleton = spec.kind() == AmbiguityKind::Singleton &&
                           !std::holds_alternative<ParamInner>(cfg.inner);

    std::optional<double> d_hat = smoothness_constants(mdp, nominal).d_hat;
    TransitionKernel p_warm = nominal;
    std::optional<XiParams> xi_warm;
    if (const auto* param = std::get_if<ParamInner>(&cfg.inner)) {
        xi_warm = param->set.center;
    }

    const auto start = std::chrono::steady_clock::now();
    Policy pi = pi0;
    double eps = cfg.eps0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < cfg.iterations; ++t, eps *= decay) {
        TransitionKernel p;
        std::optional<double> gap;
        try {
            if (singleton) {
                p = nominal;
                gap = 0.0;
            } else if (const auto* vi = std::get_if<ExactVi>(&cfg.inner)) {
                const double tol = std::max(eps / 2.0, vi->floor);
                p = robust_policy_evaluate(mdp, pi, spec, tol).worst_kernel;
                gap = tol;
            } else if (const auto* pgd = std::get_if<PgdInner>(&cfg.inner)) {
                // ||G|| <= threshold implies a gap of at most eps_t
                const double scale = d_hat ? 4.0 * *d_hat * sqrt_sa / (1.0 - gamma) : 0.0;
                InnerPgdConfig icfg = pgd->cfg;
                icfg.target_gap = eps;
                if (d_hat) {
                    icfg.grad_map_tol = eps / scale;
                }
                InnerResult res = inner_pgd(mdp, pi, spec, p_warm, icfg);
                p = std::move(res.p_best);
                p_warm = p;
                if (d_hat) {
                    gap = scale * res.grad_map_norm;
                }
            } else {
                const auto& param = std::get<ParamInner>(cfg.inner);
                ParamInnerResult res = inner_pgd_param(mdp, pi, *xi_warm, param.set, nominal,
                                                       param.features, param.cfg);
                xi_warm = res.xi_best;
                p = kernel_from_xi(res.xi_best, nominal, param.features, param.set.lambda_min);
            }
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("outer iteration " + std::to_string(t) + ": " + e.what(),
                                   e.residual(), e.iterations(), e.last_iterate());
        }

        const Evaluation ev = evaluate(mdp, pi, p);
        const Matrix grad = policy_gradient(mdp, pi, ev);
        if (const auto ratio = mismatch_ratio(mdp, ev.d); ratio && d_hat) {
            d_hat = std::max(*d_hat, *ratio);
        }
        if (ev.objective < best) {
            best = ev.objective;
            out.pi_best = pi;
            out.j_best = ev.objective;
        }

        TraceRecord rec;
        rec.iter = t;
        rec.objective = ev.objective;
        rec.inner_gap_bound = gap;
        rec.epsilon_t = eps;
        rec.policy_grad_norm = grad.norm();
        rec.best_so_far = best;
        if (cfg.record_wall_clock) {
            rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                              .count();
        }
        out.trace.records.push_back(rec);
        if (on_iteration) {
            on_iteration(rec, pi, p);
        }
        pi = project_policy(pi.probs() - alpha * grad);
    }
    return out;
}

DrpgResult nominal_pg_run(const TabularMdp& mdp, const TransitionKernel& nominal, const Policy& pi0,
                          const DrpgConfig& cfg, const IterationCallback& on_iteration) {
    DrpgConfig plain = cfg;
    plain.inner = ExactVi{};
    return drpg_run(mdp, AmbiguitySpec::singleton(nominal), pi0, plain, on_iteration);
}

double evaluate_robustly(const TabularMdp& mdp, const Policy& pi, const AmbiguitySpec& spec,
                         double tol) {
    if (spec.kind() == AmbiguityKind::Singleton) {
        return return_value(mdp, pi, spec.nominal());
    }
    return robust_policy_evaluate(mdp, pi, spec, tol).phi;
}

ParamRobustValue evaluate_robustly(const TabularMdp& mdp, const Policy& pi,
                                   const TransitionKernel& nominal, const ParamInner& param) {
    const ParamInnerResult res =
        inner_pgd_param(mdp, pi, param.set.center, param.set, nominal, param.features, param.cfg);
    return {res.j_best, true};
}

} // namespace drpg
