#include "drpg/param.hpp"

#include "drpg/ambiguity.hpp"
#include "drpg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace drpg {

XiSet default_xi_set(std::size_t states, std::size_t actions, Eigen::Index dim) {
    XiSet set;
    set.center.theta = Vector::Constant(dim, 0.5);
    if (dim == 2) {
        set.center.theta << 0.4, 0.9;
    }
    set.center.lam = Matrix::Ones(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(actions));
    return set;
}

void validate_xi_set(const XiSet& set, std::size_t states, std::size_t actions, Eigen::Index dim) {
    if (set.center.theta.size() != dim) {
        throw ConfigError("theta center has " + std::to_string(set.center.theta.size()) +
                          " entries but the feature map has " + std::to_string(dim));
    }
    if (set.center.lam.rows() != static_cast<Eigen::Index>(states) ||
        set.center.lam.cols() != static_cast<Eigen::Index>(actions)) {
        throw ConfigError("lambda center must be S x A");
    }
    if (!(set.kappa_theta > 0.0) || !(set.kappa_lambda > 0.0)) {
        throw ConfigError("xi radii must be positive");
    }
    if (!(set.lambda_min > 0.0)) {
        throw ConfigError("lambda floor must be positive");
    }
    if (!set.center.theta.allFinite() || !set.center.lam.allFinite() ||
        set.center.lam.minCoeff() < set.lambda_min) {
        throw ConfigError("lambda center must be finite and at least the floor");
    }
}

namespace {

void check_features(const TransitionKernel& nominal, const FeatureMap& features) {
    if (features.phi.rows() != static_cast<Eigen::Index>(nominal.states()) || features.dim() == 0) {
        throw InvalidInput("feature map must have one row per state");
    }
    if (!features.phi.allFinite()) {
        throw InvalidInput("feature map entries must be finite");
    }
}

void check_xi(const XiParams& xi, const TransitionKernel& nominal, const FeatureMap& features,
              double lambda_min) {
    check_features(nominal, features);
    if (xi.theta.size() != features.dim() ||
        xi.lam.rows() != static_cast<Eigen::Index>(nominal.states()) ||
        xi.lam.cols() != static_cast<Eigen::Index>(nominal.actions())) {
        throw InvalidInput("xi shape does not match the kernel and features");
    }
    if (!xi.theta.allFinite() || !xi.lam.allFinite()) {
        throw InvalidInput("xi must be finite");
    }
    if (xi.lam.minCoeff() < lambda_min) {
        throw InvalidArgument("lambda below the floor " + std::to_string(lambda_min));
    }
}

} // namespace

TransitionKernel kernel_from_xi(const XiParams& xi, const TransitionKernel& nominal,
                                const FeatureMap& features, double lambda_min) {
    check_xi(xi, nominal, features, lambda_min);
    const std::size_t S = nominal.states();
    const std::size_t A = nominal.actions();
    const Vector tilt = features.phi * xi.theta;
    Tensor3 out(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const auto base = nominal.row(s, a);
            const double lam = xi.lam(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
            double hi = -std::numeric_limits<double>::infinity();
            double lo = std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < base.size(); ++j) {
                if (base(j) > 0.0) {
                    hi = std::max(hi, tilt(j) / lam);
                    lo = std::min(lo, tilt(j) / lam);
                }
            }
            auto row = out.row(s, a);
            if (hi == lo) {
                row = base;
                continue;
            }
            for (Eigen::Index j = 0; j < base.size(); ++j) {
                row(j) = base(j) > 0.0 ? base(j) * std::exp(tilt(j) / lam - hi) : 0.0;
            }
            row /= row.sum();
        }
    }
    return TransitionKernel(std::move(out));
}

Score score_functions(const XiParams& xi, const TransitionKernel& nominal,
                      const FeatureMap& features, std::size_t s, std::size_t a, std::size_t s2) {
    check_xi(xi, nominal, features, 0.0);
    if (s >= nominal.states() || a >= nominal.actions() || s2 >= nominal.states()) {
        throw InvalidInput("score index out of range");
    }
    if (!(nominal(s, a, s2) > 0.0)) {
        throw DomainError("score is undefined off the nominal support");
    }
    const TransitionKernel p = kernel_from_xi(xi, nominal, features, 0.0);
    const double lam = xi.lam(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
    const Vector tilt = features.phi * xi.theta;
    const auto row = p.row(s, a);
    const Vector mean_phi = features.phi.transpose() * row;
    const double mean_tilt = row.dot(tilt);
    const auto j = static_cast<Eigen::Index>(s2);
    Score out;
    out.d_theta = (features.phi.row(j).transpose() - mean_phi) / lam;
    out.d_lambda = (mean_tilt - tilt(j)) / (lam * lam);
    return out;
}

namespace {

// The expectation collapses to covariances under each row of p:
// sum_j p_j score_theta(j) y_j = Cov(phi, y) / lam, and likewise for lam.
XiGradient gradient_from(const TabularMdp& mdp, const Policy& pi, const XiParams& xi,
                         const TransitionKernel& p, const Evaluation& ev,
                         const FeatureMap& features) {
    const std::size_t S = mdp.states();
    const std::size_t A = mdp.actions();
    const double gamma = mdp.gamma();
    const Vector tilt = features.phi * xi.theta;
    XiGradient g;
    g.theta = Vector::Zero(features.dim());
    g.lam = Matrix::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(A));
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const double weight = ev.d(static_cast<Eigen::Index>(s)) * pi(s, a) / (1.0 - gamma);
            if (weight == 0.0) {
                continue;
            }
            const auto row = p.row(s, a);
            const Vector y = mdp.cost().row(s, a) + gamma * ev.v;
            const double mean_y = row.dot(y);
            const Vector centered_y = (y.array() - mean_y).matrix();
            const Vector weighted = row.cwiseProduct(centered_y);
            const double lam = xi.lam(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
            g.theta += weight * (features.phi.transpose() * weighted) / lam;
            g.lam(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) =
                -weight * tilt.dot(weighted) / (lam * lam);
        }
    }
    return g;
}

// Projection onto {||y - c||_1 <= r, y >= floor}: y_i = max(floor, c_i + soft(x_i - c_i, mu)).
Vector project_l1_floor(const Vector& x, const Vector& center, double radius, double floor) {
    auto at = [&](double mu) {
        Vector u = x - center;
        u = (u.array().sign() * (u.array().abs() - mu).cwiseMax(0.0)).matrix();
        return Vector((center + u).cwiseMax(floor));
    };
    Vector y = at(0.0);
    if ((y - center).lpNorm<1>() <= radius) {
        return y;
    }
    double lo = 0.0;
    double hi = (x - center).lpNorm<Eigen::Infinity>();
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((at(mid) - center).lpNorm<1>() > radius) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return at(hi);
}

} // namespace

XiGradient xi_gradient(const TabularMdp& mdp, const Policy& pi, const XiParams& xi,
                       const TransitionKernel& nominal, const FeatureMap& features) {
    check_shapes(mdp, nominal);
    check_shapes(mdp, pi);
    const TransitionKernel p = kernel_from_xi(xi, nominal, features, 0.0);
    return gradient_from(mdp, pi, xi, p, evaluate(mdp, pi, p), features);
}

XiParams project_xi(const XiParams& xi, const XiSet& set) {
    if (xi.theta.size() != set.center.theta.size() || xi.lam.rows() != set.center.lam.rows() ||
        xi.lam.cols() != set.center.lam.cols()) {
        throw InvalidInput("xi shape does not match the set");
    }
    if (!xi.theta.allFinite() || !xi.lam.allFinite()) {
        throw InvalidInput("xi must be finite");
    }
    const auto n = xi.lam.size();
    const Eigen::Map<const Vector> lam(xi.lam.data(), n);
    const Eigen::Map<const Vector> lam_c(set.center.lam.data(), n);
    XiParams out;
    out.lam.resize(xi.lam.rows(), xi.lam.cols());
    Eigen::Map<Vector> lam_out(out.lam.data(), n);
    if (set.norm == XiNorm::L1) {
        out.theta = project_l1_ball(xi.theta, set.center.theta, set.kappa_theta);
        lam_out = project_l1_floor(lam, lam_c, set.kappa_lambda, set.lambda_min);
    } else {
        out.theta = project_box(xi.theta, (set.center.theta.array() - set.kappa_theta).matrix(),
                                (set.center.theta.array() + set.kappa_theta).matrix());
        lam_out = project_box(lam, (lam_c.array() - set.kappa_lambda).cwiseMax(set.lambda_min).matrix(),
                              (lam_c.array() + set.kappa_lambda).matrix());
    }
    return out;
}

ParamInnerResult inner_pgd_param(const TabularMdp& mdp, const Policy& pi, const XiParams& xi0,
                                 const XiSet& set, const TransitionKernel& nominal,
                                 const FeatureMap& features, const InnerPgdConfig& cfg) {
    check_shapes(mdp, nominal);
    check_shapes(mdp, pi);
    validate_xi_set(set, mdp.states(), mdp.actions(), features.dim());
    double beta = cfg.beta > 0.0 ? cfg.beta : kDefaultXiStep;

    XiParams xi = project_xi(xi0, set);
    TransitionKernel p = kernel_from_xi(xi, nominal, features, set.lambda_min);
    Evaluation ev = evaluate(mdp, pi, p);

    ParamInnerResult out;
    out.trace.push_back(ev.objective);
    out.j_best = ev.objective;
    out.xi_best = xi;
    std::size_t t = 0;
    for (; t < cfg.max_iter; ++t) {
        const XiGradient g = gradient_from(mdp, pi, xi, p, ev, features);
        bool moved = false;
        for (int halving = 0; halving < 60; ++halving) {
            XiParams cand{xi.theta + beta * g.theta, xi.lam + beta * g.lam};
            cand = project_xi(cand, set);
            const double step_norm = std::sqrt((cand.theta - xi.theta).squaredNorm() +
                                               (cand.lam - xi.lam).squaredNorm());
            if (step_norm / beta <= cfg.grad_map_tol) {
                break;
            }
            TransitionKernel cand_p = kernel_from_xi(cand, nominal, features, set.lambda_min);
            Evaluation cand_ev = evaluate(mdp, pi, cand_p);
            if (cand_ev.objective >= ev.objective) {
                xi = std::move(cand);
                p = std::move(cand_p);
                ev = std::move(cand_ev);
                moved = true;
                break;
            }
            beta /= 2.0;
        }
        if (!moved) {
            break;
        }
        out.trace.push_back(ev.objective);
        if (ev.objective > out.j_best) {
            out.j_best = ev.objective;
            out.xi_best = xi;
        }
    }
    out.iterations = t;
    out.xi_last = std::move(xi);
    out.final_step = beta;
    return out;
}

} // namespace drpg
