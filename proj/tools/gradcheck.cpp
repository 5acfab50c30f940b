#include "gradcheck.hpp"

#include "drpg/domains.hpp"
#include "drpg/mdp.hpp"
#include "drpg/rng.hpp"

#include <cmath>

namespace drpg::cli {

namespace {

Policy interior_policy(Rng& rng, std::size_t S, std::size_t A) {
    Matrix m(S, A);
    for (Eigen::Index s = 0; s < m.rows(); ++s) {
        for (Eigen::Index a = 0; a < m.cols(); ++a) {
            m(s, a) = rng.uniform(0.1, 1.0);
        }
        m.row(s) /= m.row(s).sum();
    }
    return Policy(std::move(m));
}

// Reweights the nominal rows, keeping their support.
TransitionKernel jittered_kernel(Rng& rng, const TransitionKernel& nominal) {
    Tensor3 t = nominal.tensor();
    for (std::size_t s = 0; s < t.states(); ++s) {
        for (std::size_t a = 0; a < t.actions(); ++a) {
            auto row = t.row(s, a);
            for (Eigen::Index j = 0; j < row.size(); ++j) {
                row(j) *= rng.uniform(0.5, 1.5);
            }
            row /= row.sum();
        }
    }
    return TransitionKernel(std::move(t));
}

void record(FamilyReport& rep, double fd, double analytic, const std::string& where) {
    const double err = std::abs(fd - analytic) / std::max(1.0, std::abs(analytic));
    ++rep.checks;
    if (rep.worst.empty() || err > rep.max_rel_error) {
        rep.max_rel_error = err;
        rep.worst = where;
    }
}

std::string coord(const char* name, std::initializer_list<std::size_t> idx) {
    std::string out = name;
    out += '[';
    bool first = true;
    for (std::size_t i : idx) {
        out += (first ? "" : ",") + std::to_string(i);
        first = false;
    }
    return out + ']';
}

} // namespace

std::vector<FamilyReport> gradcheck(const RmdpFile& file, const GradcheckOptions& opts) {
    const TabularMdp& mdp = file.mdp;
    const std::size_t S = mdp.states();
    const std::size_t A = mdp.actions();
    const double h = opts.h;
    const double scale = opts.corrupt ? 1.01 : 1.0;
    Rng rng(opts.seed);

    FamilyReport policy{"policy", 0, 0.0, {}};
    FamilyReport kernel{"transition", 0, 0.0, {}};
    FamilyReport xi_rep{"xi", 0, 0.0, {}};

    const FeatureMap features =
        file.parametric ? file.parametric->features : default_radial_features(S);
    const XiSet set = file.parametric ? file.parametric->set : default_xi_set(S, A, features.dim());

    for (std::size_t trial = 0; trial < opts.trials; ++trial) {
        const Policy pi = interior_policy(rng, S, A);
        const TransitionKernel p = jittered_kernel(rng, file.nominal);
        const Evaluation ev = evaluate(mdp, pi, p);

        const Matrix g_pi = scale * policy_gradient(mdp, pi, ev);
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a + 1 < A; ++a) {
                const std::size_t b = a + 1;
                Matrix up = pi.probs();
                Matrix down = pi.probs();
                const auto r = static_cast<Eigen::Index>(s);
                up(r, static_cast<Eigen::Index>(a)) += h;
                up(r, static_cast<Eigen::Index>(b)) -= h;
                down(r, static_cast<Eigen::Index>(a)) -= h;
                down(r, static_cast<Eigen::Index>(b)) += h;
                const double fd = (return_value(mdp, Policy(up), p) - return_value(mdp, Policy(down), p)) / (2 * h);
                record(policy, fd, g_pi(r, static_cast<Eigen::Index>(a)) - g_pi(r, static_cast<Eigen::Index>(b)),
                       coord("pi", {s, a, b}));
            }
        }

        Tensor3 g_p = transition_gradient(mdp, pi, ev);
        g_p.as_vector() *= scale;
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                for (std::size_t j = 0; j < S; ++j) {
                    if (p(s, a, j) <= 10 * h) {
                        continue;
                    }
                    std::size_t k = j + 1;
                    while (k < S && p(s, a, k) <= 10 * h) {
                        ++k;
                    }
                    if (k == S) {
                        break;
                    }
                    Tensor3 up = p.tensor();
                    Tensor3 down = p.tensor();
                    up(s, a, j) += h;
                    up(s, a, k) -= h;
                    down(s, a, j) -= h;
                    down(s, a, k) += h;
                    const double fd = (return_value(mdp, pi, TransitionKernel(up)) -
                                       return_value(mdp, pi, TransitionKernel(down))) / (2 * h);
                    record(kernel, fd, g_p(s, a, j) - g_p(s, a, k), coord("p", {s, a, j, k}));
                }
            }
        }

        XiParams xi = set.center;
        for (Eigen::Index i = 0; i < xi.theta.size(); ++i) {
            xi.theta(i) += rng.uniform(-0.5, 0.5);
        }
        for (Eigen::Index k = 0; k < xi.lam.size(); ++k) {
            xi.lam.data()[k] = std::max(set.lambda_min + 2 * h, xi.lam.data()[k] * rng.uniform(0.5, 1.5));
        }
        const XiGradient g_xi = xi_gradient(mdp, pi, xi, file.nominal, features);
        auto j_at = [&](const XiParams& x) {
            return return_value(mdp, pi, kernel_from_xi(x, file.nominal, features, 0.0));
        };
        for (Eigen::Index i = 0; i < xi.theta.size(); ++i) {
            XiParams up = xi;
            XiParams down = xi;
            up.theta(i) += h;
            down.theta(i) -= h;
            record(xi_rep, (j_at(up) - j_at(down)) / (2 * h), scale * g_xi.theta(i),
                   coord("theta", {static_cast<std::size_t>(i)}));
        }
        for (Eigen::Index s = 0; s < xi.lam.rows(); ++s) {
            for (Eigen::Index a = 0; a < xi.lam.cols(); ++a) {
                XiParams up = xi;
                XiParams down = xi;
                up.lam(s, a) += h;
                down.lam(s, a) -= h;
                record(xi_rep, (j_at(up) - j_at(down)) / (2 * h), scale * g_xi.lam(s, a),
                       coord("lambda", {static_cast<std::size_t>(s), static_cast<std::size_t>(a)}));
            }
        }
    }
    return {policy, kernel, xi_rep};
}

} // namespace drpg::cli
