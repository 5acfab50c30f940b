#pragma once

// Random instance generators and independent reference computations shared by
// the unit tests and the acceptance binary. Nothing here calls the solvers it
// is used to check.

#include "drpg/ambiguity.hpp"
#include "drpg/domains.hpp"
#include "drpg/lp.hpp"
#include "drpg/mdp.hpp"
#include "drpg/param.hpp"
#include "drpg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace drpg::testing {

// -- generators ----------------------------------------------------------------------

/// Random point of the simplex; with sparse = true roughly half the entries are zero.
inline Vector random_simplex(Rng& rng, Eigen::Index n, bool sparse = false) {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i) = sparse && rng.uniform() < 0.5 ? 0.0 : -std::log(1.0 - rng.uniform());
    }
    if (x.sum() <= 0.0) {
        x(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))) = 1.0;
    }
    return x / x.sum();
}

/// Policy with every entry at least floor / A so that small feasible moves stay inside.
inline Policy random_policy(Rng& rng, std::size_t S, std::size_t A, double floor = 0.0) {
    Matrix m(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        const Vector row = random_simplex(rng, static_cast<Eigen::Index>(A));
        m.row(static_cast<Eigen::Index>(s)) =
            ((1.0 - floor) * row + Vector::Constant(static_cast<Eigen::Index>(A), floor / static_cast<double>(A)))
                .transpose();
    }
    return Policy(m);
}

inline Tensor3 random_kernel_tensor(Rng& rng, std::size_t S, std::size_t A, double floor = 0.0) {
    Tensor3 p(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            const Vector row = random_simplex(rng, static_cast<Eigen::Index>(S));
            for (std::size_t j = 0; j < S; ++j) {
                p(s, a, j) = (1.0 - floor) * row(static_cast<Eigen::Index>(j)) + floor / static_cast<double>(S);
            }
        }
    }
    return p;
}

inline TransitionKernel random_kernel(Rng& rng, std::size_t S, std::size_t A, double floor = 0.0) {
    return TransitionKernel(random_kernel_tensor(rng, S, A, floor));
}

/// Garnet with random S in [2, max_s], A in [1, max_a] and branching in [1, S].
inline Instance random_garnet(Rng& rng, std::size_t max_s = 6, std::size_t max_a = 3, double gamma = 0.9) {
    GarnetConfig cfg;
    cfg.states = 2 + rng.below(max_s - 1);
    cfg.actions = 1 + rng.below(max_a);
    cfg.branching = 1 + rng.below(cfg.states);
    cfg.seed = rng.next();
    cfg.gamma = gamma;
    return garnet_generate(cfg);
}

/// The kernel 0.5 nominal + 0.5 uniform-random: full support, so every FD direction is feasible.
inline TransitionKernel interior_kernel(Rng& rng, const TransitionKernel& nominal) {
    const std::size_t S = nominal.states();
    const std::size_t A = nominal.actions();
    Tensor3 p = random_kernel_tensor(rng, S, A, 0.2);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.flat()[i] = 0.5 * p.flat()[i] + 0.5 * nominal.tensor().flat()[i];
    }
    return TransitionKernel(p);
}

inline double row_distance(const Vector& x, const Vector& y, bool linf) {
    return linf ? (x - y).cwiseAbs().maxCoeff() : (x - y).cwiseAbs().sum();
}

/**
Random member of the set: nominal moved towards a random kernel, scaled so
the budget holds. With on_boundary the budget is used up whenever possible.
*/
inline Tensor3 random_member(Rng& rng, const AmbiguitySpec& spec, bool on_boundary = false) {
    const TransitionKernel& nom = spec.nominal();
    const std::size_t S = nom.states();
    const std::size_t A = nom.actions();
    const Tensor3 q = random_kernel_tensor(rng, S, A);
    Tensor3 out = nom.tensor();
    auto blend = [&](std::size_t s, std::size_t a, double t) {
        for (std::size_t j = 0; j < S; ++j) {
            out(s, a, j) = nom(s, a, j) + t * (q(s, a, j) - nom(s, a, j));
        }
    };
    const double u = on_boundary ? 1.0 : rng.uniform();
    switch (spec.kind()) {
    case AmbiguityKind::Singleton:
        break;
    case AmbiguityKind::RContamination:
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                blend(s, a, u * spec.contamination());
            }
        }
        break;
    case AmbiguityKind::SaRectL1:
    case AmbiguityKind::SaRectLinf: {
        const bool linf = spec.kind() == AmbiguityKind::SaRectLinf;
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                const double dist = row_distance(q.row(s, a), nom.row(s, a), linf);
                const double t = dist > 0.0 ? std::min(1.0, spec.sa_budget(s, a) / dist) : 0.0;
                blend(s, a, u * t);
            }
        }
        break;
    }
    case AmbiguityKind::SRectL1:
    case AmbiguityKind::SRectLinf: {
        const bool linf = spec.kind() == AmbiguityKind::SRectLinf;
        for (std::size_t s = 0; s < S; ++s) {
            double dist = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                dist += row_distance(q.row(s, a), nom.row(s, a), linf);
            }
            const double t = dist > 0.0 ? std::min(1.0, spec.s_budget(s) / dist) : 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                blend(s, a, u * t);
            }
        }
        break;
    }
    }
    return out;
}

// -- reference computations ----------------------------------------------------------

/// Fixed-point iteration of T_pi until the update stalls; no linear solver involved.
inline Vector naive_value(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p) {
    const std::size_t S = mdp.states();
    const std::size_t A = mdp.actions();
    Vector v = Vector::Zero(static_cast<Eigen::Index>(S));
    for (int it = 0; it < 100000; ++it) {
        Vector next = Vector::Zero(v.size());
        for (std::size_t s = 0; s < S; ++s) {
            double acc = 0.0;
            for (std::size_t a = 0; a < A; ++a) {
                double qa = 0.0;
                for (std::size_t j = 0; j < S; ++j) {
                    qa += p(s, a, j) * (mdp.cost(s, a, j) + mdp.gamma() * v(static_cast<Eigen::Index>(j)));
                }
                acc += pi(s, a) * qa;
            }
            next(static_cast<Eigen::Index>(s)) = acc;
        }
        const double change = (next - v).cwiseAbs().maxCoeff();
        v = next;
        if (change <= 1e-15) {
            break;
        }
    }
    return v;
}

/// d_{k+1} = (1 - gamma) rho + gamma (P^pi)^T d_k, iterated to a fixed point.
inline Vector naive_occupancy(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p) {
    const std::size_t S = mdp.states();
    const std::size_t A = mdp.actions();
    const double g = mdp.gamma();
    Vector d = mdp.rho();
    for (int it = 0; it < 100000; ++it) {
        Vector next = (1.0 - g) * mdp.rho();
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                for (std::size_t j = 0; j < S; ++j) {
                    next(static_cast<Eigen::Index>(j)) += g * d(static_cast<Eigen::Index>(s)) * pi(s, a) * p(s, a, j);
                }
            }
        }
        const double change = (next - d).cwiseAbs().maxCoeff();
        d = next;
        if (change <= 1e-16) {
            break;
        }
    }
    return d;
}

inline double naive_return(const TabularMdp& mdp, const Policy& pi, const TransitionKernel& p) {
    return mdp.rho().dot(naive_value(mdp, pi, p));
}

inline double rel_error(double approx, double exact) {
    return std::abs(approx - exact) / std::max(1.0, std::abs(exact));
}

/**
Worst case at one state by an explicit LP, written independently of the
library's own formulations:

- L1 kinds: p = nominal + u - w with u, w >= 0 and sum (u + w) <= budget per row
  (sa) or per state (s);
- Linf kinds: the same split with u_j, w_j <= t and t <= budget (sa), or one
  t per row and sum_a t_a <= budget (s).

Returns the maximal value of sum_a weights_a p_a^T z_a; weights must be
nonnegative.
*/
inline double lp_worst_value(const AmbiguitySpec& spec, std::size_t s, const Matrix& z, const Vector& weights) {
    const TransitionKernel& nom = spec.nominal();
    const auto S = static_cast<Eigen::Index>(nom.states());
    const auto A = static_cast<Eigen::Index>(nom.actions());
    const AmbiguityKind kind = spec.kind();
    const bool linf = kind == AmbiguityKind::SaRectLinf || kind == AmbiguityKind::SRectLinf;
    const bool sa = is_sa_rectangular(kind);

    // variables: u (A*S), w (A*S), then t (A) for Linf kinds
    const Eigen::Index n_uw = A * S;
    const Eigen::Index n = 2 * n_uw + (linf ? A : 0);
    auto u_idx = [&](Eigen::Index a, Eigen::Index j) { return a * S + j; };
    auto w_idx = [&](Eigen::Index a, Eigen::Index j) { return n_uw + a * S + j; };
    auto t_idx = [&](Eigen::Index a) { return 2 * n_uw + a; };

    LpProblem lp;
    lp.c = Vector::Zero(n);
    double constant = 0.0;
    for (Eigen::Index a = 0; a < A; ++a) {
        const double wa = weights(a);
        for (Eigen::Index j = 0; j < S; ++j) {
            const double coef = wa * z(a, j);
            constant += coef * nom(static_cast<std::size_t>(s), static_cast<std::size_t>(a), static_cast<std::size_t>(j));
            lp.c(u_idx(a, j)) = -coef; // minimize the negative
            lp.c(w_idx(a, j)) = coef;
        }
    }

    // sum_j (u - w) = 0 per row keeps the row sum at one
    lp.a_eq = Matrix::Zero(A, n);
    lp.b_eq = Vector::Zero(A);
    for (Eigen::Index a = 0; a < A; ++a) {
        for (Eigen::Index j = 0; j < S; ++j) {
            lp.a_eq(a, u_idx(a, j)) = 1.0;
            lp.a_eq(a, w_idx(a, j)) = -1.0;
        }
    }

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    auto add = [&](Eigen::VectorXd row, double b) {
        rows.push_back(std::move(row));
        rhs.push_back(b);
    };
    // w_j <= nominal_j keeps p >= 0
    for (Eigen::Index a = 0; a < A; ++a) {
        for (Eigen::Index j = 0; j < S; ++j) {
            Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
            r(w_idx(a, j)) = 1.0;
            add(r, nom(static_cast<std::size_t>(s), static_cast<std::size_t>(a), static_cast<std::size_t>(j)));
        }
    }
    if (!linf) {
        if (sa) {
            for (Eigen::Index a = 0; a < A; ++a) {
                Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
                for (Eigen::Index j = 0; j < S; ++j) {
                    r(u_idx(a, j)) = 1.0;
                    r(w_idx(a, j)) = 1.0;
                }
                add(r, spec.sa_budget(static_cast<std::size_t>(s), static_cast<std::size_t>(a)));
            }
        } else {
            Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
            r.head(2 * n_uw).setOnes();
            add(r, spec.s_budget(static_cast<std::size_t>(s)));
        }
    } else {
        for (Eigen::Index a = 0; a < A; ++a) {
            for (Eigen::Index j = 0; j < S; ++j) {
                for (Eigen::Index which : {u_idx(a, j), w_idx(a, j)}) {
                    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
                    r(which) = 1.0;
                    r(t_idx(a)) = -1.0;
                    add(r, 0.0);
                }
            }
        }
        if (sa) {
            for (Eigen::Index a = 0; a < A; ++a) {
                Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
                r(t_idx(a)) = 1.0;
                add(r, spec.sa_budget(static_cast<std::size_t>(s), static_cast<std::size_t>(a)));
            }
        } else {
            Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
            for (Eigen::Index a = 0; a < A; ++a) {
                r(t_idx(a)) = 1.0;
            }
            add(r, spec.s_budget(static_cast<std::size_t>(s)));
        }
    }
    lp.a_ub = Matrix(static_cast<Eigen::Index>(rows.size()), n);
    lp.b_ub = Vector(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        lp.a_ub.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        lp.b_ub(static_cast<Eigen::Index>(i)) = rhs[i];
    }
    const LpSolution sol = lp_solve_dense(lp);
    return constant - sol.objective;
}

/// Dykstra's method between two convex sets, run far past the library's tolerance.
template <class P1, class P2>
Vector dykstra_reference(const Vector& x, P1&& proj_a, P2&& proj_b, int sweeps = 200000) {
    Vector y = x;
    Vector p = Vector::Zero(x.size());
    Vector q = Vector::Zero(x.size());
    for (int k = 0; k < sweeps; ++k) {
        const Vector a = proj_a(y + p);
        p = y + p - a;
        const Vector b = proj_b(a + q);
        q = a + q - b;
        const double change = (b - y).cwiseAbs().maxCoeff();
        y = b;
        // y can stall while the correction terms still move, so also require agreement
        if (change <= 1e-15 && (a - b).cwiseAbs().maxCoeff() <= 1e-13 && k > 10) {
            break;
        }
    }
    return y;
}

/// Central difference of f along direction dir scaled by h.
template <class F>
double central_difference(F&& f, double h) {
    return (f(h) - f(-h)) / (2.0 * h);
}

// -- small hand-checkable models -----------------------------------------------------

/// One state, one action, cost 0.5, gamma 0.9: v = 5.
inline Instance single_state(double cost = 0.5, double gamma = 0.9) {
    Tensor3 c(1, 1, cost);
    Tensor3 p(1, 1, 1.0);
    return {TabularMdp(c, gamma, Vector::Ones(1)), TransitionKernel(p), std::nullopt};
}

/**
Two states, state 0 moves to state 1 which is absorbing. Leaving state 0
costs 1, everything else is free. With two actions the second one stays put
at cost 0.
*/
inline Instance two_state_chain(std::size_t actions = 1, double gamma = 0.5) {
    Tensor3 c(2, actions, 0.0);
    Tensor3 p(2, actions, 0.0);
    c(0, 0, 0) = 1.0;
    c(0, 0, 1) = 1.0;
    p(0, 0, 1) = 1.0;
    p(1, 0, 1) = 1.0;
    if (actions > 1) {
        p(0, 1, 0) = 1.0;
        p(1, 1, 1) = 1.0;
    }
    Vector rho(2);
    rho << 1.0, 0.0;
    return {TabularMdp(c, gamma, rho), TransitionKernel(p), std::nullopt};
}

/// One-action, S-state model with given per-next-state costs and a single nominal row used everywhere.
inline Instance one_row_model(const Vector& nominal_row, const Vector& next_costs, double gamma) {
    const auto S = static_cast<std::size_t>(nominal_row.size());
    Tensor3 c(S, 1);
    Tensor3 p(S, 1);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t j = 0; j < S; ++j) {
            c(s, 0, j) = next_costs(static_cast<Eigen::Index>(j));
            p(s, 0, j) = nominal_row(static_cast<Eigen::Index>(j));
        }
    }
    return {TabularMdp(c, gamma, Vector::Constant(static_cast<Eigen::Index>(S), 1.0 / static_cast<double>(S))),
            TransitionKernel(p), std::nullopt};
}

} // namespace drpg::testing
