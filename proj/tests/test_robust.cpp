#include "support.hpp"

#include "drpg/errors.hpp"
#include "drpg/robust.hpp"

#include <doctest.h>

using namespace drpg;
using namespace drpg::testing;

namespace {

std::vector<AmbiguitySpec> contraction_specs(const TransitionKernel& nominal, double kappa) {
    std::vector<AmbiguitySpec> out;
    out.push_back(AmbiguitySpec::sa_rect(AmbiguityKind::SaRectL1, nominal, kappa));
    out.push_back(AmbiguitySpec::sa_rect(AmbiguityKind::SaRectLinf, nominal, 0.5 * kappa));
    out.push_back(AmbiguitySpec::s_rect(AmbiguityKind::SRectL1, nominal, kappa));
    out.push_back(AmbiguitySpec::s_rect(AmbiguityKind::SRectLinf, nominal, 0.5 * kappa));
    out.push_back(AmbiguitySpec::r_contamination(nominal, kappa));
    return out;
}

Vector random_values(Rng& rng, std::size_t S, double hi) {
    Vector v(static_cast<Eigen::Index>(S));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = rng.uniform(0.0, hi);
    }
    return v;
}

/// Plain optimal value iteration on a fixed kernel, written out longhand.
Vector nominal_optimal_values(const TabularMdp& mdp, const TransitionKernel& p, std::vector<std::size_t>* greedy) {
    const std::size_t S = mdp.states();
    const std::size_t A = mdp.actions();
    Vector v = Vector::Zero(static_cast<Eigen::Index>(S));
    Matrix q(S, A);
    for (int it = 0; it < 200000; ++it) {
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                double acc = 0.0;
                for (std::size_t j = 0; j < S; ++j) {
                    acc += p(s, a, j) * (mdp.cost(s, a, j) + mdp.gamma() * v(static_cast<Eigen::Index>(j)));
                }
                q(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = acc;
            }
        }
        const Vector next = q.rowwise().minCoeff();
        const double change = (next - v).cwiseAbs().maxCoeff();
        v = next;
        if (change < 1e-15) {
            break;
        }
    }
    if (greedy != nullptr) {
        greedy->assign(S, 0);
        for (std::size_t s = 0; s < S; ++s) {
            Eigen::Index best = 0;
            q.row(static_cast<Eigen::Index>(s)).minCoeff(&best);
            (*greedy)[s] = static_cast<std::size_t>(best);
        }
    }
    return v;
}

} // namespace

TEST_SUITE("robust") {

TEST_CASE("singleton update is the ordinary policy operator") {
    Rng rng(1);
    const Instance g = random_garnet(rng);
    const Policy pi = random_policy(rng, g.mdp.states(), g.mdp.actions());
    const AmbiguitySpec spec = AmbiguitySpec::singleton(g.nominal);
    const Vector v = random_values(rng, g.mdp.states(), 5.0);
    const BellmanUpdate up = robust_bellman_policy_update(g.mdp, pi, spec, v);
    for (std::size_t s = 0; s < g.mdp.states(); ++s) {
        double expect = 0.0;
        for (std::size_t a = 0; a < g.mdp.actions(); ++a) {
            for (std::size_t j = 0; j < g.mdp.states(); ++j) {
                expect += pi(s, a) * g.nominal(s, a, j) * (g.mdp.cost(s, a, j) + g.mdp.gamma() * v(static_cast<Eigen::Index>(j)));
            }
        }
        CHECK(up.v(static_cast<Eigen::Index>(s)) == doctest::Approx(expect).epsilon(1e-13));
    }
    CHECK(up.kernel == g.nominal);

    const Instance m1 = single_state();
    const BellmanUpdate once = robust_bellman_policy_update(m1.mdp, Policy::uniform(1, 1),
                                                            AmbiguitySpec::singleton(m1.nominal), Vector::Zero(1));
    CHECK(once.v(0) == doctest::Approx(0.5));
}

TEST_CASE("one-step worst case with zero discount") {
    Vector row(2);
    row << 0.5, 0.5;
    Vector costs(2);
    costs << 0.0, 1.0;
    const Instance inst = one_row_model(row, costs, 1e-12);
    const AmbiguitySpec spec = AmbiguitySpec::sa_rect(AmbiguityKind::SaRectL1, inst.nominal, 0.4);
    const BellmanUpdate up = robust_bellman_policy_update(inst.mdp, Policy::uniform(2, 1), spec, Vector::Zero(2));
    CHECK(up.v(0) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("contraction and monotonicity") {
    Rng rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const Instance g = random_garnet(rng, 5, 3);
        const std::size_t S = g.mdp.states();
        const Policy pi = random_policy(rng, S, g.mdp.actions());
        for (const AmbiguitySpec& spec : contraction_specs(g.nominal, rng.uniform(0.0, 0.8))) {
            CAPTURE(to_string(spec.kind()));
            const Vector v1 = random_values(rng, S, 10.0);
            const Vector v2 = random_values(rng, S, 10.0);
            const Vector t1 = robust_bellman_policy_update(g.mdp, pi, spec, v1).v;
            const Vector t2 = robust_bellman_policy_update(g.mdp, pi, spec, v2).v;
            CHECK((t1 - t2).cwiseAbs().maxCoeff() <= g.mdp.gamma() * (v1 - v2).cwiseAbs().maxCoeff() + 1e-12);

            const Vector lo = v1.cwiseMin(v2);
            const Vector hi = v1.cwiseMax(v2);
            const Vector tlo = robust_bellman_policy_update(g.mdp, pi, spec, lo).v;
            const Vector thi = robust_bellman_policy_update(g.mdp, pi, spec, hi).v;
            CHECK(((thi - tlo).array() >= -1e-12).all());
        }
    }
}

TEST_CASE("robust evaluation: reductions and fixed point") {
    Rng rng(3);
    const Instance g = random_garnet(rng);
    const std::size_t S = g.mdp.states();
    const std::size_t A = g.mdp.actions();
    const Policy pi = random_policy(rng, S, A);

    const double tol = 1e-9;
    const RobustEvalResult single = robust_policy_evaluate(g.mdp, pi, AmbiguitySpec::singleton(g.nominal), tol);
    CHECK((single.v.v - naive_value(g.mdp, pi, g.nominal)).cwiseAbs().maxCoeff() <= 2.0 * tol);

    const TabularMdp ones(Tensor3(S, A, 1.0), g.mdp.gamma(), g.mdp.rho());
    const RobustEvalResult ceiling =
        robust_policy_evaluate(ones, pi, AmbiguitySpec::sa_rect(AmbiguityKind::SaRectL1, g.nominal, 0.5), tol);
    CHECK((ceiling.v.v.array() - 1.0 / (1.0 - g.mdp.gamma())).abs().maxCoeff() <= tol);

    for (const AmbiguitySpec& spec : contraction_specs(g.nominal, 0.3)) {
        CAPTURE(to_string(spec.kind()));
        const RobustEvalResult r = robust_policy_evaluate(g.mdp, pi, spec, tol);
        CHECK(r.phi == doctest::Approx(g.mdp.rho().dot(r.v.v)).epsilon(1e-15));
        CHECK(contains(spec, r.worst_kernel, 1e-8));
        const Vector tv = robust_bellman_policy_update(g.mdp, pi, spec, r.v.v).v;
        CHECK((tv - r.v.v).cwiseAbs().maxCoeff() <= tol);
        // the returned kernel attains phi up to the tolerance
        CHECK(naive_return(g.mdp, pi, r.worst_kernel) >= r.phi - tol);
        // dominance over sampled members
        for (int k = 0; k < 10; ++k) {
            const TransitionKernel member(random_member(rng, spec, k % 2 == 0));
            CHECK(naive_return(g.mdp, pi, member) <= r.phi + tol);
        }
    }
    CHECK_THROWS_AS(robust_policy_evaluate(g.mdp, pi, AmbiguitySpec::singleton(g.nominal), 0.0), InvalidArgument);
    CHECK_THROWS_AS(robust_policy_evaluate(g.mdp, pi, AmbiguitySpec::singleton(g.nominal), 1e-12, 3),
                    ConvergenceError);
}

TEST_CASE("Garnet(4,2,2) seed 3: robust value exceeds the nominal return") {
    GarnetConfig cfg;
    cfg.states = 4;
    cfg.actions = 2;
    cfg.branching = 2;
    cfg.seed = 3;
    const Instance g = garnet_generate(cfg);
    const Policy pi = Policy::uniform(4, 2);
    const AmbiguitySpec spec = AmbiguitySpec::sa_rect(AmbiguityKind::SaRectL1, g.nominal, 0.1);
    CHECK(robust_policy_evaluate(g.mdp, pi, spec, 1e-10).phi > naive_return(g.mdp, pi, g.nominal));
}

TEST_CASE("optimal robust value iteration") {
    // singleton on the chain with a free "stay" action: staying is optimal
    const Instance chain = two_state_chain(2, 0.5);
    const RobustOptimum single = robust_optimal_value_iteration(chain.mdp, AmbiguitySpec::singleton(chain.nominal), 1e-12);
    CHECK(single.pi(0, 1) == 1.0);
    CHECK(std::abs(single.j_star) < 1e-12);

    Rng rng(9);
    const Instance g = random_garnet(rng, 5, 3);
    // R = 0 is the nominal problem
    const RobustOptimum r0 = robust_optimal_value_iteration(g.mdp, AmbiguitySpec::r_contamination(g.nominal, 0.0), 1e-12);
    const RobustOptimum s0 = robust_optimal_value_iteration(g.mdp, AmbiguitySpec::singleton(g.nominal), 1e-12);
    CHECK((r0.v - s0.v).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r0.pi == s0.pi);
    std::vector<std::size_t> greedy;
    const Vector vref = nominal_optimal_values(g.mdp, g.nominal, &greedy);
    CHECK((s0.v - vref).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(s0.pi == Policy::deterministic(greedy, g.mdp.actions()));

    // a saturated L1 budget lets every row jump to its costliest successor
    const RobustOptimum sat = robust_optimal_value_iteration(
        g.mdp, AmbiguitySpec::sa_rect(AmbiguityKind::SaRectL1, g.nominal, 2.0), 1e-12);
    const std::size_t S = g.mdp.states();
    const std::size_t A = g.mdp.actions();
    Vector v = Vector::Zero(static_cast<Eigen::Index>(S));
    for (int it = 0; it < 100000; ++it) {
        Vector next(v.size());
        for (std::size_t s = 0; s < S; ++s) {
            double best = 1e300;
            for (std::size_t a = 0; a < A; ++a) {
                double worst = -1e300;
                for (std::size_t j = 0; j < S; ++j) {
                    worst = std::max(worst, g.mdp.cost(s, a, j) + g.mdp.gamma() * v(static_cast<Eigen::Index>(j)));
                }
                best = std::min(best, worst);
            }
            next(static_cast<Eigen::Index>(s)) = best;
        }
        const double change = (next - v).cwiseAbs().maxCoeff();
        v = next;
        if (change < 1e-15) {
            break;
        }
    }
    CHECK((sat.v - v).cwiseAbs().maxCoeff() < 1e-11);

    CHECK_THROWS_AS(robust_optimal_value_iteration(g.mdp, AmbiguitySpec::s_rect(AmbiguityKind::SRectL1, g.nominal, 0.2), 1e-8),
                    UnsupportedKind);
}

TEST_CASE("R-contamination matches a shorter discount") {
    Rng rng(44);
    for (int trial = 0; trial < 10; ++trial) {
        GarnetConfig cfg;
        cfg.states = 2 + rng.below(5);
        cfg.actions = 1 + rng.below(3);
        cfg.branching = 1 + rng.below(cfg.states);
        cfg.seed = rng.next();
        cfg.state_action_costs = true;
        const Instance g = garnet_generate(cfg);
        for (double r : {0.1, 0.3}) {
            const RobustOptimum robust =
                robust_optimal_value_iteration(g.mdp, AmbiguitySpec::r_contamination(g.nominal, r), 1e-12);
            std::vector<std::size_t> greedy;
            const Vector vnr = nominal_optimal_values(g.mdp.with_gamma(g.mdp.gamma() * (1.0 - r)), g.nominal, &greedy);
            CHECK(robust.pi == Policy::deterministic(greedy, g.mdp.actions()));
            const Vector diff = robust.v - vnr;
            CHECK(diff.maxCoeff() - diff.minCoeff() <= 1e-6);
        }
    }
}

TEST_CASE("inner PGD: singleton and warm start at the maximizer") {
    Rng rng(2);
    GarnetConfig cfg;
    cfg.states = 4;
    cfg.actions = 2;
    cfg.branching = 2;
    cfg.seed = 3;
    const Instance g = garnet_generate(cfg);
    const Policy pi = Policy::uniform(4, 2);

    InnerPgdConfig icfg;
    icfg.max_iter = 50;
    const InnerResult single = inner_pgd(g.mdp, pi, AmbiguitySpec::singleton(g.nominal), g.nominal, icfg);
    CHECK(single.p_best == g.nominal);
    CHECK(single.j_best == doctest::Approx(naive_return(g.mdp, pi, g.nominal)).epsilon(1e-12));
    CHECK(gradient_mapping(g.mdp, pi, AmbiguitySpec::singleton(g.nominal), g.nominal, 0.1) == 0.0);

    const AmbiguitySpec spec = AmbiguitySpec::sa_rect(AmbiguityKind::SaRectL1, g.nominal, 0.1);
    const RobustEvalResult oracle = robust_policy_evaluate(g.mdp, pi, spec, 1e-12);
    const InnerResult warm = inner_pgd(g.mdp, pi, spec, oracle.worst_kernel, icfg);
    for (std::size_t t = 0; t < warm.trace.size(); ++t) {
        CHECK(std::abs(warm.trace[t] - oracle.phi) <= 1e-9);
        if (t > 0) {
            CHECK(warm.trace[t] >= warm.trace[t - 1] - 1e-12);
        }
    }
    CHECK(gradient_mapping(g.mdp, pi, spec, oracle.worst_kernel, default_inner_step(g.mdp)) <= 1e-6);
}

TEST_CASE("inner PGD ascends from a feasible start") {
    Rng rng(5);
    GarnetConfig cfg;
    cfg.states = 4;
    cfg.actions = 2;
    cfg.branching = 2;
    cfg.seed = 3;
    const Instance g = garnet_generate(cfg);
    const Policy pi = Policy::uniform(4, 2);
    const AmbiguitySpec spec = AmbiguitySpec::sa_rect(AmbiguityKind::SaRectL1, g.nominal, 0.1);
    const TransitionKernel start(random_member(rng, spec));
    InnerPgdConfig icfg;
    icfg.max_iter = 2000;
    const InnerResult r = inner_pgd(g.mdp, pi, spec, start, icfg);
    REQUIRE(r.trace.size() == 2001);
    CHECK(gradient_mapping(g.mdp, pi, spec, start, default_inner_step(g.mdp)) > 0.0);
    for (std::size_t t = 1; t < r.trace.size(); ++t) {
        CHECK(r.trace[t] >= r.trace[t - 1] - 1e-12);
    }
    CHECK(r.j_best == doctest::Approx(r.trace.back()));
    CHECK(r.j_best <= robust_policy_evaluate(g.mdp, pi, spec, 1e-12).phi + 1e-12);

    // with a larger step the iterates reach the oracle value
    icfg.beta = 100.0 * default_inner_step(g.mdp);
    icfg.max_iter = 20000;
    const InnerResult fast = inner_pgd(g.mdp, pi, spec, start, icfg);
    CHECK(std::abs(fast.j_best - robust_policy_evaluate(g.mdp, pi, spec, 1e-12).phi) <= 1e-6);
}

TEST_CASE("gradient mapping and sufficient ascent") {
    GarnetConfig cfg;
    cfg.states = 4;
    cfg.actions = 2;
    cfg.branching = 2;
    cfg.seed = 1;
    const Instance g = garnet_generate(cfg);
    const Policy pi = Policy::uniform(4, 2);
    const AmbiguitySpec spec = AmbiguitySpec::sa_rect(AmbiguityKind::SaRectL1, g.nominal, 0.1);
    const double beta = default_inner_step(g.mdp);
    InnerPgdConfig icfg;
    icfg.beta = beta;
    icfg.max_iter = 1;
    // with step 1 / ell_p every projected step gains at least beta / 2 * |G|^2
    TransitionKernel p = g.nominal;
    for (int k = 0; k < 40; ++k) {
        const double norm = gradient_mapping(g.mdp, pi, spec, p, beta);
        const TransitionKernel next = inner_pgd(g.mdp, pi, spec, p, icfg).p_last;
        const double gain = return_value(g.mdp, pi, next) - return_value(g.mdp, pi, p);
        CHECK(gain >= 0.5 * beta * norm * norm - 1e-13);
        p = next;
    }
    CHECK(gradient_mapping(g.mdp, pi, spec, g.nominal, beta) > 0.1);

    const RobustEvalResult oracle = robust_policy_evaluate(g.mdp, pi, spec, 1e-13);
    CHECK(gradient_mapping(g.mdp, pi, spec, oracle.worst_kernel, 100.0 * beta) < 1e-6);
    icfg.beta = 100.0 * beta;
    icfg.max_iter = 20000;
    const InnerResult fast = inner_pgd(g.mdp, pi, spec, g.nominal, icfg);
    CHECK(gradient_mapping(g.mdp, pi, spec, fast.p_last, 100.0 * beta) < 1e-6);
}

}
