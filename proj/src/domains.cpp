#include "drpg/domains.hpp"

#include "drpg/errors.hpp"
#include "drpg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace drpg {

namespace {

Vector uniform_rho(std::size_t states) {
    return Vector::Constant(static_cast<Eigen::Index>(states), 1.0 / static_cast<double>(states));
}

} // namespace

Instance garnet_generate(const GarnetConfig& cfg) {
    const std::size_t S = cfg.states;
    const std::size_t A = cfg.actions;
    const std::size_t b = cfg.branching;
    if (S == 0 || A == 0) {
        throw InvalidArgument("garnet needs at least one state and one action");
    }
    if (b < 1 || b > S) {
        throw InvalidArgument("garnet branching factor must lie in [1, S]");
    }
    Rng rng(cfg.seed);
    Tensor3 probs(S, A);
    std::vector<std::size_t> states(S);
    std::vector<double> cuts(b + 1);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            std::iota(states.begin(), states.end(), std::size_t{0});
            for (std::size_t k = 0; k < b; ++k) {
                const std::size_t pick = k + static_cast<std::size_t>(rng.below(S - k));
                std::swap(states[k], states[pick]);
            }
            // redraw on a repeated cut point so every chosen state keeps positive mass
            for (;;) {
                cuts.front() = 0.0;
                cuts.back() = 1.0;
                for (std::size_t k = 1; k < b; ++k) {
                    cuts[k] = rng.uniform();
                }
                std::sort(cuts.begin() + 1, cuts.end() - 1);
                bool distinct = true;
                for (std::size_t k = 0; k < b; ++k) {
                    distinct = distinct && cuts[k + 1] > cuts[k];
                }
                if (distinct) {
                    break;
                }
            }
            for (std::size_t k = 0; k < b; ++k) {
                probs(s, a, states[k]) = cuts[k + 1] - cuts[k];
            }
        }
    }
    Tensor3 cost(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            if (cfg.state_action_costs) {
                cost.row(s, a).setConstant(rng.uniform());
            } else {
                for (std::size_t s2 = 0; s2 < S; ++s2) {
                    cost(s, a, s2) = rng.uniform();
                }
            }
        }
    }
    return {TabularMdp(std::move(cost), cfg.gamma, uniform_rho(S)), TransitionKernel(std::move(probs)),
            std::nullopt};
}

Instance inventory_generate(const InventoryConfig& cfg) {
    const std::size_t S = cfg.states;
    const std::size_t A = cfg.actions;
    if (S < 2 || A < 1) {
        throw InvalidArgument("inventory needs S >= 2 and A >= 1");
    }
    std::vector<double> weights = cfg.demand_weights;
    if (weights.empty()) {
        weights.assign(cfg.demand_max + 1, 1.0);
    }
    if (weights.size() != cfg.demand_max + 1) {
        throw InvalidArgument("demand weights must cover 0..demand_max");
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0) ||
        std::any_of(weights.begin(), weights.end(), [](double w) { return !(w >= 0.0) || !std::isfinite(w); })) {
        throw InvalidArgument("demand weights must be nonnegative with a positive sum");
    }

    Tensor3 probs(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < A; ++a) {
            for (std::size_t d = 0; d < weights.size(); ++d) {
                const auto level = static_cast<long long>(s + a) - static_cast<long long>(d);
                const auto next = static_cast<std::size_t>(
                    std::clamp<long long>(level, 0, static_cast<long long>(S) - 1));
                probs(s, a, next) += weights[d];
            }
            probs.row(s, a) /= probs.row(s, a).sum();
        }
    }
    Rng rng(cfg.seed);
    Tensor3 cost(S, A);
    for (double& c : cost.flat()) {
        c = rng.uniform();
    }
    return {TabularMdp(std::move(cost), cfg.gamma, uniform_rho(S)), TransitionKernel(std::move(probs)),
            default_radial_features(S)};
}

FeatureMap radial_features(std::size_t states, const std::vector<double>& centers,
                           const std::vector<double>& sigmas) {
    if (centers.size() != sigmas.size() || centers.empty()) {
        throw InvalidArgument("radial features need matching, nonempty centers and widths");
    }
    FeatureMap out;
    out.phi.resize(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(centers.size()));
    for (std::size_t i = 0; i < centers.size(); ++i) {
        if (!(sigmas[i] > 0.0) || !std::isfinite(sigmas[i]) || !std::isfinite(centers[i])) {
            throw InvalidArgument("radial feature widths must be positive and finite");
        }
        for (std::size_t s = 0; s < states; ++s) {
            const double diff = static_cast<double>(s) - centers[i];
            out.phi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) =
                std::exp(-diff * diff / (2.0 * sigmas[i] * sigmas[i]));
        }
    }
    out.centers = centers;
    out.sigmas = sigmas;
    return out;
}

FeatureMap default_radial_features(std::size_t states) {
    const double n = static_cast<double>(states);
    return radial_features(states, {n / 4.0, 3.0 * n / 4.0}, {n / 4.0, n / 4.0});
}

} // namespace drpg
