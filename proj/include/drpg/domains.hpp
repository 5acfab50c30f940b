#pragma once

#include "drpg/param.hpp"
#include "drpg/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace drpg {

/// An MDP together with its nominal kernel and, for some domains, features.
struct Instance {
    TabularMdp mdp;
    TransitionKernel nominal;
    std::optional<FeatureMap> features;
};

struct GarnetConfig {
    std::size_t states = 10;
    std::size_t actions = 3;
    std::size_t branching = 2;
    std::uint64_t seed = 0;
    double gamma = 0.9;
    /// Draw one cost per (s, a) shared by every next state.
    bool state_action_costs = false;
};

/**
Random Garnet MDP. Each row picks `branching` distinct next states uniformly
without replacement and splits the mass at sorted uniform cut points. Costs
are U[0,1], the initial distribution is uniform.
*/
Instance garnet_generate(const GarnetConfig& cfg);

struct InventoryConfig {
    std::size_t states = 8;  ///< stock levels 0..S-1
    std::size_t actions = 3; ///< order quantities 0..A-1
    double gamma = 0.95;
    std::size_t demand_max = 3;
    /// Weights over demand 0..demand_max; empty means uniform.
    std::vector<double> demand_weights;
    std::uint64_t seed = 0;
};

/// Single-product inventory: s' = clamp(s + a - D, 0, S-1), costs U[0,1], radial features.
Instance inventory_generate(const InventoryConfig& cfg);

/// phi_i(s) = exp(-(s - c_i)^2 / (2 sigma_i^2)) with states at integer positions.
FeatureMap radial_features(std::size_t states, const std::vector<double>& centers,
                           const std::vector<double>& sigmas);

/// Two features centred at S/4 and 3S/4 with width S/4.
FeatureMap default_radial_features(std::size_t states);

} // namespace drpg
