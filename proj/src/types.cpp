#include "drpg/types.hpp"

#include "drpg/errors.hpp"

#include <cmath>
#include <string>

namespace drpg {

namespace {

constexpr double kNegativeSlack = 1e-12;

std::string row_label(std::size_t s, std::size_t a) {
    return "(" + std::to_string(s) + "," + std::to_string(a) + ")";
}

} // namespace

bool is_stochastic(const Tensor3& p, double tol) {
    for (std::size_t s = 0; s < p.states(); ++s) {
        for (std::size_t a = 0; a < p.actions(); ++a) {
            const auto row = p.row(s, a);
            if (!row.allFinite() || row.minCoeff() < -kNegativeSlack ||
                std::abs(row.sum() - 1.0) > tol) {
                return false;
            }
        }
    }
    return true;
}

TransitionKernel::TransitionKernel(Tensor3 probs) : probs_(std::move(probs)) {
    if (probs_.states() == 0 || probs_.actions() == 0) {
        throw InvalidInput("transition kernel must have at least one state and action");
    }
    for (std::size_t s = 0; s < probs_.states(); ++s) {
        for (std::size_t a = 0; a < probs_.actions(); ++a) {
            const auto row = probs_.row(s, a);
            if (!row.allFinite() || row.minCoeff() < -kNegativeSlack) {
                throw InvalidInput("transition row " + row_label(s, a) + " has negative entries");
            }
            if (std::abs(row.sum() - 1.0) > kStochasticTol) {
                throw InvalidInput("transition row " + row_label(s, a) + " sums to " +
                                   std::to_string(row.sum()));
            }
        }
    }
}

Policy::Policy(Matrix probs) : probs_(std::move(probs)) {
    if (probs_.rows() == 0 || probs_.cols() == 0) {
        throw InvalidInput("policy must have at least one state and action");
    }
    for (Eigen::Index s = 0; s < probs_.rows(); ++s) {
        const auto row = probs_.row(s);
        if (!row.allFinite() || row.minCoeff() < -kNegativeSlack) {
            throw InvalidInput("policy row " + std::to_string(s) + " has negative entries");
        }
        if (std::abs(row.sum() - 1.0) > kStochasticTol) {
            throw InvalidInput("policy row " + std::to_string(s) + " sums to " +
                               std::to_string(row.sum()));
        }
    }
}

Policy Policy::uniform(std::size_t states, std::size_t actions) {
    return Policy(Matrix::Constant(static_cast<Eigen::Index>(states),
                                   static_cast<Eigen::Index>(actions),
                                   1.0 / static_cast<double>(actions)));
}

Policy Policy::deterministic(const std::vector<std::size_t>& actions, std::size_t num_actions) {
    Matrix probs = Matrix::Zero(static_cast<Eigen::Index>(actions.size()),
                                static_cast<Eigen::Index>(num_actions));
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= num_actions) {
            throw InvalidInput("action index out of range in state " + std::to_string(s));
        }
        probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(actions[s])) = 1.0;
    }
    return Policy(std::move(probs));
}

TabularMdp::TabularMdp(Tensor3 cost, double gamma, Vector rho)
    : cost_(std::move(cost)), gamma_(gamma), rho_(std::move(rho)) {
    if (cost_.states() == 0 || cost_.actions() == 0) {
        throw InvalidInput("MDP must have at least one state and action");
    }
    if (!(gamma_ > 0.0 && gamma_ < 1.0)) {
        throw InvalidInput("discount must lie in (0,1), got " + std::to_string(gamma_));
    }
    for (double c : cost_.flat()) {
        if (!(c >= 0.0 && c <= 1.0)) {
            throw InvalidInput("costs must lie in [0,1], got " + std::to_string(c));
        }
    }
    if (static_cast<std::size_t>(rho_.size()) != cost_.states()) {
        throw InvalidInput("initial distribution has wrong length");
    }
    if (!rho_.allFinite() || rho_.minCoeff() < 0.0 || std::abs(rho_.sum() - 1.0) > 1e-12) {
        throw InvalidInput("initial distribution must be nonnegative and sum to 1");
    }
}

void check_shapes(const TabularMdp& mdp, const TransitionKernel& p) {
    if (p.states() != mdp.states() || p.actions() != mdp.actions()) {
        throw InvalidInput("transition kernel shape does not match the MDP");
    }
}

void check_shapes(const TabularMdp& mdp, const Policy& pi) {
    if (pi.states() != mdp.states() || pi.actions() != mdp.actions()) {
        throw InvalidInput("policy shape does not match the MDP");
    }
}

} // namespace drpg
