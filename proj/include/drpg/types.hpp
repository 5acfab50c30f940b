#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace drpg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance on the row sums of stochastic objects.
inline constexpr double kStochasticTol = 1e-10;
/// Default absolute residual for internal evaluations.
inline constexpr double kDefaultTol = 1e-12;

/**
Dense S x A x S tensor stored state-major, action-minor, next-state last.
Holds both transition probabilities and costs.
*/
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t states, std::size_t actions, double fill = 0.0)
        : states_(states), actions_(actions), data_(states * actions * states, fill) {}

    std::size_t states() const noexcept { return states_; }
    std::size_t actions() const noexcept { return actions_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t s, std::size_t a, std::size_t s2) {
        return data_[offset(s, a) + s2];
    }
    double operator()(std::size_t s, std::size_t a, std::size_t s2) const {
        return data_[offset(s, a) + s2];
    }

    Eigen::Map<Vector> row(std::size_t s, std::size_t a) {
        return {data_.data() + offset(s, a), static_cast<Eigen::Index>(states_)};
    }
    Eigen::Map<const Vector> row(std::size_t s, std::size_t a) const {
        return {data_.data() + offset(s, a), static_cast<Eigen::Index>(states_)};
    }

    /// All A rows of state s as a contiguous A*S block.
    Eigen::Map<Vector> state_block(std::size_t s) {
        return {data_.data() + offset(s, 0), static_cast<Eigen::Index>(actions_ * states_)};
    }
    Eigen::Map<const Vector> state_block(std::size_t s) const {
        return {data_.data() + offset(s, 0), static_cast<Eigen::Index>(actions_ * states_)};
    }

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }
    Eigen::Map<const Vector> as_vector() const {
        return {data_.data(), static_cast<Eigen::Index>(data_.size())};
    }
    Eigen::Map<Vector> as_vector() {
        return {data_.data(), static_cast<Eigen::Index>(data_.size())};
    }

    bool operator==(const Tensor3&) const = default;

private:
    std::size_t offset(std::size_t s, std::size_t a) const noexcept {
        return (s * actions_ + a) * states_;
    }

    std::size_t states_ = 0;
    std::size_t actions_ = 0;
    std::vector<double> data_;
};

/// Row-stochastic S x A x S kernel p[s][a][s'].
class TransitionKernel {
public:
    TransitionKernel() = default;
    /// Validates row sums (within 1e-10) and nonnegativity.
    explicit TransitionKernel(Tensor3 probs);

    std::size_t states() const noexcept { return probs_.states(); }
    std::size_t actions() const noexcept { return probs_.actions(); }
    double operator()(std::size_t s, std::size_t a, std::size_t s2) const { return probs_(s, a, s2); }
    Eigen::Map<const Vector> row(std::size_t s, std::size_t a) const { return probs_.row(s, a); }
    const Tensor3& tensor() const noexcept { return probs_; }

    bool operator==(const TransitionKernel&) const = default;

private:
    Tensor3 probs_;
};

/// Row-stochastic S x A matrix pi[s][a].
class Policy {
public:
    Policy() = default;
    explicit Policy(Matrix probs);

    static Policy uniform(std::size_t states, std::size_t actions);
    /// One-hot policy; actions[s] is the chosen action in state s.
    static Policy deterministic(const std::vector<std::size_t>& actions, std::size_t num_actions);

    std::size_t states() const noexcept { return static_cast<std::size_t>(probs_.rows()); }
    std::size_t actions() const noexcept { return static_cast<std::size_t>(probs_.cols()); }
    double operator()(std::size_t s, std::size_t a) const { return probs_(s, a); }
    const Matrix& probs() const noexcept { return probs_; }

    bool operator==(const Policy& other) const { return probs_ == other.probs_; }

private:
    Matrix probs_;
};

/**
Finite discounted MDP without its transition kernel: the kernel is supplied
separately because the robust problem varies it.
*/
class TabularMdp {
public:
    TabularMdp() = default;
    /// Validates c in [0,1], gamma in (0,1), rho a distribution.
    TabularMdp(Tensor3 cost, double gamma, Vector rho);

    std::size_t states() const noexcept { return cost_.states(); }
    std::size_t actions() const noexcept { return cost_.actions(); }
    double gamma() const noexcept { return gamma_; }
    const Tensor3& cost() const noexcept { return cost_; }
    double cost(std::size_t s, std::size_t a, std::size_t s2) const { return cost_(s, a, s2); }
    const Vector& rho() const noexcept { return rho_; }

    /// Same costs and initial distribution, different discount.
    TabularMdp with_gamma(double gamma) const { return {cost_, gamma, rho_}; }

private:
    Tensor3 cost_;
    double gamma_ = 0.0;
    Vector rho_;
};

/// Throws InvalidInput unless the kernel shape matches the MDP.
void check_shapes(const TabularMdp& mdp, const TransitionKernel& p);
void check_shapes(const TabularMdp& mdp, const Policy& pi);

/// Applies the kernel invariants to a raw tensor; false when violated.
bool is_stochastic(const Tensor3& p, double tol = kStochasticTol);

} // namespace drpg
