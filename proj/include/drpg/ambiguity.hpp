#pragma once

#include "drpg/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace drpg {

enum class AmbiguityKind {
    Singleton,      ///< {nominal}; recovers the ordinary MDP
    SaRectL1,       ///< ||p_sa - nominal_sa||_1 <= kappa_sa
    SaRectLinf,     ///< ||p_sa - nominal_sa||_inf <= kappa_sa
    SRectL1,        ///< sum_a ||p_sa - nominal_sa||_1 <= kappa_s
    SRectLinf,      ///< sum_a ||p_sa - nominal_sa||_inf <= kappa_s
    RContamination, ///< p_sa = (1-R) nominal_sa + R q, q in the simplex
};

std::string_view to_string(AmbiguityKind kind);
/// Inverse of to_string; throws InvalidInput on unknown names.
AmbiguityKind ambiguity_kind_from_string(std::string_view name);

bool is_sa_rectangular(AmbiguityKind kind);
bool is_s_rectangular(AmbiguityKind kind);

/**
Ambiguity set around a nominal kernel.

Budgets larger than the diameter of the set are clamped at construction (the
set is unchanged) and a warning is recorded.
*/
class AmbiguitySpec {
public:
    static AmbiguitySpec singleton(TransitionKernel nominal);
    /// budgets is S x A.
    static AmbiguitySpec sa_rect(AmbiguityKind kind, TransitionKernel nominal, Matrix budgets);
    static AmbiguitySpec sa_rect(AmbiguityKind kind, TransitionKernel nominal, double budget);
    /// budgets has length S.
    static AmbiguitySpec s_rect(AmbiguityKind kind, TransitionKernel nominal, Vector budgets);
    static AmbiguitySpec s_rect(AmbiguityKind kind, TransitionKernel nominal, double budget);
    static AmbiguitySpec r_contamination(TransitionKernel nominal, double r);

    AmbiguityKind kind() const noexcept { return kind_; }
    const TransitionKernel& nominal() const noexcept { return nominal_; }
    std::size_t states() const noexcept { return nominal_.states(); }
    std::size_t actions() const noexcept { return nominal_.actions(); }

    /// S x A for (s,a)-rectangular kinds, S x 1 for s-rectangular kinds, empty otherwise.
    const Matrix& budgets() const noexcept { return budgets_; }
    double sa_budget(std::size_t s, std::size_t a) const;
    double s_budget(std::size_t s) const;
    double contamination() const noexcept { return r_; }

    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    AmbiguitySpec(AmbiguityKind kind, TransitionKernel nominal)
        : kind_(kind), nominal_(std::move(nominal)) {}
    void clamp_budgets(double limit);

    AmbiguityKind kind_;
    TransitionKernel nominal_;
    Matrix budgets_;
    double r_ = 0.0;
    std::vector<std::string> warnings_;
};

/// True iff p satisfies every simplex and budget constraint within additive tol.
bool contains(const AmbiguitySpec& spec, const TransitionKernel& p, double tol);
bool contains(const AmbiguitySpec& spec, const Tensor3& p, double tol);

// -- Projections --------------------------------------------------------------

/// Euclidean projection onto the probability simplex (sort and threshold).
Vector project_simplex(const Vector& x);

/// Euclidean projection onto {y : ||y - center||_1 <= radius}.
Vector project_l1_ball(const Vector& x, const Vector& center, double radius);

/// Euclidean projection onto the box [lower, upper] (elementwise clamp).
Vector project_box(const Vector& x, const Vector& lower, const Vector& upper);

/**
Euclidean projection onto {y : sum_b ||y_b - center_b||_inf <= radius}, where
y_b are consecutive blocks of length block.
*/
Vector project_l1inf_ball(const Vector& x, const Vector& center, double radius, Eigen::Index block);

/**
Projection onto {y : every length-block row of y lies in the simplex,
sum_rows ||y_row - center_row||_1 <= radius}. Solved from the optimality
conditions y_i = max(0, center_i + soft(x_i - tau_row - center_i, mu)): exact
breakpoint search for each tau_row and bisection on the shared multiplier mu.
*/
Vector project_simplex_l1(const Vector& x, const Vector& center, double radius, Eigen::Index block);

/// Projection onto {y : lower <= y <= upper, sum y = 1}; needs sum lower <= 1 <= sum upper.
Vector project_simplex_box(const Vector& x, const Vector& lower, const Vector& upper);

inline constexpr double kDykstraTol = 1e-10;
inline constexpr std::size_t kDykstraMaxIter = 10'000;

/**
Euclidean projection of raw onto the ambiguity set, row-wise for
(s,a)-rectangular kinds and state-wise for s-rectangular kinds. L1 and box
kinds use the direct solvers above. SRectLinf combines the simplex and the
mixed-norm ball by Dykstra's alternating projections, stopped when successive
iterates differ by at most tol; it throws ConvergenceError after max_iter
sweeps.
*/
Tensor3 project_kernel(const AmbiguitySpec& spec, const Tensor3& raw, double tol = kDykstraTol,
                       std::size_t max_iter = kDykstraMaxIter);

// -- Worst-case responses ------------------------------------------------------

/// Inner maximization at one state: maximize sum_a pi_a p_a^T z_a over the state's set.
struct LinearObjective {
    std::size_t state = 0;
    Matrix z;      ///< A x S coefficients, z_a[s'] = c_sas' + gamma v_s' in Bellman use
    Vector pi_row; ///< action weights; only shapes the response for s-rectangular kinds
};

struct WorstCaseResponse {
    Matrix rows;          ///< A x S maximizing rows
    Vector action_values; ///< rows_a^T z_a
    double value = 0.0;   ///< sum_a pi_a action_values_a
};

WorstCaseResponse worst_case_linear(const AmbiguitySpec& spec, const LinearObjective& obj);

/// Single row: max p^T z s.t. p in simplex, ||p - nominal||_1 <= budget. Exact greedy.
Vector worst_row_l1(const Vector& z, const Vector& nominal, double budget);
/// Single row: max p^T z s.t. p in simplex, ||p - nominal||_inf <= budget. Water-filling.
Vector worst_row_linf(const Vector& z, const Vector& nominal, double budget);
/// s-rectangular L1: fractional knapsack over (action, donor) pairs. nominal is A x S.
Matrix worst_rows_s_l1(const Matrix& z, const Matrix& nominal, const Vector& pi_row, double budget);
/// s-rectangular L-infinity: epigraph LP solved with lp_solve_dense.
Matrix worst_rows_s_linf(const Matrix& z, const Matrix& nominal, const Vector& pi_row, double budget);

} // namespace drpg
