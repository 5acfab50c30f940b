#include "drpg/lp.hpp"

#include "drpg/errors.hpp"

#include <cmath>
#include <string>

namespace drpg {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-11;
constexpr double kFeasTol = 1e-9;
constexpr std::size_t kDegenerateRun = 50;
constexpr std::size_t kMaxPivots = 200'000;

// x_j = offset + sum coef * y[col]
struct VarMap {
    double offset = 0.0;
    std::vector<std::pair<Eigen::Index, double>> terms;
};

struct Tableau {
    Matrix t;                        // (rows + 1) x (cols + 1); last row = reduced costs
    std::vector<Eigen::Index> basis; // basic column per row
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;           // excludes rhs
    Eigen::Index first_artificial = 0;

    double& rhs(Eigen::Index i) { return t(i, cols); }

    void pivot(Eigen::Index r, Eigen::Index c) {
        t.row(r) /= t(r, c);
        for (Eigen::Index i = 0; i <= rows; ++i) {
            if (i != r && t(i, c) != 0.0) {
                t.row(i) -= t(i, c) * t.row(r);
            }
        }
        basis[static_cast<std::size_t>(r)] = c;
    }

    void price(const Vector& costs) {
        t.row(rows).setZero();
        t.row(rows).head(cols) = costs.transpose();
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double cb = costs(basis[static_cast<std::size_t>(i)]);
            if (cb != 0.0) {
                t.row(rows) -= cb * t.row(i);
            }
        }
    }
};

enum class Outcome { Optimal, Unbounded };

Outcome run_simplex(Tableau& tab, Eigen::Index allowed_cols, std::size_t& pivots) {
    std::size_t degenerate = 0;
    while (true) {
        if (pivots > kMaxPivots) {
            throw ConvergenceError("simplex pivot limit reached", 0.0, pivots);
        }
        const bool bland = degenerate >= kDegenerateRun;
        Eigen::Index enter = -1;
        double best = -kCostTol;
        for (Eigen::Index j = 0; j < allowed_cols; ++j) {
            const double rc = tab.t(tab.rows, j);
            if (rc < best) {
                enter = j;
                if (bland) {
                    break;
                }
                best = rc;
            }
        }
        if (enter < 0) {
            return Outcome::Optimal;
        }
        Eigen::Index leave = -1;
        double ratio = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < tab.rows; ++i) {
            const double a = tab.t(i, enter);
            if (a > kPivotTol) {
                const double r = tab.rhs(i) / a;
                if (r < ratio - 1e-14 ||
                    (std::abs(r - ratio) <= 1e-14 && leave >= 0 &&
                     tab.basis[static_cast<std::size_t>(i)] <
                         tab.basis[static_cast<std::size_t>(leave)])) {
                    ratio = r;
                    leave = i;
                }
            }
        }
        if (leave < 0) {
            return Outcome::Unbounded;
        }
        degenerate = ratio <= 1e-14 ? degenerate + 1 : 0;
        tab.pivot(leave, enter);
        ++pivots;
    }
}

} // namespace

LpSolution lp_solve_dense(const LpProblem& problem) {
    const Eigen::Index n = problem.c.size();
    const bool has_eq = problem.a_eq.size() > 0;
    const bool has_ub = problem.a_ub.size() > 0;
    if (has_eq && (problem.a_eq.cols() != n || problem.a_eq.rows() != problem.b_eq.size())) {
        throw InvalidInput("equality constraints have inconsistent dimensions");
    }
    if (has_ub && (problem.a_ub.cols() != n || problem.a_ub.rows() != problem.b_ub.size())) {
        throw InvalidInput("inequality constraints have inconsistent dimensions");
    }
    if (!problem.bounds.empty() && static_cast<Eigen::Index>(problem.bounds.size()) != n) {
        throw InvalidInput("bounds must be empty or one per variable");
    }

    // Map every original variable onto nonnegative columns.
    std::vector<VarMap> vars(static_cast<std::size_t>(n));
    Eigen::Index ny = 0;
    std::vector<std::pair<Eigen::Index, double>> bound_rows; // y_col <= value
    for (Eigen::Index j = 0; j < n; ++j) {
        const LpBounds b = problem.bounds.empty() ? LpBounds{} : problem.bounds[static_cast<std::size_t>(j)];
        if (b.lower > b.upper) {
            throw LpInfeasible("variable " + std::to_string(j) + " has empty bounds");
        }
        auto& map = vars[static_cast<std::size_t>(j)];
        if (std::isfinite(b.lower)) {
            map.offset = b.lower;
            map.terms.emplace_back(ny, 1.0);
            if (std::isfinite(b.upper)) {
                bound_rows.emplace_back(ny, b.upper - b.lower);
            }
            ++ny;
        } else if (std::isfinite(b.upper)) {
            map.offset = b.upper;
            map.terms.emplace_back(ny++, -1.0);
        } else {
            map.terms.emplace_back(ny++, 1.0);
            map.terms.emplace_back(ny++, -1.0);
        }
    }

    const Eigen::Index m_eq = has_eq ? problem.a_eq.rows() : 0;
    const Eigen::Index m_ub = (has_ub ? problem.a_ub.rows() : 0) +
                              static_cast<Eigen::Index>(bound_rows.size());
    const Eigen::Index m = m_eq + m_ub;

    // Rows in y-space; inequality rows get a slack column.
    Matrix rows_y = Matrix::Zero(m, ny);
    Vector rhs_y = Vector::Zero(m);
    auto fill_row = [&](Eigen::Index r, const auto& coeffs, double b) {
        double shift = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double a = coeffs(j);
            if (a == 0.0) {
                continue;
            }
            const auto& map = vars[static_cast<std::size_t>(j)];
            shift += a * map.offset;
            for (const auto& [col, coef] : map.terms) {
                rows_y(r, col) += a * coef;
            }
        }
        rhs_y(r) = b - shift;
    };
    for (Eigen::Index i = 0; i < m_eq; ++i) {
        fill_row(i, problem.a_eq.row(i), problem.b_eq(i));
    }
    Eigen::Index r = m_eq;
    if (has_ub) {
        for (Eigen::Index i = 0; i < problem.a_ub.rows(); ++i, ++r) {
            fill_row(r, problem.a_ub.row(i), problem.b_ub(i));
        }
    }
    for (const auto& [col, value] : bound_rows) {
        rows_y(r, col) = 1.0;
        rhs_y(r) = value;
        ++r;
    }

    Tableau tab;
    tab.rows = m;
    const Eigen::Index slack0 = ny;
    tab.first_artificial = ny + m_ub;
    tab.cols = tab.first_artificial + m;
    tab.t = Matrix::Zero(m + 1, tab.cols + 1);
    tab.basis.resize(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        tab.t.row(i).head(ny) = rows_y.row(i);
        if (i >= m_eq) {
            tab.t(i, slack0 + (i - m_eq)) = 1.0;
        }
        tab.rhs(i) = rhs_y(i);
        if (tab.rhs(i) < 0.0) {
            tab.t.row(i) *= -1.0;
        }
        tab.t(i, tab.first_artificial + i) = 1.0;
        tab.basis[static_cast<std::size_t>(i)] = tab.first_artificial + i;
    }

    LpSolution sol;
    // Phase 1: minimize the sum of artificials.
    Vector phase1 = Vector::Zero(tab.cols);
    phase1.tail(m).setOnes();
    tab.price(phase1);
    if (run_simplex(tab, tab.first_artificial, sol.pivots) == Outcome::Unbounded) {
        throw InternalError("phase-one simplex cannot be unbounded");
    }
    const double infeasibility = -tab.t(m, tab.cols);
    const double scale = 1.0 + rhs_y.cwiseAbs().maxCoeff();
    if (infeasibility > kFeasTol * scale) {
        throw LpInfeasible("linear program is infeasible (phase-one residual " +
                           std::to_string(infeasibility) + ")");
    }
    // Drive artificials out of the basis; rows with no usable pivot are redundant.
    for (Eigen::Index i = 0; i < m; ++i) {
        if (tab.basis[static_cast<std::size_t>(i)] < tab.first_artificial) {
            continue;
        }
        for (Eigen::Index j = 0; j < tab.first_artificial; ++j) {
            if (std::abs(tab.t(i, j)) > 1e-9) {
                tab.pivot(i, j);
                ++sol.pivots;
                break;
            }
        }
    }

    // Phase 2 on the original objective.
    Vector phase2 = Vector::Zero(tab.cols);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (const auto& [col, coef] : vars[static_cast<std::size_t>(j)].terms) {
            phase2(col) += problem.c(j) * coef;
        }
    }
    tab.price(phase2);
    if (run_simplex(tab, tab.first_artificial, sol.pivots) == Outcome::Unbounded) {
        throw LpUnbounded("linear program is unbounded");
    }

    Vector y = Vector::Zero(tab.cols);
    for (Eigen::Index i = 0; i < m; ++i) {
        y(tab.basis[static_cast<std::size_t>(i)]) = tab.rhs(i);
    }
    sol.x = Vector::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto& map = vars[static_cast<std::size_t>(j)];
        double x = map.offset;
        for (const auto& [col, coef] : map.terms) {
            x += coef * y(col);
        }
        sol.x(j) = x;
    }
    sol.objective = problem.c.dot(sol.x);
    return sol;
}

} // namespace drpg
