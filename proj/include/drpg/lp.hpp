#pragma once

#include "drpg/types.hpp"

#include <limits>
#include <vector>

namespace drpg {

struct LpBounds {
    double lower = 0.0;
    double upper = std::numeric_limits<double>::infinity();
};

/**
minimize c^T x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lower <= x <= upper.

Empty matrices mean "no constraints of that type"; empty bounds mean x >= 0.
*/
struct LpProblem {
    Vector c;
    Matrix a_eq;
    Vector b_eq;
    Matrix a_ub;
    Vector b_ub;
    std::vector<LpBounds> bounds;
};

struct LpSolution {
    Vector x;
    double objective = 0.0;
    std::size_t pivots = 0;
};

/**
Two-phase dense tableau simplex. Dantzig pricing, switching to Bland's rule
after a run of degenerate pivots so the method cannot cycle.

Throws LpInfeasible or LpUnbounded.
*/
LpSolution lp_solve_dense(const LpProblem& problem);

} // namespace drpg
