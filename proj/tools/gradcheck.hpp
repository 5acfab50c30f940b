#pragma once

#include "rmdp_file.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace drpg::cli {

struct GradcheckOptions {
    std::size_t trials = 20;
    double h = 1e-6;
    double tol = 1e-5;
    std::uint64_t seed = 0;
    /// Negative control: scale every analytic gradient by 1.01.
    bool corrupt = false;
};

struct FamilyReport {
    std::string family;
    std::size_t checks = 0;
    double max_rel_error = 0.0;
    std::string worst; ///< coordinate of the largest error
};

/**
Central finite differences of J against the policy, kernel and parametric
gradients along feasible directions: e_a - e_a' inside a policy row,
e_j - e_k between support states of a kernel row, and coordinate directions
in (theta, lambda). Relative error is |fd - analytic| / max(1, |analytic|).
*/
std::vector<FamilyReport> gradcheck(const RmdpFile& file, const GradcheckOptions& opts);

} // namespace drpg::cli
