#include "drpg/ambiguity.hpp"

#include "drpg/errors.hpp"
#include "drpg/lp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace drpg {

std::string_view to_string(AmbiguityKind kind) {
    switch (kind) {
    case AmbiguityKind::Singleton: return "singleton";
    case AmbiguityKind::SaRectL1: return "sa_rect_l1";
    case AmbiguityKind::SaRectLinf: return "sa_rect_linf";
    case AmbiguityKind::SRectL1: return "s_rect_l1";
    case AmbiguityKind::SRectLinf: return "s_rect_linf";
    case AmbiguityKind::RContamination: return "r_contamination";
    }
    return "unknown";
}

AmbiguityKind ambiguity_kind_from_string(std::string_view name) {
    for (auto kind : {AmbiguityKind::Singleton, AmbiguityKind::SaRectL1, AmbiguityKind::SaRectLinf,
                      AmbiguityKind::SRectL1, AmbiguityKind::SRectLinf,
                      AmbiguityKind::RContamination}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw InvalidInput("unknown ambiguity kind '" + std::string(name) + "'");
}

bool is_sa_rectangular(AmbiguityKind kind) {
    return kind == AmbiguityKind::SaRectL1 || kind == AmbiguityKind::SaRectLinf;
}

bool is_s_rectangular(AmbiguityKind kind) {
    return kind == AmbiguityKind::SRectL1 || kind == AmbiguityKind::SRectLinf;
}

// -- AmbiguitySpec ---------------------------------------------------------------

AmbiguitySpec AmbiguitySpec::singleton(TransitionKernel nominal) {
    return {AmbiguityKind::Singleton, std::move(nominal)};
}

AmbiguitySpec AmbiguitySpec::sa_rect(AmbiguityKind kind, TransitionKernel nominal, Matrix budgets) {
    if (!is_sa_rectangular(kind)) {
        throw InvalidInput("sa_rect requires an (s,a)-rectangular kind");
    }
    if (budgets.rows() != static_cast<Eigen::Index>(nominal.states()) ||
        budgets.cols() != static_cast<Eigen::Index>(nominal.actions())) {
        throw InvalidInput("(s,a)-rectangular budgets must be S x A");
    }
    AmbiguitySpec spec(kind, std::move(nominal));
    spec.budgets_ = std::move(budgets);
    spec.clamp_budgets(kind == AmbiguityKind::SaRectL1 ? 2.0 : 1.0);
    return spec;
}

AmbiguitySpec AmbiguitySpec::sa_rect(AmbiguityKind kind, TransitionKernel nominal, double budget) {
    const auto S = static_cast<Eigen::Index>(nominal.states());
    const auto A = static_cast<Eigen::Index>(nominal.actions());
    return sa_rect(kind, std::move(nominal), Matrix::Constant(S, A, budget));
}

AmbiguitySpec AmbiguitySpec::s_rect(AmbiguityKind kind, TransitionKernel nominal, Vector budgets) {
    if (!is_s_rectangular(kind)) {
        throw InvalidInput("s_rect requires an s-rectangular kind");
    }
    if (budgets.size() != static_cast<Eigen::Index>(nominal.states())) {
        throw InvalidInput("s-rectangular budgets must have length S");
    }
    const double rows = static_cast<double>(nominal.actions());
    AmbiguitySpec spec(kind, std::move(nominal));
    spec.budgets_ = std::move(budgets);
    spec.clamp_budgets(kind == AmbiguityKind::SRectL1 ? 2.0 * rows : rows);
    return spec;
}

AmbiguitySpec AmbiguitySpec::s_rect(AmbiguityKind kind, TransitionKernel nominal, double budget) {
    const auto S = static_cast<Eigen::Index>(nominal.states());
    return s_rect(kind, std::move(nominal), Vector::Constant(S, budget));
}

AmbiguitySpec AmbiguitySpec::r_contamination(TransitionKernel nominal, double r) {
    if (!(r >= 0.0 && r <= 1.0)) {
        throw InvalidInput("contamination level must lie in [0,1]");
    }
    AmbiguitySpec spec(AmbiguityKind::RContamination, std::move(nominal));
    spec.r_ = r;
    return spec;
}

void AmbiguitySpec::clamp_budgets(double limit) {
    if (!budgets_.allFinite() || (budgets_.size() > 0 && budgets_.minCoeff() < 0.0)) {
        throw InvalidInput("ambiguity budgets must be finite and nonnegative");
    }
    if (budgets_.size() > 0 && budgets_.maxCoeff() > limit) {
        budgets_ = budgets_.cwiseMin(limit);
        warnings_.push_back("budgets above the set diameter " + std::to_string(limit) +
                            " were clamped");
    }
}

double AmbiguitySpec::sa_budget(std::size_t s, std::size_t a) const {
    if (!is_sa_rectangular(kind_)) {
        throw UnsupportedKind("per-(s,a) budgets exist only for (s,a)-rectangular sets");
    }
    return budgets_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
}

double AmbiguitySpec::s_budget(std::size_t s) const {
    if (!is_s_rectangular(kind_)) {
        throw UnsupportedKind("per-state budgets exist only for s-rectangular sets");
    }
    return budgets_(static_cast<Eigen::Index>(s), 0);
}

// -- Membership -----------------------------------------------------------------

bool contains(const AmbiguitySpec& spec, const TransitionKernel& p, double tol) {
    return contains(spec, p.tensor(), tol);
}

bool contains(const AmbiguitySpec& spec, const Tensor3& p, double tol) {
    if (p.states() != spec.states() || p.actions() != spec.actions()) {
        throw InvalidInput("kernel shape does not match the ambiguity set");
    }
    const Tensor3& nominal = spec.nominal().tensor();
    const std::size_t S = spec.states();
    const std::size_t A = spec.actions();
    for (std::size_t s = 0; s < S; ++s) {
        double state_distance = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            const auto row = p.row(s, a);
            if (row.minCoeff() < -tol || std::abs(row.sum() - 1.0) > tol) {
                return false;
            }
            const Vector diff = row - nominal.row(s, a);
            switch (spec.kind()) {
            case AmbiguityKind::Singleton:
                if (diff.lpNorm<Eigen::Infinity>() > tol) return false;
                break;
            case AmbiguityKind::SaRectL1:
                if (diff.lpNorm<1>() > spec.sa_budget(s, a) + tol) return false;
                break;
            case AmbiguityKind::SaRectLinf:
                if (diff.lpNorm<Eigen::Infinity>() > spec.sa_budget(s, a) + tol) return false;
                break;
            case AmbiguityKind::SRectL1:
                state_distance += diff.lpNorm<1>();
                break;
            case AmbiguityKind::SRectLinf:
                state_distance += diff.lpNorm<Eigen::Infinity>();
                break;
            case AmbiguityKind::RContamination: {
                const Vector residual = row - (1.0 - spec.contamination()) * nominal.row(s, a);
                if (residual.minCoeff() < -tol) return false;
                break;
            }
            }
        }
        if (is_s_rectangular(spec.kind()) && state_distance > spec.s_budget(s) + tol) {
            return false;
        }
    }
    return true;
}

// -- Projections ------------------------------------------------------------------

Vector project_simplex(const Vector& x) {
    const Eigen::Index n = x.size();
    if (n == 0) {
        throw InvalidInput("cannot project an empty vector onto the simplex");
    }
    if (!x.allFinite()) {
        throw InvalidInput("simplex projection requires finite entries");
    }
    std::vector<double> u(x.data(), x.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double threshold = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumulative += u[static_cast<std::size_t>(j)];
        const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - candidate > 0.0) {
            threshold = candidate;
        }
    }
    return (x.array() - threshold).cwiseMax(0.0).matrix();
}

namespace {

// Threshold t >= 0 with sum_i max(|u_i| - t, 0) = radius, for ||u||_1 > radius.
double l1_threshold(const Vector& u, double radius) {
    std::vector<double> mags(static_cast<std::size_t>(u.size()));
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        mags[static_cast<std::size_t>(i)] = std::abs(u(i));
    }
    std::sort(mags.begin(), mags.end(), std::greater<>());
    double cumulative = 0.0;
    double threshold = 0.0;
    for (std::size_t j = 0; j < mags.size(); ++j) {
        cumulative += mags[j];
        const double candidate = (cumulative - radius) / static_cast<double>(j + 1);
        if (mags[j] - candidate > 0.0) {
            threshold = candidate;
        }
    }
    return std::max(threshold, 0.0);
}

Vector soft_threshold(const Vector& u, double t) {
    return (u.array().sign() * (u.array().abs() - t).cwiseMax(0.0)).matrix();
}

} // namespace

Vector project_l1_ball(const Vector& x, const Vector& center, double radius) {
    if (x.size() != center.size()) {
        throw InvalidInput("L1 ball projection: dimension mismatch");
    }
    if (!(radius >= 0.0)) {
        throw InvalidArgument("L1 ball radius must be nonnegative");
    }
    const Vector u = x - center;
    if (u.lpNorm<1>() <= radius) {
        return x;
    }
    if (radius == 0.0) {
        return center;
    }
    return center + soft_threshold(u, l1_threshold(u, radius));
}

Vector project_box(const Vector& x, const Vector& lower, const Vector& upper) {
    return x.cwiseMax(lower).cwiseMin(upper);
}

Vector project_l1inf_ball(const Vector& x, const Vector& center, double radius, Eigen::Index block) {
    if (x.size() != center.size() || block <= 0 || x.size() % block != 0) {
        throw InvalidInput("mixed-norm ball projection: dimension mismatch");
    }
    if (!(radius >= 0.0)) {
        throw InvalidArgument("mixed-norm ball radius must be nonnegative");
    }
    const Eigen::Index blocks = x.size() / block;
    const Vector u = x - center;
    double norm = 0.0;
    double mu_hi = 0.0;
    for (Eigen::Index b = 0; b < blocks; ++b) {
        norm += u.segment(b * block, block).lpNorm<Eigen::Infinity>();
        mu_hi = std::max(mu_hi, u.segment(b * block, block).lpNorm<1>());
    }
    if (norm <= radius) {
        return x;
    }
    if (radius == 0.0) {
        return center;
    }
    // prox of mu*||.||_inf clips block b at level t_b(mu), where
    // sum_i max(|u_i| - t_b, 0) = mu. Bisect on mu until sum_b t_b = radius.
    auto clip_levels = [&](double mu, std::vector<double>& levels) {
        double total = 0.0;
        for (Eigen::Index b = 0; b < blocks; ++b) {
            const Vector seg = u.segment(b * block, block);
            const double t = seg.lpNorm<1>() <= mu ? 0.0 : l1_threshold(seg, mu);
            levels[static_cast<std::size_t>(b)] = t;
            total += t;
        }
        return total;
    };
    std::vector<double> levels(static_cast<std::size_t>(blocks));
    double lo = 0.0;
    double hi = mu_hi;
    for (int it = 0; it < 200 && hi - lo > 1e-17 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (clip_levels(mid, levels) > radius) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clip_levels(hi, levels);
    Vector y = center;
    for (Eigen::Index b = 0; b < blocks; ++b) {
        const double t = levels[static_cast<std::size_t>(b)];
        y.segment(b * block, block) +=
            u.segment(b * block, block).cwiseMin(t).cwiseMax(-t);
    }
    return y;
}

namespace {

// Root of f(tau) = target for nonincreasing piecewise-linear f with kinks in knots.
// The extreme knots must bracket the root.
template <class F>
double solve_piecewise(std::vector<double> knots, F&& f, double target) {
    std::sort(knots.begin(), knots.end());
    std::size_t lo = 0;
    std::size_t hi = knots.size() - 1;
    double f_lo = f(knots[lo]);
    double f_hi = f(knots[hi]);
    if (f_lo <= target) {
        return knots[lo];
    }
    if (f_hi >= target) {
        return knots[hi];
    }
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        const double f_mid = f(knots[mid]);
        if (f_mid >= target) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    return knots[lo] + (f_lo - target) / (f_lo - f_hi) * (knots[hi] - knots[lo]);
}

double soft(double u, double mu) {
    return u > mu ? u - mu : (u < -mu ? u + mu : 0.0);
}

} // namespace

Vector project_simplex_box(const Vector& x, const Vector& lower, const Vector& upper) {
    if (x.size() != lower.size() || x.size() != upper.size() || x.size() == 0) {
        throw InvalidInput("box-simplex projection: dimension mismatch");
    }
    if (!x.allFinite()) {
        throw InvalidInput("box-simplex projection requires finite entries");
    }
    if (lower.sum() > 1.0 + kStochasticTol || upper.sum() < 1.0 - kStochasticTol) {
        throw InvalidInput("box-simplex projection: empty feasible set");
    }
    std::vector<double> knots;
    knots.reserve(static_cast<std::size_t>(2 * x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        knots.push_back(x(i) - upper(i));
        knots.push_back(x(i) - lower(i));
    }
    auto clamped = [&](double tau) {
        return (x.array() - tau).cwiseMax(lower.array()).cwiseMin(upper.array());
    };
    const double tau = solve_piecewise(std::move(knots), [&](double t) { return clamped(t).sum(); }, 1.0);
    return clamped(tau).matrix();
}

Vector project_simplex_l1(const Vector& x, const Vector& center, double radius, Eigen::Index block) {
    if (x.size() != center.size() || block <= 0 || x.size() % block != 0) {
        throw InvalidInput("simplex-L1 projection: dimension mismatch");
    }
    if (!x.allFinite()) {
        throw InvalidInput("simplex-L1 projection requires finite entries");
    }
    if (!(radius >= 0.0)) {
        throw InvalidArgument("simplex-L1 projection: radius must be nonnegative");
    }
    const Eigen::Index rows = x.size() / block;
    const auto n = static_cast<double>(block);

    // y for a fixed multiplier mu on the distance constraint.
    auto solve_rows = [&](double mu, Vector& y) {
        double dist = 0.0;
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto xr = x.segment(r * block, block);
            const auto cr = center.segment(r * block, block);
            auto entry = [&](Eigen::Index i, double tau) {
                return std::max(0.0, cr(i) + soft(xr(i) - cr(i) - tau, mu));
            };
            auto total = [&](double tau) {
                double sum = 0.0;
                for (Eigen::Index i = 0; i < block; ++i) {
                    sum += entry(i, tau);
                }
                return sum;
            };
            std::vector<double> knots;
            knots.reserve(static_cast<std::size_t>(4 * block + 1));
            for (Eigen::Index i = 0; i < block; ++i) {
                knots.push_back(xr(i) - cr(i) - mu);
                knots.push_back(xr(i) - cr(i) + mu);
                knots.push_back(xr(i) - mu);
                knots.push_back(xr(i) + mu);
            }
            const double low = *std::min_element(knots.begin(), knots.end());
            knots.push_back(std::min(low, (xr.sum() - n * mu - 1.0) / n) - 1.0);
            const double tau = solve_piecewise(std::move(knots), total, 1.0);
            for (Eigen::Index i = 0; i < block; ++i) {
                y(r * block + i) = entry(i, tau);
                dist += std::abs(y(r * block + i) - cr(i));
            }
        }
        return dist;
    };

    Vector y(x.size());
    if (solve_rows(0.0, y) <= radius) {
        return y;
    }
    if (radius == 0.0) {
        return center;
    }
    // distance(mu) is nonincreasing and piecewise linear: Illinois regula falsi
    double lo = 0.0;
    double hi = (x - center).lpNorm<Eigen::Infinity>() + 1.0;
    double f_lo = solve_rows(lo, y) - radius;
    double f_hi = solve_rows(hi, y) - radius;
    int side = 0;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi && f_hi < -1e-15; ++it) {
        double mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if (!(mid > lo && mid < hi)) {
            mid = 0.5 * (lo + hi);
        }
        const double f_mid = solve_rows(mid, y) - radius;
        if (f_mid > 0.0) {
            lo = mid;
            f_lo = f_mid;
            if (side == 1) {
                f_hi /= 2.0;
            }
            side = 1;
        } else {
            hi = mid;
            f_hi = f_mid;
            if (side == -1) {
                f_lo /= 2.0;
            }
            side = -1;
        }
    }
    solve_rows(hi, y);
    return y;
}

namespace {

Vector project_simplex_blocks(const Vector& x, Eigen::Index block) {
    Vector y(x.size());
    for (Eigen::Index b = 0; b < x.size() / block; ++b) {
        y.segment(b * block, block) = project_simplex(x.segment(b * block, block));
    }
    return y;
}

// Dykstra between the product of simplices and a convex ball; returns the simplex iterate.
template <class BallProjection>
Vector dykstra(const Vector& x0, Eigen::Index block, BallProjection&& ball, double tol,
               std::size_t max_iter) {
    Vector y = x0;
    Vector p = Vector::Zero(x0.size());
    Vector q = Vector::Zero(x0.size());
    Vector a_prev = project_simplex_blocks(x0, block);
    double residual = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < max_iter; ++it) {
        const Vector b = ball(Vector(y + q));
        q = y + q - b;
        Vector a = project_simplex_blocks(b + p, block);
        p = b + p - a;
        residual = std::max((a - a_prev).lpNorm<Eigen::Infinity>(),
                            (a - b).lpNorm<Eigen::Infinity>());
        y = a;
        a_prev = std::move(a);
        if (residual <= tol) {
            return y;
        }
    }
    throw ConvergenceError("Dykstra projection did not converge", residual, max_iter,
                           std::vector<double>(y.data(), y.data() + y.size()));
}

} // namespace

Tensor3 project_kernel(const AmbiguitySpec& spec, const Tensor3& raw, double tol,
                       std::size_t max_iter) {
    if (raw.states() != spec.states() || raw.actions() != spec.actions()) {
        throw InvalidInput("kernel shape does not match the ambiguity set");
    }
    if (!raw.as_vector().allFinite()) {
        throw InvalidInput("kernel projection requires finite entries");
    }
    const Tensor3& nominal = spec.nominal().tensor();
    const std::size_t S = spec.states();
    const std::size_t A = spec.actions();
    const auto n = static_cast<Eigen::Index>(S);
    Tensor3 out(S, A);

    switch (spec.kind()) {
    case AmbiguityKind::Singleton:
        return nominal;
    case AmbiguityKind::RContamination: {
        // a + R * simplex, with a = (1 - R) nominal
        const double r = spec.contamination();
        if (r == 0.0) {
            return nominal;
        }
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                const Vector base = (1.0 - r) * nominal.row(s, a);
                out.row(s, a) = base + r * project_simplex((raw.row(s, a) - base) / r);
            }
        }
        return out;
    }
    case AmbiguityKind::SaRectL1:
    case AmbiguityKind::SaRectLinf:
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) {
                const Vector center = nominal.row(s, a);
                const double budget = spec.sa_budget(s, a);
                const Vector x = raw.row(s, a);
                if (budget == 0.0) {
                    out.row(s, a) = center;
                    continue;
                }
                if (spec.kind() == AmbiguityKind::SaRectL1) {
                    out.row(s, a) = project_simplex_l1(x, center, budget, n);
                } else {
                    const Vector lower = (center.array() - budget).cwiseMax(0.0).matrix();
                    const Vector upper = (center.array() + budget).cwiseMin(1.0).matrix();
                    out.row(s, a) = project_simplex_box(x, lower, upper);
                }
            }
        }
        return out;
    case AmbiguityKind::SRectL1:
    case AmbiguityKind::SRectLinf:
        for (std::size_t s = 0; s < S; ++s) {
            const Vector center = nominal.state_block(s);
            const double budget = spec.s_budget(s);
            const Vector x = raw.state_block(s);
            if (budget == 0.0) {
                out.state_block(s) = center;
                continue;
            }
            if (spec.kind() == AmbiguityKind::SRectL1) {
                out.state_block(s) = project_simplex_l1(x, center, budget, n);
            } else {
                out.state_block(s) = dykstra(
                    x, n,
                    [&](const Vector& v) { return project_l1inf_ball(v, center, budget, n); },
                    tol, max_iter);
            }
        }
        return out;
    }
    throw InternalError("unhandled ambiguity kind");
}

// -- Worst-case responses --------------------------------------------------------

namespace {

// Indices sorted by z ascending; ties by lowest index.
std::vector<Eigen::Index> ascending_order(const Vector& z) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(z.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto i, auto j) { return z(i) < z(j); });
    return idx;
}

Eigen::Index first_argmax(const Vector& z) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < z.size(); ++i) {
        if (z(i) > z(best)) {
            best = i;
        }
    }
    return best;
}

void check_row(const Vector& z, const Vector& nominal, double budget) {
    if (z.size() != nominal.size() || z.size() == 0) {
        throw InvalidInput("worst-case row: dimension mismatch");
    }
    if (!z.allFinite()) {
        throw InvalidInput("worst-case row: objective must be finite");
    }
    if (!(budget >= 0.0)) {
        throw InvalidArgument("worst-case row: budget must be nonnegative");
    }
}

} // namespace

Vector worst_row_l1(const Vector& z, const Vector& nominal, double budget) {
    check_row(z, nominal, budget);
    Vector out = nominal;
    const Eigen::Index top = first_argmax(z);
    double remaining = std::min(budget / 2.0, 1.0 - nominal(top));
    if (remaining <= 0.0) {
        return out;
    }
    out(top) += remaining;
    for (Eigen::Index i : ascending_order(z)) {
        if (i == top) {
            continue;
        }
        const double take = std::min(remaining, out(i));
        out(i) -= take;
        remaining -= take;
        if (remaining <= 0.0) {
            break;
        }
    }
    return out;
}

Vector worst_row_linf(const Vector& z, const Vector& nominal, double budget) {
    check_row(z, nominal, budget);
    const Vector lower = (nominal.array() - budget).cwiseMax(0.0).matrix();
    const Vector upper = (nominal.array() + budget).cwiseMin(1.0).matrix();
    Vector out = lower;
    double remaining = 1.0 - lower.sum();
    const auto order = ascending_order(-z);
    for (Eigen::Index i : order) {
        if (remaining <= 0.0) {
            break;
        }
        const double add = std::min(remaining, upper(i) - lower(i));
        out(i) += add;
        remaining -= add;
    }
    return out;
}

Matrix worst_rows_s_l1(const Matrix& z, const Matrix& nominal, const Vector& pi_row, double budget) {
    const Eigen::Index A = z.rows();
    const Eigen::Index S = z.cols();
    struct Donor {
        double rate;
        Eigen::Index action;
        Eigen::Index state;
    };
    std::vector<Donor> donors;
    std::vector<Eigen::Index> top(static_cast<std::size_t>(A));
    for (Eigen::Index a = 0; a < A; ++a) {
        const Vector za = z.row(a).transpose();
        top[static_cast<std::size_t>(a)] = first_argmax(za);
        const double zmax = za(top[static_cast<std::size_t>(a)]);
        for (Eigen::Index j = 0; j < S; ++j) {
            const double rate = pi_row(a) * (zmax - za(j)) / 2.0;
            if (j != top[static_cast<std::size_t>(a)] && rate > 0.0 && nominal(a, j) > 0.0) {
                donors.push_back({rate, a, j});
            }
        }
    }
    // descending rate; ties keep (action, state) order
    std::stable_sort(donors.begin(), donors.end(),
                     [](const Donor& x, const Donor& y) { return x.rate > y.rate; });
    Matrix out = nominal;
    double remaining = budget;
    for (const Donor& d : donors) {
        if (remaining <= 0.0) {
            break;
        }
        const double mass = std::min(out(d.action, d.state), remaining / 2.0);
        out(d.action, d.state) -= mass;
        out(d.action, top[static_cast<std::size_t>(d.action)]) += mass;
        remaining -= 2.0 * mass;
    }
    return out;
}

Matrix worst_rows_s_linf(const Matrix& z, const Matrix& nominal, const Vector& pi_row, double budget) {
    const Eigen::Index A = z.rows();
    const Eigen::Index S = z.cols();
    const Eigen::Index np = A * S;
    const Eigen::Index n = np + A;
    LpProblem lp;
    lp.c = Vector::Zero(n);
    for (Eigen::Index a = 0; a < A; ++a) {
        for (Eigen::Index j = 0; j < S; ++j) {
            lp.c(a * S + j) = -pi_row(a) * z(a, j);
        }
    }
    lp.a_eq = Matrix::Zero(A, n);
    lp.b_eq = Vector::Ones(A);
    for (Eigen::Index a = 0; a < A; ++a) {
        lp.a_eq.block(a, a * S, 1, S).setOnes();
    }
    lp.a_ub = Matrix::Zero(2 * np + 1, n);
    lp.b_ub = Vector::Zero(2 * np + 1);
    for (Eigen::Index a = 0; a < A; ++a) {
        for (Eigen::Index j = 0; j < S; ++j) {
            const Eigen::Index k = a * S + j;
            lp.a_ub(2 * k, k) = 1.0;
            lp.a_ub(2 * k, np + a) = -1.0;
            lp.b_ub(2 * k) = nominal(a, j);
            lp.a_ub(2 * k + 1, k) = -1.0;
            lp.a_ub(2 * k + 1, np + a) = -1.0;
            lp.b_ub(2 * k + 1) = -nominal(a, j);
        }
        lp.a_ub(2 * np, np + a) = 1.0;
    }
    lp.b_ub(2 * np) = budget;
    lp.bounds.assign(static_cast<std::size_t>(n), LpBounds{0.0, 1.0});
    for (Eigen::Index a = 0; a < A; ++a) {
        // actions without weight keep their nominal row
        lp.bounds[static_cast<std::size_t>(np + a)].upper = pi_row(a) > 0.0 ? budget : 0.0;
    }
    const LpSolution sol = lp_solve_dense(lp);
    Matrix out(A, S);
    for (Eigen::Index a = 0; a < A; ++a) {
        Vector row = sol.x.segment(a * S, S).cwiseMax(0.0);
        out.row(a) = (row / row.sum()).transpose();
    }
    return out;
}

WorstCaseResponse worst_case_linear(const AmbiguitySpec& spec, const LinearObjective& obj) {
    const auto S = static_cast<Eigen::Index>(spec.states());
    const auto A = static_cast<Eigen::Index>(spec.actions());
    if (obj.state >= spec.states() || obj.z.rows() != A || obj.z.cols() != S ||
        obj.pi_row.size() != A) {
        throw InvalidInput("linear objective shape does not match the ambiguity set");
    }
    if (!obj.z.allFinite() || !obj.pi_row.allFinite()) {
        throw InvalidInput("linear objective must be finite");
    }
    const std::size_t s = obj.state;
    Matrix nominal(A, S);
    for (Eigen::Index a = 0; a < A; ++a) {
        nominal.row(a) = spec.nominal().row(s, static_cast<std::size_t>(a)).transpose();
    }

    WorstCaseResponse out;
    switch (spec.kind()) {
    case AmbiguityKind::Singleton:
        out.rows = nominal;
        break;
    case AmbiguityKind::SaRectL1:
    case AmbiguityKind::SaRectLinf:
        out.rows.resize(A, S);
        for (Eigen::Index a = 0; a < A; ++a) {
            const Vector za = obj.z.row(a).transpose();
            const Vector na = nominal.row(a).transpose();
            const double budget = spec.sa_budget(s, static_cast<std::size_t>(a));
            out.rows.row(a) = (spec.kind() == AmbiguityKind::SaRectL1
                                   ? worst_row_l1(za, na, budget)
                                   : worst_row_linf(za, na, budget))
                                  .transpose();
        }
        break;
    case AmbiguityKind::SRectL1:
    case AmbiguityKind::SRectLinf:
        if (obj.pi_row.minCoeff() < 0.0 || std::abs(obj.pi_row.sum() - 1.0) > kStochasticTol) {
            throw InvalidInput("s-rectangular responses need a stochastic policy row");
        }
        out.rows = spec.kind() == AmbiguityKind::SRectL1
                       ? worst_rows_s_l1(obj.z, nominal, obj.pi_row, spec.s_budget(s))
                       : worst_rows_s_linf(obj.z, nominal, obj.pi_row, spec.s_budget(s));
        break;
    case AmbiguityKind::RContamination: {
        const double r = spec.contamination();
        out.rows = (1.0 - r) * nominal;
        for (Eigen::Index a = 0; a < A; ++a) {
            out.rows(a, first_argmax(obj.z.row(a).transpose())) += r;
        }
        break;
    }
    }
    out.action_values = out.rows.cwiseProduct(obj.z).rowwise().sum();
    out.value = obj.pi_row.dot(out.action_values);
    return out;
}

} // namespace drpg
