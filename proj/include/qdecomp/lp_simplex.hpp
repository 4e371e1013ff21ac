#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qdecomp/errors.hpp"
#include "qdecomp/matrix.hpp"

namespace qdecomp::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kPivotTolerance = 1e-9;
inline constexpr double kFeasibilityTolerance = 1e-6;
/// Non-improving pivots tolerated before switching to Bland's rule.
inline constexpr std::size_t kStallLimit = 1000;

enum class Sense { kGreaterEqual, kEqual };

/// min objective^T x  s.t.  rows x (>= | =) rhs,  lower <= x <= upper.
struct LpProblem {
    Vector objective;
    Matrix rows;
    Vector rhs;
    std::vector<Sense> senses;
    Vector lower;
    Vector upper;

    /// An LP over `n` unbounded variables with zero objective and no rows.
    static LpProblem free_variables(std::size_t n) {
        LpProblem lp;
        lp.objective.assign(n, 0.0);
        lp.rows = Matrix(0, n);
        lp.lower.assign(n, -kInf);
        lp.upper.assign(n, kInf);
        return lp;
    }

    std::size_t num_variables() const { return objective.size(); }
    std::size_t num_rows() const { return rhs.size(); }

    void add_row(std::span<const double> coefficients, Sense sense, double value) {
        rows.append_row(coefficients);
        senses.push_back(sense);
        rhs.push_back(value);
    }

    void validate() const {
        const std::size_t n = num_variables();
        if (rows.rows() != rhs.size() || senses.size() != rhs.size()) {
            throw Error(ErrorCode::kDimensionMismatch, "LP row count disagrees with rhs/senses");
        }
        if (rows.rows() > 0 && rows.cols() != n) {
            throw Error(ErrorCode::kDimensionMismatch, "LP rows have wrong column count");
        }
        if (lower.size() != n || upper.size() != n) {
            throw Error(ErrorCode::kDimensionMismatch, "LP bounds have wrong length");
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] ||
                lower[j] == kInf || upper[j] == -kInf) {
                throw Error(ErrorCode::kInvalidArgument,
                            "variable " + std::to_string(j) + " has inconsistent bounds");
            }
            if (!std::isfinite(objective[j])) {
                throw Error(ErrorCode::kNonFiniteEntry, "LP objective");
            }
        }
        if (!rows.all_finite()) throw Error(ErrorCode::kNonFiniteEntry, "LP rows");
        for (double b : rhs) {
            if (!std::isfinite(b)) throw Error(ErrorCode::kNonFiniteEntry, "LP rhs");
        }
    }
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::kOptimal: return "optimal";
        case LpStatus::kInfeasible: return "infeasible";
        case LpStatus::kUnbounded: return "unbounded";
    }
    return "?";
}

/// Result of one LP solve.
///
/// `dual` holds one multiplier per row: nonnegative on >= rows, free on = rows,
/// such that objective = dual . rhs + (bound terms of `reduced_costs`).
/// `ray` is a normalized improving direction (unbounded only). `farkas` holds
/// row multipliers y with y >= 0 on >= rows and
/// sup_{lower <= x <= upper} y^T rows x < y^T rhs (infeasible only).
struct LpOutcome {
    LpStatus status = LpStatus::kInfeasible;
    Vector primal;
    Vector dual;
    Vector reduced_costs;
    double objective = 0.0;
    Vector ray;
    Vector farkas;
    std::size_t iterations = 0;
};

/// Dual objective dual . rhs plus the contribution of active variable bounds.
inline double dual_objective(const LpProblem& lp, const LpOutcome& out) {
    double value = dot(out.dual, lp.rhs);
    for (std::size_t j = 0; j < lp.num_variables(); ++j) {
        const double rc = out.reduced_costs[j];
        if (std::abs(rc) <= kPivotTolerance) continue;
        const double bound = rc > 0.0 ? lp.lower[j] : lp.upper[j];
        if (!std::isfinite(bound)) return -kInf;
        value += rc * bound;
    }
    return value;
}

namespace detail {

enum class VarMap { kShift, kMirror, kSplit };

struct VarImage {
    VarMap map;
    std::size_t column;  // first standard-form column
    double offset;
};

/// Dense simplex tableau; the last row holds reduced costs and -objective,
/// the last column holds the basic values.
class Tableau {
 public:
    Tableau(std::size_t rows, std::size_t cols)
            : rows_(rows), cols_(cols), cells_((rows + 1) * (cols + 1), 0.0), basis_(rows, 0) {}

    double& operator()(std::size_t r, std::size_t c) { return cells_[r * (cols_ + 1) + c]; }
    double operator()(std::size_t r, std::size_t c) const { return cells_[r * (cols_ + 1) + c]; }

    double& rhs(std::size_t r) { return (*this)(r, cols_); }
    double rhs(std::size_t r) const { return (*this)(r, cols_); }
    double reduced_cost(std::size_t c) const { return (*this)(rows_, c); }
    double objective() const { return -(*this)(rows_, cols_); }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::vector<std::size_t>& basis() { return basis_; }
    const std::vector<std::size_t>& basis() const { return basis_; }

    void pivot(std::size_t pr, std::size_t pc) {
        const double p = (*this)(pr, pc);
        for (std::size_t c = 0; c <= cols_; ++c) (*this)(pr, c) /= p;
        for (std::size_t r = 0; r <= rows_; ++r) {
            if (r == pr) continue;
            const double f = (*this)(r, pc);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c <= cols_; ++c) (*this)(r, c) -= f * (*this)(pr, c);
            (*this)(r, pc) = 0.0;
        }
        basis_[pr] = pc;
    }

    /// Rebuilds the reduced-cost row for `cost` under the current basis.
    void set_objective(std::span<const double> cost) {
        for (std::size_t c = 0; c <= cols_; ++c) {
            double v = c < cols_ ? cost[c] : 0.0;
            for (std::size_t r = 0; r < rows_; ++r) v -= cost[basis_[r]] * (*this)(r, c);
            (*this)(rows_, c) = v;
        }
    }

 private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> cells_;
    std::vector<std::size_t> basis_;
};

enum class IterateResult { kOptimal, kUnbounded };

struct IterateState {
    std::size_t iterations = 0;
    std::size_t cap = 0;
    std::size_t unbounded_column = 0;
};

/// Primal simplex on the tableau; columns >= `first_blocked` never enter.
inline IterateResult iterate(Tableau& t, std::size_t first_blocked, IterateState& state) {
    std::size_t stall = 0;
    bool bland = false;
    double last_objective = t.objective();
    std::vector<char> is_basic(t.cols(), 0);
    for (std::size_t b : t.basis()) is_basic[b] = 1;

    while (true) {
        if (state.iterations >= state.cap) {
            throw Error(ErrorCode::kNumericalBreakdown,
                        "simplex exceeded " + std::to_string(state.cap) + " iterations");
        }
        std::size_t entering = t.cols();
        double best = -kPivotTolerance;
        for (std::size_t c = 0; c < first_blocked; ++c) {
            if (is_basic[c]) continue;
            const double d = t.reduced_cost(c);
            if (d < best) {
                entering = c;
                if (bland) break;
                best = d;
            }
        }
        if (entering == t.cols()) return IterateResult::kOptimal;

        std::size_t leaving = t.rows();
        double best_ratio = kInf;
        double best_pivot = 0.0;
        for (std::size_t r = 0; r < t.rows(); ++r) {
            const double a = t(r, entering);
            if (a <= kPivotTolerance) continue;
            const double ratio = std::max(t.rhs(r), 0.0) / a;
            bool take = false;
            if (ratio < best_ratio - 1e-12) {
                take = true;
            } else if (ratio <= best_ratio + 1e-12) {
                take = bland ? t.basis()[r] < t.basis()[leaving] : a > best_pivot;
            }
            if (take) {
                leaving = r;
                best_ratio = std::min(best_ratio, ratio);
                best_pivot = a;
            }
        }
        if (leaving == t.rows()) {
            state.unbounded_column = entering;
            return IterateResult::kUnbounded;
        }
        is_basic[t.basis()[leaving]] = 0;
        is_basic[entering] = 1;
        t.pivot(leaving, entering);
        ++state.iterations;

        const double obj = t.objective();
        if (obj < last_objective - 1e-12) {
            stall = 0;
            last_objective = obj;
        } else if (++stall > kStallLimit) {
            bland = true;
        }
    }
}

}  // namespace detail

/// Two-phase dense simplex returning primal, row duals, and unboundedness or
/// infeasibility certificates.
inline LpOutcome solve(const LpProblem& lp) {
    lp.validate();
    const std::size_t n = lp.num_variables();
    const std::size_t m = lp.num_rows();

    // Map each variable onto nonnegative standard-form columns.
    std::vector<detail::VarImage> images(n);
    std::size_t struct_cols = 0;
    std::vector<std::size_t> upper_rows;  // variables needing an explicit upper-bound row
    for (std::size_t j = 0; j < n; ++j) {
        const bool lo = std::isfinite(lp.lower[j]);
        const bool hi = std::isfinite(lp.upper[j]);
        if (lo) {
            images[j] = {detail::VarMap::kShift, struct_cols, lp.lower[j]};
            struct_cols += 1;
            if (hi) upper_rows.push_back(j);
        } else if (hi) {
            images[j] = {detail::VarMap::kMirror, struct_cols, lp.upper[j]};
            struct_cols += 1;
        } else {
            images[j] = {detail::VarMap::kSplit, struct_cols, 0.0};
            struct_cols += 2;
        }
    }

    const std::size_t total_rows = m + upper_rows.size();
    std::size_t surplus_cols = upper_rows.size();
    for (Sense s : lp.senses) surplus_cols += s == Sense::kGreaterEqual ? 1 : 0;
    const std::size_t first_artificial = struct_cols + surplus_cols;
    const std::size_t cols = first_artificial + total_rows;

    detail::Tableau t(total_rows, cols);
    std::vector<double> row_sign(total_rows, 1.0);
    std::size_t next_surplus = struct_cols;
    for (std::size_t i = 0; i < m; ++i) {
        double b = lp.rhs[i];
        for (std::size_t j = 0; j < n; ++j) {
            const double a = lp.rows(i, j);
            if (a == 0.0) continue;
            const auto& img = images[j];
            switch (img.map) {
                case detail::VarMap::kShift:
                    t(i, img.column) = a;
                    b -= a * img.offset;
                    break;
                case detail::VarMap::kMirror:
                    t(i, img.column) = -a;
                    b -= a * img.offset;
                    break;
                case detail::VarMap::kSplit:
                    t(i, img.column) = a;
                    t(i, img.column + 1) = -a;
                    break;
            }
        }
        if (lp.senses[i] == Sense::kGreaterEqual) t(i, next_surplus++) = -1.0;
        t.rhs(i) = b;
    }
    for (std::size_t k = 0; k < upper_rows.size(); ++k) {
        const std::size_t j = upper_rows[k];
        const std::size_t r = m + k;
        t(r, images[j].column) = -1.0;
        t(r, next_surplus++) = -1.0;
        t.rhs(r) = -(lp.upper[j] - lp.lower[j]);
    }
    for (std::size_t r = 0; r < total_rows; ++r) {
        if (t.rhs(r) < 0.0) {
            row_sign[r] = -1.0;
            for (std::size_t c = 0; c <= cols; ++c) t(r, c) = -t(r, c);
        }
        t(r, first_artificial + r) = 1.0;
        t.basis()[r] = first_artificial + r;
    }

    detail::IterateState state;
    state.cap = 50 * (total_rows + cols) + 50;

    LpOutcome out;

    // Phase 1: minimize the sum of artificials.
    std::vector<double> cost(cols, 0.0);
    for (std::size_t r = 0; r < total_rows; ++r) cost[first_artificial + r] = 1.0;
    t.set_objective(cost);
    detail::iterate(t, first_artificial, state);
    double scale = 1.0;
    for (double b : lp.rhs) scale = std::max(scale, std::abs(b));
    if (t.objective() > kFeasibilityTolerance * scale) {
        out.status = LpStatus::kInfeasible;
        out.iterations = state.iterations;
        out.farkas.assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double y = 1.0 - t.reduced_cost(first_artificial + i);
            out.farkas[i] = row_sign[i] * y;
            if (lp.senses[i] == Sense::kGreaterEqual) out.farkas[i] = std::max(out.farkas[i], 0.0);
        }
        return out;
    }
    // Drive remaining artificials out of the basis where possible.
    for (std::size_t r = 0; r < total_rows; ++r) {
        if (t.basis()[r] < first_artificial) continue;
        std::size_t best = cols;
        double best_mag = kPivotTolerance;
        for (std::size_t c = 0; c < first_artificial; ++c) {
            const double mag = std::abs(t(r, c));
            if (mag > best_mag) {
                best = c;
                best_mag = mag;
            }
        }
        if (best != cols) t.pivot(r, best);
    }

    // Phase 2.
    std::fill(cost.begin(), cost.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& img = images[j];
        const double c = lp.objective[j];
        switch (img.map) {
            case detail::VarMap::kShift:
                cost[img.column] = c;
                break;
            case detail::VarMap::kMirror:
                cost[img.column] = -c;
                break;
            case detail::VarMap::kSplit:
                cost[img.column] = c;
                cost[img.column + 1] = -c;
                break;
        }
    }
    t.set_objective(cost);
    const auto result = detail::iterate(t, first_artificial, state);
    out.iterations = state.iterations;

    std::vector<double> values(cols, 0.0);
    for (std::size_t r = 0; r < total_rows; ++r) values[t.basis()[r]] = t.rhs(r);
    auto to_original = [&](const std::vector<double>& std_values, bool with_offset) {
        Vector x(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& img = images[j];
            const double off = with_offset ? img.offset : 0.0;
            switch (img.map) {
                case detail::VarMap::kShift: x[j] = off + std_values[img.column]; break;
                case detail::VarMap::kMirror: x[j] = off - std_values[img.column]; break;
                case detail::VarMap::kSplit:
                    x[j] = std_values[img.column] - std_values[img.column + 1];
                    break;
            }
        }
        return x;
    };

    if (result == detail::IterateResult::kUnbounded) {
        const std::size_t e = state.unbounded_column;
        std::vector<double> direction(cols, 0.0);
        direction[e] = 1.0;
        for (std::size_t r = 0; r < total_rows; ++r) direction[t.basis()[r]] = -t(r, e);
        Vector ray = to_original(direction, false);
        const double norm = max_abs(ray);
        if (norm <= kPivotTolerance) {
            throw Error(ErrorCode::kNumericalBreakdown, "degenerate unbounded direction");
        }
        for (double& v : ray) v /= norm;
        // Only report unboundedness with a verified improving ray.
        const Vector activity = lp.rows.multiply(ray);
        for (std::size_t i = 0; i < m; ++i) {
            const bool ok = lp.senses[i] == Sense::kEqual ? std::abs(activity[i]) <= 1e-7
                                                          : activity[i] >= -1e-7;
            if (!ok) throw Error(ErrorCode::kNumericalBreakdown, "unbounded ray fails row check");
        }
        for (std::size_t j = 0; j < n; ++j) {
            if ((std::isfinite(lp.lower[j]) && ray[j] < -1e-7) ||
                (std::isfinite(lp.upper[j]) && ray[j] > 1e-7)) {
                throw Error(ErrorCode::kNumericalBreakdown, "unbounded ray fails bound check");
            }
        }
        if (dot(lp.objective, ray) > -kPivotTolerance) {
            throw Error(ErrorCode::kNumericalBreakdown, "unbounded ray is not improving");
        }
        out.status = LpStatus::kUnbounded;
        out.ray = std::move(ray);
        return out;
    }

    out.status = LpStatus::kOptimal;
    out.primal = to_original(values, true);
    out.objective = dot(lp.objective, out.primal);
    out.dual.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        // Artificial columns carry zero phase-2 cost, so their reduced cost is -y_i.
        out.dual[i] = -row_sign[i] * t.reduced_cost(first_artificial + i);
        if (lp.senses[i] == Sense::kGreaterEqual && out.dual[i] < 0.0 &&
            out.dual[i] > -kPivotTolerance) {
            out.dual[i] = 0.0;
        }
    }
    out.reduced_costs = lp.objective;
    const Vector used = lp.rows.left_multiply(out.dual);
    for (std::size_t j = 0; j < n && m > 0; ++j) out.reduced_costs[j] -= used[j];
    return out;
}

/// Any point satisfying the constraints of `lp`, ignoring its objective.
inline Vector phase1_feasible_point(const LpProblem& lp) {
    LpProblem feasibility = lp;
    std::fill(feasibility.objective.begin(), feasibility.objective.end(), 0.0);
    const LpOutcome out = solve(feasibility);
    if (out.status != LpStatus::kOptimal) {
        throw Error(ErrorCode::kInfeasible, "constraint set is empty");
    }
    return out.primal;
}

}  // namespace qdecomp::lp
