#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qdecomp/errors.hpp"
#include "qdecomp/lp_simplex.hpp"
#include "qdecomp/matrix.hpp"

namespace qdecomp {

/// Binary assignment; one byte per variable.
using Bits = std::vector<std::uint8_t>;

inline constexpr double kMilpTolerance = 1e-6;
inline constexpr std::size_t kMaxEnumeratedBinaries = 20;

/// Canonical mixed-binary program
///
///     min  c^T x + d^T y
///     s.t. A x + B y >= b       (complicating rows)
///          C x >= e             (easy set X over the reals)
///          y in {0,1}^{n_y}     (easy set Y)
///
/// All rows use the >= sense; an equality is stored as two opposed rows.
struct MilpProblem {
    Vector c;
    Vector d;
    Vector b;
    Matrix A;
    Matrix B;
    Matrix C;
    Vector e;
    /// Constraint rows defining Y beyond the hypercube. Always 0 here.
    std::size_t m_y = 0;

    std::size_t n_x() const { return c.size(); }
    std::size_t n_y() const { return d.size(); }
    std::size_t m() const { return b.size(); }
    std::size_t m_x() const { return e.size(); }

    /// Appends a complicating row a.x + b.y >= rhs.
    void add_coupling_row(std::span<const double> a_row, std::span<const double> b_row,
                          double rhs) {
        A.append_row(a_row);
        B.append_row(b_row);
        b.push_back(rhs);
    }

    /// Appends a complicating equality as two opposed >= rows.
    void add_coupling_equality(std::span<const double> a_row, std::span<const double> b_row,
                               double rhs) {
        add_coupling_row(a_row, b_row, rhs);
        Vector na(a_row.begin(), a_row.end());
        Vector nb(b_row.begin(), b_row.end());
        for (double& v : na) v = -v;
        for (double& v : nb) v = -v;
        add_coupling_row(na, nb, -rhs);
    }

    void add_easy_row(std::span<const double> c_row, double rhs) {
        C.append_row(c_row);
        e.push_back(rhs);
    }

    void add_easy_equality(std::span<const double> c_row, double rhs) {
        add_easy_row(c_row, rhs);
        Vector neg(c_row.begin(), c_row.end());
        for (double& v : neg) v = -v;
        add_easy_row(neg, -rhs);
    }
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::kOptimal: return "optimal";
        case SolveStatus::kInfeasible: return "infeasible";
        case SolveStatus::kUnbounded: return "unbounded";
    }
    return "?";
}

struct MilpSolution {
    Vector x;
    Bits y;
    double objective = 0.0;
    SolveStatus status = SolveStatus::kInfeasible;
};

namespace detail {

inline void check_dims(bool ok, const char* field, const std::string& what) {
    if (!ok) throw Error(ErrorCode::kDimensionMismatch, std::string(field) + ": " + what);
}

inline void check_finite(std::span<const double> v, const char* field) {
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(ErrorCode::kNonFiniteEntry, field);
    }
}

}  // namespace detail

/// Throws DimensionMismatch or NonFiniteEntry naming the offending field.
inline void validate(const MilpProblem& p) {
    const std::size_t nx = p.n_x(), ny = p.n_y(), m = p.m();
    detail::check_dims(m >= 1, "b", "at least one complicating row is required");
    detail::check_dims(p.A.rows() == m, "A", "expected " + std::to_string(m) + " rows");
    detail::check_dims(p.A.cols() == nx || (nx == 0 && p.A.cols() == 0), "A",
                       "expected " + std::to_string(nx) + " columns");
    detail::check_dims(p.B.rows() == m, "B", "expected " + std::to_string(m) + " rows");
    detail::check_dims(p.B.cols() == ny || (ny == 0 && p.B.cols() == 0), "B",
                       "expected " + std::to_string(ny) + " columns");
    detail::check_dims(p.C.rows() == p.m_x(), "C",
                       "expected " + std::to_string(p.m_x()) + " rows (length of e)");
    detail::check_dims(p.m_x() == 0 || p.C.cols() == nx, "C",
                       "expected " + std::to_string(nx) + " columns");
    detail::check_finite(p.c, "c");
    detail::check_finite(p.d, "d");
    detail::check_finite(p.b, "b");
    detail::check_finite(p.e, "e");
    if (!p.A.all_finite()) throw Error(ErrorCode::kNonFiniteEntry, "A");
    if (!p.B.all_finite()) throw Error(ErrorCode::kNonFiniteEntry, "B");
    if (!p.C.all_finite()) throw Error(ErrorCode::kNonFiniteEntry, "C");
}

/// LP over [x | y] with y relaxed to the unit box.
inline lp::LpProblem lp_relaxation(const MilpProblem& p) {
    validate(p);
    const std::size_t nx = p.n_x(), ny = p.n_y();
    lp::LpProblem out = lp::LpProblem::free_variables(nx + ny);
    for (std::size_t j = 0; j < nx; ++j) out.objective[j] = p.c[j];
    for (std::size_t j = 0; j < ny; ++j) {
        out.objective[nx + j] = p.d[j];
        out.lower[nx + j] = 0.0;
        out.upper[nx + j] = 1.0;
    }
    Vector row(nx + ny);
    for (std::size_t i = 0; i < p.m(); ++i) {
        for (std::size_t j = 0; j < nx; ++j) row[j] = p.A(i, j);
        for (std::size_t j = 0; j < ny; ++j) row[nx + j] = p.B(i, j);
        out.add_row(row, lp::Sense::kGreaterEqual, p.b[i]);
    }
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t i = 0; i < p.m_x(); ++i) {
        for (std::size_t j = 0; j < nx; ++j) row[j] = p.C(i, j);
        out.add_row(row, lp::Sense::kGreaterEqual, p.e[i]);
    }
    return out;
}

/// The residual LP in x for fixed y: min c^T x s.t. A x >= b - B y, C x >= e.
inline lp::LpProblem residual_lp(const MilpProblem& p, std::span<const std::uint8_t> y) {
    const std::size_t nx = p.n_x();
    lp::LpProblem out = lp::LpProblem::free_variables(nx);
    out.objective = p.c;
    Vector by(p.m(), 0.0);
    for (std::size_t i = 0; i < p.m(); ++i) {
        for (std::size_t j = 0; j < p.n_y(); ++j) by[i] += p.B(i, j) * y[j];
    }
    Vector row(nx);
    for (std::size_t i = 0; i < p.m(); ++i) {
        for (std::size_t j = 0; j < nx; ++j) row[j] = p.A(i, j);
        out.add_row(row, lp::Sense::kGreaterEqual, p.b[i] - by[i]);
    }
    for (std::size_t i = 0; i < p.m_x(); ++i) {
        for (std::size_t j = 0; j < nx; ++j) row[j] = p.C(i, j);
        out.add_row(row, lp::Sense::kGreaterEqual, p.e[i]);
    }
    return out;
}

/// Assignment number `mask` in lexicographic order (y[0] is the most significant bit).
inline Bits bits_from_index(std::uint64_t mask, std::size_t n) {
    Bits y(n, 0);
    for (std::size_t j = 0; j < n; ++j) y[j] = static_cast<std::uint8_t>((mask >> (n - 1 - j)) & 1u);
    return y;
}

inline double binary_dot(std::span<const double> coeffs, std::span<const std::uint8_t> y) {
    double s = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        if (y[j]) s += coeffs[j];
    }
    return s;
}

/// Exhaustive reference solver: every y in lexicographic order, residual LP in x.
/// The first assignment attaining the best objective wins.
inline MilpSolution brute_force_solve(const MilpProblem& p) {
    validate(p);
    const std::size_t ny = p.n_y();
    if (ny > kMaxEnumeratedBinaries) {
        throw Error(ErrorCode::kTooManyBinaries,
                    std::to_string(ny) + " binaries exceed the enumeration limit of " +
                            std::to_string(kMaxEnumeratedBinaries));
    }
    MilpSolution best;
    best.objective = lp::kInf;
    const std::uint64_t count = std::uint64_t{1} << ny;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        Bits y = bits_from_index(mask, ny);
        const lp::LpOutcome out = lp::solve(residual_lp(p, y));
        if (out.status == lp::LpStatus::kInfeasible) continue;
        if (out.status == lp::LpStatus::kUnbounded) {
            MilpSolution unbounded;
            unbounded.status = SolveStatus::kUnbounded;
            unbounded.y = std::move(y);
            unbounded.objective = -lp::kInf;
            return unbounded;
        }
        const double obj = out.objective + binary_dot(p.d, y);
        if (obj < best.objective - 1e-12) {
            best.objective = obj;
            best.x = out.primal;
            best.y = std::move(y);
            best.status = SolveStatus::kOptimal;
        }
    }
    if (best.status != SolveStatus::kOptimal) best.objective = lp::kInf;
    return best;
}

/// Checks A x + B y >= b - tol and C x >= e - tol.
inline bool is_feasible(const MilpProblem& p, std::span<const double> x,
                        std::span<const std::uint8_t> y, double tol = kMilpTolerance) {
    for (std::size_t i = 0; i < p.m(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p.n_x(); ++j) s += p.A(i, j) * x[j];
        for (std::size_t j = 0; j < p.n_y(); ++j) s += p.B(i, j) * y[j];
        if (s < p.b[i] - tol) return false;
    }
    for (std::size_t i = 0; i < p.m_x(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p.n_x(); ++j) s += p.C(i, j) * x[j];
        if (s < p.e[i] - tol) return false;
    }
    return true;
}

}  // namespace qdecomp
