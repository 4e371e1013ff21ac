#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdecomp/annealer.hpp"
#include "qdecomp/errors.hpp"
#include "qdecomp/lp_simplex.hpp"
#include "qdecomp/milp_model.hpp"
#include "qdecomp/qubo.hpp"

namespace qdecomp::dw {

enum class ColumnKind { kReal, kBinary };

/// An extreme point of X (real) or Y (binary) with its cost and coupling image.
/// A real column flagged `ray` is an extreme ray of X: its weight is free of the
/// convexity row.
struct Column {
    ColumnKind kind = ColumnKind::kReal;
    bool ray = false;
    Vector x;
    Bits y;
    double cost = 0.0;
    Vector coupling;

    static Column real(const MilpProblem& p, Vector x) {
        Column col;
        col.kind = ColumnKind::kReal;
        col.cost = dot(p.c, x);
        col.coupling = p.n_x() > 0 ? p.A.multiply(x) : Vector(p.m(), 0.0);
        col.x = std::move(x);
        return col;
    }

    static Column extreme_ray(const MilpProblem& p, Vector direction) {
        Column col = real(p, std::move(direction));
        col.ray = true;
        return col;
    }

    static Column binary(const MilpProblem& p, Bits y) {
        Column col;
        col.kind = ColumnKind::kBinary;
        col.cost = binary_dot(p.d, y);
        col.coupling.assign(p.m(), 0.0);
        for (std::size_t i = 0; i < p.m(); ++i) {
            for (std::size_t j = 0; j < p.n_y(); ++j) {
                if (y[j]) col.coupling[i] += p.B(i, j);
            }
        }
        col.y = std::move(y);
        return col;
    }
};

struct ColumnPool {
    std::vector<Column> real;
    std::vector<Column> binary;

    bool contains_real(std::span<const double> x, bool ray = false) const {
        return std::any_of(real.begin(), real.end(), [&](const Column& c) {
            if (c.ray != ray) return false;
            for (std::size_t j = 0; j < x.size(); ++j) {
                if (std::abs(c.x[j] - x[j]) > 1e-9) return false;
            }
            return true;
        });
    }
    bool contains_binary(std::span<const std::uint8_t> y) const {
        return std::any_of(binary.begin(), binary.end(), [&](const Column& c) {
            return std::equal(c.y.begin(), c.y.end(), y.begin(), y.end());
        });
    }
};

/// Multipliers of the restricted master: alpha on the coupling rows, xi and eta
/// on the real and binary convexity rows.
struct DwDuals {
    Vector alpha;
    double xi = 0.0;
    double eta = 0.0;
};

struct MasterSolution {
    double phi = 0.0;
    Vector lambda;
    Vector mu;
    DwDuals duals;
};

/// min sum cost_i lambda_i + sum cost_j mu_j
/// s.t. sum coupling_i lambda_i + sum coupling_j mu_j >= b,
///      sum lambda = 1 (extreme points only), sum mu = 1, lambda, mu >= 0.
inline MasterSolution solve_restricted_master(const ColumnPool& pool, std::span<const double> b) {
    const bool has_point = std::any_of(pool.real.begin(), pool.real.end(), [](const Column& c) { return !c.ray; });
    if (!has_point || pool.binary.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "both column pools need an extreme point");
    }
    const std::size_t nr = pool.real.size(), nb = pool.binary.size(), m = b.size();
    lp::LpProblem lp = lp::LpProblem::free_variables(nr + nb);
    for (std::size_t k = 0; k < nr; ++k) {
        lp.objective[k] = pool.real[k].cost;
        lp.lower[k] = 0.0;
    }
    for (std::size_t k = 0; k < nb; ++k) {
        lp.objective[nr + k] = pool.binary[k].cost;
        lp.lower[nr + k] = 0.0;
    }
    Vector row(nr + nb);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < nr; ++k) row[k] = pool.real[k].coupling[i];
        for (std::size_t k = 0; k < nb; ++k) row[nr + k] = pool.binary[k].coupling[i];
        lp.add_row(row, lp::Sense::kGreaterEqual, b[i]);
    }
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t k = 0; k < nr; ++k) row[k] = pool.real[k].ray ? 0.0 : 1.0;
    lp.add_row(row, lp::Sense::kEqual, 1.0);
    std::fill(row.begin(), row.end(), 0.0);
    std::fill(row.begin() + static_cast<std::ptrdiff_t>(nr), row.end(), 1.0);
    lp.add_row(row, lp::Sense::kEqual, 1.0);

    const lp::LpOutcome out = lp::solve(lp);
    if (out.status == lp::LpStatus::kUnbounded) {
        throw Error(ErrorCode::kPricingUnbounded, "restricted master is unbounded along a ray column");
    }
    if (out.status != lp::LpStatus::kOptimal) {
        throw Error(ErrorCode::kMasterInfeasible, "restricted master is " +
                                                          std::string(lp::to_string(out.status)));
    }
    MasterSolution sol;
    sol.phi = out.objective;
    sol.lambda.assign(out.primal.begin(), out.primal.begin() + static_cast<std::ptrdiff_t>(nr));
    sol.mu.assign(out.primal.begin() + static_cast<std::ptrdiff_t>(nr), out.primal.end());
    sol.duals.alpha.assign(out.dual.begin(), out.dual.begin() + static_cast<std::ptrdiff_t>(m));
    for (double& a : sol.duals.alpha) a = std::max(a, 0.0);
    sol.duals.xi = out.dual[m];
    sol.duals.eta = out.dual[m + 1];
    return sol;
}

struct RealPricing {
    /// -inf when unbounded.
    double r = 0.0;
    /// Minimizer, or the improving extreme ray when `ray` is set.
    Vector x;
    bool ray = false;
};

/// min (c - alpha A) x over X.
inline RealPricing real_pricing(const MilpProblem& p, std::span<const double> alpha) {
    if (alpha.size() != p.m()) throw Error(ErrorCode::kLengthMismatch, "alpha has wrong length");
    lp::LpProblem lp = lp::LpProblem::free_variables(p.n_x());
    const Vector aa = p.n_x() > 0 ? p.A.left_multiply(alpha) : Vector{};
    for (std::size_t j = 0; j < p.n_x(); ++j) lp.objective[j] = p.c[j] - aa[j];
    for (std::size_t i = 0; i < p.m_x(); ++i) lp.add_row(p.C.row(i), lp::Sense::kGreaterEqual, p.e[i]);
    const lp::LpOutcome out = lp::solve(lp);
    if (out.status == lp::LpStatus::kInfeasible) {
        throw Error(ErrorCode::kPricingInfeasible, "X is empty");
    }
    if (out.status == lp::LpStatus::kUnbounded) return {-lp::kInf, out.ray, true};
    return {out.objective, out.primal, false};
}

enum class Sampler { kSa, kExact };

inline const char* to_string(Sampler s) { return s == Sampler::kSa ? "sa" : "exact"; }

struct BinaryPricing {
    double p = 0.0;
    Bits y;
    /// min over the hypercube of (d - alpha B) y, in closed form.
    double p_bound = 0.0;
};

/// min (d - alpha B) y over {0,1}^{n_y} as a diagonal QUBO.
inline BinaryPricing binary_pricing(const MilpProblem& p, std::span<const double> alpha,
                                    Sampler sampler, const anneal::AnnealConfig& cfg) {
    if (alpha.size() != p.m()) throw Error(ErrorCode::kLengthMismatch, "alpha has wrong length");
    Vector linear = p.d;
    if (p.n_y() > 0) {
        const Vector ab = p.B.left_multiply(alpha);
        for (std::size_t j = 0; j < p.n_y(); ++j) linear[j] -= ab[j];
    }
    BinaryPricing out;
    for (double v : linear) out.p_bound += std::min(0.0, v);
    if (linear.empty()) return out;
    if (sampler == Sampler::kSa) {
        out.y = anneal::sample_sa(qubo::diag_qubo(linear), cfg).best_assignment;
    } else {
        // A diagonal QUBO separates; zero coefficients keep the smaller bit.
        out.y.assign(linear.size(), 0);
        for (std::size_t j = 0; j < linear.size(); ++j) out.y[j] = linear[j] < 0.0 ? 1 : 0;
    }
    out.p = binary_dot(linear, out.y);
    return out;
}

inline double improvement_tolerance(double reference) {
    return 1e-9 * std::max(1.0, std::abs(reference));
}

/// Adds the priced columns whose reduced cost beats the convexity duals.
inline std::size_t add_if_improving(ColumnPool& pool, const MilpProblem& p, const DwDuals& duals,
                                    const RealPricing& real, const BinaryPricing& bin) {
    std::size_t added = 0;
    if (real.ray) {
        const Column col = Column::extreme_ray(p, real.x);
        const double reduced = col.cost - dot(duals.alpha, col.coupling);
        if (reduced < -improvement_tolerance(0.0) && !pool.contains_real(real.x, true)) {
            pool.real.push_back(col);
            ++added;
        }
    } else if (real.r < duals.xi - improvement_tolerance(duals.xi) && !pool.contains_real(real.x)) {
        pool.real.push_back(Column::real(p, real.x));
        ++added;
    }
    if (bin.p < duals.eta - improvement_tolerance(duals.eta) && !pool.contains_binary(bin.y)) {
        pool.binary.push_back(Column::binary(p, bin.y));
        ++added;
    }
    return added;
}

/// One recorded dual point, stored in the sign convention alpha b - xi - eta.
struct BoundEntry {
    Vector alpha;
    double xi = 0.0;
    double eta = 0.0;
};

inline double dual_bound(std::span<const BoundEntry> history, std::span<const double> b) {
    if (history.empty()) throw Error(ErrorCode::kInvalidArgument, "dual bound needs an entry");
    double best = -lp::kInf;
    for (const auto& h : history) best = std::max(best, dot(h.alpha, b) - h.xi - h.eta);
    return best;
}

/// Lagrangian bound at alpha: alpha b + min_X (c - alpha A) x + min_Y (d - alpha B) y.
inline BoundEntry bound_entry(std::span<const double> alpha, const RealPricing& real,
                              const BinaryPricing& bin) {
    return {Vector(alpha.begin(), alpha.end()), -real.r, -bin.p_bound};
}

struct DwConfig {
    double theta = 1.0;
    std::size_t max_steps = 20;
    Sampler sampler = Sampler::kExact;
    anneal::AnnealConfig anneal;
    /// Qubits per fixed-point slack; with no rows in Y it does not enter the count.
    std::size_t n_s = 8;
    /// Evaluated after every master re-solve; returning true ends the run.
    std::function<bool(double phi)> stop;

    void validate() const {
        if (!(theta >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "theta must be >= 0");
        if (max_steps < 1) throw Error(ErrorCode::kInvalidArgument, "max_steps must be >= 1");
    }
};

struct DwStep {
    std::size_t step = 0;
    double phi = 0.0;
    double phi_hat = -lp::kInf;
    double r = 0.0;
    double xi = 0.0;
    double p = 0.0;
    double eta = 0.0;
    std::size_t cols_real = 0;
    std::size_t cols_bin = 0;
    std::size_t qubits = 0;
};

enum class DwStatus { kConverged, kNoImprovingColumn, kStepLimit, kStopped };

inline const char* to_string(DwStatus s) {
    switch (s) {
        case DwStatus::kConverged: return "converged";
        case DwStatus::kNoImprovingColumn: return "no_improving_column";
        case DwStatus::kStepLimit: return "step_limit";
        case DwStatus::kStopped: return "stopped";
    }
    return "?";
}

struct DwTrace {
    std::vector<DwStep> steps;
    DwStatus status = DwStatus::kStepLimit;
    double phi = lp::kInf;
    double phi_hat = -lp::kInf;
    MasterSolution master;
    ColumnPool pool;
    std::size_t max_qubits = 0;

    /// Point of X at the last master solve: the convex combination of the extreme
    /// points plus the weighted rays.
    Vector x_bar() const {
        Vector x(pool.real.front().x.size(), 0.0);
        for (std::size_t k = 0; k < pool.real.size(); ++k) {
            for (std::size_t j = 0; j < x.size(); ++j) x[j] += master.lambda[k] * pool.real[k].x[j];
        }
        return x;
    }
};

/// First y (lexicographic) whose residual set is non-empty, with a phase-1 point.
inline ColumnPool initial_columns(const MilpProblem& p) {
    validate(p);
    if (p.n_y() > kMaxEnumeratedBinaries) {
        throw Error(ErrorCode::kTooManyBinaries, "too many binaries to search for a start column");
    }
    const std::uint64_t count = std::uint64_t{1} << p.n_y();
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        Bits y = bits_from_index(mask, p.n_y());
        lp::LpProblem lp = residual_lp(p, y);
        std::fill(lp.objective.begin(), lp.objective.end(), 0.0);
        try {
            Vector x = lp::phase1_feasible_point(lp);
            ColumnPool pool;
            pool.real.push_back(Column::real(p, std::move(x)));
            pool.binary.push_back(Column::binary(p, std::move(y)));
            return pool;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::kInfeasible) throw;
        }
    }
    throw Error(ErrorCode::kInfeasible, "no binary assignment admits a feasible x");
}

/// Duals of the LP relaxation with the objective removed; the convexity duals are 0.
inline DwDuals relaxation_duals(const MilpProblem& p) {
    lp::LpProblem lp = lp_relaxation(p);
    std::fill(lp.objective.begin(), lp.objective.end(), 0.0);
    const lp::LpOutcome out = lp::solve(lp);
    DwDuals duals;
    duals.alpha.assign(p.m(), 0.0);
    if (out.status == lp::LpStatus::kOptimal) {
        for (std::size_t i = 0; i < p.m(); ++i) duals.alpha[i] = std::max(out.dual[i], 0.0);
    }
    return duals;
}

/// Column generation: price with the current duals, record the Lagrangian bound,
/// add improving columns, re-solve the restricted master.
inline DwTrace run(const MilpProblem& p, ColumnPool init, const DwConfig& cfg,
                   std::optional<DwDuals> initial_duals = std::nullopt) {
    validate(p);
    cfg.validate();
    DwTrace trace;
    trace.pool = std::move(init);
    trace.master = solve_restricted_master(trace.pool, p.b);
    trace.phi = trace.master.phi;
    DwDuals duals = initial_duals ? *initial_duals : trace.master.duals;
    bool master_duals = !initial_duals;
    if (duals.alpha.size() != p.m()) throw Error(ErrorCode::kLengthMismatch, "initial alpha length");
    const std::size_t qubits = qubo::qubit_count(qubo::Method::kDantzigWolfe, p.n_y(), cfg.n_s,
                                                 p.m_y, 0);
    std::vector<BoundEntry> history;

    for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
        const RealPricing real = real_pricing(p, duals.alpha);
        BinaryPricing bin = binary_pricing(p, duals.alpha, cfg.sampler, cfg.anneal);
        history.push_back(bound_entry(duals.alpha, real, bin));
        trace.phi_hat = dual_bound(history, p.b);
        const std::size_t added = add_if_improving(trace.pool, p, duals, real, bin);
        trace.master = solve_restricted_master(trace.pool, p.b);
        trace.phi = trace.master.phi;
        trace.steps.push_back({step, trace.phi, trace.phi_hat, real.r, duals.xi, bin.p, duals.eta,
                               trace.pool.real.size(), trace.pool.binary.size(), qubits});
        trace.max_qubits = qubits;
        duals = trace.master.duals;
        master_duals = true;

        if (cfg.stop && cfg.stop(trace.phi)) {
            trace.status = DwStatus::kStopped;
            return trace;
        }
        if (std::abs(trace.phi - trace.phi_hat) <= cfg.theta) {
            trace.status = DwStatus::kConverged;
            return trace;
        }
        if (added == 0 && master_duals) {
            trace.status = DwStatus::kNoImprovingColumn;
            return trace;
        }
    }
    trace.status = DwStatus::kStepLimit;
    return trace;
}

}  // namespace qdecomp::dw
