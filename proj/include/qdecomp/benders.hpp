#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdecomp/annealer.hpp"
#include "qdecomp/cut.hpp"
#include "qdecomp/errors.hpp"
#include "qdecomp/lp_simplex.hpp"
#include "qdecomp/milp_model.hpp"
#include "qdecomp/qubo.hpp"

namespace qdecomp::benders {

enum class MasterMode { kExact, kQuboSa, kQuboExact };

inline const char* to_string(MasterMode m) {
    switch (m) {
        case MasterMode::kExact: return "exact";
        case MasterMode::kQuboSa: return "qubo_sa";
        case MasterMode::kQuboExact: return "qubo_exact";
    }
    return "?";
}

struct BendersConfig {
    /// Box on every dual multiplier of the subproblem.
    double alpha_bound = 5.0;
    double theta = 1.0;
    std::size_t max_steps = 15;
    qubo::FixedPointCode code{8, 0.1};
    double w_a = 0.1;
    double w_p = 0.01;
    MasterMode master_mode = MasterMode::kExact;
    /// Point cuts kept in the pool; 0 keeps all of them.
    std::size_t max_cut_pool = 5;
    /// eta = eta_shift + decoded bits in the QUBO master.
    double eta_shift = 0.0;
    double prune = 0.05;
    anneal::AnnealConfig anneal;
    /// Early exits used by the verifier: a certified lower bound above the first
    /// value, or an attained upper bound at most the second.
    std::optional<double> stop_lower_above;
    std::optional<double> stop_upper_at_most;

    void validate() const {
        if (!(alpha_bound > 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha_bound must be > 0");
        if (!(theta >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "theta must be >= 0");
        if (max_steps < 1) throw Error(ErrorCode::kInvalidArgument, "max_steps must be >= 1");
        if (!(code.weight > 0.0)) throw Error(ErrorCode::kInvalidArgument, "code weight must be > 0");
    }
};

struct SubproblemResult {
    Cut cut;
    /// q(y) for a point cut; the bounded dual objective for a ray cut.
    double objective = 0.0;
    bool bound_hit = false;
};

namespace detail {

inline double bound_tolerance() { return 1e-6; }

inline Cut scaled_ray(const MilpProblem& p, const Vector& farkas, double alpha_bound) {
    Vector alpha(farkas.begin(), farkas.begin() + static_cast<std::ptrdiff_t>(p.m()));
    Vector beta(farkas.begin() + static_cast<std::ptrdiff_t>(p.m()), farkas.end());
    for (double& v : alpha) v = std::max(v, 0.0);
    for (double& v : beta) v = std::max(v, 0.0);
    const double top = std::max(max_abs(alpha), max_abs(beta));
    if (top > 0.0) {
        for (double& v : alpha) v *= alpha_bound / top;
        for (double& v : beta) v *= alpha_bound / top;
    }
    return Cut::from_multipliers(p, std::move(alpha), std::move(beta), CutKind::kRay);
}

}  // namespace detail

/// Bounded dual of the residual LP at y:
///
///     max alpha (b - B y) + beta e   s.t.  alpha A + beta C = c,  0 <= alpha, beta <= bound.
///
/// When a multiplier sits on the bound, the primal residual LP decides the cut:
/// infeasible gives a Farkas ray cut, feasible gives a point cut from its exact duals.
inline SubproblemResult solve_subproblem(const MilpProblem& p, std::span<const std::uint8_t> y,
                                         double alpha_bound) {
    validate(p);
    if (y.size() != p.n_y()) throw Error(ErrorCode::kLengthMismatch, "y has wrong length");
    const std::size_t m = p.m(), mx = p.m_x(), nx = p.n_x();
    const lp::LpProblem primal = residual_lp(p, y);

    lp::LpProblem dual = lp::LpProblem::free_variables(m + mx);
    for (std::size_t i = 0; i < m + mx; ++i) {
        dual.objective[i] = -primal.rhs[i];
        dual.lower[i] = 0.0;
        dual.upper[i] = alpha_bound;
    }
    Vector row(m + mx);
    for (std::size_t j = 0; j < nx; ++j) {
        for (std::size_t i = 0; i < m + mx; ++i) row[i] = primal.rows(i, j);
        dual.add_row(row, lp::Sense::kEqual, p.c[j]);
    }
    const lp::LpOutcome bounded = lp::solve(dual);

    if (bounded.status == lp::LpStatus::kOptimal) {
        bool hit = false;
        for (double v : bounded.primal) hit = hit || v >= alpha_bound - detail::bound_tolerance();
        if (!hit) {
            Vector alpha(bounded.primal.begin(), bounded.primal.begin() + static_cast<std::ptrdiff_t>(m));
            Vector beta(bounded.primal.begin() + static_cast<std::ptrdiff_t>(m), bounded.primal.end());
            return {Cut::from_multipliers(p, std::move(alpha), std::move(beta), CutKind::kPoint),
                    -bounded.objective, false};
        }
    }

    const lp::LpOutcome direct = lp::solve(primal);
    if (direct.status == lp::LpStatus::kInfeasible) {
        Cut cut = detail::scaled_ray(p, direct.farkas, alpha_bound);
        const double obj = bounded.status == lp::LpStatus::kOptimal ? -bounded.objective
                                                                     : cut.value(y);
        return {std::move(cut), obj, true};
    }
    if (direct.status == lp::LpStatus::kOptimal) {
        Vector alpha(direct.dual.begin(), direct.dual.begin() + static_cast<std::ptrdiff_t>(m));
        Vector beta(direct.dual.begin() + static_cast<std::ptrdiff_t>(m), direct.dual.end());
        for (double& v : alpha) v = std::max(v, 0.0);
        for (double& v : beta) v = std::max(v, 0.0);
        return {Cut::from_multipliers(p, std::move(alpha), std::move(beta), CutKind::kPoint),
                direct.objective, bounded.status == lp::LpStatus::kOptimal};
    }
    throw Error(ErrorCode::kSubInfeasible,
                "no multipliers satisfy alpha A + beta C = c (the residual LP is unbounded)");
}

struct MasterResult {
    Bits y;
    /// max over point cuts at y; -inf when the pool holds only ray cuts.
    double eta = -lp::kInf;
    double objective = -lp::kInf;
    std::size_t qubits = 0;
    /// The sampled y violated a ray cut and was replaced by the exact master.
    bool repaired = false;
};

namespace detail {

inline double ray_tolerance(const Cut& cut) { return 1e-9 * std::max(1.0, std::abs(cut.constant)); }

inline bool satisfies_rays(std::span<const Cut> cuts, std::span<const std::uint8_t> y) {
    for (const auto& cut : cuts) {
        if (cut.kind == CutKind::kRay && cut.value(y) > ray_tolerance(cut)) return false;
    }
    return true;
}

inline double eta_at(std::span<const Cut> cuts, std::span<const std::uint8_t> y) {
    double eta = -lp::kInf;
    for (const auto& cut : cuts) {
        if (cut.kind == CutKind::kPoint) eta = std::max(eta, cut.value(y));
    }
    return eta;
}

inline MasterResult exact_master(std::span<const Cut> cuts, std::span<const double> d) {
    const std::size_t n = d.size();
    if (n > kMaxEnumeratedBinaries) {
        throw Error(ErrorCode::kTooManyBinaries, std::to_string(n) + " binaries exceed the limit of " +
                                                         std::to_string(kMaxEnumeratedBinaries));
    }
    MasterResult best;
    bool found = false;
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        Bits y = bits_from_index(mask, n);
        if (!satisfies_rays(cuts, y)) continue;
        const double eta = eta_at(cuts, y);
        const double obj = binary_dot(d, y) + eta;
        if (!found || obj < best.objective - 1e-12 * std::max(1.0, std::abs(obj))) {
            best.y = std::move(y);
            best.eta = eta;
            best.objective = obj;
            found = true;
        }
    }
    if (!found) throw Error(ErrorCode::kMasterInfeasible, "every y violates a ray cut");
    return best;
}

inline bool has_point_cut(std::span<const Cut> cuts) {
    return std::any_of(cuts.begin(), cuts.end(),
                       [](const Cut& c) { return c.kind == CutKind::kPoint; });
}

}  // namespace detail

/// Master over y given the cut pool: min d.y + eta(y) with every ray cut satisfied.
/// QUBO modes take only y from the sampler and recompute eta(y) from the cuts.
inline MasterResult solve_master(std::span<const Cut> cuts, std::span<const double> d,
                                 const BendersConfig& cfg) {
    const std::size_t qubits = qubo::qubit_count(qubo::Method::kBenders, d.size(), cfg.code.bits,
                                                 0, cuts.size());
    const bool any_point = detail::has_point_cut(cuts);
    if (cfg.master_mode == MasterMode::kExact) {
        if (!any_point) throw Error(ErrorCode::kNoPointCuts, "the master needs a point cut");
        MasterResult r = detail::exact_master(cuts, d);
        r.qubits = qubits;
        return r;
    }
    qubo::MasterQubo mq = any_point
            ? qubo::benders_master_qubo(cuts, d, cfg.code, cfg.w_a, cfg.w_p, cfg.eta_shift)
            : qubo::ray_phase_qubo(cuts, d, cfg.code, cfg.w_p);
    if (cfg.prune > 0.0) mq.qubo = qubo::prune(mq.qubo, cfg.prune);
    const anneal::SampleResult s = cfg.master_mode == MasterMode::kQuboSa
            ? anneal::sample_sa(mq.qubo, cfg.anneal)
            : anneal::solve_exact(mq.qubo);
    MasterResult r;
    r.y = mq.layout.y(s.best_assignment);
    if (!detail::satisfies_rays(cuts, r.y)) {
        r = detail::exact_master(cuts, d);
        r.repaired = true;
    } else {
        r.eta = detail::eta_at(cuts, r.y);
        r.objective = binary_dot(d, r.y) + r.eta;
    }
    r.qubits = qubits;
    return r;
}

enum class BendersStatus { kConverged, kStepLimit, kInfeasible, kStopped };

inline const char* to_string(BendersStatus s) {
    switch (s) {
        case BendersStatus::kConverged: return "converged";
        case BendersStatus::kStepLimit: return "step_limit";
        case BendersStatus::kInfeasible: return "infeasible";
        case BendersStatus::kStopped: return "stopped";
    }
    return "?";
}

struct BendersStep {
    std::size_t step = 0;
    double lower = -lp::kInf;
    double upper = lp::kInf;
    CutKind cut_kind = CutKind::kPoint;
    std::size_t qubits = 0;
};

struct BendersTrace {
    std::vector<BendersStep> steps;
    BendersStatus status = BendersStatus::kStepLimit;
    /// Valid lower bound on the MILP optimum (an exact master over the final pool).
    double lower = -lp::kInf;
    double upper = lp::kInf;
    Bits best_y;
    std::size_t max_qubits = 0;
    std::size_t cuts_generated = 0;
    std::size_t repairs = 0;
    /// Some eta(y) fell outside the range the fixed-point code can express.
    bool eta_range_warning = false;
};

namespace detail {

inline void add_to_pool(std::vector<Cut>& pool, Cut cut, std::size_t max_points) {
    pool.push_back(std::move(cut));
    if (max_points == 0) return;
    const auto points = static_cast<std::size_t>(std::count_if(
            pool.begin(), pool.end(), [](const Cut& c) { return c.kind == CutKind::kPoint; }));
    if (points <= max_points) return;
    auto oldest = std::find_if(pool.begin(), pool.end(),
                               [](const Cut& c) { return c.kind == CutKind::kPoint; });
    pool.erase(oldest);
}

inline double certified_lower(std::span<const Cut> pool, std::span<const double> d) {
    if (!has_point_cut(pool) || d.size() > kMaxEnumeratedBinaries) return -lp::kInf;
    return exact_master(pool, d).objective;
}

}  // namespace detail

/// Delayed constraint generation starting from y = 0: subproblem, cut, master,
/// until best_upper - lower <= theta or max_steps subproblems have been solved.
inline BendersTrace run(const MilpProblem& p, const BendersConfig& cfg) {
    validate(p);
    cfg.validate();
    const bool exact = cfg.master_mode == MasterMode::kExact;
    BendersTrace trace;
    std::vector<Cut> pool;
    Bits y(p.n_y(), 0);
    double lower = -lp::kInf;

    for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
        SubproblemResult sub = solve_subproblem(p, y, cfg.alpha_bound);
        const CutKind kind = sub.cut.kind;
        if (kind == CutKind::kPoint) {
            const double upper = binary_dot(p.d, y) + sub.objective;
            if (upper < trace.upper) {
                trace.upper = upper;
                trace.best_y = y;
            }
        }
        detail::add_to_pool(pool, std::move(sub.cut), cfg.max_cut_pool);
        ++trace.cuts_generated;

        MasterResult master;
        try {
            if (!detail::has_point_cut(pool) && exact) {
                master = detail::exact_master(pool, p.d);
                master.qubits = qubo::qubit_count(qubo::Method::kBenders, p.n_y(), cfg.code.bits,
                                                  0, pool.size());
            } else {
                master = solve_master(pool, p.d, cfg);
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::kMasterInfeasible) throw;
            trace.steps.push_back({step, lower, trace.upper, kind,
                                   qubo::qubit_count(qubo::Method::kBenders, p.n_y(),
                                                     cfg.code.bits, 0, pool.size())});
            trace.status = BendersStatus::kInfeasible;
            break;
        }
        if (master.repaired) ++trace.repairs;
        if (!exact && std::isfinite(master.eta) &&
            (master.eta > cfg.eta_shift + cfg.code.max_value() || master.eta < cfg.eta_shift)) {
            trace.eta_range_warning = true;
        }
        lower = std::isfinite(master.eta) ? master.objective : -lp::kInf;
        trace.steps.push_back({step, lower, trace.upper, kind, master.qubits});
        trace.max_qubits = std::max(trace.max_qubits, master.qubits);

        if (trace.upper - lower <= cfg.theta) {
            if (exact) {
                trace.status = BendersStatus::kConverged;
                break;
            }
            // The sampled master is not a certified bound; confirm with the exact one.
            const MasterResult check = detail::exact_master(pool, p.d);
            if (trace.upper - check.objective <= cfg.theta) {
                lower = check.objective;
                trace.status = BendersStatus::kConverged;
                break;
            }
            master = check;
            lower = check.objective;
        }
        if (cfg.stop_upper_at_most && trace.upper <= *cfg.stop_upper_at_most) {
            trace.status = BendersStatus::kStopped;
            break;
        }
        if (exact && cfg.stop_lower_above && lower > *cfg.stop_lower_above) {
            trace.status = BendersStatus::kStopped;
            break;
        }
        y = master.y;
    }

    if (trace.status == BendersStatus::kInfeasible) {
        trace.lower = lp::kInf;
    } else if (exact || trace.status == BendersStatus::kConverged) {
        trace.lower = lower;
    } else {
        trace.lower = detail::certified_lower(pool, p.d);
    }
    return trace;
}

}  // namespace qdecomp::benders
