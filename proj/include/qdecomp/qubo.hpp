#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qdecomp/cut.hpp"
#include "qdecomp/errors.hpp"
#include "qdecomp/matrix.hpp"
#include "qdecomp/milp_model.hpp"

namespace qdecomp::qubo {

/// Upper-triangular quadratic form: energy(q) = sum_{i<=j} Q_ij q_i q_j + offset.
class Qubo {
 public:
    struct Term {
        std::size_t i;
        std::size_t j;
        double value;
    };

    Qubo() = default;
    explicit Qubo(std::size_t n, double offset = 0.0) : n_(n), q_(n * n, 0.0), offset_(offset) {}

    std::size_t size() const noexcept { return n_; }
    double offset() const noexcept { return offset_; }
    void add_offset(double v) { offset_ += v; }

    /// Coefficient of q_i q_j; the pair is ordered so only the upper triangle is used.
    double at(std::size_t i, std::size_t j) const {
        if (i > j) std::swap(i, j);
        return q_[i * n_ + j];
    }
    void set(std::size_t i, std::size_t j, double v) {
        if (i > j) std::swap(i, j);
        q_[i * n_ + j] = v;
    }
    void add(std::size_t i, std::size_t j, double v) {
        if (i > j) std::swap(i, j);
        q_[i * n_ + j] += v;
    }

    double energy(std::span<const std::uint8_t> q) const {
        double e = offset_;
        for (std::size_t i = 0; i < n_; ++i) {
            if (!q[i]) continue;
            const double* row = q_.data() + i * n_;
            e += row[i];
            for (std::size_t j = i + 1; j < n_; ++j) {
                if (q[j]) e += row[j];
            }
        }
        return e;
    }

    /// Nonzero entries with i <= j in row-major order.
    std::vector<Term> terms() const {
        std::vector<Term> out;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i; j < n_; ++j) {
                if (q_[i * n_ + j] != 0.0) out.push_back({i, j, q_[i * n_ + j]});
            }
        }
        return out;
    }

    double max_abs_coefficient() const { return max_abs(q_); }

    bool operator==(const Qubo&) const = default;

 private:
    std::size_t n_ = 0;
    std::vector<double> q_;
    double offset_ = 0.0;
};

/// value = weight * sum_i 2^i bit_i, bits least significant first.
struct FixedPointCode {
    std::size_t bits = 8;
    double weight = 0.1;

    double max_value() const { return weight * (std::ldexp(1.0, static_cast<int>(bits)) - 1.0); }
};

inline double fixed_point_decode(std::span<const std::uint8_t> bits, const FixedPointCode& code) {
    if (bits.size() != code.bits) {
        throw Error(ErrorCode::kLengthMismatch, "expected " + std::to_string(code.bits) +
                                                        " bits, got " + std::to_string(bits.size()));
    }
    double v = 0.0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) v += std::ldexp(1.0, static_cast<int>(i));
    }
    return code.weight * v;
}

/// Largest representable value not above `value`, clamped to the code range.
inline Bits fixed_point_encode(double value, const FixedPointCode& code) {
    double steps = std::floor(value / code.weight + 1e-9);
    const double top = std::ldexp(1.0, static_cast<int>(code.bits)) - 1.0;
    steps = std::clamp(steps, 0.0, top);
    auto k = static_cast<std::uint64_t>(steps);
    Bits out(code.bits, 0);
    for (std::size_t i = 0; i < code.bits; ++i) out[i] = static_cast<std::uint8_t>((k >> i) & 1u);
    return out;
}

enum class Method { kBenders, kDantzigWolfe };

inline const char* to_string(Method m) { return m == Method::kBenders ? "benders" : "dantzig_wolfe"; }

/// Binary variables submitted per iteration. Benders: y, the n_s-bit eta, and one
/// n_s-bit slack per accumulated cut. Dantzig-Wolfe: y plus slacks for the rows of Y.
inline std::size_t qubit_count(Method method, std::size_t n_y, std::size_t n_s, std::size_t m_y,
                               std::size_t cuts) {
    if (method == Method::kBenders) return n_y + (1 + cuts) * n_s;
    return n_y + m_y * n_s;
}

struct QubitBudget {
    Method method = Method::kBenders;
    std::vector<std::size_t> per_step;
};

/// Counts for steps 1..steps, where step t holds t accumulated cuts.
inline QubitBudget qubit_budget(Method method, std::size_t n_y, std::size_t n_s, std::size_t m_y,
                                std::size_t steps) {
    QubitBudget budget{method, {}};
    for (std::size_t t = 1; t <= steps; ++t) {
        budget.per_step.push_back(qubit_count(method, n_y, n_s, m_y, t));
    }
    return budget;
}

inline Qubo diag_qubo(std::span<const double> linear) {
    Qubo q(linear.size());
    for (std::size_t i = 0; i < linear.size(); ++i) q.set(i, i, linear[i]);
    return q;
}

namespace detail {

struct LinearTerm {
    std::size_t index;
    double coefficient;
};

/// Adds weight * (sum_k a_k q_k + constant)^2, assuming distinct indices.
inline void add_squared(Qubo& q, const std::vector<LinearTerm>& terms, double constant,
                        double weight) {
    for (std::size_t k = 0; k < terms.size(); ++k) {
        const auto& tk = terms[k];
        q.add(tk.index, tk.index, weight * (tk.coefficient * tk.coefficient +
                                            2.0 * constant * tk.coefficient));
        for (std::size_t l = k + 1; l < terms.size(); ++l) {
            q.add(tk.index, terms[l].index, weight * 2.0 * tk.coefficient * terms[l].coefficient);
        }
    }
    q.add_offset(weight * constant * constant);
}

}  // namespace detail

/// Bit positions of the Benders master encoding:
/// [ y (n_y) | eta (n_s) | one n_s-bit slack per cut ].
struct MasterLayout {
    std::size_t n_y = 0;
    std::size_t n_cuts = 0;
    FixedPointCode code;
    double eta_shift = 0.0;

    std::size_t eta_begin() const { return n_y; }
    std::size_t slack_begin(std::size_t cut) const {
        return n_y + code.bits + cut * code.bits;
    }
    std::size_t size() const { return slack_begin(n_cuts); }

    Bits y(std::span<const std::uint8_t> q) const { return Bits(q.begin(), q.begin() + n_y); }
    double eta(std::span<const std::uint8_t> q) const {
        return eta_shift + fixed_point_decode(q.subspan(eta_begin(), code.bits), code);
    }
    double slack(std::span<const std::uint8_t> q, std::size_t cut) const {
        return fixed_point_decode(q.subspan(slack_begin(cut), code.bits), code);
    }
};

struct MasterQubo {
    Qubo qubo;
    MasterLayout layout;
};

namespace detail {

inline MasterQubo build_master_qubo(std::span<const benders::Cut> cuts, std::span<const double> d,
                                    const FixedPointCode& code, double w_a, double w_p,
                                    double eta_shift) {
    MasterLayout layout{d.size(), cuts.size(), code, eta_shift};
    Qubo q(layout.size());
    for (std::size_t j = 0; j < d.size(); ++j) q.add(j, j, d[j]);
    for (std::size_t i = 0; i < code.bits; ++i) {
        q.add(layout.eta_begin() + i, layout.eta_begin() + i,
              code.weight * std::ldexp(1.0, static_cast<int>(i)));
    }
    q.add_offset(eta_shift);
    for (std::size_t k = 0; k < cuts.size(); ++k) {
        const auto& cut = cuts[k];
        if (cut.coefficients.size() != d.size()) {
            throw Error(ErrorCode::kDimensionMismatch, "cut coefficient length differs from d");
        }
        // point: eta + coeffs.y - constant - slack = 0
        // ray:         coeffs.y - constant - slack = 0
        std::vector<LinearTerm> terms;
        for (std::size_t j = 0; j < d.size(); ++j) {
            if (cut.coefficients[j] != 0.0) terms.push_back({j, cut.coefficients[j]});
        }
        double constant = -cut.constant;
        const bool point = cut.kind == benders::CutKind::kPoint;
        if (point) {
            for (std::size_t i = 0; i < code.bits; ++i) {
                terms.push_back({layout.eta_begin() + i,
                                 code.weight * std::ldexp(1.0, static_cast<int>(i))});
            }
            constant += eta_shift;
        }
        for (std::size_t i = 0; i < code.bits; ++i) {
            terms.push_back({layout.slack_begin(k) + i,
                             -code.weight * std::ldexp(1.0, static_cast<int>(i))});
        }
        add_squared(q, terms, constant, point ? w_a : w_p);
    }
    return {std::move(q), layout};
}

}  // namespace detail

/// Penalty QUBO of the Benders master: d^T y + eta plus w_a (resp. w_p) times the
/// squared residual of each point (resp. ray) cut rewritten as an equality with
/// its own fixed-point slack. eta = eta_shift + decoded eta bits.
inline MasterQubo benders_master_qubo(std::span<const benders::Cut> cuts,
                                      std::span<const double> d, const FixedPointCode& code,
                                      double w_a, double w_p, double eta_shift = 0.0) {
    bool any_point = false;
    for (const auto& cut : cuts) any_point = any_point || cut.kind == benders::CutKind::kPoint;
    if (!any_point) {
        throw Error(ErrorCode::kNoPointCuts, "eta is unbounded below without a point cut");
    }
    return detail::build_master_qubo(cuts, d, code, w_a, w_p, eta_shift);
}

/// Same encoding before any point cut exists; eta only carries its own objective
/// weight, so a minimizer leaves its bits at zero.
inline MasterQubo ray_phase_qubo(std::span<const benders::Cut> cuts, std::span<const double> d,
                                 const FixedPointCode& code, double w_p) {
    return detail::build_master_qubo(cuts, d, code, 0.0, w_p, 0.0);
}

/// Spin form: energy(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset, s in {-1,+1}.
struct Ising {
    Vector h;
    Matrix J;
    double offset = 0.0;

    double energy(std::span<const std::int8_t> s) const {
        double e = offset;
        for (std::size_t i = 0; i < h.size(); ++i) {
            e += h[i] * s[i];
            for (std::size_t j = i + 1; j < h.size(); ++j) e += J(i, j) * s[i] * s[j];
        }
        return e;
    }
};

/// Substitutes q_i = (1 + s_i) / 2.
inline Ising to_ising(const Qubo& q) {
    const std::size_t n = q.size();
    Ising out{Vector(n, 0.0), Matrix(n, n), q.offset()};
    for (std::size_t i = 0; i < n; ++i) {
        const double a = q.at(i, i);
        out.h[i] += a / 2.0;
        out.offset += a / 2.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double b = q.at(i, j);
            if (b == 0.0) continue;
            out.J(i, j) = b / 4.0;
            out.h[i] += b / 4.0;
            out.h[j] += b / 4.0;
            out.offset += b / 4.0;
        }
    }
    return out;
}

/// Drops couplings with |Q_ij| < threshold_fraction * max|Q|; the diagonal is kept.
inline Qubo prune(const Qubo& q, double threshold_fraction) {
    if (!(threshold_fraction >= 0.0 && threshold_fraction < 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, "prune threshold must lie in [0, 1)");
    }
    Qubo out = q;
    const double cutoff = threshold_fraction * q.max_abs_coefficient();
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t j = i + 1; j < q.size(); ++j) {
            if (std::abs(q.at(i, j)) < cutoff) out.set(i, j, 0.0);
        }
    }
    return out;
}

}  // namespace qdecomp::qubo
