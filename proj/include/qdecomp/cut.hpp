#pragma once

#include <cstdint>
#include <span>

#include "qdecomp/matrix.hpp"
#include "qdecomp/milp_model.hpp"

namespace qdecomp::benders {

enum class CutKind { kPoint, kRay };

inline const char* to_string(CutKind k) { return k == CutKind::kPoint ? "point" : "ray"; }

/// A Benders cut built from dual multipliers (alpha on the complicating rows,
/// beta on the rows of X). In terms of y it reads
///
///     point:  constant - coefficients . y <= eta
///     ray:    constant - coefficients . y <= 0
///
/// with constant = alpha . b + beta . e and coefficients = alpha B.
struct Cut {
    Vector alpha;
    Vector beta;
    CutKind kind = CutKind::kPoint;
    Vector coefficients;
    double constant = 0.0;

    static Cut from_multipliers(const MilpProblem& p, Vector alpha, Vector beta, CutKind kind) {
        Cut cut;
        cut.coefficients = p.B.rows() > 0 && p.n_y() > 0 ? p.B.left_multiply(alpha)
                                                          : Vector(p.n_y(), 0.0);
        cut.constant = dot(alpha, p.b) + dot(beta, p.e);
        cut.alpha = std::move(alpha);
        cut.beta = std::move(beta);
        cut.kind = kind;
        return cut;
    }

    /// alpha (b - B y) + beta e
    double value(std::span<const std::uint8_t> y) const {
        return constant - binary_dot(coefficients, y);
    }
};

}  // namespace qdecomp::benders
