#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdecomp/benders.hpp"
#include "qdecomp/dantzig_wolfe.hpp"
#include "qdecomp/errors.hpp"
#include "qdecomp/lp_simplex.hpp"
#include "qdecomp/matrix.hpp"
#include "qdecomp/milp_model.hpp"

namespace qdecomp::relu {

inline constexpr std::size_t kMaxExactUnstable = 16;
/// Margins and bounds at or below this count as non-positive (ties are not robust).
inline constexpr double kRobustMargin = 1e-9;

struct Layer {
    Matrix weights;
    Vector bias;
};

/// Affine layers with ReLU after every layer but the last.
struct Network {
    std::vector<Layer> layers;

    void validate() const {
        if (layers.empty()) throw Error(ErrorCode::kDimensionMismatch, "network has no layers");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& l = layers[i];
            const std::string where = "layer " + std::to_string(i);
            if (l.weights.rows() == 0 || l.weights.cols() == 0) {
                throw Error(ErrorCode::kDimensionMismatch, where + ": empty weights");
            }
            if (l.bias.size() != l.weights.rows()) {
                throw Error(ErrorCode::kDimensionMismatch, where + ": bias length");
            }
            if (i > 0 && l.weights.cols() != layers[i - 1].weights.rows()) {
                throw Error(ErrorCode::kDimensionMismatch, where + ": input width");
            }
            if (!l.weights.all_finite()) throw Error(ErrorCode::kNonFiniteEntry, where + ": weights");
            for (double v : l.bias) {
                if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteEntry, where + ": bias");
            }
        }
    }

    std::size_t input_size() const { return layers.front().weights.cols(); }
    std::size_t num_classes() const { return layers.back().weights.rows(); }
    std::size_t hidden_layers() const { return layers.size() - 1; }

    /// Pre-activations of every layer; the last entry is the output.
    std::vector<Vector> pre_activations(std::span<const double> z) const {
        if (z.size() != input_size()) throw Error(ErrorCode::kLengthMismatch, "input size");
        std::vector<Vector> out;
        Vector act(z.begin(), z.end());
        for (std::size_t i = 0; i < layers.size(); ++i) {
            Vector pre = layers[i].weights.multiply(act);
            for (std::size_t k = 0; k < pre.size(); ++k) pre[k] += layers[i].bias[k];
            out.push_back(pre);
            act = pre;
            for (double& v : act) v = std::max(v, 0.0);
        }
        return out;
    }

    Vector forward(std::span<const double> z) const { return pre_activations(z).back(); }
};

/// Index of the strictly largest entry; nullopt on a tie for the maximum.
inline std::optional<std::size_t> unique_argmax(std::span<const double> v) {
    if (v.empty()) return std::nullopt;
    std::size_t best = 0;
    bool tie = false;
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (v[k] > v[best]) {
            best = k;
            tie = false;
        } else if (v[k] == v[best]) {
            tie = true;
        }
    }
    if (tie) return std::nullopt;
    return best;
}

struct InputDomain {
    double lower = 0.0;
    double upper = 1.0;
};

struct LayerBounds {
    Vector input_lower;
    Vector input_upper;
    /// Pre-activation intervals per layer, output layer included.
    std::vector<Vector> lower;
    std::vector<Vector> upper;

    std::size_t unstable_count() const {
        std::size_t n = 0;
        for (std::size_t i = 0; i + 1 < lower.size(); ++i) {
            for (std::size_t k = 0; k < lower[i].size(); ++k) n += lower[i][k] < 0.0 && upper[i][k] > 0.0;
        }
        return n;
    }
};

namespace detail {

inline void affine_interval(const Layer& layer, const Vector& lo, const Vector& hi, Vector& out_lo,
                            Vector& out_hi) {
    const std::size_t rows = layer.weights.rows();
    out_lo.assign(rows, 0.0);
    out_hi.assign(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double l = layer.bias[r], h = layer.bias[r];
        for (std::size_t c = 0; c < lo.size(); ++c) {
            const double w = layer.weights(r, c);
            if (w >= 0.0) {
                l += w * lo[c];
                h += w * hi[c];
            } else {
                l += w * hi[c];
                h += w * lo[c];
            }
        }
        out_lo[r] = l;
        out_hi[r] = h;
    }
}

}  // namespace detail

/// Interval bound propagation over the box [z - eps, z + eps] clipped to the domain.
inline LayerBounds ibp_bounds(const Network& net, std::span<const double> z, double epsilon,
                              const InputDomain& domain = {}) {
    net.validate();
    if (z.size() != net.input_size()) throw Error(ErrorCode::kLengthMismatch, "input size");
    if (!(epsilon >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
    LayerBounds b;
    b.input_lower.resize(z.size());
    b.input_upper.resize(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
        if (z[j] < domain.lower || z[j] > domain.upper) {
            throw Error(ErrorCode::kInvalidArgument, "input lies outside the data domain");
        }
        b.input_lower[j] = std::max(domain.lower, z[j] - epsilon);
        b.input_upper[j] = std::min(domain.upper, z[j] + epsilon);
    }
    Vector lo = b.input_lower, hi = b.input_upper;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        Vector l, h;
        detail::affine_interval(net.layers[i], lo, hi, l, h);
        b.lower.push_back(l);
        b.upper.push_back(h);
        lo = l;
        hi = h;
        for (double& v : lo) v = std::max(v, 0.0);
        for (double& v : hi) v = std::max(v, 0.0);
    }
    return b;
}

/// IBP lower bound of f_t - f_a, propagated through the difference row of the last layer.
inline double margin_lower_bound(const Network& net, const LayerBounds& bounds, std::size_t t,
                                 std::size_t a) {
    const Layer& last = net.layers.back();
    Vector lo, hi;
    if (net.hidden_layers() == 0) {
        lo = bounds.input_lower;
        hi = bounds.input_upper;
    } else {
        lo = bounds.lower[bounds.lower.size() - 2];
        hi = bounds.upper[bounds.upper.size() - 2];
        for (double& v : lo) v = std::max(v, 0.0);
        for (double& v : hi) v = std::max(v, 0.0);
    }
    double s = last.bias[t] - last.bias[a];
    for (std::size_t c = 0; c < lo.size(); ++c) {
        const double w = last.weights(t, c) - last.weights(a, c);
        s += w >= 0.0 ? w * lo[c] : w * hi[c];
    }
    return s;
}

/// True when every adversarial margin has a positive IBP lower bound.
inline bool early_certificate(const Network& net, const LayerBounds& bounds, std::size_t true_class) {
    for (std::size_t a = 0; a < net.num_classes(); ++a) {
        if (a != true_class && !(margin_lower_bound(net, bounds, true_class, a) > 0.0)) return false;
    }
    return true;
}

/// MILP of min f_t - f_a over the input box. Variables: input, then per hidden
/// layer its pre- and post-activations, then the output. One binary per unstable neuron.
struct ReluEncoding {
    struct Unstable {
        std::size_t layer;
        std::size_t neuron;
    };

    MilpProblem problem;
    std::size_t input_begin = 0;
    std::vector<std::size_t> pre_begin;
    std::vector<std::size_t> post_begin;
    std::size_t output_begin = 0;
    std::vector<Unstable> unstable;
    std::size_t true_class = 0;
    std::size_t adversarial_class = 0;

    Vector input(std::span<const double> x) const {
        const std::size_t d = pre_begin.empty() ? output_begin : pre_begin.front();
        return Vector(x.begin() + static_cast<std::ptrdiff_t>(input_begin),
                      x.begin() + static_cast<std::ptrdiff_t>(d));
    }

    /// Full real assignment of a concrete input.
    Vector assignment(const Network& net, std::span<const double> z) const {
        const auto pre = net.pre_activations(z);
        Vector x(problem.n_x(), 0.0);
        std::copy(z.begin(), z.end(), x.begin() + static_cast<std::ptrdiff_t>(input_begin));
        for (std::size_t i = 0; i < pre_begin.size(); ++i) {
            for (std::size_t k = 0; k < pre[i].size(); ++k) {
                x[pre_begin[i] + k] = pre[i][k];
                x[post_begin[i] + k] = std::max(pre[i][k], 0.0);
            }
        }
        for (std::size_t k = 0; k < pre.back().size(); ++k) x[output_begin + k] = pre.back()[k];
        return x;
    }

    /// Activation indicators of the unstable neurons at a concrete input.
    Bits pattern(const Network& net, std::span<const double> z) const {
        const auto pre = net.pre_activations(z);
        Bits y(unstable.size(), 0);
        for (std::size_t k = 0; k < unstable.size(); ++k) {
            y[k] = pre[unstable[k].layer][unstable[k].neuron] > 0.0 ? 1 : 0;
        }
        return y;
    }
};

inline ReluEncoding encode_milp(const Network& net, const LayerBounds& bounds, std::size_t true_class,
                                std::size_t adversarial_class) {
    net.validate();
    const std::size_t K = net.num_classes();
    if (true_class >= K || adversarial_class >= K || true_class == adversarial_class) {
        throw Error(ErrorCode::kInvalidArgument, "class pair must be distinct and in range");
    }
    ReluEncoding enc;
    enc.true_class = true_class;
    enc.adversarial_class = adversarial_class;
    std::size_t n = net.input_size();
    for (std::size_t i = 0; i < net.hidden_layers(); ++i) {
        const std::size_t w = net.layers[i].weights.rows();
        enc.pre_begin.push_back(n);
        enc.post_begin.push_back(n + w);
        n += 2 * w;
        for (std::size_t k = 0; k < w; ++k) {
            if (bounds.lower[i][k] < 0.0 && bounds.upper[i][k] > 0.0) enc.unstable.push_back({i, k});
        }
    }
    enc.output_begin = n;
    n += K;
    const std::size_t ny = enc.unstable.size();

    MilpProblem& p = enc.problem;
    p.c.assign(n, 0.0);
    p.c[enc.output_begin + true_class] = 1.0;
    p.c[enc.output_begin + adversarial_class] = -1.0;
    p.d.assign(ny, 0.0);
    p.A = Matrix(0, n);
    p.B = Matrix(0, ny);
    p.C = Matrix(0, n);

    Vector row(n), brow(ny);
    auto clear = [&] {
        std::fill(row.begin(), row.end(), 0.0);
        std::fill(brow.begin(), brow.end(), 0.0);
    };

    for (std::size_t j = 0; j < net.input_size(); ++j) {
        clear();
        row[j] = 1.0;
        p.add_easy_row(row, bounds.input_lower[j]);
        row[j] = -1.0;
        p.add_easy_row(row, -bounds.input_upper[j]);
    }

    std::size_t prev_begin = enc.input_begin;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& layer = net.layers[i];
        const bool hidden = i < net.hidden_layers();
        const std::size_t target = hidden ? enc.pre_begin[i] : enc.output_begin;
        for (std::size_t k = 0; k < layer.weights.rows(); ++k) {
            clear();
            row[target + k] = 1.0;
            for (std::size_t c = 0; c < layer.weights.cols(); ++c) row[prev_begin + c] = -layer.weights(k, c);
            p.add_easy_equality(row, layer.bias[k]);
        }
        if (!hidden) break;
        for (std::size_t k = 0; k < layer.weights.rows(); ++k) {
            const double l = bounds.lower[i][k], u = bounds.upper[i][k];
            const std::size_t pre = enc.pre_begin[i] + k, post = enc.post_begin[i] + k;
            clear();
            if (u <= 0.0) {
                row[post] = 1.0;
                p.add_easy_equality(row, 0.0);
            } else if (l >= 0.0) {
                row[post] = 1.0;
                row[pre] = -1.0;
                p.add_easy_equality(row, 0.0);
            } else {
                row[post] = 1.0;
                p.add_easy_row(row, 0.0);
                row[post] = -1.0;
                p.add_easy_row(row, -u);
            }
        }
        prev_begin = enc.post_begin[i];
    }

    for (std::size_t k = 0; k < ny; ++k) {
        const auto [layer, neuron] = enc.unstable[k];
        const double l = bounds.lower[layer][neuron], u = bounds.upper[layer][neuron];
        const std::size_t pre = enc.pre_begin[layer] + neuron, post = enc.post_begin[layer] + neuron;
        clear();
        row[post] = 1.0;
        row[pre] = -1.0;
        p.add_coupling_row(row, brow, 0.0);  // x >= x_hat
        clear();
        row[post] = 1.0;
        p.add_coupling_row(row, brow, 0.0);  // x >= 0
        clear();
        row[pre] = 1.0;
        row[post] = -1.0;
        brow[k] = l;
        p.add_coupling_row(row, brow, l);  // x <= x_hat - l (1 - y)
        clear();
        row[post] = -1.0;
        brow[k] = u;
        p.add_coupling_row(row, brow, 0.0);  // x <= u y
    }
    if (ny == 0) {
        clear();
        p.add_coupling_row(row, brow, 0.0);
    }
    return enc;
}

enum class VerdictKind { kRobust, kNotRobust, kUnknown };

inline const char* to_string(VerdictKind v) {
    switch (v) {
        case VerdictKind::kRobust: return "robust";
        case VerdictKind::kNotRobust: return "not_robust";
        case VerdictKind::kUnknown: return "unknown";
    }
    return "?";
}

enum class Evidence {
    kNone,
    kIbp,
    kBound,
    kMisclassified,
    kCounterexample,
    kRelaxationAdversary,
};

inline const char* to_string(Evidence e) {
    switch (e) {
        case Evidence::kNone: return "none";
        case Evidence::kIbp: return "ibp";
        case Evidence::kBound: return "bound";
        case Evidence::kMisclassified: return "misclassified";
        case Evidence::kCounterexample: return "counterexample";
        case Evidence::kRelaxationAdversary: return "relaxation_adversary";
    }
    return "?";
}

struct ClassResult {
    std::size_t adversarial_class = 0;
    VerdictKind verdict = VerdictKind::kUnknown;
    /// DW: restricted-master value and Lagrangian bound. BD: best upper and certified lower.
    double phi = 0.0;
    double phi_hat = 0.0;
    std::size_t steps = 0;
    std::size_t max_qubits = 0;
    std::size_t cuts = 0;
};

struct Verdict {
    VerdictKind kind = VerdictKind::kUnknown;
    Evidence evidence = Evidence::kNone;
    std::vector<ClassResult> classes;
    /// Smallest exact margin over the class pairs (exact_certify only).
    std::optional<double> margin;
    Vector witness;

    std::size_t steps() const {
        std::size_t s = 0;
        for (const auto& c : classes) s += c.steps;
        return s;
    }
    std::size_t max_qubits() const {
        std::size_t q = 0;
        for (const auto& c : classes) q = std::max(q, c.max_qubits);
        return q;
    }
    double phi() const {
        double v = lp::kInf;
        for (const auto& c : classes) v = std::min(v, c.phi);
        return classes.empty() ? 0.0 : v;
    }
    double phi_hat() const {
        double v = lp::kInf;
        for (const auto& c : classes) v = std::min(v, c.phi_hat);
        return classes.empty() ? 0.0 : v;
    }
};

struct VerificationInstance {
    Network network;
    Vector z;
    double epsilon = 0.0;
    std::size_t true_class = 0;
    /// Restricts certification to one class pair; all other classes otherwise.
    std::optional<std::size_t> adversarial_class;
    InputDomain domain;

    void validate() const {
        network.validate();
        if (z.size() != network.input_size()) throw Error(ErrorCode::kLengthMismatch, "input size");
        if (true_class >= network.num_classes()) {
            throw Error(ErrorCode::kInvalidArgument, "true class out of range");
        }
        if (adversarial_class &&
            (*adversarial_class >= network.num_classes() || *adversarial_class == true_class)) {
            throw Error(ErrorCode::kInvalidArgument, "adversarial class invalid");
        }
        if (!(epsilon >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
    }

    std::vector<std::size_t> adversarial_classes() const {
        if (adversarial_class) return {*adversarial_class};
        std::vector<std::size_t> out;
        for (std::size_t a = 0; a < network.num_classes(); ++a) {
            if (a != true_class) out.push_back(a);
        }
        return out;
    }
};

struct CertifyOptions {
    bool ibp_early_exit = true;
    /// Benders only: start eta at the IBP margin bound instead of the configured shift.
    bool ibp_eta_shift = true;
};

namespace detail {

inline double class_margin(const Network& net, std::span<const double> z, std::size_t t, std::size_t a) {
    const Vector f = net.forward(z);
    return f[t] - f[a];
}

/// Shared front: label check and IBP. Returns a finished verdict or nothing.
inline std::optional<Verdict> screen(const VerificationInstance& inst, const LayerBounds& bounds,
                                     bool use_ibp) {
    const Vector f = inst.network.forward(inst.z);
    const auto pred = unique_argmax(f);
    if (!pred || *pred != inst.true_class) {
        Verdict v;
        v.kind = VerdictKind::kNotRobust;
        v.evidence = Evidence::kMisclassified;
        v.witness = inst.z;
        return v;
    }
    if (!use_ibp) return std::nullopt;
    for (std::size_t a : inst.adversarial_classes()) {
        if (!(margin_lower_bound(inst.network, bounds, inst.true_class, a) > 0.0)) return std::nullopt;
    }
    Verdict v;
    v.kind = VerdictKind::kRobust;
    v.evidence = Evidence::kIbp;
    return v;
}

}  // namespace detail

/// Exhaustive certification: every activation pattern of the unstable neurons.
inline Verdict exact_certify(const VerificationInstance& inst) {
    inst.validate();
    const LayerBounds bounds = ibp_bounds(inst.network, inst.z, inst.epsilon, inst.domain);
    if (auto v = detail::screen(inst, bounds, false)) {
        v->margin = 0.0;
        for (std::size_t a : inst.adversarial_classes()) {
            v->margin = std::min(*v->margin,
                                 detail::class_margin(inst.network, inst.z, inst.true_class, a));
        }
        return *v;
    }
    if (bounds.unstable_count() > kMaxExactUnstable) {
        throw Error(ErrorCode::kTooManyUnstable, std::to_string(bounds.unstable_count()) +
                                                         " unstable neurons exceed the limit of " +
                                                         std::to_string(kMaxExactUnstable));
    }
    Verdict v;
    v.kind = VerdictKind::kRobust;
    v.evidence = Evidence::kBound;
    v.margin = lp::kInf;
    for (std::size_t a : inst.adversarial_classes()) {
        const ReluEncoding enc = encode_milp(inst.network, bounds, inst.true_class, a);
        const MilpSolution sol = brute_force_solve(enc.problem);
        if (sol.status != SolveStatus::kOptimal) {
            throw Error(ErrorCode::kNumericalBreakdown, "verification MILP is not solvable");
        }
        v.classes.push_back({a, sol.objective > kRobustMargin ? VerdictKind::kRobust
                                                               : VerdictKind::kNotRobust,
                             sol.objective, sol.objective, 0, 0, 0});
        if (sol.objective < *v.margin) {
            v.margin = sol.objective;
            v.witness = enc.input(sol.x);
        }
    }
    if (*v.margin <= kRobustMargin) {
        v.kind = VerdictKind::kNotRobust;
        v.evidence = Evidence::kCounterexample;
    } else {
        v.witness.clear();
    }
    return v;
}

/// Column-generation certification: per class pair, the restricted master value
/// phi and the Lagrangian bound phi_hat decide robust / not robust / unknown.
inline Verdict certify_dw(const VerificationInstance& inst, dw::DwConfig cfg,
                          const CertifyOptions& opts = {}) {
    inst.validate();
    const LayerBounds bounds = ibp_bounds(inst.network, inst.z, inst.epsilon, inst.domain);
    if (auto v = detail::screen(inst, bounds, opts.ibp_early_exit)) return *v;

    Verdict v;
    v.kind = VerdictKind::kRobust;
    v.evidence = Evidence::kBound;
    cfg.stop = [](double phi) { return phi <= 0.0; };
    for (std::size_t a : inst.adversarial_classes()) {
        const ReluEncoding enc = encode_milp(inst.network, bounds, inst.true_class, a);
        const MilpProblem& p = enc.problem;
        Bits y0 = enc.pattern(inst.network, inst.z);
        lp::LpProblem start = residual_lp(p, y0);
        std::fill(start.objective.begin(), start.objective.end(), 0.0);
        dw::ColumnPool pool;
        pool.real.push_back(dw::Column::real(p, lp::phase1_feasible_point(start)));
        pool.binary.push_back(dw::Column::binary(p, std::move(y0)));

        const dw::DwTrace tr = dw::run(p, std::move(pool), cfg, dw::relaxation_duals(p));
        const std::size_t qubits = std::max(tr.max_qubits, p.n_y());
        ClassResult cr{a, VerdictKind::kRobust, tr.phi, tr.phi_hat, tr.steps.size(), qubits, 0};

        if (tr.status == dw::DwStatus::kStopped) {
            cr.verdict = VerdictKind::kNotRobust;
            v.classes.push_back(cr);
            v.kind = VerdictKind::kNotRobust;
            v.witness = enc.input(tr.x_bar());
            const double m = detail::class_margin(inst.network, v.witness, inst.true_class, a);
            v.evidence = m <= 0.0 ? Evidence::kCounterexample : Evidence::kRelaxationAdversary;
            return v;
        }
        if (!(tr.phi_hat > kRobustMargin)) {
            cr.verdict = VerdictKind::kUnknown;
            v.classes.push_back(cr);
            v.kind = VerdictKind::kUnknown;
            v.evidence = Evidence::kNone;
            return v;
        }
        v.classes.push_back(cr);
    }
    return v;
}

/// Benders certification: a certified lower bound above zero proves the pair,
/// an attained upper bound at or below zero is a genuine counterexample.
inline Verdict certify_bd(const VerificationInstance& inst, benders::BendersConfig cfg,
                          const CertifyOptions& opts = {}) {
    inst.validate();
    const LayerBounds bounds = ibp_bounds(inst.network, inst.z, inst.epsilon, inst.domain);
    if (auto v = detail::screen(inst, bounds, opts.ibp_early_exit)) return *v;

    Verdict v;
    v.kind = VerdictKind::kRobust;
    v.evidence = Evidence::kBound;
    cfg.stop_upper_at_most = 0.0;
    cfg.stop_lower_above = kRobustMargin;
    for (std::size_t a : inst.adversarial_classes()) {
        const ReluEncoding enc = encode_milp(inst.network, bounds, inst.true_class, a);
        if (opts.ibp_eta_shift) {
            cfg.eta_shift = std::floor(margin_lower_bound(inst.network, bounds, inst.true_class, a));
        }
        const benders::BendersTrace tr = benders::run(enc.problem, cfg);
        ClassResult cr{a, VerdictKind::kRobust, tr.upper, tr.lower, tr.steps.size(), tr.max_qubits,
                       tr.cuts_generated};
        if (tr.upper <= 0.0) {
            cr.verdict = VerdictKind::kNotRobust;
            v.classes.push_back(cr);
            v.kind = VerdictKind::kNotRobust;
            v.evidence = Evidence::kCounterexample;
            const lp::LpOutcome x = lp::solve(residual_lp(enc.problem, tr.best_y));
            if (x.status == lp::LpStatus::kOptimal) v.witness = enc.input(x.primal);
            return v;
        }
        if (!(tr.lower > kRobustMargin)) {
            cr.verdict = VerdictKind::kUnknown;
            v.classes.push_back(cr);
            v.kind = VerdictKind::kUnknown;
            v.evidence = Evidence::kNone;
            return v;
        }
        v.classes.push_back(cr);
    }
    return v;
}

}  // namespace qdecomp::relu
