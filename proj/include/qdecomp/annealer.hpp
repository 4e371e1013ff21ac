#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qdecomp/errors.hpp"
#include "qdecomp/milp_model.hpp"
#include "qdecomp/qubo.hpp"
#include "qdecomp/rng.hpp"

namespace qdecomp::anneal {

inline constexpr std::size_t kMaxExactVariables = 24;

struct AnnealConfig {
    std::size_t reads = 100;
    std::size_t sweeps = 50000;
    std::uint64_t seed = 0;
    /// Geometric inverse-temperature schedule.
    double beta_start = 0.1;
    double beta_end = 10.0;
    /// Worker threads for independent reads; results do not depend on it.
    std::size_t threads = 1;

    void validate() const {
        if (reads < 1 || sweeps < 1) {
            throw Error(ErrorCode::kInvalidArgument, "reads and sweeps must be at least 1");
        }
        if (!(beta_start > 0.0 && beta_start < beta_end)) {
            throw Error(ErrorCode::kInvalidArgument, "need 0 < beta_start < beta_end");
        }
    }
};

struct SampleResult {
    Bits best_assignment;
    double best_energy = 0.0;
    std::vector<double> energies;
};

inline double energy(const qubo::Qubo& q, std::span<const std::uint8_t> bits) {
    if (bits.size() != q.size()) {
        throw Error(ErrorCode::kLengthMismatch, "assignment has " + std::to_string(bits.size()) +
                                                        " bits, QUBO has " +
                                                        std::to_string(q.size()));
    }
    return q.energy(bits);
}

namespace detail {

/// Seed of read `index`, independent of the order reads are executed in.
inline std::uint64_t read_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 1));
}

inline double unit_uniform(Xoshiro256& rng) { return rng.unit(); }

/// Lower energy wins; near-equal energies fall back to lexicographic order.
inline bool better(double e1, std::span<const std::uint8_t> a1, double e2,
                   std::span<const std::uint8_t> a2) {
    const double tol = 1e-9 * std::max(1.0, std::abs(e2));
    if (e1 < e2 - tol) return true;
    if (e1 > e2 + tol) return false;
    return std::lexicographical_compare(a1.begin(), a1.end(), a2.begin(), a2.end());
}

/// Symmetric coupling matrix with the linear terms on the diagonal.
inline std::vector<double> symmetric_couplings(const qubo::Qubo& q, std::size_t stride) {
    const std::size_t n = q.size();
    std::vector<double> s(n * stride, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = q.at(i, j);
            s[i * stride + j] = v;
            s[j * stride + i] = v;
        }
    }
    return s;
}

/// Flip state i and update field[j] = Q_jj + sum_{k != j} Q_jk q_k. `off` holds
/// the couplings with a zero diagonal, `stride` entries per row; W > 0 fixes
/// the stride at compile time.
template <std::size_t W>
inline void flip(double* field, double* spin, const double* off, std::size_t stride, bool coupled,
                 std::uint8_t* state, std::size_t i) {
    state[i] ^= 1u;
    if (coupled) {
        const std::size_t width = W > 0 ? W : stride;
        const double* row = off + i * width;
        const double si = spin[i];
        for (std::size_t j = 0; j < width; ++j) field[j] += si * row[j];
    }
    spin[i] = -spin[i];
}

template <std::size_t W>
inline Bits anneal_one(const std::vector<double>& sym, std::size_t n, std::size_t stride,
                       const AnnealConfig& cfg, std::uint64_t seed) {
    Xoshiro256 rng(seed);
    Bits state(n);
    for (auto& b : state) b = static_cast<std::uint8_t>(rng() >> 63);

    // Flipping i changes the energy by spin[i] * field[i], spin = 1 - 2 q.
    std::vector<double> spin(stride, 1.0), field(stride, 0.0), off(sym);
    Bits coupled(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double f = sym[i * stride + i];
        off[i * stride + i] = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (state[j]) f += sym[i * stride + j];
            if (sym[i * stride + j] != 0.0) coupled[i] = 1;
        }
        spin[i] = state[i] ? -1.0 : 1.0;
        field[i] = f;
    }

    const double ratio = cfg.sweeps > 1 ? std::pow(cfg.beta_end / cfg.beta_start,
                                                   1.0 / static_cast<double>(cfg.sweeps - 1))
                                        : 1.0;
    double* fd = field.data();
    double* sp = spin.data();
    std::uint8_t* st = state.data();
    const double* q = off.data();
    double beta = cfg.sweeps > 1 ? cfg.beta_start : cfg.beta_end;
    for (std::size_t sweep = 0; sweep < cfg.sweeps; ++sweep, beta *= ratio) {
        const double cutoff = 40.0 / beta;
        for (std::size_t i = 0; i < n; ++i) {
            const double di = sp[i] * fd[i];
            if (di > 0.0) {
                if (di >= cutoff) continue;
                const double x = beta * di;
                const double u = unit_uniform(rng);
                // Bracket exp(-x) by its cubic Taylor bounds; exp only decides the gap.
                const double x2 = 0.5 * x * x, x3 = x2 * x / 3.0;
                if (u >= 1.0 - x + x2 - x3) {
                    if (u * (1.0 + x + x2 + x3) >= 1.0 || u >= std::exp(-x)) continue;
                }
            }
            flip<W>(fd, sp, q, stride, coupled[i], st, i);
        }
    }
    // Zero-temperature quench: descend to a single-flip local minimum.
    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (sp[i] * fd[i] >= -1e-12) continue;
            flip<W>(fd, sp, q, stride, coupled[i], st, i);
            changed = true;
        }
    }
    return state;
}

/// Row stride for the coupling matrix: small sizes are padded with zeros
/// to a fixed width so the update loop is unrolled.
inline std::size_t padded_stride(std::size_t n) {
    for (std::size_t w : {8u, 16u, 32u, 64u}) {
        if (n <= w) return w;
    }
    return n;
}

inline Bits anneal_read(const std::vector<double>& sym, std::size_t n, std::size_t stride,
                        const AnnealConfig& cfg, std::uint64_t seed) {
    switch (stride) {
        case 8: return anneal_one<8>(sym, n, stride, cfg, seed);
        case 16: return anneal_one<16>(sym, n, stride, cfg, seed);
        case 32: return anneal_one<32>(sym, n, stride, cfg, seed);
        case 64: return anneal_one<64>(sym, n, stride, cfg, seed);
        default: return anneal_one<0>(sym, n, stride, cfg, seed);
    }
}

}  // namespace detail

/// Simulated annealing: per read a random start followed by single-flip Metropolis
/// sweeps on a geometric beta schedule. Returns the best final state over reads.
inline SampleResult sample_sa(const qubo::Qubo& q, const AnnealConfig& cfg) {
    cfg.validate();
    const std::size_t n = q.size();
    if (n == 0) throw Error(ErrorCode::kInvalidArgument, "cannot sample an empty QUBO");
    const std::size_t stride = detail::padded_stride(n);
    const std::vector<double> sym = detail::symmetric_couplings(q, stride);

    std::vector<Bits> finals(cfg.reads);
    auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t r = begin; r < cfg.reads; r += step) {
            finals[r] = detail::anneal_read(sym, n, stride, cfg, detail::read_seed(cfg.seed, r));
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(cfg.threads, 1, cfg.reads);
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }

    SampleResult out;
    out.energies.reserve(cfg.reads);
    for (std::size_t r = 0; r < cfg.reads; ++r) {
        const double e = q.energy(finals[r]);
        out.energies.push_back(e);
        if (r == 0 || detail::better(e, finals[r], out.best_energy, out.best_assignment)) {
            out.best_energy = e;
            out.best_assignment = finals[r];
        }
    }
    return out;
}

/// Exhaustive minimum over {0,1}^n (Gray-code walk); ties go to the
/// lexicographically smallest assignment.
inline SampleResult solve_exact(const qubo::Qubo& q) {
    const std::size_t n = q.size();
    if (n > kMaxExactVariables) {
        throw Error(ErrorCode::kTooLarge, std::to_string(n) + " variables exceed the limit of " +
                                                  std::to_string(kMaxExactVariables));
    }
    SampleResult out;
    if (n == 0) {
        out.best_energy = q.offset();
        out.energies = {out.best_energy};
        return out;
    }
    const std::vector<double> sym = detail::symmetric_couplings(q, n);
    std::vector<double> field(n);
    for (std::size_t i = 0; i < n; ++i) field[i] = sym[i * n + i];

    // Variable i maps to bit (n - 1 - i) so integer order equals lexicographic order.
    std::uint64_t mask = 0;
    double e = q.offset();
    std::uint64_t best_mask = 0;
    double best = e;
    const std::uint64_t count = std::uint64_t{1} << n;
    for (std::uint64_t k = 1; k < count; ++k) {
        const auto bit = static_cast<std::size_t>(std::countr_zero(k));
        const std::size_t i = n - 1 - bit;
        const bool on = (mask >> bit) & 1u;
        e += on ? -field[i] : field[i];
        const double sign = on ? -1.0 : 1.0;
        mask ^= std::uint64_t{1} << bit;
        const double* row = sym.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) field[j] += sign * row[j];
        }
        const double tol = 1e-9 * std::max(1.0, std::abs(best));
        if (e < best - tol || (e <= best + tol && mask < best_mask)) {
            best = e;
            best_mask = mask;
        }
    }
    out.best_assignment = bits_from_index(best_mask, n);
    out.best_energy = q.energy(out.best_assignment);
    out.energies = {out.best_energy};
    return out;
}

}  // namespace qdecomp::anneal
