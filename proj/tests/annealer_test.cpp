#include "qdecomp/annealer.hpp"

#include <gtest/gtest.h>

#include <cstdint>

#include "test_util.hpp"

namespace qdecomp::anneal {
namespace {

using qubo::Qubo;
using testing::Rng;

double double_loop_energy(const Qubo& q, const Bits& x) {
    double e = q.offset();
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t j = 0; j < q.size(); ++j) {
            if (j >= i) e += q.at(i, j) * x[i] * x[j];
        }
    }
    return e;
}

Qubo random_qubo(Rng& rng, std::size_t n) {
    Qubo q(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) q.set(i, j, rng.uniform(-1.0, 1.0));
    }
    return q;
}

AnnealConfig small_config(std::uint64_t seed) {
    AnnealConfig cfg;
    cfg.reads = 10;
    cfg.sweeps = 500;
    cfg.seed = seed;
    return cfg;
}

TEST(Energy, Examples) {
    const Qubo d = qubo::diag_qubo(Vector{-1.0, -1.0});
    EXPECT_EQ(energy(d, Bits{1, 1}), -2.0);
    Qubo q(3, 4.5);
    q.set(0, 2, 1.0);
    EXPECT_EQ(energy(q, Bits{0, 0, 0}), 4.5);
    EXPECT_THROW(energy(q, Bits{0, 1}), Error);
    Rng rng(1);
    const Qubo r = random_qubo(rng, 5);
    for (std::uint64_t m = 0; m < 32; ++m) {
        const Bits x = bits_from_index(m, 5);
        EXPECT_NEAR(energy(r, x), double_loop_energy(r, x), 1e-12);
    }
}

TEST(SolveExact, LexicographicTieBreak) {
    Qubo q(2);
    q.set(0, 0, -1.0);
    q.set(0, 1, 2.0);
    q.set(1, 1, -1.0);
    const SampleResult r = solve_exact(q);
    EXPECT_EQ(r.best_assignment, (Bits{0, 1}));
    EXPECT_EQ(r.best_energy, -1.0);
}

TEST(SolveExact, ZeroQuboGivesZeroAssignment) {
    const SampleResult r = solve_exact(Qubo(4, 1.5));
    EXPECT_EQ(r.best_assignment, (Bits{0, 0, 0, 0}));
    EXPECT_EQ(r.best_energy, 1.5);
}

TEST(SolveExact, MatchesEnumeration) {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const Qubo q = random_qubo(rng, 9);
        double best = 1e300;
        for (std::uint64_t m = 0; m < 512; ++m) best = std::min(best, q.energy(bits_from_index(m, 9)));
        EXPECT_NEAR(solve_exact(q).best_energy, best, 1e-9);
    }
}

TEST(SolveExact, TooLarge) {
    try {
        solve_exact(Qubo(25));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kTooLarge);
    }
}

TEST(SampleSa, SingleVariable) {
    const Qubo q = qubo::diag_qubo(Vector{5.0});
    const SampleResult r = sample_sa(q, small_config(1));
    EXPECT_EQ(r.best_assignment, (Bits{0}));
    EXPECT_EQ(r.best_energy, 0.0);
}

TEST(SampleSa, DeterministicAndThreadIndependent) {
    Rng rng(4);
    const Qubo q = random_qubo(rng, 12);
    AnnealConfig cfg = small_config(99);
    const SampleResult a = sample_sa(q, cfg);
    const SampleResult b = sample_sa(q, cfg);
    cfg.threads = 3;
    const SampleResult c = sample_sa(q, cfg);
    EXPECT_EQ(a.best_assignment, b.best_assignment);
    EXPECT_EQ(a.energies, b.energies);
    EXPECT_EQ(a.best_assignment, c.best_assignment);
    EXPECT_EQ(a.energies, c.energies);
}

TEST(SampleSa, RejectsBadConfig) {
    AnnealConfig cfg;
    cfg.reads = 0;
    EXPECT_THROW(sample_sa(Qubo(2), cfg), Error);
    cfg = AnnealConfig{};
    cfg.beta_start = 20.0;
    EXPECT_THROW(sample_sa(Qubo(2), cfg), Error);
    EXPECT_THROW(sample_sa(Qubo(0), AnnealConfig{}), Error);
}

TEST(SampleSaProperty, NeverBeatsTheOracleAndReportsConsistently) {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const Qubo q = random_qubo(rng, 10);
        const SampleResult s = sample_sa(q, small_config(static_cast<std::uint64_t>(trial)));
        EXPECT_GE(s.best_energy, solve_exact(q).best_energy - 1e-9);
        EXPECT_EQ(s.energies.size(), 10u);
        EXPECT_NEAR(s.best_energy, q.energy(s.best_assignment), 1e-12);
        EXPECT_NEAR(s.best_energy, *std::min_element(s.energies.begin(), s.energies.end()), 1e-12);
    }
}

TEST(SampleSaProperty, DiagonalQubosReachTheSignOptimum) {
    Rng rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        const auto n = static_cast<std::size_t>(rng.integer(1, 40));
        Vector lin(n);
        for (auto& v : lin) v = rng.uniform(-1.0, 1.0);
        double opt = 0.0;
        for (double v : lin) opt += std::min(v, 0.0);
        AnnealConfig cfg = small_config(static_cast<std::uint64_t>(trial));
        cfg.sweeps = 2000;
        EXPECT_NEAR(sample_sa(qubo::diag_qubo(lin), cfg).best_energy, opt, 1e-9);
    }
}

}  // namespace
}  // namespace qdecomp::anneal
