#include "qdecomp/benders.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_util.hpp"

namespace qdecomp::benders {
namespace {

using testing::Rng;

BendersConfig oracle_config() {
    BendersConfig cfg;
    cfg.theta = 1e-6;
    cfg.max_steps = 64;
    cfg.max_cut_pool = 0;
    return cfg;
}

Cut point_cut(std::vector<double> coeffs, double constant) {
    Cut c;
    c.kind = CutKind::kPoint;
    c.coefficients = std::move(coeffs);
    c.constant = constant;
    return c;
}

Cut ray_cut(std::vector<double> coeffs, double constant) {
    Cut c = point_cut(std::move(coeffs), constant);
    c.kind = CutKind::kRay;
    return c;
}

TEST(Subproblem, ForcedMultiplier) {
    MilpProblem p;
    p.c = {1.0};
    p.d = {0.0};
    p.add_coupling_row(Vector{1.0}, Vector{0.0}, 2.0);
    const SubproblemResult r = solve_subproblem(p, Bits{0}, 5.0);
    EXPECT_EQ(r.cut.kind, CutKind::kPoint);
    EXPECT_NEAR(r.cut.alpha[0], 1.0, 1e-9);
    EXPECT_NEAR(r.objective, 2.0, 1e-9);
}

TEST(Subproblem, BoundHitOnInfeasibleResidualIsARay) {
    MilpProblem p;
    p.c = {0.0};
    p.d = {0.0};
    p.add_coupling_row(Vector{0.0}, Vector{0.0}, 1.0);
    const SubproblemResult r = solve_subproblem(p, Bits{0}, 5.0);
    EXPECT_EQ(r.cut.kind, CutKind::kRay);
    EXPECT_TRUE(r.bound_hit);
    EXPECT_NEAR(r.cut.alpha[0], 5.0, 1e-9);
    EXPECT_GT(r.cut.value(Bits{0}), 0.0);
}

TEST(Subproblem, BoundHitOnFeasibleResidualStaysAPoint) {
    // min 10 x s.t. x >= 1: the only multiplier is 10, above the box of 5.
    MilpProblem p;
    p.c = {10.0};
    p.d = {0.0};
    p.add_coupling_row(Vector{1.0}, Vector{0.0}, 1.0);
    const SubproblemResult r = solve_subproblem(p, Bits{0}, 5.0);
    EXPECT_EQ(r.cut.kind, CutKind::kPoint);
    EXPECT_NEAR(r.objective, 10.0, 1e-9);
}

TEST(Subproblem, UnboundedResidualIsReported) {
    MilpProblem p;
    p.c = {-1.0};
    p.d = {0.0};
    p.add_coupling_row(Vector{1.0}, Vector{0.0}, 0.0);
    try {
        solve_subproblem(p, Bits{0}, 5.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kSubInfeasible);
    }
}

TEST(SubproblemProperty, PointObjectiveEqualsPrimalResidual) {
    Rng rng(101);
    int points = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const MilpProblem p = testing::random_milp(rng, 3, 3, 4);
        Bits y(3);
        for (auto& v : y) v = rng.coin() ? 1 : 0;
        const SubproblemResult r = solve_subproblem(p, y, 5.0);
        const lp::LpOutcome primal = lp::solve(residual_lp(p, y));
        if (primal.status == lp::LpStatus::kOptimal) {
            ASSERT_EQ(r.cut.kind, CutKind::kPoint);
            EXPECT_NEAR(r.objective, primal.objective, 1e-6);
            EXPECT_NEAR(r.cut.value(y), primal.objective, 1e-6);
            ++points;
        } else {
            ASSERT_EQ(primal.status, lp::LpStatus::kInfeasible);
            EXPECT_EQ(r.cut.kind, CutKind::kRay);
            EXPECT_GT(r.cut.value(y), 0.0);
        }
    }
    EXPECT_GT(points, 10);
}

TEST(SubproblemProperty, CutsNeverExcludeTheOptimum) {
    Rng rng(202);
    for (int trial = 0; trial < 40; ++trial) {
        const MilpProblem p = testing::random_milp(rng, 3, 3, 4);
        const MilpSolution opt = brute_force_solve(p);
        ASSERT_EQ(opt.status, SolveStatus::kOptimal);
        const double q_opt = opt.objective - binary_dot(p.d, opt.y);
        for (std::uint64_t m = 0; m < 8; ++m) {
            const SubproblemResult r = solve_subproblem(p, bits_from_index(m, 3), 5.0);
            if (r.cut.kind == CutKind::kPoint) {
                EXPECT_LE(r.cut.value(opt.y), q_opt + 1e-6);
            } else {
                EXPECT_LE(r.cut.value(opt.y), 1e-6);
            }
        }
    }
}

TEST(Master, SinglePointCut) {
    // eta >= 0 - (-1) y = y
    const std::vector<Cut> cuts{point_cut({-1.0}, 0.0)};
    const MasterResult r = solve_master(cuts, Vector{0.0}, BendersConfig{});
    EXPECT_EQ(r.y, (Bits{0}));
    EXPECT_NEAR(r.eta, 0.0, 1e-12);
    EXPECT_EQ(r.qubits, 1u + 2u * 8u);
}

TEST(Master, RayCutFiltersAssignments) {
    const std::vector<Cut> cuts{point_cut({0.0}, 0.0), ray_cut({1.0}, 0.5)};
    const MasterResult r = solve_master(cuts, Vector{1.0}, BendersConfig{});
    EXPECT_EQ(r.y, (Bits{1}));
    EXPECT_NEAR(r.objective, 1.0, 1e-12);
}

TEST(Master, InfeasibleAndMissingPointCut) {
    const std::vector<Cut> cuts{point_cut({0.0}, 0.0), ray_cut({0.0}, 1.0)};
    try {
        solve_master(cuts, Vector{0.0}, BendersConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kMasterInfeasible);
    }
    const std::vector<Cut> rays{ray_cut({1.0}, 0.5)};
    EXPECT_THROW(solve_master(rays, Vector{0.0}, BendersConfig{}), Error);
}

TEST(Master, QuboExactAgreesWithEnumeration) {
    // Integer cut data with eta and slacks on a unit grid, so the penalty minimum is exact.
    const std::vector<Cut> cuts{point_cut({2.0, -1.0, 1.0}, 3.0), point_cut({-1.0, 1.0, 0.0}, 1.0),
                                ray_cut({1.0, 1.0, 0.0}, 1.0)};
    const Vector d{1.0, 2.0, -1.0};
    BendersConfig cfg;
    cfg.code = {3, 1.0};
    cfg.w_a = 5.0;
    cfg.w_p = 5.0;
    cfg.prune = 0.0;
    const MasterResult exact = solve_master(cuts, d, cfg);
    cfg.master_mode = MasterMode::kQuboExact;
    const MasterResult viaqubo = solve_master(cuts, d, cfg);
    EXPECT_NEAR(viaqubo.objective, exact.objective, 1e-9);
    EXPECT_EQ(viaqubo.y, exact.y);
}

TEST(Run, LinearResidualConvergesQuickly) {
    // q(y) = 3 - 2 y through x >= 3 - 2y, x >= 0.
    MilpProblem p;
    p.c = {1.0};
    p.d = {0.5};
    p.add_coupling_row(Vector{1.0}, Vector{2.0}, 3.0);
    p.add_easy_row(Vector{1.0}, 0.0);
    const BendersTrace tr = run(p, oracle_config());
    EXPECT_EQ(tr.status, BendersStatus::kConverged);
    EXPECT_LE(tr.cuts_generated, 2u);
    EXPECT_NEAR(tr.upper, brute_force_solve(p).objective, 1e-6);
}

TEST(Run, InfeasibleInstanceIsReported) {
    MilpProblem p;
    p.c = {0.0};
    p.d = {0.0, 0.0};
    p.add_coupling_row(Vector{1.0}, Vector{0.0, 0.0}, 1.0);
    p.add_coupling_row(Vector{-1.0}, Vector{0.0, 0.0}, 0.0);
    const BendersTrace tr = run(p, oracle_config());
    EXPECT_EQ(tr.status, BendersStatus::kInfeasible);
    EXPECT_FALSE(std::isfinite(tr.upper));
}

TEST(Run, TraceQubitsFollowTheGrowthRule) {
    Rng rng(7);
    const MilpProblem p = testing::random_milp(rng, 3, 4, 4);
    BendersConfig cfg = oracle_config();
    cfg.max_cut_pool = 0;
    const BendersTrace tr = run(p, cfg);
    for (const auto& s : tr.steps) EXPECT_EQ(s.qubits, 4u + (1u + s.step) * 8u);
}

TEST(Run, PoolEvictsOldestPointCut) {
    std::vector<Cut> pool;
    BendersConfig cfg;
    for (int k = 0; k < 4; ++k) detail::add_to_pool(pool, point_cut({0.0}, k), 2);
    detail::add_to_pool(pool, ray_cut({0.0}, -1.0), 2);
    ASSERT_EQ(pool.size(), 3u);
    EXPECT_EQ(pool[0].constant, 2.0);
    EXPECT_EQ(pool[1].constant, 3.0);
    EXPECT_EQ(pool[2].kind, CutKind::kRay);
}

TEST(RunProperty, ExactMasterMatchesBruteForce) {
    Rng rng(2025);
    for (int trial = 0; trial < 30; ++trial) {
        const auto nx = static_cast<std::size_t>(rng.integer(1, 5));
        const auto ny = static_cast<std::size_t>(rng.integer(1, 6));
        const auto m = static_cast<std::size_t>(rng.integer(1, 6));
        const MilpProblem p = testing::random_milp(rng, nx, ny, m);
        const MilpSolution opt = brute_force_solve(p);
        const BendersTrace tr = run(p, oracle_config());
        ASSERT_EQ(tr.status, BendersStatus::kConverged) << "trial " << trial;
        EXPECT_NEAR(tr.upper, opt.objective, 1e-6) << "trial " << trial;
        EXPECT_LE(tr.steps.size(), 64u);
        double prev = -lp::kInf;
        for (const auto& s : tr.steps) {
            EXPECT_GE(s.lower, prev - 1e-9);
            EXPECT_LE(s.lower, opt.objective + 1e-6);
            prev = s.lower;
        }
    }
}

TEST(RunProperty, SampledMasterNeverClaimsAWrongOptimum) {
    Rng rng(77);
    for (int trial = 0; trial < 8; ++trial) {
        const MilpProblem p = testing::random_milp(rng, 2, 3, 3);
        const MilpSolution opt = brute_force_solve(p);
        BendersConfig cfg = oracle_config();
        cfg.master_mode = MasterMode::kQuboSa;
        cfg.max_steps = 20;
        cfg.anneal.reads = 10;
        cfg.anneal.sweeps = 300;
        cfg.eta_shift = -40.0;
        cfg.code = {7, 1.0};
        const BendersTrace tr = run(p, cfg);
        EXPECT_LE(tr.lower, opt.objective + 1e-6);
        if (tr.status == BendersStatus::kConverged) {
            EXPECT_NEAR(tr.upper, opt.objective, cfg.theta + 1e-6);
        }
    }
}

}  // namespace
}  // namespace qdecomp::benders
