#include "qdecomp/relu_verifier.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_util.hpp"

namespace qdecomp::relu {
namespace {

using testing::Rng;

Network random_net(Rng& rng, std::size_t d, std::vector<std::size_t> widths) {
    Network net;
    std::size_t in = d;
    for (std::size_t w : widths) {
        Layer l{Matrix(w, in), Vector(w)};
        for (std::size_t r = 0; r < w; ++r) {
            for (std::size_t c = 0; c < in; ++c) l.weights(r, c) = rng.uniform(-1.0, 1.0);
            l.bias[r] = rng.uniform(-1.0, 1.0);
        }
        net.layers.push_back(std::move(l));
        in = w;
    }
    return net;
}

Vector random_input(Rng& rng, std::size_t d) {
    Vector z(d);
    for (auto& v : z) v = rng.uniform(0.0, 1.0);
    return z;
}

VerificationInstance make_instance(const Network& net, const Vector& z, double eps) {
    VerificationInstance inst;
    inst.network = net;
    inst.z = z;
    inst.epsilon = eps;
    inst.true_class = unique_argmax(net.forward(z)).value_or(0);
    return inst;
}

/// Independent oracle: on each region with a fixed activation pattern of every
/// hidden neuron the network is affine in the input, so the smallest margin is a
/// minimum of LPs over the input box.
double pattern_enumeration_margin(const Network& net, const Vector& z, double eps, std::size_t t,
                                  std::size_t a) {
    const std::size_t d = net.input_size();
    std::size_t hidden = 0;
    for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) hidden += net.layers[i].weights.rows();
    double best = lp::kInf;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << hidden); ++mask) {
        lp::LpProblem region = lp::LpProblem::free_variables(d);
        for (std::size_t j = 0; j < d; ++j) {
            region.lower[j] = std::max(0.0, z[j] - eps);
            region.upper[j] = std::min(1.0, z[j] + eps);
        }
        // Affine map input -> current activations: act = M z + off.
        Matrix M(d, d);
        for (std::size_t j = 0; j < d; ++j) M(j, j) = 1.0;
        Vector off(d, 0.0);
        std::size_t bit = 0;
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            const Layer& L = net.layers[i];
            Matrix nm(L.weights.rows(), d);
            Vector no(L.weights.rows(), 0.0);
            for (std::size_t r = 0; r < L.weights.rows(); ++r) {
                no[r] = L.bias[r];
                for (std::size_t k = 0; k < L.weights.cols(); ++k) {
                    no[r] += L.weights(r, k) * off[k];
                    for (std::size_t j = 0; j < d; ++j) nm(r, j) += L.weights(r, k) * M(k, j);
                }
            }
            if (i + 1 == net.layers.size()) {
                for (std::size_t j = 0; j < d; ++j) region.objective[j] = nm(t, j) - nm(a, j);
                const lp::LpOutcome out = lp::solve(region);
                if (out.status == lp::LpStatus::kOptimal) {
                    best = std::min(best, out.objective + no[t] - no[a]);
                }
                break;
            }
            for (std::size_t r = 0; r < L.weights.rows(); ++r, ++bit) {
                const bool on = (mask >> bit) & 1u;
                Vector row(d);
                for (std::size_t j = 0; j < d; ++j) row[j] = on ? nm(r, j) : -nm(r, j);
                region.add_row(row, lp::Sense::kGreaterEqual, on ? -no[r] : no[r]);
                if (!on) {
                    for (std::size_t j = 0; j < d; ++j) nm(r, j) = 0.0;
                    no[r] = 0.0;
                }
            }
            M = nm;
            off = no;
        }
    }
    return best;
}

TEST(Network, ForwardAndValidation) {
    Network net;
    net.layers.push_back({Matrix{{1.0, -1.0}, {0.5, 0.5}}, Vector{0.0, -1.0}});
    net.layers.push_back({Matrix{{1.0, 0.0}, {0.0, 1.0}}, Vector{0.0, 0.0}});
    const Vector f = net.forward(Vector{0.75, 0.25});
    EXPECT_NEAR(f[0], 0.5, 1e-12);
    EXPECT_NEAR(f[1], 0.0, 1e-12);
    net.layers[1].bias = {0.0};
    EXPECT_THROW(net.validate(), Error);
    EXPECT_EQ(unique_argmax(Vector{1.0, 1.0}), std::nullopt);
}

TEST(Ibp, ZeroRadiusIsTheForwardPass) {
    Rng rng(1);
    const Network net = random_net(rng, 3, {4, 4, 3});
    const Vector z = random_input(rng, 3);
    const LayerBounds b = ibp_bounds(net, z, 0.0);
    const auto pre = net.pre_activations(z);
    for (std::size_t i = 0; i < pre.size(); ++i) {
        for (std::size_t k = 0; k < pre[i].size(); ++k) {
            EXPECT_NEAR(b.lower[i][k], pre[i][k], 1e-12);
            EXPECT_NEAR(b.upper[i][k], pre[i][k], 1e-12);
        }
    }
}

TEST(Ibp, IdentityLayerGivesTheBox) {
    Network net;
    net.layers.push_back({Matrix{{1.0, 0.0}, {0.0, 1.0}}, Vector{0.0, 0.0}});
    const LayerBounds b = ibp_bounds(net, Vector{0.5, 0.95}, 0.1);
    EXPECT_NEAR(b.lower[0][0], 0.4, 1e-12);
    EXPECT_NEAR(b.upper[0][0], 0.6, 1e-12);
    EXPECT_NEAR(b.upper[0][1], 1.0, 1e-12);
    EXPECT_THROW(ibp_bounds(net, Vector{1.5, 0.0}, 0.1), Error);
}

TEST(IbpProperty, SampledActivationsStayInside) {
    Rng rng(2);
    for (int trial = 0; trial < 5; ++trial) {
        const Network net = random_net(rng, 4, {4, 4, 3});
        const Vector z = random_input(rng, 4);
        const double eps = 0.1;
        const LayerBounds b = ibp_bounds(net, z, eps);
        for (int s = 0; s < 1000; ++s) {
            Vector zt(4);
            for (std::size_t j = 0; j < 4; ++j) {
                zt[j] = std::clamp(z[j] + rng.uniform(-eps, eps), 0.0, 1.0);
            }
            const auto pre = net.pre_activations(zt);
            for (std::size_t i = 0; i < pre.size(); ++i) {
                for (std::size_t k = 0; k < pre[i].size(); ++k) {
                    ASSERT_GE(pre[i][k], b.lower[i][k] - 1e-12);
                    ASSERT_LE(pre[i][k], b.upper[i][k] + 1e-12);
                }
            }
        }
    }
}

TEST(EarlyCertificate, Cases) {
    Rng rng(3);
    const Network net = random_net(rng, 2, {4, 4, 3});
    const Vector z = random_input(rng, 2);
    const std::size_t t = *unique_argmax(net.forward(z));
    EXPECT_TRUE(early_certificate(net, ibp_bounds(net, z, 0.0), t));
    // f_0 - f_1 = x - 0.5: certified at x = 1 alone, not over the whole domain.
    Network shifted;
    shifted.layers.push_back({Matrix{{1.0}, {0.0}}, Vector{-0.5, 0.0}});
    EXPECT_TRUE(early_certificate(shifted, ibp_bounds(shifted, Vector{1.0}, 0.0), 0));
    EXPECT_FALSE(early_certificate(shifted, ibp_bounds(shifted, Vector{1.0}, 1.0), 0));
    // f_0 - f_1 = x with x in [0, 1]: lower bound 0 is not a certificate.
    Network edge;
    edge.layers.push_back({Matrix{{1.0}, {0.0}}, Vector{0.0, 0.0}});
    EXPECT_FALSE(early_certificate(edge, ibp_bounds(edge, Vector{0.5}, 0.5), 0));
}

TEST(Encoding, AllStableIsAPureLp) {
    Rng rng(4);
    const Network net = random_net(rng, 2, {3, 2});
    const Vector z = random_input(rng, 2);
    const LayerBounds b = ibp_bounds(net, z, 0.0);
    const ReluEncoding enc = encode_milp(net, b, 0, 1);
    EXPECT_EQ(enc.problem.n_y(), 0u);
    const MilpSolution s = brute_force_solve(enc.problem);
    const Vector f = net.forward(z);
    EXPECT_NEAR(s.objective, f[0] - f[1], 1e-9);
}

TEST(Encoding, SingleUnstableNeuron) {
    // x_hat = z - 0.5 with z in [0, 1]; output (x, 0).
    Network net;
    net.layers.push_back({Matrix{{1.0}}, Vector{-0.5}});
    net.layers.push_back({Matrix{{1.0}, {0.0}}, Vector{0.0, 0.0}});
    const LayerBounds b = ibp_bounds(net, Vector{0.5}, 0.5);
    const ReluEncoding enc = encode_milp(net, b, 0, 1);
    ASSERT_EQ(enc.problem.n_y(), 1u);
    const std::size_t pre = enc.pre_begin[0], post = enc.post_begin[0];
    for (double zv : {0.0, 0.25, 0.75, 1.0}) {
        Vector x = enc.assignment(net, Vector{zv});
        const Bits y = enc.pattern(net, Vector{zv});
        EXPECT_TRUE(is_feasible(enc.problem, x, y));
        // Flipping the indicator breaks feasibility whenever x_hat != 0.
        Bits other{static_cast<std::uint8_t>(1 - y[0])};
        EXPECT_FALSE(is_feasible(enc.problem, x, other));
        // y = 1 pins x to x_hat; y = 0 pins it to 0.
        x[post] = y[0] ? x[pre] + 0.1 : 0.1;
        EXPECT_FALSE(is_feasible(enc.problem, x, y));
    }
}

TEST(EncodingProperty, MilpOptimumEqualsPatternOracle) {
    Rng rng(5);
    for (int trial = 0; trial < 15; ++trial) {
        const Network net = random_net(rng, 2, {3, 3, 3});
        const Vector z = random_input(rng, 2);
        const double eps = 0.2;
        const LayerBounds b = ibp_bounds(net, z, eps);
        const ReluEncoding enc = encode_milp(net, b, 0, 2);
        const MilpSolution s = brute_force_solve(enc.problem);
        ASSERT_EQ(s.status, SolveStatus::kOptimal);
        EXPECT_NEAR(s.objective, pattern_enumeration_margin(net, z, eps, 0, 2), 1e-6);
    }
}

TEST(ExactCertify, ZeroRadiusMatchesPrediction) {
    Rng rng(6);
    const Network net = random_net(rng, 3, {4, 4, 3});
    const Vector z = random_input(rng, 3);
    VerificationInstance inst = make_instance(net, z, 0.0);
    EXPECT_EQ(exact_certify(inst).kind, VerdictKind::kRobust);
    inst.true_class = (inst.true_class + 1) % 3;
    const Verdict v = exact_certify(inst);
    EXPECT_EQ(v.kind, VerdictKind::kNotRobust);
    EXPECT_EQ(v.evidence, Evidence::kMisclassified);
}

TEST(ExactCertify, LinearNetworkMarginIsTheLpValue) {
    Network net;
    net.layers.push_back({Matrix{{2.0, 1.0}, {0.0, 1.0}}, Vector{0.0, 0.0}});
    VerificationInstance inst;
    inst.network = net;
    inst.z = {0.5, 0.5};
    inst.epsilon = 0.1;
    inst.true_class = 0;
    const Verdict v = exact_certify(inst);
    EXPECT_NEAR(*v.margin, 0.8, 1e-9);
    EXPECT_EQ(v.kind, VerdictKind::kRobust);
}

TEST(ExactCertify, TooManyUnstable) {
    // Twenty copies of z - 0.5 over z in [0, 1] are all unstable.
    Network net;
    net.layers.push_back({Matrix(20, 1, 1.0), Vector(20, -0.5)});
    net.layers.push_back({Matrix(2, 20, 0.0), Vector{1.0, 0.0}});
    VerificationInstance inst;
    inst.network = net;
    inst.z = {0.5};
    inst.epsilon = 0.5;
    inst.true_class = 0;
    try {
        exact_certify(inst);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kTooManyUnstable);
    }
}

struct SuiteCase {
    Network net;
    Vector z;
};

std::vector<SuiteCase> tiny_suite(std::uint64_t seed, int count) {
    Rng rng(seed);
    std::vector<SuiteCase> out;
    for (int k = 0; k < count; ++k) {
        const auto d = static_cast<std::size_t>(rng.integer(2, 4));
        out.push_back({random_net(rng, d, {4, 4, 3}), random_input(rng, d)});
    }
    return out;
}

TEST(ExactCertifyProperty, AgreesWithPatternOracle) {
    for (const auto& c : tiny_suite(8, 12)) {
        for (double eps : {0.0, 4.0 / 255, 16.0 / 255}) {
            const VerificationInstance inst = make_instance(c.net, c.z, eps);
            const Verdict v = exact_certify(inst);
            double oracle = lp::kInf;
            for (std::size_t a = 0; a < 3; ++a) {
                if (a != inst.true_class) {
                    oracle = std::min(oracle, pattern_enumeration_margin(c.net, c.z, eps, inst.true_class, a));
                }
            }
            EXPECT_EQ(v.kind == VerdictKind::kRobust, oracle > kRobustMargin);
            EXPECT_NEAR(*v.margin, oracle, 1e-6);
        }
    }
}

dw::DwConfig dw_config() {
    dw::DwConfig cfg;
    cfg.theta = 1e-6;
    cfg.max_steps = 20;
    return cfg;
}

benders::BendersConfig bd_config() {
    benders::BendersConfig cfg;
    cfg.theta = 1e-6;
    cfg.max_steps = 300;
    cfg.max_cut_pool = 0;
    return cfg;
}

TEST(CertifyDw, IbpShortCircuit) {
    Rng rng(9);
    const Network net = random_net(rng, 3, {4, 4, 3});
    const VerificationInstance inst = make_instance(net, random_input(rng, 3), 0.0);
    const Verdict v = certify_dw(inst, dw_config());
    EXPECT_EQ(v.kind, VerdictKind::kRobust);
    EXPECT_EQ(v.evidence, Evidence::kIbp);
    EXPECT_EQ(v.steps(), 0u);
}

TEST(CertifyDw, ConstructedAdversary) {
    // f_0 - f_1 = relu(z - 0.5) - relu(0.5 - z) + 0.05 is negative near z = 0.
    Network net;
    net.layers.push_back({Matrix{{1.0}, {-1.0}}, Vector{-0.5, 0.5}});
    net.layers.push_back({Matrix{{1.0, -1.0}, {0.0, 0.0}}, Vector{0.05, 0.0}});
    VerificationInstance inst;
    inst.network = net;
    inst.z = {0.5};
    inst.epsilon = 0.5;
    inst.true_class = 0;
    const Verdict exact = exact_certify(inst);
    ASSERT_EQ(exact.kind, VerdictKind::kNotRobust);
    EXPECT_LT(*exact.margin, 0.0);
    const Verdict v = certify_dw(inst, dw_config());
    EXPECT_EQ(v.kind, VerdictKind::kNotRobust);
    const Verdict bd = certify_bd(inst, bd_config());
    EXPECT_EQ(bd.kind, VerdictKind::kNotRobust);
    EXPECT_EQ(bd.evidence, Evidence::kCounterexample);
}

TEST(CertifyProperty, SoundAndConservative) {
    int exact_robust = 0, dw_robust = 0, bd_robust = 0;
    for (const auto& c : tiny_suite(10, 12)) {
        for (double eps : {1.0 / 255, 16.0 / 255, 0.1}) {
            const VerificationInstance inst = make_instance(c.net, c.z, eps);
            const Verdict exact = exact_certify(inst);
            CertifyOptions opts;
            opts.ibp_early_exit = false;
            const Verdict dwv = certify_dw(inst, dw_config(), opts);
            const Verdict bdv = certify_bd(inst, bd_config(), opts);
            const bool robust = exact.kind == VerdictKind::kRobust;
            exact_robust += robust;
            dw_robust += dwv.kind == VerdictKind::kRobust;
            bd_robust += bdv.kind == VerdictKind::kRobust;
            if (dwv.kind == VerdictKind::kRobust) {
                EXPECT_TRUE(robust);
            }
            if (bdv.kind == VerdictKind::kRobust) {
                EXPECT_TRUE(robust);
            }
            // The exact Benders master decides every pair.
            EXPECT_EQ(bdv.kind, exact.kind);
            if (dwv.kind == VerdictKind::kNotRobust && dwv.evidence == Evidence::kCounterexample) {
                EXPECT_FALSE(robust);
            }
            for (const auto& cr : dwv.classes) {
                EXPECT_LE(cr.phi_hat, cr.phi + 1e-6);
                EXPECT_LE(cr.max_qubits, 8u);
            }
        }
    }
    EXPECT_LE(dw_robust, exact_robust);
    EXPECT_LE(bd_robust, exact_robust);
}

TEST(CertifyProperty, DwValueNeverExceedsTheExactMargin) {
    for (const auto& c : tiny_suite(11, 10)) {
        const VerificationInstance base = make_instance(c.net, c.z, 0.1);
        for (std::size_t a = 0; a < 3; ++a) {
            if (a == base.true_class) continue;
            VerificationInstance inst = base;
            inst.adversarial_class = a;
            const Verdict exact = exact_certify(inst);
            CertifyOptions opts;
            opts.ibp_early_exit = false;
            dw::DwConfig cfg = dw_config();
            cfg.max_steps = 200;
            const Verdict v = certify_dw(inst, cfg, opts);
            if (v.classes.empty()) continue;
            EXPECT_LE(v.classes.front().phi_hat, *exact.margin + 1e-5);
        }
    }
}

}  // namespace
}  // namespace qdecomp::relu
