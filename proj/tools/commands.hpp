#pragma once

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "qdecomp/qdecomp.hpp"

namespace qdecomp::cli {

inline constexpr int kExitConverged = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitStepLimit = 2;

/// Solver flags shared by solve and verify.
struct SolverFlags {
    std::string method = "dw";
    std::string master = "exact";
    std::string sampler = "exact";
    double gap = 1.0;
    /// 0 picks the method default: 20 for dw, 15 for bd.
    std::size_t max_steps = 0;
    std::size_t reads = 100;
    std::size_t sweeps = 50000;
    double alpha_bound = 5.0;
    double w_a = 0.1;
    double w_p = 0.01;
    std::size_t n_s = 8;
    double w = 0.1;
    double prune = 0.05;
    std::size_t pool = 5;
    double eta_shift = 0.0;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

struct CommandResult {
    int exit_code = kExitConverged;
    /// CSV or JSON payload.
    std::string output;
    /// Human-readable summary for stderr.
    std::string summary;
};

inline anneal::AnnealConfig anneal_config(const SolverFlags& f, std::uint64_t seed) {
    anneal::AnnealConfig a;
    a.reads = f.reads;
    a.sweeps = f.sweeps;
    a.seed = seed;
    a.threads = f.threads;
    return a;
}

inline benders::BendersConfig benders_config(const SolverFlags& f, std::uint64_t seed) {
    benders::BendersConfig c;
    c.alpha_bound = f.alpha_bound;
    c.theta = f.gap;
    c.max_steps = f.max_steps ? f.max_steps : 15;
    c.code = {f.n_s, f.w};
    c.w_a = f.w_a;
    c.w_p = f.w_p;
    c.max_cut_pool = f.pool;
    c.eta_shift = f.eta_shift;
    c.prune = f.prune;
    c.anneal = anneal_config(f, seed);
    if (f.master == "exact") c.master_mode = benders::MasterMode::kExact;
    else if (f.master == "qubo_sa") c.master_mode = benders::MasterMode::kQuboSa;
    else if (f.master == "qubo_exact") c.master_mode = benders::MasterMode::kQuboExact;
    else throw Error(ErrorCode::kInvalidArgument, "unknown master mode " + f.master);
    return c;
}

inline dw::DwConfig dw_config(const SolverFlags& f, std::uint64_t seed) {
    dw::DwConfig c;
    c.theta = f.gap;
    c.max_steps = f.max_steps ? f.max_steps : 20;
    c.n_s = f.n_s;
    c.anneal = anneal_config(f, seed);
    if (f.sampler == "exact") c.sampler = dw::Sampler::kExact;
    else if (f.sampler == "sa") c.sampler = dw::Sampler::kSa;
    else throw Error(ErrorCode::kInvalidArgument, "unknown sampler " + f.sampler);
    return c;
}

/// Runs Benders or Dantzig-Wolfe on a MILP file and returns its trace CSV.
inline CommandResult cmd_solve(const std::string& milp_text, const SolverFlags& f) {
    const MilpProblem p = io::parse_milp(milp_text);
    CommandResult res;
    if (f.method == "bd") {
        const benders::BendersTrace tr = benders::run(p, benders_config(f, f.seed));
        res.output = io::benders_trace_csv(tr);
        res.summary = std::string("benders: ") + to_string(tr.status) + ", lower " + io::fmt(tr.lower) +
                      ", upper " + io::fmt(tr.upper) + ", steps " + std::to_string(tr.steps.size()) +
                      ", max qubits " + std::to_string(tr.max_qubits);
        if (tr.eta_range_warning) res.summary += " (eta left the fixed-point range)";
        if (tr.status == benders::BendersStatus::kInfeasible) res.exit_code = kExitError;
        else if (tr.status == benders::BendersStatus::kStepLimit) res.exit_code = kExitStepLimit;
    } else if (f.method == "dw") {
        const dw::DwTrace tr = dw::run(p, dw::initial_columns(p), dw_config(f, f.seed));
        res.output = io::dw_trace_csv(tr);
        res.summary = std::string("dantzig_wolfe: ") + to_string(tr.status) + ", phi " + io::fmt(tr.phi) +
                      ", bound " + io::fmt(tr.phi_hat) + ", steps " + std::to_string(tr.steps.size()) +
                      ", max qubits " + std::to_string(tr.max_qubits);
        if (tr.status == dw::DwStatus::kStepLimit) res.exit_code = kExitStepLimit;
    } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown method " + f.method);
    }
    return res;
}

struct VerifyFlags {
    double epsilon = 0.0;
    bool ibp = true;
    bool timing = false;
    std::size_t jobs = 1;
    double domain_lower = 0.0;
    double domain_upper = 1.0;
};

/// Certifies every sample; rows come out in sample order whatever the job count.
inline CommandResult cmd_verify(const std::string& network_text, const std::string& samples_text,
                                const SolverFlags& f, const VerifyFlags& v) {
    const relu::Network net = io::parse_network(network_text);
    const std::vector<gen::Sample> samples = io::parse_samples(samples_text);
    if (!(v.epsilon >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
    if (f.method != "dw" && f.method != "bd" && f.method != "exact") {
        throw Error(ErrorCode::kInvalidArgument, "unknown method " + f.method);
    }
    relu::CertifyOptions opts;
    opts.ibp_early_exit = v.ibp;

    std::vector<std::vector<io::ReportRow>> rows(samples.size());
    std::vector<std::string> errors(samples.size());
    auto certify = [&](std::size_t id) {
        relu::VerificationInstance inst;
        inst.network = net;
        inst.z = samples[id].features;
        inst.epsilon = v.epsilon;
        inst.true_class = samples[id].label;
        inst.domain = {v.domain_lower, v.domain_upper};
        const std::uint64_t seed = splitmix64(f.seed + id);
        const auto start = std::chrono::steady_clock::now();
        try {
            relu::Verdict verdict;
            if (f.method == "dw") verdict = relu::certify_dw(inst, dw_config(f, seed), opts);
            else if (f.method == "bd") verdict = relu::certify_bd(inst, benders_config(f, seed), opts);
            else verdict = relu::exact_certify(inst);
            const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
            rows[id] = io::report_rows(id, inst.true_class, verdict, v.timing ? ms.count() : 0.0);
        } catch (const Error& e) {
            rows[id] = {{id, std::to_string(inst.true_class) + "-*", "error", 0, 0, 0.0, 0.0, 0.0}};
            errors[id] = e.what();
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(v.jobs, 1, std::max<std::size_t>(samples.size(), 1));
    if (jobs == 1) {
        for (std::size_t id = 0; id < samples.size(); ++id) certify(id);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t id = t; id < samples.size(); id += jobs) certify(id);
            });
        }
        for (auto& th : pool) th.join();
    }

    std::vector<io::ReportRow> flat;
    CommandResult res;
    for (std::size_t id = 0; id < samples.size(); ++id) {
        flat.insert(flat.end(), rows[id].begin(), rows[id].end());
        if (!errors[id].empty()) res.summary += "sample " + std::to_string(id) + ": " + errors[id] + "\n";
    }
    res.output = io::report_csv(flat);
    const io::Aggregate a = io::aggregate(flat);
    res.summary += "certified " + std::to_string(a.certified) + "/" + std::to_string(a.samples) +
                   ", qubits " + io::fmt(a.qubits_mean) + " +- " + io::fmt(a.qubits_std);
    return res;
}

/// Per-step qubit counts of both methods and the reduction 100 (1 - DW / BD).
inline CommandResult cmd_bench_qubits(std::size_t n_y, std::size_t n_s, std::size_t steps) {
    const auto bd = qubo::qubit_budget(qubo::Method::kBenders, n_y, n_s, 0, steps);
    const auto dw = qubo::qubit_budget(qubo::Method::kDantzigWolfe, n_y, n_s, 0, steps);
    CommandResult res;
    res.output = "step,bd,dw,reduction_pct\n";
    for (std::size_t t = 0; t < steps; ++t) {
        const auto b = static_cast<double>(bd.per_step[t]);
        const auto d = static_cast<double>(dw.per_step[t]);
        const double pct = b > 0.0 ? 100.0 * (1.0 - d / b) : 0.0;
        res.output += std::to_string(t + 1) + "," + std::to_string(bd.per_step[t]) + "," +
                      std::to_string(dw.per_step[t]) + "," + io::fmt(pct) + "\n";
    }
    return res;
}

struct GenFlags {
    std::string kind = "milp";
    std::uint64_t seed = 0;
    gen::MilpSize milp;
    gen::NetworkShape network;
    std::string network_text;
    std::size_t count = 10;
    double label_noise = 0.0;
};

inline CommandResult cmd_gen(const GenFlags& g) {
    CommandResult res;
    if (g.kind == "milp") {
        res.output = io::dump_json(io::milp_to_json(gen::random_milp(g.milp, g.seed)));
    } else if (g.kind == "network") {
        res.output = io::dump_json(io::network_to_json(gen::random_network(g.network, g.seed)));
    } else if (g.kind == "samples") {
        const relu::Network net = io::parse_network(g.network_text);
        res.output = io::samples_to_csv(gen::random_samples(net, g.count, g.seed, g.label_noise));
    } else {
        throw Error(ErrorCode::kInvalidArgument, "unknown kind " + g.kind);
    }
    return res;
}

}  // namespace qdecomp::cli
