#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "commands.hpp"

namespace {

using namespace qdecomp;

void add_solver_flags(CLI::App* app, cli::SolverFlags& f, const char* default_method,
                      std::initializer_list<std::string> methods) {
    f.method = default_method;
    app->add_option("--method", f.method, "Decomposition")->check(CLI::IsMember(methods))->capture_default_str();
    app->add_option("--master", f.master, "Benders master solver")
            ->check(CLI::IsMember({"exact", "qubo_sa", "qubo_exact"}))
            ->capture_default_str();
    app->add_option("--sampler", f.sampler, "Binary pricing sampler")
            ->check(CLI::IsMember({"exact", "sa"}))
            ->capture_default_str();
    app->add_option("--gap", f.gap, "Convergence gap theta")->check(CLI::NonNegativeNumber)->capture_default_str();
    app->add_option("--max-steps", f.max_steps, "Iteration limit (0: 20 for dw, 15 for bd)")->capture_default_str();
    app->add_option("--reads", f.reads, "Annealing reads")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--sweeps", f.sweeps, "Sweeps per read")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--alpha-bound", f.alpha_bound, "Box on the subproblem multipliers")->capture_default_str();
    app->add_option("--wa", f.w_a, "Objective weight in the master QUBO")->capture_default_str();
    app->add_option("--wp", f.w_p, "Penalty weight in the master QUBO")->capture_default_str();
    app->add_option("--ns", f.n_s, "Bits per fixed-point value")->capture_default_str();
    app->add_option("--w", f.w, "Fixed-point step")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--prune", f.prune, "Relative pruning threshold")->capture_default_str();
    app->add_option("--pool", f.pool, "Point cuts kept (0: all)")->capture_default_str();
    app->add_option("--eta-shift", f.eta_shift, "Offset of the encoded eta")->capture_default_str();
    app->add_option("--seed", f.seed, "Random seed")->capture_default_str();
    app->add_option("--threads", f.threads, "Threads for annealing reads")->check(CLI::PositiveNumber)
            ->capture_default_str();
}

void emit(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        io::write_file(out_path, text);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Benders and Dantzig-Wolfe decomposition with QUBO subproblems"};
    app.require_subcommand(1);
    std::string out_path;

    cli::SolverFlags solve_flags;
    std::string milp_path;
    auto* solve = app.add_subcommand("solve", "Solve a MILP file and write the trace CSV");
    solve->add_option("milp", milp_path, "MILP JSON file")->required();
    solve->add_option("-o,--out", out_path, "Output file (default stdout)");
    add_solver_flags(solve, solve_flags, "dw", {"dw", "bd"});

    cli::SolverFlags verify_flags;
    cli::VerifyFlags vflags;
    std::string network_path, samples_path;
    auto* verify = app.add_subcommand("verify", "Certify samples of a ReLU network and write the report CSV");
    verify->add_option("--network", network_path, "Network JSON file")->required();
    verify->add_option("--samples", samples_path, "Samples CSV file")->required();
    verify->add_option("--epsilon", vflags.epsilon, "Radius of the l-infinity ball")->required()
            ->check(CLI::NonNegativeNumber);
    verify->add_option("--jobs", vflags.jobs, "Samples certified in parallel")->check(CLI::PositiveNumber)
            ->capture_default_str();
    verify->add_option("--domain-lower", vflags.domain_lower, "Input domain lower end")->capture_default_str();
    verify->add_option("--domain-upper", vflags.domain_upper, "Input domain upper end")->capture_default_str();
    bool no_ibp = false;
    verify->add_flag("--no-ibp", no_ibp, "Disable the interval bound early exit");
    verify->add_flag("--timing", vflags.timing, "Record wall_ms (otherwise 0)");
    verify->add_option("-o,--out", out_path, "Output file (default stdout)");
    add_solver_flags(verify, verify_flags, "dw", {"dw", "bd", "exact"});

    cli::GenFlags gflags;
    std::string hidden = "4,4", gen_network_path;
    auto* gen = app.add_subcommand("gen", "Generate a random MILP, network or sample file");
    gen->add_option("kind", gflags.kind, "milp | network | samples")->required()
            ->check(CLI::IsMember({"milp", "network", "samples"}));
    gen->add_option("--seed", gflags.seed, "Random seed")->capture_default_str();
    gen->add_option("--nx", gflags.milp.n_x, "Real variables")->capture_default_str();
    gen->add_option("--ny", gflags.milp.n_y, "Binary variables")->capture_default_str();
    gen->add_option("--m", gflags.milp.m, "Complicating rows")->capture_default_str();
    gen->add_option("--input", gflags.network.input, "Network input size")->capture_default_str();
    gen->add_option("--hidden", hidden, "Hidden widths, comma separated")->capture_default_str();
    gen->add_option("--classes", gflags.network.classes, "Output classes")->capture_default_str();
    gen->add_option("--network", gen_network_path, "Network JSON labelling the samples");
    gen->add_option("--count", gflags.count, "Samples")->capture_default_str();
    gen->add_option("--label-noise", gflags.label_noise, "Fraction of wrong labels")
            ->check(CLI::Range(0.0, 1.0))->capture_default_str();
    gen->add_option("-o,--out", out_path, "Output file (default stdout)");

    std::size_t bench_ny = 10, bench_ns = 8, bench_steps = 10;
    auto* bench = app.add_subcommand("bench-qubits", "Qubit counts per step for both methods");
    bench->add_option("--ny", bench_ny, "Binary variables")->capture_default_str();
    bench->add_option("--ns", bench_ns, "Bits per fixed-point value")->capture_default_str();
    bench->add_option("--steps", bench_steps, "Steps")->capture_default_str();
    bench->add_option("-o,--out", out_path, "Output file (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        cli::CommandResult res;
        if (*solve) {
            res = cli::cmd_solve(io::read_file(milp_path), solve_flags);
        } else if (*verify) {
            vflags.ibp = !no_ibp;
            res = cli::cmd_verify(io::read_file(network_path), io::read_file(samples_path), verify_flags,
                                  vflags);
        } else if (*gen) {
            gflags.network.hidden.clear();
            for (const auto& w : io::detail::split(hidden, ',')) {
                if (!io::detail::trim(w).empty()) {
                    gflags.network.hidden.push_back(io::detail::to_count(w, "--hidden"));
                }
            }
            if (gflags.kind == "samples") {
                if (gen_network_path.empty()) throw Error(ErrorCode::kInvalidArgument, "gen samples needs --network");
                gflags.network_text = io::read_file(gen_network_path);
            }
            res = cli::cmd_gen(gflags);
        } else {
            res = cli::cmd_bench_qubits(bench_ny, bench_ns, bench_steps);
        }
        emit(out_path, res.output);
        if (!res.summary.empty()) std::cerr << res.summary << "\n";
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kExitError;
    }
}
