// Command-line front end for the commutator laboratory.
//
// Exit codes across every subcommand: 0 success, 1 an asserted numerical
// check failed, 2 invalid input (bad flags, bad config, unreadable files).

#include <CLI11.hpp>

#include <katolab/constants.hpp>
#include <katolab/experiment.hpp>

#include <cstdio>

namespace {

int emit(const katolab::RunOutcome& out) {
    std::FILE* stream = out.exit_code == 2 ? stderr : stdout;
    std::fprintf(stream, "%s\n", out.message.c_str());
    return out.exit_code;
}

void add_verify_flags(CLI::App* cmd, katolab::VerifyOptions& opts) {
    cmd->add_option("--half-width", opts.half_width, "grid half-width L");
    cmd->add_option("--nodes", opts.nodes, "grid node count (odd)");
    cmd->add_option("--tol-scale", opts.tol_scale,
                    "multiply every check tolerance by this factor");
    cmd->add_flag("--report-only", opts.report_only,
                  "measure and report, but exit 0 even when checks fail");
    cmd->add_option("--out", opts.out_dir,
                    "directory for report.json, eigenvalues.csv, modes.csv");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for finite-rank commutators i[f(P), g(Q)]"};
    app.require_subcommand(1);

    std::string run_config;
    katolab::RunOptions run_opts;
    CLI::App* run = app.add_subcommand("run", "execute a JSON experiment configuration");
    run->add_option("--config", run_config, "experiment configuration (JSON)")->required();
    run->add_option("--out", run_opts.out_dir_override, "output directory override");
    run->add_option("--tol", run_opts.rel_tol_override,
                    "relative eigenvalue cutoff for rank and positivity")
        ->check(CLI::PositiveNumber);
    run->add_flag("--dump-kernel", run_opts.dump_kernel,
                  "also write both kernel matrices as CSV");

    double f_scale = katolab::PI / 2.0;
    katolab::VerifyOptions v1_opts;
    CLI::App* v1 = app.add_subcommand(
        "verify-rank-one", "check the canonical positive rank-one pair end to end");
    v1->add_option("--f-scale", f_scale,
                   "slope scale of f (default pi/2, the borderline pair)");
    add_verify_flags(v1, v1_opts);

    double beta = 0.1;
    katolab::VerifyOptions v3_opts;
    CLI::App* v3 = app.add_subcommand(
        "verify-rank-three", "check the sign-indefinite rank-three pair end to end");
    v3->add_option("--beta", beta, "weight of the second slope component, in [0, 0.5]");
    add_verify_flags(v3, v3_opts);

    std::string scan_config;
    katolab::ScanOptions scan_opts;
    CLI::App* scan = app.add_subcommand(
        "conjecture-scan", "sweep mixture pairs and tabulate spectrum vs strip product");
    scan->add_option("--config", scan_config, "sweep configuration (JSON)")->required();
    scan->add_option("--out", scan_opts.out_path, "output CSV path (default scan.csv)");
    scan->add_option("--threads", scan_opts.threads, "worker thread count")
        ->envname("KATOLAB_THREADS")
        ->check(CLI::Range(1, 1024));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (run->parsed()) return emit(katolab::run_experiment(run_config, run_opts));
    if (v1->parsed()) return emit(katolab::verify_rank_one(f_scale, v1_opts));
    if (v3->parsed()) return emit(katolab::verify_rank_three(beta, v3_opts));
    if (scan->parsed()) return emit(katolab::conjecture_scan(scan_config, scan_opts));
    return 2;
}
