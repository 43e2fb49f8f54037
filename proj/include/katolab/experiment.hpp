#pragma once

#include <string>

namespace katolab {

/// Options shared by the `run` entry point (mirrors the CLI flags).
struct RunOptions {
    std::string out_dir_override;   ///< --out; overrides the config's out_dir
    double rel_tol_override = -1.0; ///< --tol; rank cutoff, <= 0 keeps default
    bool dump_kernel = false;       ///< --dump-kernel
};

/// What a pipeline produced: a process exit code (0 ok, 1 assertion failed,
/// 2 invalid input) plus a human-readable summary for the terminal.
struct RunOutcome {
    int exit_code = 0;
    std::string message;
};

/// Execute a JSON experiment configuration.  All parsing and validation
/// happens before any computation; no output file is written unless the
/// configuration is fully valid.
RunOutcome run_experiment(const std::string& config_path, const RunOptions& opts);

struct VerifyOptions {
    double half_width = 20.0;
    int nodes = 801;
    double tol_scale = 1.0;   ///< multiplies every check tolerance
    bool report_only = false; ///< report measurements but always exit 0
    std::string out_dir;      ///< empty: print only, write nothing
};

/// Verification protocol for the canonical rank-one pair g = tanh,
/// f = tanh(f_scale * .).  With f_scale = pi/2 the full battery of checks
/// applies; other scales are measured and reported (use report_only).
RunOutcome verify_rank_one(double f_scale, const VerifyOptions& opts);

/// Verification protocol for the rank-three pair g = tanh,
/// f = tanh(pi/2 * .) + beta * tanh(pi * .), beta in [0, 1/2].
/// beta = 0 degenerates to the rank-one pair and is verified as such.
RunOutcome verify_rank_three(double beta, const VerifyOptions& opts);

struct ScanOptions {
    int threads = 1;
    std::string out_path = "scan.csv";
};

/// Evaluate a list of pairs (spectrum + strip report) and write one CSV row
/// per pair.  Row order and content are independent of the thread count.
RunOutcome conjecture_scan(const std::string& config_path, const ScanOptions& opts);

} // namespace katolab
