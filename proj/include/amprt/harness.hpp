#pragma once

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

#include "amprt/numerics.hpp"
#include "amprt/trajectory.hpp"

namespace amprt {

inline constexpr const char* kVersion = "0.1.0";

// Fully resolved description of one command run. Output location and job count are
// deliberately absent: they do not influence any result.
struct ExperimentConfig {
    std::string command = "simulate";  // simulate | se | cobweb | crossover | bayesmix-fit | bayesmix-apply | bayesmix-demo
    std::string model = "gmm";         // gmm | glm
    double gamma = 1.5;
    double alpha = 0.8;
    double p = 0.4;
    double pi_plus = 0.3;
    int n = 1000;
    std::string link = "sign";
    // opt | opt-plugin | identity | ft | ct | hard-ft | hard-ct | ft-limit | ct-limit
    std::string aggregator = "opt";
    double beta = 100.0;  // sharpness of the smoothed ft / ct aggregators
    int T = 10;
    int replications = 10;
    std::uint64_t seed = 1;
    int order = 0;  // quadrature order; 0 selects the library defaults
    // se / cobweb
    double eta1 = 0.0;  // > 0 starts the eta iteration from this value instead of the initialisation
    double u1 = 0.04;
    double u_max = 10.0;
    int grid = 200;
    // crossover
    std::vector<double> p_list{0.2, 0.25, 0.3};
    // bayesmix
    std::string logits;
    std::string fit;
    int em_max_iters = 500;
    double em_tol = 1e-10;
    double sigma_floor = 0.0;
    double ridge = 1.0;
    int d = 0;  // > 0 overrides alpha with d / n
    bool save_data = false;

    void validate() const;
    int resolved_d() const;
    double resolved_alpha() const;
    // Canonical JSON (fixed key order); from_json(to_json()) round-trips exactly.
    std::string to_json(bool pretty = false) const;
    static ExperimentConfig from_json(const std::string& text);
};

struct ReportRow {
    int t = 0;
    double se_error = 0.0;
    double emp_mean = 0.0;
    double emp_std = 0.0;
    double gap = 0.0;
    int n_ok = 0;
};

struct ComparisonReport {
    std::vector<ReportRow> rows;            // t = 0..T; t = 0 is the all-zero start, error undefined (NaN)
    std::vector<Trajectory> replications;   // indexed by replication
    double max_gap() const;                 // over t >= 1, ignoring NaN
    int n_failed() const;
};

// SE-predicted test error for t = 1..T (NaN where the SE does not describe the run).
std::vector<double> predicted_errors(const ExperimentConfig& cfg);

// Runs the replications on up to `jobs` threads; replication r draws from RngStream(seed, r),
// so the result does not depend on jobs.
ComparisonReport run_simulation(const ExperimentConfig& cfg, int jobs = 1);

struct RunOptions {
    std::string out_dir;
    int jobs = 1;
    std::ostream* log = nullptr;
};

// Executes cfg.command and writes its files to opt.out_dir (created if needed).
// Returns the list of files written.
std::vector<std::string> run_command(const ExperimentConfig& cfg, const RunOptions& opt);

// Config JSON embedded in any file the harness writes (config.json, fit.json, or a
// '#'-prefixed "config:" line).
std::string extract_config(const std::string& file_text);

// $AMPRT_OUT_DIR when set and non-empty, otherwise "amprt_out".
std::string default_out_dir();

// 0 ok, 1 other, 2 config, 3 numerical divergence, 4 I/O, 5 parse.
int exit_code_for(const std::exception& e);

}  // namespace amprt
