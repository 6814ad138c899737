#pragma once

#include "ppmlab/analysis.hpp"
#include "ppmlab/config.hpp"
#include "ppmlab/metrics.hpp"

#include <filesystem>
#include <optional>

namespace ppmlab {

/// One executed (method, seed) cell: evaluated samples plus artifact paths.
struct RunArtifacts {
    std::string method;
    std::uint64_t seed = 0;
    std::filesystem::path dir;
    EvalSummary summary;
    std::vector<Vector> samples;
    bool failed = false;
    std::string error;
};

/// Executes one method at one seed, writes config.json, metrics.csv,
/// particles.csv, iters.csv and a hash manifest into `dir`.
RunArtifacts run_single(const ExperimentConfig& cfg, const std::string& method,
                        std::uint64_t seed, const std::filesystem::path& dir);

struct ComparisonRow {
    std::string method;
    double diversity_mean = 0., diversity_se = 0.;
    double coverage_mean = 0., coverage_se = 0.;
    double residual_mean = 0., residual_se = 0.;
    double energy_mean = 0., energy_se = 0.;
    int runs = 0, failures = 0;
};

struct ComparisonResult {
    std::vector<RunArtifacts> cells;
    std::vector<ComparisonRow> rows;
    std::filesystem::path dir;
};

ComparisonResult run_comparison(const ExperimentConfig& cfg,
                                const std::vector<std::string>& methods,
                                const std::vector<std::uint64_t>& seeds,
                                const std::filesystem::path& out_dir, int jobs = 1);

/// Ground-truth bundle: posterior parameters, i.i.d. posterior samples and
/// (in 2D) a grid-density table for plotting.
void write_oracle_bundle(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::filesystem::path& dir, int n_samples = 10000,
                         int grid_resolution = 200);

/// Scatter-over-contours figure from a run directory (single panel) or a
/// comparison directory (one panel per method subdirectory).
std::string render_run_figure(const std::filesystem::path& run_or_compare_dir,
                              const std::optional<std::filesystem::path>& oracle_dir);

/// Named analysis experiments with documented defaults; returns the reports
/// and writes them under `dir` when given.
std::vector<BiasReport> run_analysis(const std::string& which,
                                     const std::optional<std::filesystem::path>& dir);

const std::vector<std::string>& known_analyses();

/// FNV-1a 64-bit content hash (hex) used by the artifact manifests.
std::string fnv1a_hex(const std::string& bytes);

/// CLI entry points; return process exit codes (0 ok, 1 runtime, 2 usage).
int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed_override,
            std::optional<std::string> out_override);
int cmd_compare(const std::string& config_path, std::vector<std::string> methods,
                std::vector<std::uint64_t> seeds, std::optional<std::string> out_override,
                int jobs);
int cmd_analyze(const std::string& which, std::optional<std::string> out_override);
int cmd_oracle(const std::string& config_path, std::optional<std::string> out_override);
int cmd_plot(const std::string& run_dir, std::optional<std::string> oracle_dir,
             std::optional<std::string> out_file);

} // namespace ppmlab
