#pragma once

#include "ppmlab/problem.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// vendored single-header nlohmann/json
#include <json.hpp>

namespace ppmlab {

/// Schema violation in an experiment-config file. The message carries the
/// JSON-pointer-style path of the offending key.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct EvaluationConfig {
    int posterior_samples = 4096;
    double radius_multiplier = 3.0;
    int permutations = 200;
    int amortized_eval_samples = 64;
};

struct MethodSpec {
    std::string name; // ppm-vi | ppm-ai | reddiff | rlsd | dps | ikl
    nlohmann::json knobs;
};

/// Parsed, validated experiment description. A run is reproducible from the
/// resolved snapshot plus a seed alone.
class ExperimentConfig {
public:
    VpSchedule schedule;
    double sigma_y = 1.0;
    MethodSpec method;
    EvaluationConfig evaluation;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "runs";
    nlohmann::json resolved; // normalized snapshot of the full config

    const GaussianMixture& prior() const { return *prior_; }
    const LinearOperator& op() const { return *op_; }

    /// Problem instance shared by every method at a given seed: either the
    /// explicit observation from the file or a simulation derived from the
    /// seed.
    LinearGaussianProblem build_problem(std::uint64_t seed) const;

    friend ExperimentConfig parse_config(const nlohmann::json& j);

private:
    std::optional<GaussianMixture> prior_;
    std::optional<LinearOperator> op_;
    std::optional<Vector> explicit_y_;
    std::optional<Vector> explicit_x_true_;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Known method names, in canonical comparison order.
const std::vector<std::string>& known_methods();

} // namespace ppmlab
