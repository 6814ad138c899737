#include "ppmlab/config.hpp"

#include <fstream>
#include <set>

namespace ppmlab {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, _] : obj.items())
        if (allowed.find(key) == allowed.end())
            throw ConfigError(path + "/" + key + ": unknown key");
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

Vector parse_vector(const json& arr, const std::string& path) {
    if (!arr.is_array()) throw ConfigError(path + ": expected an array of numbers");
    Vector v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) throw ConfigError(path + ": expected numbers");
        v[i] = arr[i].get<double>();
    }
    return v;
}

Matrix parse_matrix(const json& arr, const std::string& path) {
    if (!arr.is_array() || arr.empty()) throw ConfigError(path + ": expected a matrix");
    const std::size_t cols = arr[0].size();
    Matrix m(arr.size(), cols);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        Vector row = parse_vector(arr[i], path);
        if (static_cast<std::size_t>(row.size()) != cols)
            throw ConfigError(path + ": ragged matrix rows");
        m.row(i) = row;
    }
    return m;
}

GaussianMixture parse_prior(const json& j) {
    check_keys(j, {"weights", "means", "covariances"}, "/prior");
    if (!j.contains("weights") || !j.contains("means") || !j.contains("covariances"))
        throw ConfigError("/prior: needs weights, means and covariances");
    Vector w = parse_vector(j["weights"], "/prior/weights");
    std::vector<Vector> means;
    for (std::size_t i = 0; i < j["means"].size(); ++i)
        means.push_back(parse_vector(j["means"][i], "/prior/means"));
    std::vector<Matrix> covs;
    for (std::size_t i = 0; i < j["covariances"].size(); ++i)
        covs.push_back(parse_matrix(j["covariances"][i], "/prior/covariances"));
    try {
        return GaussianMixture(w, means, covs);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("/prior: ") + e.what());
    }
}

LinearOperator parse_operator(const json& j) {
    check_keys(j, {"kind", "matrix", "indices", "input_dim"}, "/operator");
    const std::string kind = get_or<std::string>(j, "kind", "dense");
    try {
        if (kind == "dense") {
            if (!j.contains("matrix")) throw ConfigError("/operator: dense needs matrix");
            return LinearOperator::dense(parse_matrix(j["matrix"], "/operator/matrix"));
        }
        if (kind == "mask" || kind == "dft_mask") {
            if (!j.contains("indices") || !j.contains("input_dim"))
                throw ConfigError("/operator: mask kinds need indices and input_dim");
            std::vector<int> idx = j["indices"].get<std::vector<int>>();
            const int dim = j["input_dim"].get<int>();
            return kind == "mask" ? LinearOperator::mask(idx, dim)
                                  : LinearOperator::dft_mask(idx, dim);
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("/operator: ") + e.what());
    }
    throw ConfigError("/operator/kind: unknown kind '" + kind + "'");
}

const std::set<std::string> kCommonMethodKeys = {
    "name",         "iterations", "lr",          "particles", "lambda",
    "init_jitter",  "tail_fraction"};

std::set<std::string> method_keys(const std::string& name) {
    std::set<std::string> keys = kCommonMethodKeys;
    if (name == "ppm-vi" || name == "ppm-ai") {
        keys.insert({"aux", "aux_lr", "aux_pretrain_steps", "aux_steps_per_iter", "aux_batch",
                     "time_weight", "include_g2"});
    }
    if (name == "ppm-ai" || name == "ikl") {
        keys.insert({"dataset_size", "batch_size", "obs_noise"});
    }
    if (name == "reddiff" || name == "rlsd" || name == "ikl") {
        keys.insert({"omega", "shared_draws"});
    }
    if (name == "rlsd") keys.insert("gamma");
    if (name == "dps") keys.insert({"steps", "samples", "zeta", "guidance"});
    if (name == "ikl") keys.insert("mode");
    return keys;
}

} // namespace

const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> methods = {"ppm-vi", "ppm-ai", "reddiff",
                                                     "rlsd",   "dps",    "ikl"};
    return methods;
}

LinearGaussianProblem ExperimentConfig::build_problem(std::uint64_t seed) const {
    if (explicit_y_) return LinearGaussianProblem(*op_, *explicit_y_, sigma_y, explicit_x_true_);
    Rng rng(derive_seed(seed, 0x0B5E7Bull));
    return simulate_observation(*prior_, *op_, sigma_y, rng);
}

ExperimentConfig parse_config(const json& j) {
    check_keys(j,
               {"schedule", "prior", "operator", "sigma_y", "observation", "method",
                "evaluation", "seeds", "output_dir"},
               "");
    ExperimentConfig cfg;

    if (j.contains("schedule")) {
        const json& s = j["schedule"];
        check_keys(s, {"beta_min", "beta_max", "t_min"}, "/schedule");
        cfg.schedule.beta_min = get_or(s, "beta_min", cfg.schedule.beta_min);
        cfg.schedule.beta_max = get_or(s, "beta_max", cfg.schedule.beta_max);
        cfg.schedule.t_min = get_or(s, "t_min", cfg.schedule.t_min);
    }
    try {
        cfg.schedule.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("/schedule: ") + e.what());
    }

    if (!j.contains("prior")) throw ConfigError("/prior: required");
    cfg.prior_ = parse_prior(j["prior"]);
    if (!j.contains("operator")) throw ConfigError("/operator: required");
    cfg.op_ = parse_operator(j["operator"]);
    if (cfg.op_->input_dim() != cfg.prior_->dim())
        throw ConfigError("/operator/input_dim: does not match prior dimension");

    if (!j.contains("sigma_y")) throw ConfigError("/sigma_y: required");
    cfg.sigma_y = j["sigma_y"].get<double>();
    if (!(cfg.sigma_y > 0.0)) throw ConfigError("/sigma_y: must be > 0");

    if (j.contains("observation")) {
        const json& o = j["observation"];
        check_keys(o, {"y", "x_true", "simulate"}, "/observation");
        if (o.contains("y")) {
            Vector y = parse_vector(o["y"], "/observation/y");
            if (y.size() != cfg.op_->output_dim())
                throw ConfigError("/observation/y: dimension does not match operator");
            cfg.explicit_y_ = y;
            if (o.contains("x_true"))
                cfg.explicit_x_true_ = parse_vector(o["x_true"], "/observation/x_true");
        } else if (!get_or(o, "simulate", true)) {
            throw ConfigError("/observation: either give y or set simulate true");
        }
    }

    if (!j.contains("method")) throw ConfigError("/method: required");
    const json& m = j["method"];
    cfg.method.name = get_or<std::string>(m, "name", "");
    const auto& names = known_methods();
    if (std::find(names.begin(), names.end(), cfg.method.name) == names.end())
        throw ConfigError("/method/name: unknown method '" + cfg.method.name + "'");
    check_keys(m, method_keys(cfg.method.name), "/method");
    cfg.method.knobs = m;

    if (j.contains("evaluation")) {
        const json& e = j["evaluation"];
        check_keys(e,
                   {"posterior_samples", "radius_multiplier", "permutations",
                    "amortized_eval_samples"},
                   "/evaluation");
        cfg.evaluation.posterior_samples =
            get_or(e, "posterior_samples", cfg.evaluation.posterior_samples);
        cfg.evaluation.radius_multiplier =
            get_or(e, "radius_multiplier", cfg.evaluation.radius_multiplier);
        cfg.evaluation.permutations = get_or(e, "permutations", cfg.evaluation.permutations);
        cfg.evaluation.amortized_eval_samples =
            get_or(e, "amortized_eval_samples", cfg.evaluation.amortized_eval_samples);
    }

    if (j.contains("seeds")) {
        if (!j["seeds"].is_array() || j["seeds"].empty())
            throw ConfigError("/seeds: expected a nonempty array");
        for (const auto& s : j["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
    } else {
        cfg.seeds = {1};
    }
    cfg.output_dir = get_or<std::string>(j, "output_dir", "runs");

    cfg.resolved = j;
    if (!cfg.resolved.contains("seeds")) cfg.resolved["seeds"] = cfg.seeds;
    if (!cfg.resolved.contains("output_dir")) cfg.resolved["output_dir"] = cfg.output_dir;
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("parse error: ") + e.what());
    }
    return parse_config(j);
}

} // namespace ppmlab
