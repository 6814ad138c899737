#include "ppmlab/harness.hpp"

#include "ppmlab/svg.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace ppmlab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

template <typename T>
T knob(const json& knobs, const std::string& key, T fallback) {
    if (!knobs.contains(key)) return fallback;
    try {
        return knobs.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("/method/" + key + ": " + e.what());
    }
}

TimeWeight parse_omega(const std::string& id, const VpSchedule& s) {
    if (id == "one") return TimeWeight::one();
    if (id == "snr") return TimeWeight::snr(s);
    throw ConfigError("/method/omega: unknown weight '" + id + "'");
}

PpmConfig make_ppm_config(const MethodSpec& m, const VpSchedule& s, std::uint64_t seed) {
    PpmConfig c;
    c.iterations = knob(m.knobs, "iterations", 1500);
    c.lr = knob(m.knobs, "lr", 0.03);
    c.num_particles = knob(m.knobs, "particles", 64);
    c.lambda = knob(m.knobs, "lambda", 1.0);
    c.init_jitter = knob(m.knobs, "init_jitter", 0.5);
    c.tail_fraction = knob(m.knobs, "tail_fraction", 0.25);
    const std::string aux = knob<std::string>(m.knobs, "aux", "analytic");
    if (aux == "analytic")
        c.aux_mode = AuxMode::OracleAnalytic;
    else if (aux == "learned")
        c.aux_mode = AuxMode::Learned;
    else
        throw ConfigError("/method/aux: unknown auxiliary mode '" + aux + "'");
    c.aux_adam.lr = knob(m.knobs, "aux_lr", 1e-3);
    c.aux_pretrain_steps = knob(m.knobs, "aux_pretrain_steps", 1500);
    c.aux_steps_per_iter = knob(m.knobs, "aux_steps_per_iter", 1);
    c.aux_batch = knob(m.knobs, "aux_batch", 64);
    c.time_weight = parse_omega(knob<std::string>(m.knobs, "time_weight", "one"), s);
    c.include_diffusion_factor = knob(m.knobs, "include_g2", true);
    c.obs_noise = knob(m.knobs, "obs_noise", 0.0);
    c.batch_size = knob(m.knobs, "batch_size", 32);
    c.seed = seed;
    return c;
}

BaselineConfig make_baseline_config(const std::string& method, const MethodSpec& m,
                                    const VpSchedule& s, std::uint64_t seed) {
    BaselineConfig c;
    c.method = method;
    c.iterations = knob(m.knobs, "iterations", 1500);
    c.lr = knob(m.knobs, "lr", 0.03);
    c.num_particles = knob(m.knobs, "particles", method == "reddiff" ? 8 : 64);
    c.lambda = knob(m.knobs, "lambda", 1.0);
    c.init_jitter = knob(m.knobs, "init_jitter", 0.5);
    c.tail_fraction = knob(m.knobs, "tail_fraction", 0.25);
    c.shared_draws = knob(m.knobs, "shared_draws", false);
    c.seed = seed;
    // RED-Diff's omega defaults to the SNR-style weighting
    const std::string omega_default = (method == "reddiff" || method == "rlsd") ? "snr" : "one";
    c.omega = parse_omega(knob<std::string>(m.knobs, "omega", omega_default), s);
    c.repulsion_gamma = knob(m.knobs, "gamma", 1.0);
    c.dps_steps = knob(m.knobs, "steps", 1000);
    c.dps_samples = knob(m.knobs, "samples", 64);
    c.zeta = knob(m.knobs, "zeta", 1.0);
    const std::string guidance = knob<std::string>(m.knobs, "guidance", "residual");
    if (guidance == "residual")
        c.guidance = DpsGuidance::ResidualNormalized;
    else if (guidance == "likelihood")
        c.guidance = DpsGuidance::Likelihood;
    else
        throw ConfigError("/method/guidance: unknown guidance '" + guidance + "'");
    const std::string mode = knob<std::string>(m.knobs, "mode", "particle");
    if (mode == "particle")
        c.ikl_mode = IklMode::Particle;
    else if (mode == "amortized")
        c.ikl_mode = IklMode::Amortized;
    else
        throw ConfigError("/method/mode: unknown mode '" + mode + "'");
    c.obs_noise = knob(m.knobs, "obs_noise", 0.0);
    c.batch_size = knob(m.knobs, "batch_size", 32);
    return c;
}

std::vector<LinearGaussianProblem> build_dataset(const ExperimentConfig& cfg,
                                                 std::uint64_t seed, int size) {
    Rng rng(derive_seed(seed, 0xDA7A5Eull));
    std::vector<LinearGaussianProblem> out;
    out.reserve(size);
    for (int i = 0; i < size; ++i)
        out.push_back(simulate_observation(cfg.prior(), cfg.op(), cfg.sigma_y, rng));
    return out;
}

std::vector<Vector> amortized_eval_samples(const FeedForwardNet& generator,
                                           const LinearGaussianProblem& prob, double obs_noise,
                                           int count, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xE7A2ull));
    const double std_dev = std::sqrt(obs_noise);
    std::vector<Vector> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        Vector input = prob.y() + std_dev * rng.normal_vector(prob.y().size());
        out.push_back(generator.forward(input));
    }
    return out;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string metrics_csv(const RunArtifacts& a) {
    std::ostringstream os;
    os << "method,seed,diversity,diversity_offset,residual_rms,mode_coverage,"
          "assignment_fractions,energy_distance,gaussian_kl\n";
    os << a.method << "," << a.seed << "," << fmt17(a.summary.diversity) << ","
       << fmt17(a.summary.diversity_offset) << "," << fmt17(a.summary.residual_rms) << ","
       << fmt17(a.summary.mode_coverage) << ",\"";
    for (std::size_t i = 0; i < a.summary.assignment_fractions.size(); ++i) {
        if (i) os << "|";
        os << fmt17(a.summary.assignment_fractions[i]);
    }
    os << "\"," << fmt17(a.summary.energy_distance) << ",";
    if (a.summary.gaussian_kl) os << fmt17(*a.summary.gaussian_kl);
    os << "\n";
    return os.str();
}

std::string particles_csv(const std::vector<Vector>& samples) {
    std::ostringstream os;
    const int d = samples.empty() ? 0 : static_cast<int>(samples[0].size());
    os << "index";
    for (int j = 0; j < d; ++j) os << ",x" << j;
    os << "\n";
    for (std::size_t i = 0; i < samples.size(); ++i) {
        os << i;
        for (int j = 0; j < d; ++j) os << "," << fmt17(samples[i][j]);
        os << "\n";
    }
    return os.str();
}

std::string iters_csv(const RunRecord& rec) {
    std::ostringstream os;
    os << "iteration,residual_rms,prior_loss,diversity\n";
    for (std::size_t i = 0; i < rec.iterations.size(); ++i) {
        const auto& st = rec.iterations[i];
        os << i << "," << fmt17(st.residual_rms) << "," << fmt17(st.prior_loss) << ","
           << fmt17(st.diversity) << "\n";
    }
    return os.str();
}

json generator_json(const FeedForwardNet& net) {
    json j;
    j["widths"] = net.widths();
    const Vector flat = net.flatten();
    std::vector<double> data(flat.data(), flat.data() + flat.size());
    j["parameters"] = data;
    return j;
}

} // namespace

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunArtifacts run_single(const ExperimentConfig& cfg, const std::string& method,
                        std::uint64_t seed, const fs::path& dir) {
    RunArtifacts art;
    art.method = method;
    art.seed = seed;
    art.dir = dir;
    fs::create_directories(dir);

    const LinearGaussianProblem problem = cfg.build_problem(seed);
    AnalyticMixtureScore prior_oracle(cfg.prior(), cfg.schedule);

    std::optional<RunRecord> record;
    std::optional<FeedForwardNet> generator;

    if (method == "ppm-vi") {
        PpmConfig pc = make_ppm_config(cfg.method, cfg.schedule, seed);
        record = run_ppm_vi(pc, problem, cfg.prior(), cfg.schedule);
        art.samples = record->final_particles.particles;
    } else if (method == "ppm-ai") {
        PpmConfig pc = make_ppm_config(cfg.method, cfg.schedule, seed);
        const int ds = knob(cfg.method.knobs, "dataset_size", 256);
        auto dataset = build_dataset(cfg, seed, ds);
        AmortizedResult res = run_ppm_amortized(pc, dataset, cfg.prior(), cfg.schedule);
        generator = std::move(res.generator);
        record = std::move(res.record);
        art.samples = amortized_eval_samples(*generator, problem, pc.obs_noise,
                                             cfg.evaluation.amortized_eval_samples, seed);
    } else if (method == "reddiff" || method == "rlsd" || method == "ikl") {
        BaselineConfig bc = make_baseline_config(method, cfg.method, cfg.schedule, seed);
        if (method == "ikl" && bc.ikl_mode == IklMode::Amortized) {
            const int ds = knob(cfg.method.knobs, "dataset_size", 256);
            auto dataset = build_dataset(cfg, seed, ds);
            AmortizedResult res = run_ikl_amortized(bc, dataset, prior_oracle, cfg.schedule);
            generator = std::move(res.generator);
            record = std::move(res.record);
            art.samples = amortized_eval_samples(*generator, problem, bc.obs_noise,
                                                 cfg.evaluation.amortized_eval_samples, seed);
        } else {
            if (method == "reddiff")
                record = run_reddiff(bc, problem, prior_oracle, cfg.schedule);
            else if (method == "rlsd")
                record = run_rlsd(bc, problem, prior_oracle, cfg.schedule);
            else
                record = run_ikl(bc, problem, prior_oracle, cfg.schedule);
            art.samples = record->final_particles.particles;
        }
    } else if (method == "dps") {
        BaselineConfig bc = make_baseline_config(method, cfg.method, cfg.schedule, seed);
        art.samples = run_dps(bc, problem, prior_oracle, cfg.schedule);
    } else {
        throw ConfigError("unknown method '" + method + "'");
    }

    // evaluation against the exact posterior
    const GaussianMixture posterior = analytic_posterior(cfg.prior(), problem);
    Rng eval_rng(derive_seed(seed, 0xE7A1ull));
    std::vector<Vector> post_samples;
    post_samples.reserve(cfg.evaluation.posterior_samples);
    for (int i = 0; i < cfg.evaluation.posterior_samples; ++i)
        post_samples.push_back(posterior.sample(eval_rng));
    art.summary = evaluate_samples(art.samples, problem, posterior, post_samples,
                                   cfg.evaluation.radius_multiplier);

    // artifacts
    json snapshot = cfg.resolved;
    snapshot["resolved_method"] = method;
    snapshot["resolved_seed"] = seed;
    const std::string config_str = snapshot.dump(2) + "\n";
    const std::string metrics_str = metrics_csv(art);
    const std::string particles_str = particles_csv(art.samples);
    write_text_file(dir / "config.json", config_str);
    write_text_file(dir / "metrics.csv", metrics_str);
    write_text_file(dir / "particles.csv", particles_str);

    json manifest;
    manifest["files"]["config.json"] = fnv1a_hex(config_str);
    manifest["files"]["metrics.csv"] = fnv1a_hex(metrics_str);
    manifest["files"]["particles.csv"] = fnv1a_hex(particles_str);
    double wall = 0.0;
    if (record) {
        const std::string iters_str = iters_csv(*record);
        write_text_file(dir / "iters.csv", iters_str);
        manifest["files"]["iters.csv"] = fnv1a_hex(iters_str);
        wall = record->wall_time_sec;
    }
    if (generator) {
        const std::string gen_str = generator_json(*generator).dump() + "\n";
        write_text_file(dir / "generator.json", gen_str);
        manifest["files"]["generator.json"] = fnv1a_hex(gen_str);
    }
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

    json info;
    info["wall_time_sec"] = wall;
    write_text_file(dir / "run_info.json", info.dump(2) + "\n");
    return art;
}

ComparisonResult run_comparison(const ExperimentConfig& cfg,
                                const std::vector<std::string>& methods,
                                const std::vector<std::uint64_t>& seeds,
                                const fs::path& out_dir, int jobs) {
    require(!methods.empty() && !seeds.empty(), "run_comparison: empty grid");
    for (const auto& m : methods) {
        const auto& known = known_methods();
        if (std::find(known.begin(), known.end(), m) == known.end())
            throw ConfigError("unknown method '" + m + "' in comparison");
    }
    fs::create_directories(out_dir);

    struct Cell {
        std::string method;
        std::uint64_t seed;
        int index;
    };
    std::vector<Cell> cells;
    for (std::size_t mi = 0; mi < methods.size(); ++mi)
        for (const auto s : seeds)
            cells.push_back({methods[mi], s, static_cast<int>(cells.size())});

    ComparisonResult result;
    result.dir = out_dir;
    result.cells.resize(cells.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            const Cell& cell = cells[i];
            std::ostringstream name;
            name << cell.method << "-seed" << cell.seed;
            RunArtifacts art;
            try {
                art = run_single(cfg, cell.method, cell.seed, out_dir / name.str());
            } catch (const std::exception& e) {
                art.method = cell.method;
                art.seed = cell.seed;
                art.dir = out_dir / name.str();
                art.failed = true;
                art.error = e.what();
            }
            result.cells[i] = std::move(art);
        }
    };
    const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // per-method aggregation
    for (const auto& m : methods) {
        ComparisonRow row;
        row.method = m;
        std::vector<double> div, cov, res, en;
        for (const auto& cell : result.cells) {
            if (cell.method != m) continue;
            ++row.runs;
            if (cell.failed) {
                ++row.failures;
                continue;
            }
            div.push_back(cell.summary.diversity);
            cov.push_back(cell.summary.mode_coverage);
            res.push_back(cell.summary.residual_rms);
            en.push_back(cell.summary.energy_distance);
        }
        auto mean_se = [](const std::vector<double>& v) -> std::pair<double, double> {
            if (v.empty()) return {0.0, 0.0};
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= v.size();
            if (v.size() < 2) return {mean, 0.0};
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            var /= (v.size() - 1);
            return {mean, std::sqrt(var / v.size())};
        };
        std::tie(row.diversity_mean, row.diversity_se) = mean_se(div);
        std::tie(row.coverage_mean, row.coverage_se) = mean_se(cov);
        std::tie(row.residual_mean, row.residual_se) = mean_se(res);
        std::tie(row.energy_mean, row.energy_se) = mean_se(en);
        result.rows.push_back(row);
    }

    std::ostringstream cells_csv;
    cells_csv << "method,seed,status,diversity,mode_coverage,residual_rms,energy_distance,"
                 "error\n";
    for (const auto& c : result.cells) {
        cells_csv << c.method << "," << c.seed << "," << (c.failed ? "failed" : "ok") << ",";
        if (c.failed)
            cells_csv << ",,,,\"" << c.error << "\"";
        else
            cells_csv << fmt17(c.summary.diversity) << "," << fmt17(c.summary.mode_coverage)
                      << "," << fmt17(c.summary.residual_rms) << ","
                      << fmt17(c.summary.energy_distance) << ",";
        cells_csv << "\n";
    }
    write_text_file(out_dir / "comparison_cells.csv", cells_csv.str());

    std::ostringstream summary_csv;
    summary_csv << "method,runs,failures,diversity_mean,diversity_se,coverage_mean,"
                   "coverage_se,residual_mean,residual_se,energy_mean,energy_se\n";
    for (const auto& r : result.rows) {
        summary_csv << r.method << "," << r.runs << "," << r.failures << ","
                    << fmt17(r.diversity_mean) << "," << fmt17(r.diversity_se) << ","
                    << fmt17(r.coverage_mean) << "," << fmt17(r.coverage_se) << ","
                    << fmt17(r.residual_mean) << "," << fmt17(r.residual_se) << ","
                    << fmt17(r.energy_mean) << "," << fmt17(r.energy_se) << "\n";
    }
    write_text_file(out_dir / "comparison_summary.csv", summary_csv.str());
    return result;
}

void write_oracle_bundle(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& dir,
                         int n_samples, int grid_resolution) {
    fs::create_directories(dir);
    const LinearGaussianProblem problem = cfg.build_problem(seed);
    const GaussianMixture posterior = analytic_posterior(cfg.prior(), problem);
    const int d = posterior.dim();

    json params;
    params["weights"] = std::vector<double>(posterior.weights().data(),
                                            posterior.weights().data() + posterior.components());
    for (int i = 0; i < posterior.components(); ++i) {
        json comp;
        comp["mean"] =
            std::vector<double>(posterior.mean(i).data(), posterior.mean(i).data() + d);
        std::vector<std::vector<double>> cov(d, std::vector<double>(d));
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) cov[r][c] = posterior.cov(i)(r, c);
        comp["covariance"] = cov;
        params["components"].push_back(comp);
    }
    params["seed"] = seed;
    write_text_file(dir / "posterior_params.json", params.dump(2) + "\n");

    Rng rng(derive_seed(seed, 0x04AC1Eull));
    std::ostringstream samples_csv;
    samples_csv << "index";
    for (int j = 0; j < d; ++j) samples_csv << ",x" << j;
    samples_csv << "\n";
    for (int i = 0; i < n_samples; ++i) {
        Vector x = posterior.sample(rng);
        samples_csv << i;
        for (int j = 0; j < d; ++j) samples_csv << "," << fmt17(x[j]);
        samples_csv << "\n";
    }
    write_text_file(dir / "posterior_samples.csv", samples_csv.str());

    if (d != 2) {
        write_text_file(dir / "grid_notice.txt",
                        "grid density omitted: posterior dimension is " + std::to_string(d) +
                            ", grid tables are emitted for d == 2 only\n");
        return;
    }

    // bounding box: component means +/- 4 std per coordinate
    Vector lo = posterior.mean(0), hi = posterior.mean(0);
    for (int i = 0; i < posterior.components(); ++i) {
        for (int c = 0; c < 2; ++c) {
            const double s = std::sqrt(posterior.cov(i)(c, c));
            lo[c] = std::min(lo[c], posterior.mean(i)[c] - 4.0 * s);
            hi[c] = std::max(hi[c], posterior.mean(i)[c] + 4.0 * s);
        }
    }
    std::ostringstream grid_csv;
    grid_csv << "x,y,density\n";
    for (int iy = 0; iy < grid_resolution; ++iy) {
        const double y = lo[1] + (hi[1] - lo[1]) * iy / (grid_resolution - 1);
        for (int ix = 0; ix < grid_resolution; ++ix) {
            const double x = lo[0] + (hi[0] - lo[0]) * ix / (grid_resolution - 1);
            Vector pt(2);
            pt << x, y;
            grid_csv << fmt17(x) << "," << fmt17(y) << ","
                     << fmt17(std::exp(posterior.log_density(pt))) << "\n";
        }
    }
    write_text_file(dir / "grid_density.csv", grid_csv.str());
}

namespace {

std::vector<Vector> read_particles_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing artifact: " + path.string());
    std::string line;
    std::getline(in, line); // header
    std::vector<Vector> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool first = true;
        while (std::getline(ss, cell, ',')) {
            if (first) {
                first = false;
                continue;
            }
            row.push_back(std::stod(cell));
        }
        Vector v(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) v[i] = row[i];
        out.push_back(std::move(v));
    }
    return out;
}

GridDensity read_grid_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing artifact: " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<double> xs, ys, vals;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        const double x = std::stod(cell);
        std::getline(ss, cell, ',');
        const double y = std::stod(cell);
        std::getline(ss, cell, ',');
        vals.push_back(std::stod(cell));
        if (ys.empty() || y != ys.back()) ys.push_back(y);
        if (ys.size() == 1) xs.push_back(x);
    }
    GridDensity g;
    g.xs = xs;
    g.ys = ys;
    g.values = Matrix(ys.size(), xs.size());
    for (std::size_t i = 0; i < ys.size(); ++i)
        for (std::size_t j = 0; j < xs.size(); ++j) g.values(i, j) = vals[i * xs.size() + j];
    return g;
}

FigurePanel make_panel(const std::string& title, const std::vector<Vector>& particles,
                       const std::optional<GridDensity>& grid) {
    FigurePanel panel;
    panel.title = title;
    if (grid) {
        panel.x_lo = grid->xs.front();
        panel.x_hi = grid->xs.back();
        panel.y_lo = grid->ys.front();
        panel.y_hi = grid->ys.back();
        const double peak = grid->values.maxCoeff();
        for (double frac : {0.75, 0.5, 0.25, 0.1, 0.03}) {
            auto segs = marching_squares(*grid, frac * peak);
            panel.contour_segments.insert(panel.contour_segments.end(), segs.begin(),
                                          segs.end());
        }
    } else if (!particles.empty()) {
        Vector lo = particles[0], hi = particles[0];
        for (const auto& p : particles) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const double pad = std::max(1e-6, 0.15 * (hi - lo).norm());
        panel.x_lo = lo[0] - pad;
        panel.x_hi = hi[0] + pad;
        panel.y_lo = (lo.size() > 1 ? lo[1] : -1.0) - pad;
        panel.y_hi = (hi.size() > 1 ? hi[1] : 1.0) + pad;
    }
    for (const auto& p : particles)
        panel.points.emplace_back(p[0], p.size() > 1 ? p[1] : 0.0);
    return panel;
}

} // namespace

std::string render_run_figure(const fs::path& run_or_compare_dir,
                              const std::optional<fs::path>& oracle_dir) {
    std::optional<GridDensity> grid;
    if (oracle_dir && fs::exists(*oracle_dir / "grid_density.csv"))
        grid = read_grid_csv(*oracle_dir / "grid_density.csv");

    std::vector<FigurePanel> panels;
    if (fs::exists(run_or_compare_dir / "particles.csv")) {
        panels.push_back(make_panel(run_or_compare_dir.filename().string(),
                                    read_particles_csv(run_or_compare_dir / "particles.csv"),
                                    grid));
    } else {
        std::vector<fs::path> subdirs;
        if (fs::exists(run_or_compare_dir))
            for (const auto& entry : fs::directory_iterator(run_or_compare_dir))
                if (entry.is_directory() && fs::exists(entry.path() / "particles.csv"))
                    subdirs.push_back(entry.path());
        std::sort(subdirs.begin(), subdirs.end());
        for (const auto& sub : subdirs)
            panels.push_back(make_panel(sub.filename().string(),
                                        read_particles_csv(sub / "particles.csv"), grid));
    }
    if (panels.empty())
        throw std::runtime_error("no particles.csv found under " + run_or_compare_dir.string());
    return render_figure(panels);
}

const std::vector<std::string>& known_analyses() {
    static const std::vector<std::string> which = {"kl-contraction", "effective-beta",
                                                   "ikl-bias",       "map-equivalence",
                                                   "gradient-check", "de-bruijn"};
    return which;
}

namespace {

// Shared 1D conjugate setup of the bias experiments: prior N(0,1), y = 2,
// sigma_y = 1, F = identity.
struct ConjugateCase {
    Gaussian prior;
    LinearGaussianProblem prob;
    VpSchedule schedule;
};

ConjugateCase conjugate_case() {
    Gaussian prior{Vector::Zero(1), Matrix::Identity(1, 1)};
    Vector y(1);
    y << 2.0;
    LinearGaussianProblem prob(LinearOperator::dense(Matrix::Identity(1, 1)), y, 1.0);
    return {prior, prob, VpSchedule{}};
}

BiasReport gap_report(const std::string& name, double measured_gap, double tol,
                      std::uint64_t seed, const std::string& note) {
    BiasReport r;
    r.experiment = name;
    r.seed = seed;
    r.predicted = 0.0;
    r.measured = measured_gap;
    r.abs_gap = measured_gap;
    r.rel_gap = measured_gap;
    r.tolerance = tol;
    r.pass = measured_gap < tol;
    r.note = note;
    return r;
}

} // namespace

std::vector<BiasReport> run_analysis(const std::string& which,
                                     const std::optional<fs::path>& dir) {
    std::vector<BiasReport> reports;
    const VpSchedule s{};

    if (which == "kl-contraction") {
        Vector delta(2);
        delta << 2.0, 0.0;
        std::vector<double> grid;
        for (int i = 0; i < 50; ++i) grid.push_back(s.t_max * i / 49.0);
        auto ratios = kl_contraction_ratios(delta, s, grid);
        double max_gap = 0.0;
        for (const auto& [t, ratio] : ratios) {
            const double a = s.alpha(t);
            max_gap = std::max(max_gap, std::abs(ratio - a * a));
        }
        reports.push_back(gap_report("kl-contraction", max_gap, 1e-12, 0,
                                     "max |ratio - alpha_t^2| over a 50-point grid"));
    } else if (which == "effective-beta") {
        const TimeWeight one = TimeWeight::one();
        const double beta = effective_beta(one, s);
        double riemann = 0.0;
        const long n = 1000000;
        const double h = s.time_range() / n;
        for (long i = 0; i < n; ++i) {
            const double t = s.t_min + (i + 0.5) * h;
            const double a = s.alpha(t);
            riemann += a * a * h;
        }
        BiasReport r = gap_report("effective-beta", std::abs(beta - riemann), 1e-8, 0,
                                  "adaptive Simpson vs 1e6-point midpoint Riemann sum");
        r.predicted = riemann;
        r.measured = beta;
        r.pass = r.abs_gap < r.tolerance;
        reports.push_back(r);
    } else if (which == "ikl-bias") {
        auto c = conjugate_case();
        reports.push_back(
            ikl_bias_experiment(c.prior, c.prob, TimeWeight::one(), c.schedule, 11));
    } else if (which == "map-equivalence") {
        auto c = conjugate_case();
        reports.push_back(map_equivalence_check(c.prior, c.prob, c.schedule, 17));
    } else if (which == "gradient-check") {
        Gaussian prior{Vector::Zero(2), Matrix::Identity(2, 2)};
        prior.mean << 0.3, -0.2;
        Vector mu(2);
        mu << 1.2, 0.8;
        for (double t : {0.1, 0.3, 0.5, 0.7, 0.9})
            reports.push_back(ppm_gradient_check(prior, mu, s, t, 100000, 3));
        GradientScaling sc =
            ppm_gradient_scaling(prior, mu, s, 0.5, {1000, 10000, 100000}, 20, 5);
        BiasReport slope;
        slope.experiment = "gradient-check-scaling";
        slope.predicted = -0.5;
        slope.measured = sc.loglog_slope;
        slope.abs_gap = std::abs(sc.loglog_slope + 0.5);
        slope.rel_gap = slope.abs_gap / 0.5;
        slope.tolerance = 0.1;
        slope.pass = slope.abs_gap <= 0.1;
        slope.seed = 5;
        std::ostringstream note;
        note << "rms rel errors:";
        for (std::size_t i = 0; i < sc.draw_counts.size(); ++i)
            note << " n=" << sc.draw_counts[i] << ":" << sc.rms_rel_errors[i];
        slope.note = note.str();
        reports.push_back(slope);
    } else if (which == "de-bruijn") {
        Rng rng(23);
        double max_resid = 0.0;
        for (int i = 0; i < 10; ++i) {
            const int d = 2;
            Gaussian q{rng.normal_vector(d), Matrix::Identity(d, d)};
            Gaussian p{rng.normal_vector(d), Matrix::Identity(d, d)};
            Matrix aq(d, d), ap(d, d);
            for (int r = 0; r < d; ++r)
                for (int c = 0; c < d; ++c) {
                    aq(r, c) = 0.4 * rng.normal();
                    ap(r, c) = 0.4 * rng.normal();
                }
            q.cov = 0.5 * Matrix::Identity(d, d) + aq * aq.transpose();
            p.cov = 0.5 * Matrix::Identity(d, d) + ap * ap.transpose();
            const double t = rng.uniform(0.05, 0.95);
            max_resid = std::max(max_resid, de_bruijn_residual(q, p, s, t));
        }
        reports.push_back(gap_report("de-bruijn", max_resid, 1e-3, 23,
                                     "max relative residual of -dKL/dt = (g^2/2) Fisher over "
                                     "10 random Gaussian pairs"));
    } else {
        throw ConfigError("unknown analysis '" + which + "'");
    }

    if (dir) {
        fs::create_directories(*dir);
        json out = json::array();
        for (const auto& r : reports) {
            json jr;
            jr["experiment"] = r.experiment;
            jr["predicted"] = r.predicted;
            jr["measured"] = r.measured;
            jr["abs_gap"] = r.abs_gap;
            jr["rel_gap"] = r.rel_gap;
            jr["tolerance"] = r.tolerance;
            jr["pass"] = r.pass;
            jr["seed"] = r.seed;
            jr["note"] = r.note;
            out.push_back(jr);
        }
        write_text_file(*dir / (which + ".json"), out.dump(2) + "\n");
    }
    return reports;
}

namespace {

fs::path resolve_out(const std::string& configured,
                     const std::optional<std::string>& override_dir) {
    fs::path base = override_dir ? fs::path(*override_dir) : fs::path(configured);
    if (base.is_relative()) {
        if (const char* root = std::getenv("PPMLAB_OUT_ROOT")) base = fs::path(root) / base;
    }
    return base;
}

void print_report_line(const BiasReport& r) {
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.experiment << ": measured "
              << r.measured << " vs predicted " << r.predicted << " (gap " << r.abs_gap
              << ", tol " << r.tolerance << ") — " << r.note << "\n";
}

} // namespace

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed_override,
            std::optional<std::string> out_override) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        const std::uint64_t seed = seed_override ? *seed_override : cfg.seeds.front();
        const fs::path out = resolve_out(cfg.output_dir, out_override);
        std::ostringstream name;
        name << cfg.method.name << "-seed" << seed;
        RunArtifacts art = run_single(cfg, cfg.method.name, seed, out / name.str());
        std::cout << "run complete: " << art.dir.string() << "\n"
                  << "  diversity " << art.summary.diversity << ", coverage "
                  << art.summary.mode_coverage << ", residual_rms "
                  << art.summary.residual_rms << ", energy " << art.summary.energy_distance
                  << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << "\n";
        return 1;
    }
}

int cmd_compare(const std::string& config_path, std::vector<std::string> methods,
                std::vector<std::uint64_t> seeds, std::optional<std::string> out_override,
                int jobs) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        if (methods.empty()) methods = {cfg.method.name};
        if (seeds.empty()) seeds = cfg.seeds;
        const fs::path out = resolve_out(cfg.output_dir, out_override) / "compare";
        ComparisonResult res = run_comparison(cfg, methods, seeds, out, jobs);
        std::cout << "method            diversity        coverage         residual         "
                     "energy\n";
        for (const auto& r : res.rows) {
            std::printf("%-16s  %7.4f±%6.4f  %7.4f±%6.4f  %7.4f±%6.4f  %7.4f±%6.4f",
                        r.method.c_str(), r.diversity_mean, r.diversity_se, r.coverage_mean,
                        r.coverage_se, r.residual_mean, r.residual_se, r.energy_mean,
                        r.energy_se);
            if (r.failures > 0) std::printf("  (%d/%d failed)", r.failures, r.runs);
            std::printf("\n");
        }
        std::cout << "artifacts: " << out.string() << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "compare failed: " << e.what() << "\n";
        return 1;
    }
}

int cmd_analyze(const std::string& which, std::optional<std::string> out_override) {
    try {
        std::vector<std::string> todo;
        if (which == "all")
            todo = known_analyses();
        else
            todo = {which};
        const fs::path out = resolve_out("analysis", out_override);
        bool all_pass = true;
        for (const auto& w : todo) {
            auto reports = run_analysis(w, out);
            for (const auto& r : reports) {
                print_report_line(r);
                all_pass = all_pass && r.pass;
            }
        }
        return all_pass ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "analyze failed: " << e.what() << "\n";
        return 1;
    }
}

int cmd_oracle(const std::string& config_path, std::optional<std::string> out_override) {
    try {
        ExperimentConfig cfg = load_config(config_path);
        const fs::path out = resolve_out(cfg.output_dir, out_override) / "oracle";
        write_oracle_bundle(cfg, cfg.seeds.front(), out);
        std::cout << "oracle bundle written to " << out.string() << "\n";
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "oracle failed: " << e.what() << "\n";
        return 1;
    }
}

int cmd_plot(const std::string& run_dir, std::optional<std::string> oracle_dir,
             std::optional<std::string> out_file) {
    try {
        std::optional<fs::path> oracle;
        if (oracle_dir) oracle = fs::path(*oracle_dir);
        const std::string svg = render_run_figure(run_dir, oracle);
        const fs::path target =
            out_file ? fs::path(*out_file) : fs::path(run_dir) / "figure.svg";
        write_text_file(target, svg);
        std::cout << "figure written to " << target.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "plot failed: " << e.what() << "\n";
        return 1;
    }
}

} // namespace ppmlab
