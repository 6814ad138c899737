#include "ppmlab/harness.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"ppmlab — posterior-matching laboratory for linear-Gaussian inverse problems"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    std::vector<std::string> methods;
    std::vector<std::uint64_t> seeds;
    int jobs = 1;

    auto* run = app.add_subcommand("run", "execute the configured method once");
    run->add_option("--config", config_path, "experiment config file")->required();
    std::uint64_t seed_value = 0;
    bool seed_given = false;
    run->add_option("--seed", seed_value, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });
    std::string out_value;
    bool out_given = false;
    auto add_out = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_value, "output directory override")
            ->each([&](const std::string&) { out_given = true; });
    };
    add_out(run);

    auto* compare = app.add_subcommand("compare", "run a method x seed grid");
    compare->add_option("--config", config_path, "experiment config file")->required();
    compare->add_option("--methods", methods, "methods to compare")->delimiter(',');
    compare->add_option("--seeds", seeds, "seed list")->delimiter(',');
    compare->add_option("--jobs", jobs, "parallel grid cells");
    add_out(compare);

    std::string which = "all";
    auto* analyze = app.add_subcommand("analyze", "run a theory-validation experiment");
    analyze->add_option("which", which,
                        "one of kl-contraction, effective-beta, ikl-bias, map-equivalence, "
                        "gradient-check, de-bruijn, all");
    add_out(analyze);

    auto* oracle = app.add_subcommand("oracle", "emit the analytic ground-truth bundle");
    oracle->add_option("--config", config_path, "experiment config file")->required();
    add_out(oracle);

    std::string run_dir;
    std::string oracle_dir;
    bool oracle_dir_given = false;
    std::string plot_out;
    bool plot_out_given = false;
    auto* plot = app.add_subcommand("plot", "render particles over posterior contours");
    plot->add_option("run_dir", run_dir, "run or comparison directory")->required();
    plot->add_option("--oracle", oracle_dir, "oracle bundle directory")
        ->each([&](const std::string&) { oracle_dir_given = true; });
    plot->add_option("--out", plot_out, "output SVG path")
        ->each([&](const std::string&) { plot_out_given = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (seed_given) seed_override = seed_value;
    if (out_given) out_override = out_value;

    if (run->parsed()) return ppmlab::cmd_run(config_path, seed_override, out_override);
    if (compare->parsed())
        return ppmlab::cmd_compare(config_path, methods, seeds, out_override, jobs);
    if (analyze->parsed()) return ppmlab::cmd_analyze(which, out_override);
    if (oracle->parsed()) return ppmlab::cmd_oracle(config_path, out_override);
    if (plot->parsed())
        return ppmlab::cmd_plot(run_dir,
                                oracle_dir_given ? std::optional<std::string>(oracle_dir)
                                                 : std::nullopt,
                                plot_out_given ? std::optional<std::string>(plot_out)
                                               : std::nullopt);
    return 2;
}
