// Command-line front end: simulate, fit, repeat, summarize.

#include "isofit/app.hpp"
#include "isofit/error.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace isofit;

namespace {

struct Common {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string sampler;
    std::string out;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool with_sampler)
{
    cmd->add_option("--config", c.config_path, "INI run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--preset", c.preset, "case1 | case2 | case3 | chroma | linear");
    cmd->add_option("--seed", c.seed, "64-bit run seed");
    if (with_sampler) cmd->add_option("--sampler", c.sampler, "mwg | mgdg | malg");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--set", c.overrides, "override a config key: section.key=value");
}

RunConfig build_config(const Common& c)
{
    if (!c.config_path.empty() && !c.preset.empty()) {
        throw Error(ErrorKind::ConfigError, "use either --config or --preset, not both");
    }
    if (c.config_path.empty() && c.preset.empty()) {
        throw Error(ErrorKind::ConfigError, "one of --config or --preset is required");
    }
    RunConfig config = c.config_path.empty() ? RunConfig::from_preset(c.preset)
                                             : RunConfig::load(c.config_path);
    config = config.with_overrides(c.overrides);
    if (c.seed) config.seed = *c.seed;
    if (!c.sampler.empty()) config.sampler = sampler_kind_from_string(c.sampler);
    if (!c.out.empty()) config.out_dir = c.out;
    return config;
}

int fail(const fs::path& dir, const std::exception& e)
{
    std::cerr << "error: " << e.what() << "\n";
    try {
        if (!dir.empty()) write_error(dir, e);
    } catch (const std::exception& inner) {
        std::cerr << "error: could not write error.json: " << inner.what() << "\n";
    }
    return 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bayesian isotherm and mixture parameter estimation"};
    app.require_subcommand(1);

    Common sim_opts;
    auto* sim = app.add_subcommand("simulate", "write a synthetic observation");
    add_common(sim, sim_opts, false);

    Common fit_opts;
    auto* fit_cmd = app.add_subcommand("fit", "run a sampler and write chain, summary and band");
    add_common(fit_cmd, fit_opts, true);

    Common rep_opts;
    std::size_t reps = 10;
    std::optional<std::size_t> workers;
    auto* rep = app.add_subcommand("repeat", "repeat a fit over consecutive seeds");
    add_common(rep, rep_opts, true);
    rep->add_option("--reps", reps, "number of trials")->check(CLI::PositiveNumber);
    rep->add_option("--workers", workers, "concurrent trials (default: ISOFIT_WORKERS or 1)");

    std::string summarize_dir;
    auto* sum = app.add_subcommand("summarize", "recompute summary.csv from chain.csv");
    sum->add_option("--out", summarize_dir, "directory holding chain.csv")->required();

    CLI11_PARSE(app, argc, argv);

    fs::path out_dir;
    try {
        if (sim->parsed()) {
            const RunConfig config = build_config(sim_opts);
            out_dir = config.out_dir;
            config.validate();
            const Observation obs = simulate(config, config.noise_seed());
            fs::create_directories(out_dir);
            write_observation_csv(out_dir / "observation.csv", obs);
            write_manifest(out_dir, config, "simulate");
            std::cout << "wrote " << (out_dir / "observation.csv").string() << "\n";
        } else if (fit_cmd->parsed()) {
            const RunConfig config = build_config(fit_opts);
            out_dir = config.out_dir;
            const FitReport report = fit(config, out_dir);
            std::cout << format_report(config, report);
        } else if (rep->parsed()) {
            const RunConfig config = build_config(rep_opts);
            out_dir = config.out_dir;
            RepeatOptions options;
            options.reps = reps;
            options.workers = resolve_workers(workers);
            const auto results = repeat(config, out_dir, options);
            std::size_t ok = 0;
            for (const auto& r : results) ok += r.ok ? 1 : 0;
            std::cout << ok << "/" << results.size() << " trials succeeded; see "
                      << (out_dir / "aggregate.csv").string() << "\n";
            if (ok == 0) return 1;
        } else if (sum->parsed()) {
            out_dir = summarize_dir;
            const ChainSummary summary = summarize_directory(out_dir);
            std::cout << "post burn-in records: " << summary.samples << "\n";
            for (const auto& c : summary.coordinates) {
                std::cout << c.name << " mean " << c.mean << " sd " << c.sd << "\n";
            }
        }
    } catch (const std::exception& e) {
        return fail(out_dir, e);
    }
    return 0;
}
