#pragma once

#include "isofit/config.hpp"
#include "isofit/diagnostics.hpp"
#include "isofit/samplers.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace isofit {

/// r = R(truth, t) + eps with eps ~ N(0, noise_variance), seeded by `noise_seed`.
Observation simulate(const RunConfig& config, std::uint64_t noise_seed);

/// Configured observation: read from file, or simulated from the truth.
Observation load_or_simulate(const RunConfig& config);

void write_observation_csv(const std::filesystem::path& path, const Observation& obs);
Observation read_observation_csv(const std::filesystem::path& path, double window_lo,
                                 double window_hi);

void write_chain_csv(const std::filesystem::path& path, const Chain& chain, std::uint64_t seed,
                     const std::vector<std::string>& accept_labels);
Chain read_chain_csv(const std::filesystem::path& path);

void write_summary_csv(const std::filesystem::path& path, const ChainSummary& summary,
                       const std::vector<std::string>& accept_labels);
void write_band_csv(const std::filesystem::path& path, const Band& band);

/// Writes manifest.json (config hash, seed, versions, the config text) and
/// config.ini, which reruns the same command.
void write_manifest(const std::filesystem::path& dir, const RunConfig& config,
                    const std::string& command);

/// Writes error.json describing `error`.
void write_error(const std::filesystem::path& dir, const std::exception& error);

struct FitReport {
    SamplerRun run;
    ChainSummary summary;
    Band band;
    std::vector<double> xi_mean;
    /// Only when the truth is known.
    std::optional<double> re_mean;
    std::optional<double> re_band_lower;
    std::optional<double> re_band_upper;
    std::optional<double> re_observation;
};

/// Runs the configured sampler on `obs` and evaluates it; writes nothing.
FitReport fit_observation(const RunConfig& config, const Observation& obs);

/// `fit` subcommand: validates, runs, then writes observation.csv,
/// chain.csv, summary.csv, band.csv, report.txt and manifest.json to `dir`.
FitReport fit(const RunConfig& config, const std::filesystem::path& dir);

std::string format_report(const RunConfig& config, const FitReport& report);

struct RepeatOptions {
    std::size_t reps = 10;
    std::size_t workers = 1;
    /// Per-trial config edits (trial index, config); applied after seeding.
    std::function<void(std::size_t, RunConfig&)> adjust;
};

/// Trials use seeds seed, seed+1, ... on one fixed observation (noise seed of
/// `config`); each writes to dir/trial_<i>. A failing trial is recorded and
/// the others continue. Writes aggregate.csv and trials.csv.
std::vector<TrialResult> repeat(const RunConfig& config, const std::filesystem::path& dir,
                                const RepeatOptions& options);

/// Worker count from the flag, then ISOFIT_WORKERS, then 1.
std::size_t resolve_workers(std::optional<std::size_t> flag);

/// `summarize` subcommand: recompute summary.csv and report text from dir/chain.csv.
ChainSummary summarize_directory(const std::filesystem::path& dir);

} // namespace isofit
