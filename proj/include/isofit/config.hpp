#pragma once

#include "isofit/chroma.hpp"
#include "isofit/core_types.hpp"
#include "isofit/forward_model.hpp"
#include "isofit/optim.hpp"
#include "isofit/posterior.hpp"
#include "isofit/samplers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace isofit {

enum class ModelKind { Gaussian, Gamma, Column, Linear };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind model_kind_from_string(std::string_view name);

/// Everything one run needs. Stored as a sectioned INI file; see
/// `serialize()` for the key names.
struct RunConfig {
    std::string preset = "custom";
    SamplerKind sampler = SamplerKind::MGDG;
    std::uint64_t seed = 1;

    ModelKind model = ModelKind::Gaussian;
    std::size_t components = 2;
    MapKind map = MapKind::WeightSum;
    /// Identity map only: how many leading coordinates form eta.
    std::size_t identity_eta_size = 1;
    ColumnConfig column;

    std::vector<double> truth;
    double noise_variance = 0.001;
    double grid_lo = 0.0;
    double grid_hi = 1.0;
    std::size_t grid_points = 50;
    double window_lo = 0.0;
    double window_hi = 1.0;
    /// Read the observation from here instead of simulating it.
    std::string observation_file;
    /// Seed of the synthetic noise; the run seed when absent.
    std::optional<std::uint64_t> data_seed;

    Hyperparameters psi;
    bool beta_auto = true;
    /// MALG eta proposal sd when it differs from the MGDG one.
    std::vector<double> eta_proposal_sd_malg;

    GdSettings gd;
    NuInitSettings nu_start;
    Sigma2Ratio sigma2_ratio = Sigma2Ratio::Exact;
    bool restore_per_coordinate = false;
    bool eta_per_coordinate = false;
    bool unconstrained = false;
    bool literal_langevin_density = false;

    std::string out_dir = "out";
    bool dump_field = false;

    static RunConfig from_preset(std::string_view name);
    static RunConfig parse(const std::string& text);
    static RunConfig load(const std::string& path);
    std::string serialize() const;
    /// Copy with "section.key=value" assignments applied.
    RunConfig with_overrides(const std::vector<std::string>& assignments) const;

    /// Throws ConfigError on inconsistent dimensions or missing files.
    void validate() const;

    ForwardModel forward_model() const;
    ReparamMap reparam_map() const;
    std::vector<double> grid() const;
    Hyperparameters hyperparameters() const;
    SamplerSettings sampler_settings() const;
    std::uint64_t noise_seed() const { return data_seed.value_or(seed); }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

std::vector<std::string> preset_names();

/// Hex SHA-256 of the serialized config.
std::string config_hash(const RunConfig& config);

} // namespace isofit
