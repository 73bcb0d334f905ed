#pragma once

#include "isofit/core_types.hpp"
#include "isofit/optim.hpp"
#include "isofit/posterior.hpp"
#include "isofit/random.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace isofit {

enum class SamplerKind { MwG, MGDG, MALG };

std::string_view to_string(SamplerKind kind) noexcept;
SamplerKind sampler_kind_from_string(std::string_view name);

struct SamplerSettings {
    SamplerKind kind = SamplerKind::MGDG;
    std::uint64_t seed = 0;
    GdSettings gd;
    NuInitSettings nu_start;
    Sigma2Ratio sigma2_ratio = Sigma2Ratio::Exact;
    /// Replace beta by ||E(eta0)||^2 / n once the initial point is known.
    bool beta_auto = true;
    /// Skip the sigma^2 step and hold sigma^2 at `initial_sigma2`.
    bool fix_sigma2 = false;
    std::optional<double> initial_sigma2;
    /// Skip the candidate search and start from this eta.
    std::optional<std::vector<double>> initial_eta;
    /// MGDG: restore xi_hat after every coordinate instead of once per sweep.
    bool restore_per_coordinate = false;
    /// MALG: propose eta one coordinate at a time instead of as a block.
    bool eta_per_coordinate = false;
    /// MALG: sample (eta~, nu~) = (atanh(2 eta - 1), log nu) on the real line.
    bool unconstrained = false;
    /// MALG: use the unsquared norm in the Langevin proposal density.
    bool literal_langevin_density = false;
};

struct SamplerRun {
    Chain chain;
    /// Hyperparameters actually used (beta filled in when automatic).
    Hyperparameters psi;
    std::vector<double> eta0;
    std::vector<double> nu0;
    bool nu_fallback = false;
};

/// Best of `candidates` uniform draws on [0,1]^d, scored by the loss after
/// restoring nu with gradient descent.
struct EtaStart {
    std::vector<double> eta;
    std::vector<double> nu;
    double loss = 0.0;
    /// loss squared, exactly as computed
    double ete = 0.0;
    bool nu_fallback = false;
};

EtaStart init_eta(const PosteriorContext& ctx, std::size_t candidates, Philox& rng,
                  const GdSettings& gd, const NuInitSettings& nu_start);

double init_sigma2(const Hyperparameters& psi, Philox& rng);

SamplerRun run_mwg(const PosteriorContext& ctx, const SamplerSettings& settings);
SamplerRun run_mgdg(const PosteriorContext& ctx, const SamplerSettings& settings);
SamplerRun run_malg(const PosteriorContext& ctx, const SamplerSettings& settings);

/// Dispatches on `settings.kind`.
SamplerRun run_sampler(const PosteriorContext& ctx, const SamplerSettings& settings);

/// Names of the entries of ChainRecord::accept for this sampler and map.
std::vector<std::string> accept_labels(const SamplerSettings& settings, const ReparamMap& map);

/// Upper bound for eta proposals: 1 for ratio and shape maps, unbounded for
/// the identity map.
double eta_upper_bound(const ReparamMap& map) noexcept;

} // namespace isofit
