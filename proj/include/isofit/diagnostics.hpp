#pragma once

#include "isofit/core_types.hpp"
#include "isofit/forward_model.hpp"

#include <array>
#include <span>
#include <string>
#include <vector>

namespace isofit {

inline constexpr std::array<double, 5> kSummaryProbs{0.025, 0.25, 0.5, 0.75, 0.975};

/// Linear-interpolation quantile of already sorted values.
double quantile_sorted(std::span<const double> sorted, double p);

/// Same definition, computed with partial selection instead of a full sort.
double quantile_select(std::vector<double> values, double p);

/// Effective sample size by batch means with floor(sqrt(n)) batches.
double batch_means_ess(std::span<const double> values);

struct CoordinateSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    std::array<double, 5> quantiles{};
    double ess = 0.0;
};

struct ChainSummary {
    std::size_t samples = 0;
    std::vector<CoordinateSummary> coordinates;
    std::vector<double> acceptance;

    const CoordinateSummary& at(const std::string& name) const;
};

/// Per-coordinate summaries of eta, nu, xi, sigma2 and loss over the
/// post-burn-in records. Throws EmptyChain if none are left.
ChainSummary summarize(const Chain& chain);

/// Mean accept entry per block over post-burn-in records.
std::vector<double> acceptance_rates(const Chain& chain);

struct Band {
    std::vector<double> times;
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Pointwise quantiles (1-level)/2 and (1+level)/2 of R(xi^(i), t) over the
/// post-burn-in records.
Band credible_band(const Chain& chain, const ForwardModel& model, std::span<const double> grid,
                   double level = 0.95);

/// ||curve - reference|| / ||reference||; throws ZeroSignal for a zero reference.
double relative_error(std::span<const double> curve, std::span<const double> reference);
double relative_error(std::span<const double> xi_hat, std::span<const double> xi_star,
                      const ForwardModel& model, std::span<const double> grid);

/// Largest relative error of the two band edges against the reference curve.
double band_max_relative_error(const Band& band, std::span<const double> reference);

struct TrialResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<double> eta_mean;
    std::vector<double> nu_mean;
    double max_re = 0.0;
};

struct AggregateRow {
    std::string quantity;
    double mean = 0.0;
    double sd = 0.0;
};

/// Across-trial mean and sample sd of each eta, nu coordinate and of max_re,
/// using successful trials only. One trial gives sd = 0.
std::vector<AggregateRow> aggregate_trials(const std::vector<TrialResult>& trials);

} // namespace isofit
