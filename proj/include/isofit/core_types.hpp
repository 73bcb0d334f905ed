#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace isofit {

/// Non-negative, finite parameter vector (isotherm coefficients or mixture
/// parameters). Validated on construction and immutable afterwards.
class ParameterVector {
public:
    ParameterVector() = default;
    explicit ParameterVector(std::vector<double> values);

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vec() const noexcept { return values_; }

    friend bool operator==(const ParameterVector&, const ParameterVector&) = default;

private:
    std::vector<double> values_;
};

/// Bounded block `eta` (sampled) and complementary block `nu` (restored or
/// Langevin-sampled).
struct ReducedParameters {
    std::vector<double> eta;
    std::vector<double> nu;

    friend bool operator==(const ReducedParameters&, const ReducedParameters&) = default;
};

enum class MapKind {
    /// eta_i = x_{2i-1}/(x_{2i-1}+x_{2i}), nu_i = x_{2i-1}+x_{2i}
    WeightSum,
    /// eta_i = x_{2i}, nu_i = x_{2i-1}
    ShapeScale,
    /// (a_I, a_II, b_I, b_II) blocks: eta = (a_I/sum_a, b_I/sum_b), nu = (sum_a, sum_b)
    ChromaRatioSum,
    /// eta = first d coordinates, nu = the rest. Used for scalar toy models.
    Identity,
};

std::string_view to_string(MapKind kind) noexcept;
MapKind map_kind_from_string(std::string_view name);

/// One-to-one map between a parameter vector and its reduced form.
class ReparamMap {
public:
    static ReparamMap weight_sum(std::size_t pairs);
    static ReparamMap shape_scale(std::size_t pairs);
    /// `blocks` is 1 (single component, D = 4) or 2 (two components, D = 8).
    static ReparamMap chroma_ratio_sum(std::size_t blocks);
    static ReparamMap identity(std::size_t dimension, std::size_t eta_size);

    MapKind kind() const noexcept { return kind_; }
    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t eta_size() const noexcept { return eta_size_; }
    std::size_t nu_size() const noexcept { return dimension_ - eta_size_; }

    /// Ratio maps pin eta to [0,1] and require nu > 0.
    bool is_ratio() const noexcept
    {
        return kind_ == MapKind::WeightSum || kind_ == MapKind::ChromaRatioSum;
    }

    /// Lower bound enforced on every nu entry (exclusive for ratio and
    /// shape maps, inclusive for the identity map).
    bool nu_in_domain(std::span<const double> nu) const noexcept;
    bool eta_in_domain(std::span<const double> eta) const noexcept;

    ReducedParameters split(const ParameterVector& xi) const;
    ParameterVector restore(const ReducedParameters& reduced) const;
    ParameterVector restore(std::span<const double> eta, std::span<const double> nu) const;

    friend bool operator==(const ReparamMap&, const ReparamMap&) = default;

private:
    ReparamMap(MapKind kind, std::size_t dimension, std::size_t eta_size)
        : kind_(kind), dimension_(dimension), eta_size_(eta_size) {}

    MapKind kind_ = MapKind::WeightSum;
    std::size_t dimension_ = 0;
    std::size_t eta_size_ = 0;
};

enum class SortRule { None, SortAscending, SwapSmallerFirst };

std::string_view to_string(SortRule rule) noexcept;
SortRule sort_rule_from_string(std::string_view name);

/// Reorders eta ascending and carries nu along with the same permutation, so
/// each (eta_i, nu_i) pair keeps describing the same component.
std::pair<std::vector<double>, std::vector<double>> apply_sort_rule(
    SortRule rule, std::vector<double> eta, std::vector<double> nu);

/// Element-wise map eta = (tanh(eta~)+1)/2, nu = exp(nu~).
struct UnconstrainedPoint {
    std::vector<double> eta_tilde;
    std::vector<double> nu_tilde;
};

UnconstrainedPoint to_unconstrained(const ReducedParameters& reduced);
ReducedParameters from_unconstrained(const UnconstrainedPoint& point);

/// Observed response on a strictly increasing time grid inside `window`.
class Observation {
public:
    Observation(std::vector<double> times, std::vector<double> values, double window_lo,
                double window_hi);

    std::size_t size() const noexcept { return times_.size(); }
    std::span<const double> times() const noexcept { return times_; }
    std::span<const double> values() const noexcept { return values_; }
    double window_lo() const noexcept { return window_lo_; }
    double window_hi() const noexcept { return window_hi_; }

private:
    std::vector<double> times_;
    std::vector<double> values_;
    double window_lo_;
    double window_hi_;
};

/// n points on [lo, hi], both endpoints included.
std::vector<double> equally_spaced(double lo, double hi, std::size_t n);

/// Prior, proposal and chain-length settings of one sampler run.
struct Hyperparameters {
    double alpha = 2.0;
    double beta = 0.001;
    double gamma = 8.0;
    /// Truncated-normal sd for each eta coordinate (MGDG, MALG).
    std::vector<double> eta_proposal_sd{0.02, 0.02};
    /// Normal sd on eta~ when MALG runs in unconstrained mode.
    std::vector<double> eta_tilde_proposal_sd{0.05, 0.05};
    /// Truncated-normal sd for each xi coordinate (Metropolis-within-Gibbs).
    std::vector<double> xi_proposal_sd{0.02, 0.02, 0.02, 0.02};
    /// Log-normal random-walk sd for sigma^2.
    double sigma2_log_sd = 0.1;
    double tau = 0.001;
    std::size_t m = 200;
    std::size_t burn_in = 500;
    std::size_t chain_length = 10000;
    std::size_t init_candidates = 1000;
    SortRule sort_rule = SortRule::None;

    /// Throws ConfigError when a positivity constraint or B < K fails.
    void validate() const;

    friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct ChainRecord {
    std::size_t iter = 0;
    bool burn_in = false;
    std::vector<double> eta;
    std::vector<double> nu;
    std::vector<double> xi_hat;
    double sigma2 = 0.0;
    double loss = 0.0;
    /// One entry per block; 0/1 for single proposals, the accepted fraction
    /// for a Langevin sub-chain.
    std::vector<double> accept;
};

using Chain = std::vector<ChainRecord>;

} // namespace isofit
