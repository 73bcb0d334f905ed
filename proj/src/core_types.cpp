#include "isofit/core_types.hpp"

#include "isofit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace isofit {

ParameterVector::ParameterVector(std::vector<double> values) : values_(std::move(values))
{
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
            throw Error(ErrorKind::DomainViolation,
                        "parameter " + std::to_string(i) + " must be finite and >= 0, got " +
                            std::to_string(values_[i]));
        }
    }
}

std::string_view to_string(MapKind kind) noexcept
{
    switch (kind) {
    case MapKind::WeightSum: return "weight_sum";
    case MapKind::ShapeScale: return "shape_scale";
    case MapKind::ChromaRatioSum: return "chroma_ratio_sum";
    case MapKind::Identity: return "identity";
    }
    return "unknown";
}

MapKind map_kind_from_string(std::string_view name)
{
    if (name == "weight_sum") return MapKind::WeightSum;
    if (name == "shape_scale") return MapKind::ShapeScale;
    if (name == "chroma_ratio_sum") return MapKind::ChromaRatioSum;
    if (name == "identity") return MapKind::Identity;
    throw Error(ErrorKind::ConfigError, "unknown map kind '" + std::string(name) + "'");
}

ReparamMap ReparamMap::weight_sum(std::size_t pairs)
{
    if (pairs == 0) throw Error(ErrorKind::DimensionMismatch, "weight_sum needs at least one pair");
    return {MapKind::WeightSum, 2 * pairs, pairs};
}

ReparamMap ReparamMap::shape_scale(std::size_t pairs)
{
    if (pairs == 0) throw Error(ErrorKind::DimensionMismatch, "shape_scale needs at least one pair");
    return {MapKind::ShapeScale, 2 * pairs, pairs};
}

ReparamMap ReparamMap::chroma_ratio_sum(std::size_t blocks)
{
    if (blocks != 1 && blocks != 2) {
        throw Error(ErrorKind::DimensionMismatch, "chroma_ratio_sum supports 1 or 2 blocks");
    }
    return {MapKind::ChromaRatioSum, 4 * blocks, 2 * blocks};
}

ReparamMap ReparamMap::identity(std::size_t dimension, std::size_t eta_size)
{
    if (dimension == 0 || eta_size > dimension) {
        throw Error(ErrorKind::DimensionMismatch, "identity map needs 0 <= d <= D, D > 0");
    }
    return {MapKind::Identity, dimension, eta_size};
}

bool ReparamMap::nu_in_domain(std::span<const double> nu) const noexcept
{
    if (nu.size() != nu_size()) return false;
    for (double v : nu) {
        if (!std::isfinite(v)) return false;
        if (kind_ == MapKind::Identity ? v < 0.0 : v <= 0.0) return false;
    }
    return true;
}

bool ReparamMap::eta_in_domain(std::span<const double> eta) const noexcept
{
    if (eta.size() != eta_size()) return false;
    for (double v : eta) {
        if (!std::isfinite(v) || v < 0.0) return false;
        if (is_ratio() && v > 1.0) return false;
    }
    return true;
}

ReducedParameters ReparamMap::split(const ParameterVector& xi) const
{
    if (xi.size() != dimension_) {
        throw Error(ErrorKind::DimensionMismatch, "map expects D=" + std::to_string(dimension_) +
                                                      ", got " + std::to_string(xi.size()));
    }
    ReducedParameters out;
    out.eta.resize(eta_size_);
    out.nu.resize(nu_size());
    switch (kind_) {
    case MapKind::WeightSum:
    case MapKind::ChromaRatioSum:
        // Both are pair-wise ratio/sum maps over consecutive coordinates.
        for (std::size_t i = 0; i < eta_size_; ++i) {
            const double first = xi[2 * i];
            const double second = xi[2 * i + 1];
            const double sum = first + second;
            if (!(sum > 0.0)) {
                throw Error(ErrorKind::DegeneratePair,
                            "pair " + std::to_string(i) + " sums to zero");
            }
            out.eta[i] = first / sum;
            out.nu[i] = sum;
        }
        break;
    case MapKind::ShapeScale:
        for (std::size_t i = 0; i < eta_size_; ++i) {
            out.eta[i] = xi[2 * i + 1];
            out.nu[i] = xi[2 * i];
        }
        break;
    case MapKind::Identity:
        std::copy_n(xi.values().begin(), eta_size_, out.eta.begin());
        std::copy(xi.values().begin() + static_cast<std::ptrdiff_t>(eta_size_), xi.values().end(),
                  out.nu.begin());
        break;
    }
    return out;
}

ParameterVector ReparamMap::restore(const ReducedParameters& reduced) const
{
    return restore(reduced.eta, reduced.nu);
}

ParameterVector ReparamMap::restore(std::span<const double> eta, std::span<const double> nu) const
{
    if (eta.size() != eta_size_ || nu.size() != nu_size()) {
        throw Error(ErrorKind::DimensionMismatch, "reduced parameters do not match the map");
    }
    for (double e : eta) {
        if (!std::isfinite(e) || e < 0.0 || (is_ratio() && e > 1.0)) {
            throw Error(ErrorKind::DomainViolation, "eta entry " + std::to_string(e) +
                                                        " outside the map domain");
        }
    }
    std::vector<double> xi(dimension_);
    switch (kind_) {
    case MapKind::WeightSum:
    case MapKind::ChromaRatioSum:
        for (std::size_t i = 0; i < eta_size_; ++i) {
            xi[2 * i] = eta[i] * nu[i];
            xi[2 * i + 1] = (1.0 - eta[i]) * nu[i];
        }
        break;
    case MapKind::ShapeScale:
        for (std::size_t i = 0; i < eta_size_; ++i) {
            xi[2 * i] = nu[i];
            xi[2 * i + 1] = eta[i];
        }
        break;
    case MapKind::Identity:
        std::copy(eta.begin(), eta.end(), xi.begin());
        std::copy(nu.begin(), nu.end(), xi.begin() + static_cast<std::ptrdiff_t>(eta_size_));
        break;
    }
    return ParameterVector(std::move(xi));
}

std::string_view to_string(SortRule rule) noexcept
{
    switch (rule) {
    case SortRule::None: return "none";
    case SortRule::SortAscending: return "sort_ascending";
    case SortRule::SwapSmallerFirst: return "swap_smaller_first";
    }
    return "unknown";
}

SortRule sort_rule_from_string(std::string_view name)
{
    if (name == "none") return SortRule::None;
    if (name == "sort_ascending") return SortRule::SortAscending;
    if (name == "swap_smaller_first") return SortRule::SwapSmallerFirst;
    throw Error(ErrorKind::ConfigError, "unknown sort rule '" + std::string(name) + "'");
}

std::pair<std::vector<double>, std::vector<double>> apply_sort_rule(
    SortRule rule, std::vector<double> eta, std::vector<double> nu)
{
    if (rule == SortRule::None || eta.size() < 2) return {std::move(eta), std::move(nu)};
    if (eta.size() != nu.size()) {
        throw Error(ErrorKind::DimensionMismatch, "sort rule needs paired eta/nu");
    }
    if (rule == SortRule::SwapSmallerFirst && eta.size() == 2) {
        if (eta[1] < eta[0]) {
            std::swap(eta[0], eta[1]);
            std::swap(nu[0], nu[1]);
        }
        return {std::move(eta), std::move(nu)};
    }
    std::vector<std::size_t> order(eta.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return eta[a] < eta[b]; });
    std::vector<double> eta_sorted(eta.size());
    std::vector<double> nu_sorted(nu.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        eta_sorted[i] = eta[order[i]];
        nu_sorted[i] = nu[order[i]];
    }
    return {std::move(eta_sorted), std::move(nu_sorted)};
}

UnconstrainedPoint to_unconstrained(const ReducedParameters& reduced)
{
    UnconstrainedPoint out;
    out.eta_tilde.reserve(reduced.eta.size());
    out.nu_tilde.reserve(reduced.nu.size());
    for (double e : reduced.eta) {
        if (!(e > 0.0 && e < 1.0)) {
            throw Error(ErrorKind::DomainViolation,
                        "eta must lie strictly inside (0,1) for the tanh transform");
        }
        out.eta_tilde.push_back(std::atanh(2.0 * e - 1.0));
    }
    for (double v : reduced.nu) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::DomainViolation, "nu must be positive for the log transform");
        }
        out.nu_tilde.push_back(std::log(v));
    }
    return out;
}

ReducedParameters from_unconstrained(const UnconstrainedPoint& point)
{
    ReducedParameters out;
    out.eta.reserve(point.eta_tilde.size());
    out.nu.reserve(point.nu_tilde.size());
    for (double t : point.eta_tilde) out.eta.push_back((std::tanh(t) + 1.0) / 2.0);
    for (double t : point.nu_tilde) out.nu.push_back(std::exp(t));
    return out;
}

Observation::Observation(std::vector<double> times, std::vector<double> values, double window_lo,
                         double window_hi)
    : times_(std::move(times)), values_(std::move(values)), window_lo_(window_lo),
      window_hi_(window_hi)
{
    if (times_.size() != values_.size()) {
        throw Error(ErrorKind::DimensionMismatch, "times and values differ in length");
    }
    if (times_.empty()) throw Error(ErrorKind::DimensionMismatch, "empty observation");
    if (!(window_lo_ < window_hi_)) {
        throw Error(ErrorKind::DomainViolation, "recording window must have lo < hi");
    }
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (!std::isfinite(times_[i]) || !std::isfinite(values_[i])) {
            throw Error(ErrorKind::NonFiniteValue, "observation entries must be finite");
        }
        if (times_[i] < window_lo_ || times_[i] > window_hi_) {
            throw Error(ErrorKind::DomainViolation, "observation time outside recording window");
        }
        if (i > 0 && !(times_[i] > times_[i - 1])) {
            throw Error(ErrorKind::DomainViolation, "observation times must be strictly increasing");
        }
    }
}

std::vector<double> equally_spaced(double lo, double hi, std::size_t n)
{
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> out(n);
    const double step = (hi - lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + step * static_cast<double>(i);
    out.back() = hi;
    return out;
}

void Hyperparameters::validate() const
{
    auto fail = [](const std::string& what) { throw Error(ErrorKind::ConfigError, what); };
    if (!(alpha > 0.0)) fail("alpha must be > 0");
    if (!(beta > 0.0)) fail("beta must be > 0");
    if (!(gamma >= 0.0)) fail("gamma must be >= 0");
    // A zero proposal sd freezes that coordinate.
    for (double sd : eta_proposal_sd) if (!(sd >= 0.0)) fail("eta proposal sd must be >= 0");
    for (double sd : eta_tilde_proposal_sd) if (!(sd >= 0.0)) fail("eta~ proposal sd must be >= 0");
    for (double sd : xi_proposal_sd) if (!(sd >= 0.0)) fail("xi proposal sd must be >= 0");
    if (!(sigma2_log_sd >= 0.0)) fail("sigma2 proposal sd must be >= 0");
    if (!(tau > 0.0)) fail("tau must be > 0");
    if (m == 0) fail("m must be positive");
    if (chain_length == 0) fail("chain length K must be positive");
    if (init_candidates == 0) fail("init candidates M must be positive");
    if (burn_in >= chain_length) fail("burn-in B must be smaller than chain length K");
}

} // namespace isofit
