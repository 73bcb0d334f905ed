#include "isofit/mixtures.hpp"

#include "isofit/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace isofit {

namespace {

void require_even(std::span<const double> xi)
{
    if (xi.empty() || xi.size() % 2 != 0) {
        throw Error(ErrorKind::DimensionMismatch, "mixture parameters come in pairs");
    }
}

} // namespace

double gaussian_mixture_signal(std::span<const double> xi, double t)
{
    require_even(xi);
    constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < xi.size(); i += 2) {
        const double total = xi[i] + xi[i + 1];
        if (!(total > 0.0)) {
            throw Error(ErrorKind::DegeneratePair, "component weight undefined: pair sums to zero");
        }
        const double z = t - total;
        sum += (xi[i] / total) * inv_sqrt_2pi * std::exp(-0.5 * z * z);
    }
    return sum;
}

double gamma_mixture_signal(std::span<const double> xi, double t)
{
    require_even(xi);
    if (t < 0.0) throw Error(ErrorKind::DomainViolation, "gamma density needs t >= 0");
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < xi.size(); i += 2) {
        const double shape = xi[i];
        const double scale = xi[i + 1];
        if (!(shape > 0.0) || !(scale > 0.0)) {
            throw Error(ErrorKind::DomainViolation, "gamma shape and scale must be positive");
        }
        if (t == 0.0) {
            if (shape > 1.0) continue;
            if (shape == 1.0) {
                sum += 1.0 / scale;
                continue;
            }
            throw Error(ErrorKind::DomainViolation, "gamma density with shape < 1 is infinite at t = 0");
        }
        const double log_density = (shape - 1.0) * std::log(t) - t / scale - std::lgamma(shape) -
                                   shape * std::log(scale);
        sum += std::exp(log_density);
    }
    return sum;
}

MixtureModel MixtureModel::gaussian(std::size_t components)
{
    if (components == 0) throw Error(ErrorKind::DimensionMismatch, "need at least one component");
    return {Kind::Gaussian, components};
}

MixtureModel MixtureModel::gamma(std::size_t components)
{
    if (components == 0) throw Error(ErrorKind::DimensionMismatch, "need at least one component");
    return {Kind::Gamma, components};
}

double MixtureModel::signal(std::span<const double> xi, double t) const
{
    if (xi.size() != dimension()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "mixture expects D=" + std::to_string(dimension()));
    }
    return kind_ == Kind::Gaussian ? gaussian_mixture_signal(xi, t) : gamma_mixture_signal(xi, t);
}

std::vector<double> MixtureModel::evaluate(std::span<const double> xi,
                                           std::span<const double> grid) const
{
    if (xi.size() != dimension()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "mixture expects D=" + std::to_string(dimension()));
    }
    std::vector<double> out(grid.size(), 0.0);
    if (kind_ == Kind::Gaussian) {
        constexpr double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
        for (std::size_t i = 0; i + 1 < xi.size(); i += 2) {
            const double total = xi[i] + xi[i + 1];
            if (!(total > 0.0)) {
                throw Error(ErrorKind::DegeneratePair, "component weight undefined: pair sums to zero");
            }
            const double weight = (xi[i] / total) * inv_sqrt_2pi;
            for (std::size_t k = 0; k < grid.size(); ++k) {
                const double z = grid[k] - total;
                out[k] += weight * std::exp(-0.5 * z * z);
            }
        }
        return out;
    }
    // Gamma: same values as gamma_mixture_signal with per-component constants hoisted.
    std::vector<double> log_t(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (grid[k] < 0.0) throw Error(ErrorKind::DomainViolation, "gamma density needs t >= 0");
        log_t[k] = grid[k] > 0.0 ? std::log(grid[k]) : 0.0;
    }
    for (std::size_t i = 0; i + 1 < xi.size(); i += 2) {
        const double shape = xi[i];
        const double scale = xi[i + 1];
        if (!(shape > 0.0) || !(scale > 0.0)) {
            throw Error(ErrorKind::DomainViolation, "gamma shape and scale must be positive");
        }
        const double norm = std::lgamma(shape) + shape * std::log(scale);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double t = grid[k];
            if (t == 0.0) {
                if (shape > 1.0) continue;
                if (shape == 1.0) {
                    out[k] += 1.0 / scale;
                    continue;
                }
                throw Error(ErrorKind::DomainViolation,
                            "gamma density with shape < 1 is infinite at t = 0");
            }
            out[k] += std::exp((shape - 1.0) * log_t[k] - t / scale - norm);
        }
    }
    return out;
}

} // namespace isofit
