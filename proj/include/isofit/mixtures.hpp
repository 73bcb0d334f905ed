#pragma once

#include <span>
#include <vector>

namespace isofit {

/// Sum over pairs of  w_i * phi(t - mu_i)  with weight w_i = x_{2i-1}/(x_{2i-1}+x_{2i}),
/// mean mu_i = x_{2i-1}+x_{2i} and phi the standard normal density.
double gaussian_mixture_signal(std::span<const double> xi, double t);

/// Unweighted sum of Gamma densities, shape x_{2i-1} and scale x_{2i}.
double gamma_mixture_signal(std::span<const double> xi, double t);

/// Closed-form surrogate forward models.
class MixtureModel {
public:
    enum class Kind { Gaussian, Gamma };

    static MixtureModel gaussian(std::size_t components);
    static MixtureModel gamma(std::size_t components = 2);

    Kind kind() const noexcept { return kind_; }
    std::size_t components() const noexcept { return components_; }
    std::size_t dimension() const noexcept { return 2 * components_; }

    double signal(std::span<const double> xi, double t) const;
    std::vector<double> evaluate(std::span<const double> xi, std::span<const double> grid) const;

private:
    MixtureModel(Kind kind, std::size_t components) : kind_(kind), components_(components) {}

    Kind kind_;
    std::size_t components_;
};

} // namespace isofit
