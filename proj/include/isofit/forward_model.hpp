#pragma once

#include "isofit/chroma.hpp"
#include "isofit/mixtures.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace isofit {

/// Scalar toy model R(xi, t) = xi_1 * t. Its posterior is conjugate, which
/// makes it the reference target for sampler checks.
struct LinearRamp {
    std::vector<double> evaluate(std::span<const double> xi, std::span<const double> grid) const;
};

/// Parameter-to-measurement map used by the posterior and the samplers.
class ForwardModel {
public:
    using Variant = std::variant<MixtureModel, ColumnConfig, LinearRamp>;

    ForwardModel(MixtureModel model) : model_(model) {}
    ForwardModel(ColumnConfig column) : model_(std::move(column)) {}
    ForwardModel(LinearRamp ramp) : model_(ramp) {}

    /// Number of parameters the model consumes.
    std::size_t dimension() const noexcept;
    std::string name() const;
    const Variant& variant() const noexcept { return model_; }

    /// R(xi) on `grid`; deterministic.
    std::vector<double> evaluate(std::span<const double> xi, std::span<const double> grid) const;

private:
    Variant model_;
};

} // namespace isofit
