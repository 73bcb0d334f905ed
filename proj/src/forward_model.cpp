#include "isofit/forward_model.hpp"

#include "isofit/error.hpp"

namespace isofit {

std::vector<double> LinearRamp::evaluate(std::span<const double> xi,
                                         std::span<const double> grid) const
{
    if (xi.size() != 1) throw Error(ErrorKind::DimensionMismatch, "linear ramp takes one parameter");
    std::vector<double> out;
    out.reserve(grid.size());
    for (double t : grid) out.push_back(xi[0] * t);
    return out;
}

std::size_t ForwardModel::dimension() const noexcept
{
    struct Visitor {
        std::size_t operator()(const MixtureModel& m) const { return m.dimension(); }
        std::size_t operator()(const ColumnConfig& c) const { return c.inject[1] > 0.0 ? 8 : 4; }
        std::size_t operator()(const LinearRamp&) const { return 1; }
    };
    return std::visit(Visitor{}, model_);
}

std::string ForwardModel::name() const
{
    struct Visitor {
        std::string operator()(const MixtureModel& m) const
        {
            return m.kind() == MixtureModel::Kind::Gaussian ? "gaussian_mixture" : "gamma_mixture";
        }
        std::string operator()(const ColumnConfig&) const { return "chromatography"; }
        std::string operator()(const LinearRamp&) const { return "linear"; }
    };
    return std::visit(Visitor{}, model_);
}

std::vector<double> ForwardModel::evaluate(std::span<const double> xi,
                                           std::span<const double> grid) const
{
    struct Visitor {
        std::span<const double> xi;
        std::span<const double> grid;
        std::vector<double> operator()(const MixtureModel& m) const { return m.evaluate(xi, grid); }
        std::vector<double> operator()(const ColumnConfig& c) const
        {
            return chroma_signal(c, xi, grid);
        }
        std::vector<double> operator()(const LinearRamp& r) const { return r.evaluate(xi, grid); }
    };
    return std::visit(Visitor{xi, grid}, model_);
}

} // namespace isofit
