#include "isofit/posterior.hpp"

#include "isofit/error.hpp"
#include "isofit/optim.hpp"

#include <cmath>
#include <string>

namespace isofit {

PosteriorContext::PosteriorContext(ForwardModel model, ReparamMap map, Observation obs,
                                   Hyperparameters psi)
    : model_(std::move(model)), map_(map), obs_(std::move(obs)), psi_(std::move(psi))
{
    if (model_.dimension() != map_.dimension()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "model dimension " + std::to_string(model_.dimension()) +
                        " does not match map dimension " + std::to_string(map_.dimension()));
    }
}

PosteriorContext PosteriorContext::with_psi(Hyperparameters psi) const
{
    return PosteriorContext(model_, map_, obs_, std::move(psi));
}

std::vector<double> PosteriorContext::signal(const ParameterVector& xi) const
{
    if (xi.size() != map_.dimension()) {
        throw Error(ErrorKind::DimensionMismatch, "parameter vector does not match the model");
    }
    return model_.evaluate(xi.values(), obs_.times());
}

std::vector<double> PosteriorContext::residual(const ParameterVector& xi) const
{
    std::vector<double> e = signal(xi);
    const auto r = obs_.values();
    for (std::size_t i = 0; i < e.size(); ++i) e[i] -= r[i];
    return e;
}

double PosteriorContext::ete(const ParameterVector& xi) const
{
    const std::vector<double> s = signal(xi);
    const auto r = obs_.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double e = s[i] - r[i];
        sum += e * e;
    }
    if (!std::isfinite(sum)) throw Error(ErrorKind::NonFiniteValue, "residual energy is not finite");
    return sum;
}

double PosteriorContext::ete(std::span<const double> eta, std::span<const double> nu) const
{
    if (!map_.nu_in_domain(nu)) throw Error(ErrorKind::DomainViolation, "nu outside map domain");
    return ete(map_.restore(eta, nu));
}

double PosteriorContext::loss(std::span<const double> eta, std::span<const double> nu) const
{
    return std::sqrt(ete(eta, nu));
}

double PosteriorContext::log_posterior_from_ete(double e, double sigma2) const
{
    if (!(sigma2 > 0.0)) throw Error(ErrorKind::DomainViolation, "sigma^2 must be > 0");
    const double count = static_cast<double>(n());
    return -(0.5 * count + psi_.alpha + 1.0) * std::log(sigma2) - (0.5 * e + psi_.beta) / sigma2 -
           psi_.gamma * e;
}

double PosteriorContext::log_posterior(const ParameterVector& xi, double sigma2) const
{
    return log_posterior_from_ete(ete(xi), sigma2);
}

double PosteriorContext::sigma2_log_ratio(double sigma2_new, double sigma2_old, double e,
                                          Sigma2Ratio mode) const
{
    if (!(sigma2_new > 0.0) || !(sigma2_old > 0.0)) {
        throw Error(ErrorKind::DomainViolation, "sigma^2 must be > 0");
    }
    const double count = static_cast<double>(n());
    const double log_ratio = std::log(sigma2_new / sigma2_old);
    const double inv_diff = 1.0 / sigma2_new - 1.0 / sigma2_old;
    const double prior = -(psi_.alpha + 1.0) * log_ratio - psi_.beta * inv_diff;
    if (mode == Sigma2Ratio::LiteralMgdg) return -0.5 * count * log_ratio - 0.5 * inv_diff + prior;
    return -0.5 * count * log_ratio - 0.5 * e * inv_diff + prior;
}

std::vector<double> PosteriorContext::mala_drift(std::span<const double> eta,
                                                 std::span<const double> nu, double sigma2) const
{
    if (!(sigma2 > 0.0)) throw Error(ErrorKind::DomainViolation, "sigma^2 must be > 0");
    const std::vector<double> eta_copy(eta.begin(), eta.end());
    const auto energy = [&](std::span<const double> v) { return ete(eta_copy, v); };
    std::vector<double> grad = numerical_gradient(energy, nu, StepRule::RelativeWithFloor, 0.0);
    const double scale = -(0.5 / sigma2 + psi_.gamma);
    for (double& g : grad) g *= scale;
    return grad;
}

std::vector<double> PosteriorContext::mala_drift_log(std::span<const double> eta,
                                                     std::span<const double> nu_tilde,
                                                     double sigma2) const
{
    if (!(sigma2 > 0.0)) throw Error(ErrorKind::DomainViolation, "sigma^2 must be > 0");
    const std::vector<double> eta_copy(eta.begin(), eta.end());
    const double scale = -(0.5 / sigma2 + psi_.gamma);
    const auto target = [&](std::span<const double> v) {
        std::vector<double> nu(v.size());
        double log_jacobian = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            nu[i] = std::exp(v[i]);
            log_jacobian += v[i];
        }
        return scale * ete(eta_copy, nu) + log_jacobian;
    };
    return numerical_gradient(target, nu_tilde, StepRule::RelativeWithFloor);
}

} // namespace isofit
