#pragma once

#include "isofit/core_types.hpp"
#include "isofit/forward_model.hpp"

#include <span>
#include <vector>

namespace isofit {

/// Which sigma^2 acceptance expression the samplers use.
enum class Sigma2Ratio {
    /// Full-conditional ratio of the joint posterior (includes E^T E).
    Exact,
    /// Literal MGDG expression without the E^T E factor; for A/B comparison only.
    LiteralMgdg,
};

/// Everything needed to evaluate the joint posterior of (xi, sigma^2):
///
///   pi(xi, s2 | r) ~ s2^-(n/2 + alpha + 1) * exp(-(E'E/2 + beta)/s2 - gamma E'E),
///   E = R(xi) - r.
///
/// The data-dependent prior exp(-gamma E'E) on xi is kept exactly as written,
/// so the observation enters both likelihood and prior.
class PosteriorContext {
public:
    PosteriorContext(ForwardModel model, ReparamMap map, Observation obs, Hyperparameters psi);

    const ForwardModel& model() const noexcept { return model_; }
    const ReparamMap& map() const noexcept { return map_; }
    const Observation& obs() const noexcept { return obs_; }
    const Hyperparameters& psi() const noexcept { return psi_; }
    std::size_t n() const noexcept { return obs_.size(); }

    /// Copy with a different beta (set at run time from the initial fit).
    PosteriorContext with_psi(Hyperparameters psi) const;

    std::vector<double> signal(const ParameterVector& xi) const;
    std::vector<double> residual(const ParameterVector& xi) const;
    double ete(const ParameterVector& xi) const;
    double ete(std::span<const double> eta, std::span<const double> nu) const;

    /// ||r - R(g(eta, nu))||_2
    double loss(std::span<const double> eta, std::span<const double> nu) const;

    double log_posterior(const ParameterVector& xi, double sigma2) const;
    double log_posterior_from_ete(double ete, double sigma2) const;

    /// log of pi(s2_new | .) / pi(s2_old | .) at fixed residual energy.
    double sigma2_log_ratio(double sigma2_new, double sigma2_old, double ete,
                            Sigma2Ratio mode = Sigma2Ratio::Exact) const;

    /// grad_nu log pi(nu | eta, s2, r) by central differences, relative step
    /// 1e-5 with absolute floor 1e-7.
    std::vector<double> mala_drift(std::span<const double> eta, std::span<const double> nu,
                                   double sigma2) const;

    /// Same target expressed in nu~ = log(nu), including the log-Jacobian.
    std::vector<double> mala_drift_log(std::span<const double> eta,
                                       std::span<const double> nu_tilde, double sigma2) const;

private:
    ForwardModel model_;
    ReparamMap map_;
    Observation obs_;
    Hyperparameters psi_;
};

} // namespace isofit
