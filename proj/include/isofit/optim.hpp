#pragma once

#include "isofit/core_types.hpp"
#include "isofit/posterior.hpp"

#include <functional>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace isofit {

enum class StepRule {
    /// h_i = 1e-5 * max(1, |x_i|)
    Scaled,
    /// h_i = max(1e-5 * |x_i|, 1e-7)
    RelativeWithFloor,
};

/// Central-difference gradient. A coordinate whose backward probe would not
/// stay above `lower_bound`, or where one probe is non-finite, falls back to
/// a one-sided difference. Throws NonFiniteValue if no finite pair exists.
std::vector<double> numerical_gradient(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x,
                                       StepRule rule = StepRule::Scaled,
                                       double lower_bound = -std::numeric_limits<double>::infinity());

/// Solver used to restore nu. Both minimise the same squared loss.
enum class RestoreMethod {
    /// Normalized-gradient steps with backtracking.
    NormalizedGradient,
    /// Damped Gauss-Newton on the residual vector with a finite-difference
    /// Jacobian. For expensive models whose loss has long curved valleys.
    LevenbergMarquardt,
};

std::string_view to_string(RestoreMethod method) noexcept;
RestoreMethod restore_method_from_string(std::string_view name);

struct GdSettings {
    RestoreMethod method = RestoreMethod::NormalizedGradient;
    std::size_t max_iter = 500;
    double step = 0.1;
    double grad_tol = 1e-5;
    std::size_t backtrack_limit = 100;
    double shrink = 0.9;
    /// Candidates are projected onto nu >= nu_floor.
    double nu_floor = 1e-8;
    /// Levenberg-Marquardt only: stop once a step changes nu by less than
    /// this, relative to |nu|.
    double step_tol = 1e-10;

    void validate() const;

    friend bool operator==(const GdSettings&, const GdSettings&) = default;
};

enum class GdStatus { Converged, MaxIter, NoDescent };

std::string_view to_string(GdStatus status) noexcept;

struct GdResult {
    std::vector<double> nu_hat;
    ParameterVector xi_hat;
    /// ||R(xi_hat) - r||_2
    double loss = 0.0;
    std::size_t iterations = 0;
    GdStatus status = GdStatus::Converged;
    /// Squared loss after every accepted step, starting with the initial point.
    std::vector<double> trace;
};

/// Minimises L(nu) = ||R(g(eta, nu)) - r||^2 with eta held fixed.
///
/// Normalized gradient: each iteration backtracks nu - 0.9^(i-1) * step * G/||G||
/// until the loss decreases. Levenberg-Marquardt: each iteration raises the
/// damping until the loss decreases. Either way the loss sequence is strictly
/// decreasing, and a failed search stops with status NoDescent at the current
/// point.
GdResult gradient_descent(const PosteriorContext& ctx, std::span<const double> eta,
                          std::vector<double> nu0, const GdSettings& settings);

struct NuInitSettings {
    /// Used for the chromatography map, and whenever a heuristic fails.
    std::vector<double> default_nu;
    /// Moving-average window applied before peak picking.
    std::size_t smoothing = 5;
    /// Shape-scale maps: levels per coordinate of the log-spaced shape grid
    /// on [1, shape_max] searched for a start (0 or 1 disables it).
    std::size_t shape_grid = 12;
    double shape_max = 100.0;

    friend bool operator==(const NuInitSettings&, const NuInitSettings&) = default;
};

struct NuStart {
    std::vector<double> nu;
    bool fallback_used = false;
};

/// Deterministic starting point for the nu restoration.
NuStart nu_init(const PosteriorContext& ctx, std::span<const double> eta,
                const NuInitSettings& settings);

} // namespace isofit
