#include "isofit/optim.hpp"

#include "isofit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace isofit {

std::vector<double> numerical_gradient(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, StepRule rule,
                                       double lower_bound)
{
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> grad(x.size());
    double centre = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double magnitude = std::abs(x[i]);
        const double h = rule == StepRule::Scaled ? 1e-5 * std::max(1.0, magnitude)
                                                  : std::max(1e-5 * magnitude, 1e-7);
        const auto at = [&](double value) {
            probe[i] = value;
            try {
                return f(probe);
            } catch (const Error&) {
                return std::numeric_limits<double>::quiet_NaN();
            }
        };
        const auto centre_value = [&] {
            if (std::isnan(centre)) centre = f(x);
            return centre;
        };
        double up = at(x[i] + h);
        double down = x[i] - h > lower_bound ? at(x[i] - h) : std::numeric_limits<double>::quiet_NaN();
        double width = 2.0 * h;
        // One-sided difference when a probe leaves the domain of f.
        if (!std::isfinite(down)) {
            down = centre_value();
            width = h;
        } else if (!std::isfinite(up)) {
            up = centre_value();
            width = h;
        }
        probe[i] = x[i];
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw Error(ErrorKind::NonFiniteValue, "non-finite function value at gradient probe");
        }
        grad[i] = (up - down) / width;
    }
    return grad;
}

std::string_view to_string(RestoreMethod method) noexcept
{
    return method == RestoreMethod::LevenbergMarquardt ? "levenberg_marquardt"
                                                       : "normalized_gradient";
}

RestoreMethod restore_method_from_string(std::string_view name)
{
    if (name == "normalized_gradient") return RestoreMethod::NormalizedGradient;
    if (name == "levenberg_marquardt") return RestoreMethod::LevenbergMarquardt;
    throw Error(ErrorKind::ConfigError, "unknown restore method '" + std::string(name) + "'");
}

void GdSettings::validate() const
{
    if (!(step_tol >= 0.0)) throw Error(ErrorKind::ConfigError, "gd.step_tol must be >= 0");
    if (max_iter == 0 || !(step > 0.0) || !(grad_tol > 0.0) || backtrack_limit == 0 ||
        !(shrink > 0.0 && shrink < 1.0) || !(nu_floor >= 0.0)) {
        throw Error(ErrorKind::ConfigError, "invalid gradient-descent settings");
    }
}

std::string_view to_string(GdStatus status) noexcept
{
    switch (status) {
    case GdStatus::Converged: return "converged";
    case GdStatus::MaxIter: return "max_iter";
    case GdStatus::NoDescent: return "no_descent";
    }
    return "unknown";
}

namespace {

/// Solves the small dense system a x = b in place by Gaussian elimination
/// with partial pivoting. Returns false for a singular matrix.
bool solve_dense(std::vector<double> a, std::vector<double>& b)
{
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t pivot = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r * n + c]) > std::abs(a[pivot * n + c])) pivot = r;
        if (!(std::abs(a[pivot * n + c]) > 0.0)) return false;
        if (pivot != c) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[pivot * n + k]);
            std::swap(b[c], b[pivot]);
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r * n + c] / a[c * n + c];
            for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t c = n; c-- > 0;) {
        for (std::size_t k = c + 1; k < n; ++k) b[c] -= a[c * n + k] * b[k];
        b[c] /= a[c * n + c];
    }
    return true;
}

GdResult levenberg_marquardt(const PosteriorContext& ctx, const std::vector<double>& eta,
                             std::vector<double> nu, const GdSettings& settings, double floor)
{
    const ReparamMap& map = ctx.map();
    const std::size_t p = nu.size();
    const auto residual = [&](std::span<const double> v) {
        return ctx.residual(map.restore(eta, v));
    };
    const auto energy_of = [](const std::vector<double>& e) {
        double s = 0.0;
        for (double v : e) s += v * v;
        return s;
    };

    GdResult result;
    std::vector<double> e = residual(nu);
    double current = energy_of(e);
    if (!std::isfinite(current)) throw Error(ErrorKind::NonFiniteValue, "residual energy is not finite");
    result.trace.push_back(current);
    result.status = GdStatus::MaxIter;

    const std::size_t n = e.size();
    std::vector<double> jac(n * p);
    std::vector<double> candidate(p);
    double lambda = -1.0;
    std::size_t iter = 0;
    for (; iter < settings.max_iter; ++iter) {
        // Central-difference Jacobian, one-sided at the floor.
        for (std::size_t k = 0; k < p; ++k) {
            const double h = 1e-5 * std::max(1.0, std::abs(nu[k]));
            std::vector<double> up = nu, down = nu;
            up[k] += h;
            const bool central = nu[k] - h > floor;
            if (central) down[k] -= h;
            const std::vector<double> ru = residual(up);
            const std::vector<double> rd = central ? residual(down) : e;
            const double width = central ? 2.0 * h : h;
            for (std::size_t i = 0; i < n; ++i) jac[i * p + k] = (ru[i] - rd[i]) / width;
        }
        std::vector<double> jtj(p * p, 0.0), grad(p, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t a = 0; a < p; ++a) {
                grad[a] += jac[i * p + a] * e[i];
                for (std::size_t b = 0; b < p; ++b) jtj[a * p + b] += jac[i * p + a] * jac[i * p + b];
            }
        }
        double gnorm = 0.0;
        for (double g : grad) gnorm += 4.0 * g * g;
        if (std::sqrt(gnorm) < settings.grad_tol) {
            result.status = GdStatus::Converged;
            break;
        }
        if (lambda < 0.0) {
            double diag = 0.0;
            for (std::size_t a = 0; a < p; ++a) diag = std::max(diag, jtj[a * p + a]);
            lambda = 1e-3 * diag;
        }
        bool descended = false;
        double trial = current;
        std::vector<double> trial_e;
        double moved = 0.0, size = 0.0;
        for (std::size_t attempt = 0; attempt < settings.backtrack_limit; ++attempt) {
            std::vector<double> system = jtj;
            for (std::size_t a = 0; a < p; ++a) {
                system[a * p + a] += lambda * std::max(jtj[a * p + a], 1e-300);
            }
            std::vector<double> step(p);
            for (std::size_t a = 0; a < p; ++a) step[a] = -grad[a];
            if (solve_dense(system, step)) {
                moved = size = 0.0;
                for (std::size_t a = 0; a < p; ++a) {
                    candidate[a] = std::max(nu[a] + step[a], floor);
                    moved += (candidate[a] - nu[a]) * (candidate[a] - nu[a]);
                    size += nu[a] * nu[a];
                }
                try {
                    trial_e = residual(candidate);
                    trial = energy_of(trial_e);
                } catch (const Error&) {
                    trial = std::numeric_limits<double>::infinity();
                }
                if (trial < current) {
                    descended = true;
                    break;
                }
            }
            lambda = std::max(lambda, 1e-300) * 4.0;
        }
        if (!descended) {
            result.status = GdStatus::NoDescent;
            break;
        }
        lambda /= 3.0;
        nu = candidate;
        e.swap(trial_e);
        current = trial;
        result.trace.push_back(current);
        if (std::sqrt(moved) <= settings.step_tol * std::sqrt(size)) {
            ++iter;
            result.status = GdStatus::Converged;
            break;
        }
    }
    result.iterations = iter;
    result.xi_hat = map.restore(eta, nu);
    result.loss = std::sqrt(current);
    result.nu_hat = std::move(nu);
    return result;
}

} // namespace

GdResult gradient_descent(const PosteriorContext& ctx, std::span<const double> eta,
                          std::vector<double> nu0, const GdSettings& settings)
{
    settings.validate();
    const ReparamMap& map = ctx.map();
    if (nu0.size() != map.nu_size()) {
        throw Error(ErrorKind::DimensionMismatch, "nu0 has the wrong length");
    }
    const double floor = map.kind() == MapKind::Identity ? 0.0 : settings.nu_floor;
    for (double& v : nu0) v = std::max(v, floor);

    const std::vector<double> eta_fixed(eta.begin(), eta.end());
    if (settings.method == RestoreMethod::LevenbergMarquardt) {
        return levenberg_marquardt(ctx, eta_fixed, std::move(nu0), settings, floor);
    }
    const auto energy = [&](std::span<const double> nu) { return ctx.ete(eta_fixed, nu); };
    const auto safe_energy = [&](std::span<const double> nu) {
        try {
            const double e = energy(nu);
            return std::isfinite(e) ? e : std::numeric_limits<double>::infinity();
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };

    GdResult result;
    std::vector<double> nu = std::move(nu0);
    double current = energy(nu);
    result.trace.push_back(current);
    result.status = GdStatus::MaxIter;

    std::vector<double> candidate(nu.size());
    const double probe_floor = map.kind() == MapKind::Identity ? 0.0 : floor;
    std::size_t iter = 0;
    for (; iter < settings.max_iter; ++iter) {
        const std::vector<double> grad =
            numerical_gradient(energy, nu, StepRule::Scaled, probe_floor);
        const double norm = std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
        if (norm < settings.grad_tol) {
            result.status = GdStatus::Converged;
            break;
        }
        bool descended = false;
        double length = settings.step;
        double trial = current;
        for (std::size_t i = 0; i < settings.backtrack_limit; ++i, length *= settings.shrink) {
            for (std::size_t j = 0; j < nu.size(); ++j) {
                candidate[j] = std::max(nu[j] - length * grad[j] / norm, floor);
            }
            trial = safe_energy(candidate);
            if (trial < current) {
                descended = true;
                break;
            }
        }
        if (!descended) {
            result.status = GdStatus::NoDescent;
            break;
        }
        nu.swap(candidate);
        current = trial;
        result.trace.push_back(current);
    }
    result.iterations = iter;
    result.xi_hat = map.restore(eta_fixed, nu);
    result.loss = std::sqrt(current);
    result.nu_hat = std::move(nu);
    return result;
}

namespace {

std::vector<double> smooth(std::span<const double> values, std::size_t window)
{
    const std::size_t half = window / 2;
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(values.size() - 1, i + half);
        double sum = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) sum += values[k];
        out[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

NuStart fallback(const PosteriorContext& ctx, const NuInitSettings& settings)
{
    const std::size_t count = ctx.map().nu_size();
    if (settings.default_nu.size() == count) return {settings.default_nu, true};
    std::vector<double> nu(count);
    const double lo = ctx.obs().window_lo();
    const double hi = ctx.obs().window_hi();
    for (std::size_t i = 0; i < count; ++i) {
        const double spaced = lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(count + 1);
        nu[i] = std::max(spaced, 1.0);
    }
    return {nu, true};
}

/// Height of a peak above the higher of the two valleys separating it from
/// taller ground on either side.
double prominence(const std::vector<double>& s, std::size_t peak)
{
    double left = s[peak];
    for (std::size_t i = peak; i-- > 0;) {
        if (s[i] > s[peak]) break;
        left = std::min(left, s[i]);
    }
    double right = s[peak];
    for (std::size_t i = peak + 1; i < s.size(); ++i) {
        if (s[i] > s[peak]) break;
        right = std::min(right, s[i]);
    }
    return s[peak] - std::max(left, right);
}

/// Locations of the `count` most prominent local maxima of the smoothed observation.
NuStart peak_locations(const PosteriorContext& ctx, const NuInitSettings& settings)
{
    const std::size_t count = ctx.map().nu_size();
    const auto times = ctx.obs().times();
    const std::vector<double> s = smooth(ctx.obs().values(), std::max<std::size_t>(settings.smoothing, 1));
    std::vector<std::size_t> peaks;
    std::vector<double> score(s.size(), 0.0);
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] > 0.0 && s[i] > s[i - 1] && s[i] >= s[i + 1]) {
            peaks.push_back(i);
            score[i] = prominence(s, i);
        }
    }
    if (peaks.size() < count) return fallback(ctx, settings);
    std::stable_sort(peaks.begin(), peaks.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    peaks.resize(count);
    std::sort(peaks.begin(), peaks.end());
    NuStart start;
    for (std::size_t idx : peaks) start.nu.push_back(std::max(times[idx], 1e-3));
    return start;
}

/// Shape guesses matching the observation's first moment for each fixed
/// scale, refined by the best point of a coarse log-spaced shape grid.
NuStart moment_shapes(const PosteriorContext& ctx, std::span<const double> eta,
                      const NuInitSettings& settings)
{
    const auto times = ctx.obs().times();
    const auto values = ctx.obs().values();
    double mass = 0.0;
    double first = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double w = std::max(values[i], 0.0);
        mass += w;
        first += w * times[i];
    }
    if (!(mass > 0.0)) return fallback(ctx, settings);
    const double mean = first / mass;
    NuStart start;
    for (double scale : eta) {
        if (!(scale > 0.0) || !(mean > 0.0)) return fallback(ctx, settings);
        // Shapes below 1 make the density unbounded at t = 0.
        start.nu.push_back(std::clamp(mean / scale, 1.0, settings.shape_max));
    }

    const auto energy = [&](std::span<const double> nu) {
        try {
            return ctx.ete(eta, nu);
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    double best = energy(start.nu);
    const std::size_t levels = settings.shape_grid;
    if (levels < 2) return start;
    const double ratio = std::log(settings.shape_max);
    std::vector<std::size_t> digit(eta.size(), 0);
    std::vector<double> nu(eta.size());
    for (;;) {
        for (std::size_t i = 0; i < nu.size(); ++i) {
            nu[i] = std::exp(ratio * static_cast<double>(digit[i]) / static_cast<double>(levels - 1));
        }
        const double e = energy(nu);
        if (e < best) {
            best = e;
            start.nu = nu;
        }
        std::size_t i = 0;
        while (i < digit.size() && ++digit[i] == levels) digit[i++] = 0;
        if (i == digit.size()) break;
    }
    return start;
}

} // namespace

NuStart nu_init(const PosteriorContext& ctx, std::span<const double> eta,
                const NuInitSettings& settings)
{
    const ReparamMap& map = ctx.map();
    switch (map.kind()) {
    case MapKind::WeightSum: return peak_locations(ctx, settings);
    case MapKind::ShapeScale: return moment_shapes(ctx, eta, settings);
    case MapKind::ChromaRatioSum:
        if (settings.default_nu.size() == map.nu_size()) return {settings.default_nu, false};
        return fallback(ctx, settings);
    case MapKind::Identity:
        if (settings.default_nu.size() == map.nu_size()) return {settings.default_nu, false};
        return {std::vector<double>(map.nu_size(), 1.0), true};
    }
    return fallback(ctx, settings);
}

} // namespace isofit
