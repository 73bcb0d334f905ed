#include "isofit/samplers.hpp"

#include "isofit/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace isofit {

std::string_view to_string(SamplerKind kind) noexcept
{
    switch (kind) {
    case SamplerKind::MwG: return "mwg";
    case SamplerKind::MGDG: return "mgdg";
    case SamplerKind::MALG: return "malg";
    }
    return "unknown";
}

SamplerKind sampler_kind_from_string(std::string_view name)
{
    if (name == "mwg") return SamplerKind::MwG;
    if (name == "mgdg") return SamplerKind::MGDG;
    if (name == "malg") return SamplerKind::MALG;
    throw Error(ErrorKind::ConfigError, "unknown sampler: " + std::string(name));
}

double eta_upper_bound(const ReparamMap& map) noexcept
{
    return map.kind() == MapKind::Identity ? std::numeric_limits<double>::infinity() : 1.0;
}

std::vector<std::string> accept_labels(const SamplerSettings& settings, const ReparamMap& map)
{
    std::vector<std::string> labels{"sigma2"};
    const auto numbered = [&](const std::string& stem, std::size_t count) {
        for (std::size_t i = 1; i <= count; ++i) labels.push_back(stem + "_" + std::to_string(i));
    };
    switch (settings.kind) {
    case SamplerKind::MwG: numbered("xi", map.dimension()); break;
    case SamplerKind::MGDG: numbered("eta", map.eta_size()); break;
    case SamplerKind::MALG:
        if (map.nu_size() > 0) labels.push_back("nu");
        if (map.eta_size() > 0) {
            if (settings.eta_per_coordinate) {
                numbered("eta", map.eta_size());
            } else {
                labels.push_back("eta");
            }
        }
        break;
    }
    return labels;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Sub-stream layout under one seed.
enum Stream : std::uint64_t { kInit = 0, kSigma2 = 1, kEta = 2, kNu = 3, kXi = 4 };

/// Draw from TN(current, sd, lo, hi); sd == 0 returns the current value.
double propose(Philox& rng, double current, double sd, double lo, double hi)
{
    if (sd == 0.0) return current;
    return truncated_normal_sample(rng, current, sd, lo, hi);
}

/// log q(from | to) - log q(to | from) for the truncated-normal random walk.
double hastings(double from, double to, double sd, double lo, double hi)
{
    if (sd == 0.0) return 0.0;
    return truncated_normal_log_density(from, to, sd, lo, hi) -
           truncated_normal_log_density(to, from, sd, lo, hi);
}

bool accept(Philox& rng, double log_ratio)
{
    if (std::isnan(log_ratio)) return false;
    if (log_ratio >= 0.0) return true;
    return std::log(uniform01(rng)) < log_ratio;
}

double safe_ete(const PosteriorContext& ctx, std::span<const double> eta, std::span<const double> nu)
{
    try {
        return ctx.ete(eta, nu);
    } catch (const Error&) {
        return std::numeric_limits<double>::infinity();
    }
}

/// log(1 - tanh(x)^2) without cancellation.
double log_sech2(double x)
{
    const double a = std::abs(x);
    return -2.0 * (a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2);
}

void check_sizes(const PosteriorContext& ctx, const Hyperparameters& psi, SamplerKind kind,
                 bool unconstrained)
{
    const ReparamMap& map = ctx.map();
    if (kind == SamplerKind::MwG) {
        if (psi.xi_proposal_sd.size() != map.dimension()) {
            throw Error(ErrorKind::ConfigError, "xi proposal sd needs one entry per parameter");
        }
        return;
    }
    const auto& sd = (kind == SamplerKind::MALG && unconstrained) ? psi.eta_tilde_proposal_sd
                                                                   : psi.eta_proposal_sd;
    if (sd.size() != map.eta_size()) {
        throw Error(ErrorKind::ConfigError, "eta proposal sd needs one entry per eta coordinate");
    }
}

/// Shared start for all kernels: initial eta/nu, beta, sigma^2.
struct Start {
    PosteriorContext ctx;
    std::vector<double> eta;
    std::vector<double> nu;
    double ete;
    double sigma2;
    bool nu_fallback;
};

Start prepare(const PosteriorContext& ctx, const SamplerSettings& settings)
{
    Hyperparameters psi = ctx.psi();
    psi.validate();
    check_sizes(ctx, psi, settings.kind, settings.unconstrained);

    Philox rng(settings.seed, kInit);
    EtaStart start;
    if (settings.initial_eta) {
        if (settings.initial_eta->size() != ctx.map().eta_size()) {
            throw Error(ErrorKind::DimensionMismatch, "initial eta has the wrong length");
        }
        const NuStart nu0 = nu_init(ctx, *settings.initial_eta, settings.nu_start);
        const GdResult fit = gradient_descent(ctx, *settings.initial_eta, nu0.nu, settings.gd);
        start = {*settings.initial_eta, fit.nu_hat, fit.loss, fit.trace.back(), nu0.fallback_used};
    } else {
        start = init_eta(ctx, psi.init_candidates, rng, settings.gd, settings.nu_start);
    }
    const double ete = start.ete;
    if (settings.beta_auto) {
        psi.beta = std::max(ete / static_cast<double>(ctx.n()), std::numeric_limits<double>::min());
    }
    const double sigma2 = settings.initial_sigma2 ? *settings.initial_sigma2 : init_sigma2(psi, rng);
    if (!(sigma2 > 0.0)) throw Error(ErrorKind::ConfigError, "initial sigma^2 must be > 0");
    return {ctx.with_psi(psi), start.eta, start.nu, ete, sigma2, start.nu_fallback};
}

/// Log-normal random walk on sigma^2 with its Hastings term.
bool sigma2_step(const PosteriorContext& ctx, const SamplerSettings& settings, Philox& rng,
                 double ete, double& sigma2)
{
    const double sd = ctx.psi().sigma2_log_sd;
    if (settings.fix_sigma2 || sd == 0.0) return true;
    const double candidate = sigma2 * std::exp(sd * standard_normal(rng));
    if (!(candidate > 0.0) || !std::isfinite(candidate)) return false;
    const double log_ratio = ctx.sigma2_log_ratio(candidate, sigma2, ete, settings.sigma2_ratio) +
                             std::log(candidate) - std::log(sigma2);
    if (!accept(rng, log_ratio)) return false;
    sigma2 = candidate;
    return true;
}

ChainRecord make_record(const PosteriorContext& ctx, std::size_t iter, const std::vector<double>& eta,
                        const std::vector<double>& nu, double ete, double sigma2,
                        std::vector<double> flags)
{
    ChainRecord rec;
    rec.iter = iter;
    rec.burn_in = iter <= ctx.psi().burn_in;
    rec.eta = eta;
    rec.nu = nu;
    rec.xi_hat = ctx.map().restore(eta, nu).vec();
    rec.sigma2 = sigma2;
    rec.loss = std::sqrt(ete);
    rec.accept = std::move(flags);
    return rec;
}

/// nu_hat(eta) restored from the deterministic start nu_init(eta), so it is a
/// function of eta alone. The fit of the current state is kept so that the
/// per-sweep restoration does not repeat work.
class Restorer {
public:
    Restorer(const PosteriorContext& ctx, const SamplerSettings& settings)
        : ctx_(ctx), settings_(settings) {}

    GdResult operator()(const std::vector<double>& eta) const
    {
        if (has_state_ && eta == state_eta_) return state_;
        const NuStart start = nu_init(ctx_, eta, settings_.nu_start);
        return gradient_descent(ctx_, eta, start.nu, settings_.gd);
    }

    void keep(const std::vector<double>& eta, GdResult fit)
    {
        state_eta_ = eta;
        state_ = std::move(fit);
        has_state_ = true;
    }

private:
    const PosteriorContext& ctx_;
    const SamplerSettings& settings_;
    bool has_state_ = false;
    std::vector<double> state_eta_;
    GdResult state_;
};

double energy_scale(const PosteriorContext& ctx, double sigma2)
{
    return 0.5 / sigma2 + ctx.psi().gamma;
}

} // namespace

EtaStart init_eta(const PosteriorContext& ctx, std::size_t candidates, Philox& rng,
                  const GdSettings& gd, const NuInitSettings& nu_start)
{
    if (candidates == 0) throw Error(ErrorKind::ConfigError, "need at least one candidate");
    const std::size_t d = ctx.map().eta_size();
    EtaStart best;
    best.loss = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t c = 0; c < candidates; ++c) {
        std::vector<double> eta(d);
        for (double& v : eta) v = uniform01(rng);
        const NuStart nu0 = nu_init(ctx, eta, nu_start);
        double loss;
        GdResult fit;
        try {
            fit = gradient_descent(ctx, eta, nu0.nu, gd);
            loss = fit.loss;
        } catch (const Error&) {
            continue;
        }
        if (!found || loss < best.loss) {
            best = {eta, fit.nu_hat, loss, fit.trace.back(), nu0.fallback_used};
            found = true;
        }
    }
    if (!found) throw Error(ErrorKind::NonFiniteValue, "no initial candidate has a finite loss");
    return best;
}

double init_sigma2(const Hyperparameters& psi, Philox& rng)
{
    return inverse_gamma_draw(rng, psi.alpha, psi.beta);
}

SamplerRun run_mwg(const PosteriorContext& input, const SamplerSettings& settings)
{
    Start s = prepare(input, settings);
    const PosteriorContext& ctx = s.ctx;
    const Hyperparameters& psi = ctx.psi();
    const ReparamMap& map = ctx.map();
    Philox sigma_rng(settings.seed, kSigma2);
    Philox xi_rng(settings.seed, kXi);

    std::vector<double> xi = map.restore(s.eta, s.nu).vec();
    double ete = s.ete;
    double sigma2 = s.sigma2;
    const double inf = std::numeric_limits<double>::infinity();

    SamplerRun run;
    run.psi = psi;
    run.eta0 = s.eta;
    run.nu0 = s.nu;
    run.nu_fallback = s.nu_fallback;
    run.chain.reserve(psi.chain_length);
    for (std::size_t k = 1; k <= psi.chain_length; ++k) {
        std::vector<double> flags;
        for (std::size_t j = 0; j < xi.size(); ++j) {
            const double sd = psi.xi_proposal_sd[j];
            std::vector<double> candidate = xi;
            candidate[j] = propose(xi_rng, xi[j], sd, 0.0, inf);
            double e_new;
            try {
                e_new = ctx.ete(ParameterVector(candidate));
            } catch (const Error&) {
                e_new = inf;
            }
            double log_ratio = kNegInf;
            if (std::isfinite(e_new)) {
                log_ratio = ctx.log_posterior_from_ete(e_new, sigma2) -
                            ctx.log_posterior_from_ete(ete, sigma2) +
                            hastings(xi[j], candidate[j], sd, 0.0, inf);
            }
            const bool ok = accept(xi_rng, log_ratio);
            if (ok) {
                xi = std::move(candidate);
                ete = e_new;
            }
            flags.push_back(ok ? 1.0 : 0.0);
        }
        flags.insert(flags.begin(), sigma2_step(ctx, settings, sigma_rng, ete, sigma2) ? 1.0 : 0.0);
        ReducedParameters reduced;
        try {
            reduced = map.split(ParameterVector(xi));
        } catch (const Error&) {
            reduced.eta.assign(map.eta_size(), std::numeric_limits<double>::quiet_NaN());
            reduced.nu.assign(map.nu_size(), std::numeric_limits<double>::quiet_NaN());
        }
        ChainRecord rec;
        rec.iter = k;
        rec.burn_in = k <= psi.burn_in;
        rec.eta = std::move(reduced.eta);
        rec.nu = std::move(reduced.nu);
        rec.xi_hat = xi;
        rec.sigma2 = sigma2;
        rec.loss = std::sqrt(ete);
        rec.accept = std::move(flags);
        run.chain.push_back(std::move(rec));
    }
    return run;
}

SamplerRun run_mgdg(const PosteriorContext& input, const SamplerSettings& settings)
{
    Start s = prepare(input, settings);
    const PosteriorContext& ctx = s.ctx;
    const Hyperparameters& psi = ctx.psi();
    const double upper = eta_upper_bound(ctx.map());
    Philox sigma_rng(settings.seed, kSigma2);
    Philox eta_rng(settings.seed, kEta);
    Restorer restore(ctx, settings);

    std::vector<double> eta = s.eta;
    std::vector<double> nu = s.nu;
    double ete = s.ete;
    double sigma2 = s.sigma2;
    const auto keep_state = [&] {
        GdResult fit;
        fit.nu_hat = nu;
        fit.loss = std::sqrt(ete);
        fit.trace = {ete};
        restore.keep(eta, std::move(fit));
    };
    keep_state();

    SamplerRun run;
    run.psi = psi;
    run.eta0 = s.eta;
    run.nu0 = s.nu;
    run.nu_fallback = s.nu_fallback;
    run.chain.reserve(psi.chain_length);
    for (std::size_t k = 1; k <= psi.chain_length; ++k) {
        std::vector<double> flags;
        flags.push_back(sigma2_step(ctx, settings, sigma_rng, ete, sigma2) ? 1.0 : 0.0);
        const double scale = energy_scale(ctx, sigma2);
        const auto restore_state = [&] {
            const GdResult fit = restore(eta);
            nu = fit.nu_hat;
            ete = fit.trace.back();
        };
        for (std::size_t j = 0; j < eta.size(); ++j) {
            const double sd = psi.eta_proposal_sd[j];
            std::vector<double> candidate = eta;
            candidate[j] = propose(eta_rng, eta[j], sd, 0.0, upper);
            double e_new = std::numeric_limits<double>::infinity();
            std::vector<double> nu_new;
            try {
                const GdResult fit = restore(candidate);
                e_new = fit.trace.back();
                nu_new = fit.nu_hat;
            } catch (const Error&) {
            }
            double log_ratio = kNegInf;
            if (std::isfinite(e_new)) {
                log_ratio = -(e_new - ete) * scale + hastings(eta[j], candidate[j], sd, 0.0, upper);
            }
            const bool ok = accept(eta_rng, log_ratio);
            if (ok) {
                eta = std::move(candidate);
                nu = std::move(nu_new);
                ete = e_new;
                keep_state();
            }
            flags.push_back(ok ? 1.0 : 0.0);
            if (settings.restore_per_coordinate) restore_state();
        }
        if (!settings.restore_per_coordinate) restore_state();
        // Relabelling leaves the residual unchanged; the permuted nu stays the
        // restoration of the permuted eta.
        std::tie(eta, nu) = apply_sort_rule(psi.sort_rule, std::move(eta), std::move(nu));
        keep_state();
        run.chain.push_back(make_record(ctx, k, eta, nu, ete, sigma2, std::move(flags)));
    }
    return run;
}

namespace {

/// Langevin sub-chain state in either nu or nu~ = log(nu) coordinates.
struct LangevinTarget {
    const PosteriorContext& ctx;
    bool log_space;

    std::vector<double> to_nu(const std::vector<double>& x) const
    {
        if (!log_space) return x;
        std::vector<double> nu(x.size());
        std::transform(x.begin(), x.end(), nu.begin(), [](double v) { return std::exp(v); });
        return nu;
    }

    /// log pi up to a constant; -inf outside the domain.
    double log_density(const std::vector<double>& eta, const std::vector<double>& x, double scale,
                       double& ete) const
    {
        const std::vector<double> nu = to_nu(x);
        if (!ctx.map().nu_in_domain(nu)) return kNegInf;
        ete = safe_ete(ctx, eta, nu);
        if (!std::isfinite(ete)) return kNegInf;
        double value = -scale * ete;
        if (log_space) {
            for (double v : x) value += v;
        }
        return value;
    }

    std::vector<double> drift(const std::vector<double>& eta, const std::vector<double>& x,
                              double sigma2) const
    {
        return log_space ? ctx.mala_drift_log(eta, x, sigma2) : ctx.mala_drift(eta, x, sigma2);
    }
};

double langevin_log_q(const std::vector<double>& to, const std::vector<double>& from,
                      const std::vector<double>& drift, double tau, bool literal)
{
    double sq = 0.0;
    for (std::size_t i = 0; i < to.size(); ++i) {
        const double d = to[i] - from[i] - tau * drift[i];
        sq += d * d;
    }
    return -(literal ? std::sqrt(sq) : sq) / (4.0 * tau);
}

} // namespace

SamplerRun run_malg(const PosteriorContext& input, const SamplerSettings& settings)
{
    Start s = prepare(input, settings);
    const PosteriorContext& ctx = s.ctx;
    const Hyperparameters& psi = ctx.psi();
    const ReparamMap& map = ctx.map();
    const double upper = eta_upper_bound(map);
    const bool free = settings.unconstrained;
    if (free && map.kind() == MapKind::Identity) {
        throw Error(ErrorKind::ConfigError, "unconstrained mode needs a ratio or shape map");
    }
    Philox sigma_rng(settings.seed, kSigma2);
    Philox eta_rng(settings.seed, kEta);
    Philox nu_rng(settings.seed, kNu);
    const LangevinTarget target{ctx, free};

    // State: eta (or eta~) and x = nu (or nu~).
    std::vector<double> eta = s.eta;
    std::vector<double> x = s.nu;
    if (free) {
        ReducedParameters inside{eta, x};
        for (double& v : inside.eta) v = std::clamp(v, 1e-6, 1.0 - 1e-6);
        for (double& v : inside.nu) v = std::max(v, 1e-12);
        UnconstrainedPoint point = to_unconstrained(inside);
        eta = std::move(point.eta_tilde);
        x = std::move(point.nu_tilde);
    }
    const auto real_eta = [&](const std::vector<double>& e) {
        if (!free) return e;
        std::vector<double> out(e.size());
        std::transform(e.begin(), e.end(), out.begin(),
                       [](double v) { return 0.5 * (std::tanh(v) + 1.0); });
        return out;
    };
    const auto eta_log_jacobian = [&](const std::vector<double>& e) {
        double sum = 0.0;
        if (free) {
            for (double v : e) sum += log_sech2(v) - std::numbers::ln2;
        }
        return sum;
    };

    double ete = safe_ete(ctx, real_eta(eta), target.to_nu(x));
    if (!std::isfinite(ete)) throw Error(ErrorKind::NonFiniteState, "initial state has no finite loss");
    double sigma2 = s.sigma2;
    const double tau = psi.tau;
    const double jump = std::sqrt(2.0 * tau);

    SamplerRun run;
    run.psi = psi;
    run.eta0 = s.eta;
    run.nu0 = s.nu;
    run.nu_fallback = s.nu_fallback;
    run.chain.reserve(psi.chain_length);
    for (std::size_t k = 1; k <= psi.chain_length; ++k) {
        std::vector<double> flags;
        flags.push_back(sigma2_step(ctx, settings, sigma_rng, ete, sigma2) ? 1.0 : 0.0);
        const double scale = energy_scale(ctx, sigma2);

        // Langevin sub-chain on nu.
        if (!x.empty()) {
            const std::vector<double> eta_now = real_eta(eta);
            double e_cur = ete;
            double log_cur = target.log_density(eta_now, x, scale, e_cur);
            std::vector<double> g_cur = target.drift(eta_now, x, sigma2);
            std::size_t accepted = 0;
            for (std::size_t step = 0; step < psi.m; ++step) {
                std::vector<double> y(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) {
                    y[i] = x[i] + tau * g_cur[i] + jump * standard_normal(nu_rng);
                }
                double e_new = 0.0;
                const double log_new = target.log_density(eta_now, y, scale, e_new);
                double log_ratio = kNegInf;
                std::vector<double> g_new;
                if (std::isfinite(log_new)) {
                    try {
                        g_new = target.drift(eta_now, y, sigma2);
                        log_ratio = log_new - log_cur +
                                    langevin_log_q(x, y, g_new, tau, settings.literal_langevin_density) -
                                    langevin_log_q(y, x, g_cur, tau, settings.literal_langevin_density);
                    } catch (const Error&) {
                    }
                }
                if (accept(nu_rng, log_ratio)) {
                    x = std::move(y);
                    g_cur = std::move(g_new);
                    log_cur = log_new;
                    e_cur = e_new;
                    ++accepted;
                }
            }
            ete = e_cur;
            flags.push_back(static_cast<double>(accepted) / static_cast<double>(psi.m));
        }

        // Metropolis step on eta, as one block or coordinate by coordinate.
        if (!eta.empty()) {
            const std::vector<double> nu_now = target.to_nu(x);
            const auto& sds = free ? psi.eta_tilde_proposal_sd : psi.eta_proposal_sd;
            const auto propose_set = [&](const std::vector<std::size_t>& coords) {
                std::vector<double> candidate = eta;
                double log_q = 0.0;
                for (std::size_t j : coords) {
                    if (free) {
                        candidate[j] = eta[j] + sds[j] * standard_normal(eta_rng);
                    } else {
                        candidate[j] = propose(eta_rng, eta[j], sds[j], 0.0, upper);
                        log_q += hastings(eta[j], candidate[j], sds[j], 0.0, upper);
                    }
                }
                const double e_new = safe_ete(ctx, real_eta(candidate), nu_now);
                double log_ratio = kNegInf;
                if (std::isfinite(e_new)) {
                    log_ratio = -(e_new - ete) * scale + log_q + eta_log_jacobian(candidate) -
                                eta_log_jacobian(eta);
                }
                const bool ok = accept(eta_rng, log_ratio);
                if (ok) {
                    eta = std::move(candidate);
                    ete = e_new;
                }
                return ok ? 1.0 : 0.0;
            };
            if (settings.eta_per_coordinate) {
                for (std::size_t j = 0; j < eta.size(); ++j) flags.push_back(propose_set({j}));
            } else {
                std::vector<std::size_t> all(eta.size());
                for (std::size_t j = 0; j < all.size(); ++j) all[j] = j;
                flags.push_back(propose_set(all));
            }
        }

        // tanh is monotone, so sorting eta~ sorts eta.
        std::tie(eta, x) = apply_sort_rule(psi.sort_rule, std::move(eta), std::move(x));
        run.chain.push_back(make_record(ctx, k, real_eta(eta), target.to_nu(x), ete, sigma2,
                                        std::move(flags)));
    }
    return run;
}

SamplerRun run_sampler(const PosteriorContext& ctx, const SamplerSettings& settings)
{
    switch (settings.kind) {
    case SamplerKind::MwG: return run_mwg(ctx, settings);
    case SamplerKind::MGDG: return run_mgdg(ctx, settings);
    case SamplerKind::MALG: return run_malg(ctx, settings);
    }
    throw Error(ErrorKind::ConfigError, "unknown sampler kind");
}

} // namespace isofit
