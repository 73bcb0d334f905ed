// Acceptance runs at full scale. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include "isofit/app.hpp"
#include "isofit/chroma.hpp"
#include "isofit/config.hpp"
#include "isofit/diagnostics.hpp"
#include "isofit/error.hpp"
#include "isofit/optim.hpp"
#include "isofit/random.hpp"
#include "isofit/samplers.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace isofit;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "[x] ") + what;
    }
};

std::string fmt(const char* pattern, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, a);
    return buf;
}

std::string list(const std::vector<double>& v, const char* pattern = "%.4f")
{
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(pattern, v[i]);
    return s + ")";
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch_dir(const std::string& name)
{
    fs::path dir = fs::temp_directory_path() / ("isofit_acceptance_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<double> post_burn(const Chain& chain,
                              const std::function<double(const ChainRecord&)>& get)
{
    std::vector<double> out;
    for (const auto& rec : chain)
        if (!rec.burn_in) out.push_back(get(rec));
    return out;
}

double mean_of(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

ReducedParameters true_reduced(const RunConfig& config)
{
    auto reduced = config.reparam_map().split(ParameterVector(config.truth));
    auto [eta, nu] = apply_sort_rule(config.psi.sort_rule, reduced.eta, reduced.nu);
    return {eta, nu};
}

// Gaussian kernel density on a fine grid with Silverman's bandwidth; counts
// local maxima that rise at least 5% of the global peak above the deepest
// point separating them from a higher neighbour.
std::size_t count_modes(std::vector<double> x)
{
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    const double m = mean_of(x);
    double var = 0.0;
    for (double v : x) var += (v - m) * (v - m);
    const double sd = std::sqrt(var / (n - 1.0));
    const double iqr = quantile_sorted(x, 0.75) - quantile_sorted(x, 0.25);
    const double spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) return 1;
    const double h = 0.9 * spread * std::pow(n, -0.2);
    const std::size_t points = 256;
    const double lo = x.front() - 3 * h;
    const double hi = x.back() + 3 * h;
    std::vector<double> f(points, 0.0);
    for (std::size_t i = 0; i < points; ++i) {
        const double g = lo + (hi - lo) * static_cast<double>(i) / (points - 1);
        auto first = std::lower_bound(x.begin(), x.end(), g - 6 * h);
        auto last = std::upper_bound(x.begin(), x.end(), g + 6 * h);
        for (auto it = first; it != last; ++it) f[i] += std::exp(-0.5 * std::pow((g - *it) / h, 2));
    }
    const double peak = *std::max_element(f.begin(), f.end());
    std::size_t modes = 0;
    for (std::size_t i = 1; i + 1 < points; ++i) {
        if (!(f[i] > f[i - 1] && f[i] >= f[i + 1])) continue;
        // prominence against the lower of the two basins towards higher ground
        double left = f[i], right = f[i];
        std::size_t j = i;
        while (j > 0 && f[j] <= f[i]) left = std::min(left, f[--j]);
        if (f[j] <= f[i]) left = 0.0;
        j = i;
        while (j + 1 < points && f[j] <= f[i]) right = std::min(right, f[++j]);
        if (f[j] <= f[i]) right = 0.0;
        if (f[i] - std::max(left, right) >= 0.05 * peak) ++modes;
    }
    return modes;
}

// Shared between criteria 1 and 7.
struct Case1Run {
    RunConfig config;
    Observation obs;
    FitReport report;
    double seconds = 0.0;
};

std::optional<Case1Run> g_case1;

const Case1Run& case1_mgdg()
{
    if (!g_case1) {
        RunConfig config = RunConfig::from_preset("case1");
        config.sampler = SamplerKind::MGDG;
        Observation obs = simulate(config, config.noise_seed());
        auto t0 = std::chrono::steady_clock::now();
        FitReport report = fit_observation(config, obs);
        g_case1 = Case1Run{config, obs, std::move(report), seconds_since(t0)};
    }
    return *g_case1;
}

Verdict case1_recovery()
{
    const auto& run = case1_mgdg();
    Verdict v;
    const auto& truth = run.config.truth;
    double worst = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        worst = std::max(worst, std::abs(run.report.xi_mean[i] - truth[i]));
    v.require(worst <= 0.15, "xi mean " + list(run.report.xi_mean) + ", max |dev| " +
                                 fmt("%.4f", worst) + " <= 0.15");
    const double s2 = run.report.summary.at("sigma2").mean;
    v.require(s2 >= 0.0005 && s2 <= 0.002, "sigma2 mean " + fmt("%.5f", s2) + " in [0.0005, 0.002]");
    v.require(run.seconds < 120.0, "runtime " + fmt("%.1f s", run.seconds) + " < 120 s");
    return v;
}

Verdict case1_malg()
{
    RunConfig config = RunConfig::from_preset("case1");
    config.sampler = SamplerKind::MALG;
    config.psi.chain_length = 2000;
    const Observation obs = simulate(config, config.noise_seed());
    auto t0 = std::chrono::steady_clock::now();
    const FitReport report = fit_observation(config, obs);
    const double secs = seconds_since(t0);
    const auto star = true_reduced(config);

    Verdict v;
    auto check = [&](const char* name, std::size_t i, double target, bool is_eta) {
        auto res = post_burn(report.run.chain, [&](const ChainRecord& r) {
            return (is_eta ? r.eta[i] : r.nu[i]) - target;
        });
        const double m = mean_of(res);
        const std::size_t modes = count_modes(res);
        v.require(std::abs(m) < 0.15 && modes == 1,
                  std::string(name) + std::to_string(i + 1) + " residual mean " + fmt("%+.4f", m) +
                      ", modes " + std::to_string(modes));
    };
    for (std::size_t i = 0; i < star.eta.size(); ++i) check("eta", i, star.eta[i], true);
    for (std::size_t i = 0; i < star.nu.size(); ++i) check("nu", i, star.nu[i], false);
    v.require(secs < 600.0, "runtime " + fmt("%.1f s", secs) + " < 600 s");
    return v;
}

Verdict case2_recovery()
{
    RunConfig config = RunConfig::from_preset("case2");
    config.sampler = SamplerKind::MGDG;
    config.psi.chain_length = 5000;
    const Observation obs = simulate(config, config.noise_seed());
    auto t0 = std::chrono::steady_clock::now();
    const FitReport report = fit_observation(config, obs);
    const double secs = seconds_since(t0);
    const auto star = true_reduced(config);

    Verdict v;
    std::vector<double> means;
    double worst = 0.0;
    for (std::size_t i = 0; i < star.eta.size(); ++i) {
        means.push_back(mean_of(post_burn(report.run.chain, [&](const ChainRecord& r) { return r.eta[i]; })));
        worst = std::max(worst, std::abs(means[i] - star.eta[i]));
    }
    v.require(worst <= 0.1, "eta mean " + list(means) + " vs " + list(star.eta) + ", max |dev| " +
                                fmt("%.4f", worst) + " <= 0.1");
    v.require(secs < 600.0, "runtime " + fmt("%.1f s", secs) + " < 600 s");
    return v;
}

Verdict case3_recovery()
{
    RunConfig config = RunConfig::from_preset("case3");
    config.sampler = SamplerKind::MGDG;
    config.psi.chain_length = 5000;
    const Observation obs = simulate(config, config.noise_seed());
    auto t0 = std::chrono::steady_clock::now();
    const FitReport report = fit_observation(config, obs);
    const double secs = seconds_since(t0);

    Verdict v;
    // The unweighted Gamma sum is symmetric under swapping the two (shape,
    // scale) pairs and no sort rule is applied, so which label a chain settles
    // on is arbitrary. Score the labelling that matches the truth.
    const auto& raw = report.xi_mean;
    const std::vector<double> swapped{raw[2], raw[3], raw[0], raw[1]};
    const auto& truth = config.truth;
    const auto dev = [&](const std::vector<double>& xi, std::size_t k) {
        return std::max(std::abs(xi[2 * k] - truth[2 * k]), std::abs(xi[2 * k + 1] - truth[2 * k + 1]));
    };
    const auto cost = [&](const std::vector<double>& xi) {
        double s = 0.0;
        for (std::size_t i = 0; i < 4; ++i) s += std::pow(xi[i] - truth[i], 2);
        return s;
    };
    const bool swap = cost(swapped) < cost(raw);
    const auto& xi = swap ? swapped : raw;
    const double first = dev(xi, 0);
    const double second = dev(xi, 1);
    v.require(first <= 0.2, "first component " + list({xi[0], xi[1]}) + ", max |dev| " +
                                fmt("%.4f", first) + " <= 0.2");
    v.require(second <= 0.5, "second component " + list({xi[2], xi[3]}) + ", max |dev| " +
                                 fmt("%.4f", second) + " <= 0.5");
    v.detail += std::string("; chain labels ") + (swap ? "swapped" : "as truth") + ", raw xi mean " + list(raw);
    v.detail += "; runtime " + fmt("%.1f s", secs);
    return v;
}

Verdict chroma_run()
{
    RunConfig config = RunConfig::from_preset("chroma");
    config.sampler = SamplerKind::MGDG;
    config.psi.chain_length = 500;
    config.psi.burn_in = 100;
    const Observation obs = simulate(config, config.noise_seed());
    auto t0 = std::chrono::steady_clock::now();
    const FitReport report = fit_observation(config, obs);
    const double secs = seconds_since(t0);

    Verdict v;
    const double band = std::max(*report.re_band_lower, *report.re_band_upper);
    v.require(band <= 0.06, "band max RE " + fmt("%.4f", band) + " <= 0.06");
    const double re_obs = *report.re_observation;
    v.require(std::abs(re_obs - 0.26) <= 0.05, "observation RE " + fmt("%.4f", re_obs) + " in 0.26 +- 0.05");
    v.require(secs < 3600.0, "runtime " + fmt("%.1f s", secs) + " < 3600 s");
    v.detail += "; posterior-mean RE " + fmt("%.4f", *report.re_mean);
    return v;
}

// Independent reference for the toy: with gamma = 0 and sigma^2 integrated
// out, xi_1 | r is Student-t with dof n + 2 alpha - 1 around the least-squares
// estimate.
Verdict conjugate_toy()
{
    RunConfig config = RunConfig::from_preset("linear");
    const std::size_t draws = 100000;
    config.psi.burn_in = 1000;
    config.psi.chain_length = draws + config.psi.burn_in;
    const Observation obs = simulate(config, config.noise_seed());

    double stt = 0.0, str = 0.0, srr = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double t = obs.times()[i], r = obs.values()[i];
        stt += t * t;
        str += t * r;
        srr += r * r;
    }
    const double xi_ls = str / stt;
    const double sse = srr - str * str / stt;
    const double n = static_cast<double>(obs.size());

    Verdict v;
    for (SamplerKind kind : {SamplerKind::MwG, SamplerKind::MGDG, SamplerKind::MALG}) {
        config.sampler = kind;
        const FitReport report = fit_observation(config, obs);
        const double dof = n + 2.0 * config.psi.alpha - 1.0;
        const double beta = report.run.psi.beta;
        const double exact_var = (2.0 * beta + sse) / (stt * (dof - 2.0));

        const auto x = post_burn(report.run.chain, [](const ChainRecord& r) { return r.xi_hat[0]; });
        const double m = mean_of(x);
        std::vector<double> dev2(x.size());
        double m4 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            dev2[i] = (x[i] - m) * (x[i] - m);
            m4 += dev2[i] * dev2[i];
        }
        const double var = mean_of(dev2);
        m4 /= static_cast<double>(x.size());
        const double se_mean = std::sqrt(var / batch_means_ess(x));
        const double se_var = std::sqrt((m4 - var * var) / batch_means_ess(dev2));
        const double zm = (m - xi_ls) / se_mean;
        const double zv = (var - exact_var) / se_var;
        v.require(std::abs(zm) <= 3.0 && std::abs(zv) <= 3.0,
                  std::string(to_string(kind)) + " mean " + fmt("%.5f", m) + " vs " + fmt("%.5f", xi_ls) +
                      " (z " + fmt("%+.2f", zm) + "), var " + fmt("%.3e", var) + " vs " +
                      fmt("%.3e", exact_var) + " (z " + fmt("%+.2f", zv) + ")");
    }
    return v;
}

Verdict property_suite()
{
    Verdict v;

    {
        Philox rng(2024, 1);
        double worst = 0.0;
        const std::vector<ReparamMap> maps{ReparamMap::weight_sum(2), ReparamMap::weight_sum(4),
                                           ReparamMap::shape_scale(2), ReparamMap::chroma_ratio_sum(1),
                                           ReparamMap::chroma_ratio_sum(2)};
        for (const auto& map : maps) {
            for (int k = 0; k < 2000; ++k) {
                std::vector<double> xi(map.dimension());
                for (double& x : xi) x = 0.01 + 10.0 * uniform01(rng);
                const ParameterVector p(xi);
                const ParameterVector back = map.restore(map.split(p));
                for (std::size_t i = 0; i < xi.size(); ++i)
                    worst = std::max(worst, std::abs(back[i] - xi[i]) / std::max(1.0, std::abs(xi[i])));
            }
        }
        v.require(worst < 1e-12, "round-trip max rel err " + fmt("%.2e", worst));
    }

    {
        Philox rng(2024, 2);
        double worst = 0.0;
        for (int k = 0; k < 500; ++k) {
            std::vector<double> xi(8);
            for (double& x : xi) x = 0.01 + 3.0 * uniform01(rng);
            const auto p = IsothermParams::from_xi(xi);
            const double c1 = 5.0 * uniform01(rng), c2 = 5.0 * uniform01(rng);
            const auto jac = bilangmuir_jacobian(c1, c2, p);
            const double h = 1e-6;
            for (int col = 0; col < 2; ++col) {
                const auto up = bilangmuir_q(c1 + (col == 0 ? h : 0), c2 + (col == 1 ? h : 0), p);
                const auto dn = bilangmuir_q(c1 - (col == 0 ? h : 0), c2 - (col == 1 ? h : 0), p);
                const double fd[2] = {(up.q1 - dn.q1) / (2 * h), (up.q2 - dn.q2) / (2 * h)};
                for (int row = 0; row < 2; ++row) {
                    const double a = jac[row][col];
                    worst = std::max(worst, std::abs(a - fd[row]) / std::max(std::abs(a), 1e-3));
                }
            }
        }
        v.require(worst < 1e-6, "isotherm Jacobian vs FD max rel err " + fmt("%.2e", worst));
    }

    const RunConfig chroma = RunConfig::from_preset("chroma");
    const auto iso = IsothermParams::from_xi(chroma.truth);
    {
        const auto out = solve_column(chroma.column, iso, chroma.column.horizon);
        double mass_out = 0.0;
        for (std::size_t i = 1; i < out.times.size(); ++i)
            mass_out += 0.5 * (out.times[i] - out.times[i - 1]) * (out.c1[i] + out.c1[i - 1]);
        const double mass_in = chroma.column.inject[0] * chroma.column.inject_duration;
        const double loss = std::abs(mass_out - mass_in) / mass_in;
        v.require(loss <= 0.01, "column mass balance " + fmt("%.2e", loss) + " <= 1%");
    }

    {
        const auto grid = chroma.grid();
        ColumnConfig fine = chroma.column;
        fine.cells = 2 * chroma.column.cells;
        const auto a = chroma_signal(chroma.column, chroma.truth, grid);
        const auto b = chroma_signal(fine, chroma.truth, grid);
        const double change = relative_error(a, b);
        v.require(change < 0.005, "grid refinement " + std::to_string(chroma.column.cells) + "->" +
                                      std::to_string(fine.cells) + " cells changes R by " +
                                      fmt("%.2f%%", 100 * change) + " < 0.5%");
    }

    {
        const RunConfig c1 = RunConfig::from_preset("case1");
        const auto map = c1.reparam_map();
        Philox rng(2024, 3);
        bool monotone = true;
        for (int k = 0; k < 50; ++k) {
            RunConfig c = c1;
            c.data_seed = 500 + k;
            const PosteriorContext ctx(c.forward_model(), map, simulate(c, *c.data_seed), c.hyperparameters());
            std::vector<double> eta{uniform01(rng), uniform01(rng)};
            std::vector<double> nu{0.2 + 6 * uniform01(rng), 0.2 + 6 * uniform01(rng)};
            const auto fit = gradient_descent(ctx, eta, nu, c.gd);
            for (std::size_t i = 1; i < fit.trace.size(); ++i) monotone &= fit.trace[i] < fit.trace[i - 1];
            monotone &= fit.trace.back() <= ctx.ete(eta, nu);
        }
        v.require(monotone, "GD loss strictly decreasing on 50 random starts");
    }

    {
        const RunConfig base = RunConfig::from_preset("case1");
        const auto star = true_reduced(base);
        std::vector<double> rms;
        for (std::size_t n : {50u, 200u, 800u}) {
            double acc = 0.0;
            const int trials = 20;
            for (int k = 0; k < trials; ++k) {
                RunConfig c = base;
                c.grid_points = n;
                const PosteriorContext ctx(c.forward_model(), c.reparam_map(), simulate(c, 700 + k),
                                           c.hyperparameters());
                const auto fit = gradient_descent(ctx, star.eta, star.nu, c.gd);
                for (std::size_t i = 0; i < star.nu.size(); ++i)
                    acc += std::pow(fit.nu_hat[i] - star.nu[i], 2);
            }
            rms.push_back(std::sqrt(acc / trials));
        }
        v.require(rms[1] < rms[0] && rms[2] < rms[1],
                  "nu_hat(eta*) rms error over n=50,200,800: " + list(rms, "%.2e"));
    }

    {
        RunConfig c = RunConfig::from_preset("case1");
        c.psi.chain_length = 600;
        c.psi.burn_in = 100;
        c.psi.init_candidates = 50;
        c.seed = 31;
        const auto a = scratch_dir("repro_a"), b = scratch_dir("repro_b");
        fit(c, a);
        fit(c, b);
        const bool same = slurp(a / "chain.csv") == slurp(b / "chain.csv") &&
                          !slurp(a / "chain.csv").empty();
        v.require(same, "seed-identical chain.csv byte equality");
        fs::remove_all(a);
        fs::remove_all(b);
    }

    {
        const auto& run = case1_mgdg();
        const auto labels = accept_labels(run.config.sampler_settings(), run.config.reparam_map());
        const auto& rates = run.report.summary.acceptance;
        bool ok = true;
        std::string shown;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i].rfind("eta", 0) != 0) continue;
            ok &= rates[i] >= 0.4 && rates[i] <= 0.8;
            shown += (shown.empty() ? "" : ", ") + labels[i] + "=" + fmt("%.3f", rates[i]);
        }
        v.require(ok && !shown.empty(), "Case 1 MGDG eta acceptance " + shown + " in [0.4, 0.8]");
    }
    return v;
}

Verdict repetitions()
{
    RunConfig config = RunConfig::from_preset("case1");
    config.sampler = SamplerKind::MGDG;
    const auto dir = scratch_dir("repeat");
    RepeatOptions options;
    options.reps = 10;
    options.workers = resolve_workers(std::nullopt);
    auto t0 = std::chrono::steady_clock::now();
    const auto trials = repeat(config, dir, options);
    const double secs = seconds_since(t0);

    Verdict v;
    const auto ok = std::count_if(trials.begin(), trials.end(), [](const TrialResult& t) { return t.ok; });
    v.require(ok == 10, std::to_string(ok) + "/10 trials succeeded");

    const auto star = true_reduced(config);
    const auto rows = aggregate_trials(trials);
    std::set<std::string> names;
    for (const auto& row : rows) names.insert(row.quantity);
    bool layout = names.count("max_re") == 1;
    for (std::size_t i = 0; i < star.eta.size(); ++i) layout &= names.count("eta_" + std::to_string(i + 1)) == 1;
    for (std::size_t i = 0; i < star.nu.size(); ++i) layout &= names.count("nu_" + std::to_string(i + 1)) == 1;
    layout &= fs::exists(dir / "aggregate.csv") && fs::exists(dir / "trials.csv");
    v.require(layout, "aggregate rows and files present");

    std::string shown;
    bool centred = true;
    for (const auto& row : rows) {
        double target = NAN;
        if (row.quantity.rfind("eta_", 0) == 0) target = star.eta[std::stoul(row.quantity.substr(4)) - 1];
        if (row.quantity.rfind("nu_", 0) == 0) target = star.nu[std::stoul(row.quantity.substr(3)) - 1];
        if (!std::isnan(target)) centred &= std::abs(row.mean - target) <= 0.15;
        shown += (shown.empty() ? "" : ", ") + row.quantity + " " + fmt("%.4f", row.mean) + "+-" +
                 fmt("%.4f", row.sd);
    }
    v.require(centred, "across-trial means within 0.15 of truth: " + shown);
    v.detail += "; runtime " + fmt("%.1f s", secs);
    fs::remove_all(dir);
    return v;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance runs"};
    std::vector<int> only;
    app.add_option("--only", only, "criterion numbers to run");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"Case 1 MGDG recovery", case1_recovery},
        {"Case 1 MALG residuals", case1_malg},
        {"Case 2 MGDG eta recovery", case2_recovery},
        {"Case 3 MGDG recovery", case3_recovery},
        {"chromatography band and observation error", chroma_run},
        {"conjugate toy agreement", conjugate_toy},
        {"property suite", property_suite},
        {"10-repetition aggregate", repetitions},
    };

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i + 1);
        if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
        Verdict v;
        auto t0 = std::chrono::steady_clock::now();
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("threw: ") + e.what();
        }
        const double secs = seconds_since(t0);
        if (!v.pass) ++failed;
        std::printf("%s criterion %d: %s [%.1f s] %s\n", v.pass ? "PASS" : "FAIL", number,
                    criteria[i].first.c_str(), secs, v.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
