#include "isofit/diagnostics.hpp"

#include "isofit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace isofit {

double quantile_sorted(std::span<const double> sorted, double p)
{
    if (sorted.empty()) throw Error(ErrorKind::EmptyChain, "quantile of an empty sample");
    const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile_select(std::vector<double> values, double p)
{
    if (values.empty()) throw Error(ErrorKind::EmptyChain, "quantile of an empty sample");
    const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    auto nth = values.begin() + static_cast<std::ptrdiff_t>(lo);
    std::nth_element(values.begin(), nth, values.end());
    const double below = *nth;
    if (lo + 1 >= values.size()) return below;
    const double above = *std::min_element(nth + 1, values.end());
    return below + frac * (above - below);
}

namespace {

double mean_of(std::span<const double> v)
{
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double variance_of(std::span<const double> v, double mean)
{
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

std::vector<const ChainRecord*> kept(const Chain& chain)
{
    std::vector<const ChainRecord*> out;
    for (const ChainRecord& rec : chain) {
        if (!rec.burn_in) out.push_back(&rec);
    }
    if (out.empty()) throw Error(ErrorKind::EmptyChain, "no post-burn-in records");
    return out;
}

CoordinateSummary describe(std::string name, std::vector<double> values)
{
    CoordinateSummary s;
    s.name = std::move(name);
    s.mean = mean_of(values);
    s.sd = std::sqrt(variance_of(values, s.mean));
    s.ess = batch_means_ess(values);
    std::sort(values.begin(), values.end());
    for (std::size_t i = 0; i < kSummaryProbs.size(); ++i) {
        s.quantiles[i] = quantile_sorted(values, kSummaryProbs[i]);
    }
    return s;
}

} // namespace

double batch_means_ess(std::span<const double> values)
{
    const std::size_t n = values.size();
    if (n < 4) return static_cast<double>(n);
    const auto batches = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
    const std::size_t size = n / batches;
    const std::span<const double> used = values.first(batches * size);
    const double mean = mean_of(used);
    const double var = variance_of(used, mean);
    if (!(var > 0.0)) return static_cast<double>(n);
    std::vector<double> means(batches);
    for (std::size_t b = 0; b < batches; ++b) means[b] = mean_of(used.subspan(b * size, size));
    const double var_means = variance_of(means, mean_of(means));
    if (!(var_means > 0.0)) return static_cast<double>(n);
    return static_cast<double>(n) * var / (static_cast<double>(size) * var_means);
}

const CoordinateSummary& ChainSummary::at(const std::string& name) const
{
    for (const auto& c : coordinates) {
        if (c.name == name) return c;
    }
    throw Error(ErrorKind::ConfigError, "no summary for " + name);
}

ChainSummary summarize(const Chain& chain)
{
    const auto records = kept(chain);
    ChainSummary summary;
    summary.samples = records.size();
    const ChainRecord& first = *records.front();
    const auto add_block = [&](const std::string& stem, auto member, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            std::vector<double> v;
            v.reserve(records.size());
            for (const ChainRecord* rec : records) v.push_back((rec->*member)[i]);
            summary.coordinates.push_back(describe(stem + "_" + std::to_string(i + 1), std::move(v)));
        }
    };
    add_block("eta", &ChainRecord::eta, first.eta.size());
    add_block("nu", &ChainRecord::nu, first.nu.size());
    add_block("xi", &ChainRecord::xi_hat, first.xi_hat.size());
    std::vector<double> sigma2;
    std::vector<double> loss;
    for (const ChainRecord* rec : records) {
        sigma2.push_back(rec->sigma2);
        loss.push_back(rec->loss);
    }
    summary.coordinates.push_back(describe("sigma2", std::move(sigma2)));
    summary.coordinates.push_back(describe("loss", std::move(loss)));
    summary.acceptance = acceptance_rates(chain);
    return summary;
}

std::vector<double> acceptance_rates(const Chain& chain)
{
    const auto records = kept(chain);
    std::vector<double> rates(records.front()->accept.size(), 0.0);
    for (const ChainRecord* rec : records) {
        if (rec->accept.size() != rates.size()) {
            throw Error(ErrorKind::DimensionMismatch, "records disagree on the number of blocks");
        }
        for (std::size_t i = 0; i < rates.size(); ++i) rates[i] += rec->accept[i];
    }
    for (double& r : rates) r /= static_cast<double>(records.size());
    return rates;
}

Band credible_band(const Chain& chain, const ForwardModel& model, std::span<const double> grid,
                   double level)
{
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::ConfigError, "level must be in (0,1)");
    const auto records = kept(chain);
    std::vector<std::vector<double>> columns(grid.size(), std::vector<double>(records.size()));
    for (std::size_t k = 0; k < records.size(); ++k) {
        const std::vector<double> curve = model.evaluate(records[k]->xi_hat, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) columns[i][k] = curve[i];
    }
    Band band;
    band.times.assign(grid.begin(), grid.end());
    for (auto& column : columns) {
        std::sort(column.begin(), column.end());
        band.lower.push_back(quantile_sorted(column, 0.5 * (1.0 - level)));
        band.upper.push_back(quantile_sorted(column, 0.5 * (1.0 + level)));
    }
    return band;
}

double relative_error(std::span<const double> curve, std::span<const double> reference)
{
    if (curve.size() != reference.size()) {
        throw Error(ErrorKind::DimensionMismatch, "curves have different lengths");
    }
    double diff = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        diff += (curve[i] - reference[i]) * (curve[i] - reference[i]);
        ref += reference[i] * reference[i];
    }
    if (!(ref > 0.0)) throw Error(ErrorKind::ZeroSignal, "reference curve is identically zero");
    return std::sqrt(diff / ref);
}

double relative_error(std::span<const double> xi_hat, std::span<const double> xi_star,
                      const ForwardModel& model, std::span<const double> grid)
{
    return relative_error(model.evaluate(xi_hat, grid), model.evaluate(xi_star, grid));
}

double band_max_relative_error(const Band& band, std::span<const double> reference)
{
    return std::max(relative_error(band.lower, reference), relative_error(band.upper, reference));
}

std::vector<AggregateRow> aggregate_trials(const std::vector<TrialResult>& trials)
{
    std::vector<const TrialResult*> ok;
    for (const auto& t : trials) {
        if (t.ok) ok.push_back(&t);
    }
    if (ok.empty()) throw Error(ErrorKind::EmptyChain, "no successful trials to aggregate");
    // Fixed order so the result does not depend on trial completion order.
    std::stable_sort(ok.begin(), ok.end(),
                     [](const TrialResult* a, const TrialResult* b) { return a->seed < b->seed; });
    std::vector<AggregateRow> rows;
    const auto add = [&](const std::string& name, auto pick) {
        std::vector<double> v;
        for (const TrialResult* t : ok) v.push_back(pick(*t));
        const double mean = mean_of(v);
        rows.push_back({name, mean, std::sqrt(variance_of(v, mean))});
    };
    for (std::size_t i = 0; i < ok.front()->eta_mean.size(); ++i) {
        add("eta_" + std::to_string(i + 1), [i](const TrialResult& t) { return t.eta_mean.at(i); });
    }
    for (std::size_t i = 0; i < ok.front()->nu_mean.size(); ++i) {
        add("nu_" + std::to_string(i + 1), [i](const TrialResult& t) { return t.nu_mean.at(i); });
    }
    add("max_re", [](const TrialResult& t) { return t.max_re; });
    return rows;
}

} // namespace isofit
