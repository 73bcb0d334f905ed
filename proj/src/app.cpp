#include "isofit/app.hpp"

#include "isofit/error.hpp"

#include <boost/version.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef ISOFIT_VERSION
#define ISOFIT_VERSION "0.0.0"
#endif

namespace isofit {

namespace fs = std::filesystem;

namespace {

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
    return out;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream in(line);
    std::string cell;
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& cell, const fs::path& path)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        if (used != cell.size()) throw std::invalid_argument(cell);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::IoError, path.string() + ": bad number '" + cell + "'");
    }
}

std::vector<double> mean_of(const Chain& chain, std::vector<double> ChainRecord::*member)
{
    std::vector<double> sum;
    std::size_t count = 0;
    for (const ChainRecord& rec : chain) {
        if (rec.burn_in) continue;
        const auto& v = rec.*member;
        if (sum.empty()) sum.assign(v.size(), 0.0);
        for (std::size_t i = 0; i < v.size(); ++i) sum[i] += v[i];
        ++count;
    }
    if (count == 0) throw Error(ErrorKind::EmptyChain, "no post-burn-in records");
    for (double& s : sum) s /= static_cast<double>(count);
    return sum;
}

} // namespace

Observation simulate(const RunConfig& config, std::uint64_t noise_seed)
{
    const std::vector<double> grid = config.grid();
    const ParameterVector truth(config.truth);
    std::vector<double> r = config.forward_model().evaluate(truth.values(), grid);
    if (config.noise_variance > 0.0) {
        // Sub-stream reserved for synthetic noise.
        Philox rng(noise_seed, 0x6e6f697365ULL);
        const double sd = std::sqrt(config.noise_variance);
        for (double& v : r) v += sd * standard_normal(rng);
    }
    return Observation(grid, std::move(r), config.window_lo, config.window_hi);
}

Observation load_or_simulate(const RunConfig& config)
{
    if (!config.observation_file.empty()) {
        return read_observation_csv(config.observation_file, config.window_lo, config.window_hi);
    }
    return simulate(config, config.noise_seed());
}

void write_observation_csv(const fs::path& path, const Observation& obs)
{
    std::ofstream out = open_out(path);
    out << "t,r\n";
    for (std::size_t i = 0; i < obs.size(); ++i) {
        out << num(obs.times()[i]) << ',' << num(obs.values()[i]) << '\n';
    }
}

Observation read_observation_csv(const fs::path& path, double window_lo, double window_hi)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "t,r") {
        throw Error(ErrorKind::IoError, path.string() + ": expected header 't,r'");
    }
    std::vector<double> t;
    std::vector<double> r;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 2) throw Error(ErrorKind::IoError, path.string() + ": expected 2 columns");
        t.push_back(parse_cell(cells[0], path));
        r.push_back(parse_cell(cells[1], path));
    }
    return Observation(std::move(t), std::move(r), window_lo, window_hi);
}

void write_chain_csv(const fs::path& path, const Chain& chain, std::uint64_t seed,
                     const std::vector<std::string>& accept_labels)
{
    std::ofstream out = open_out(path);
    if (chain.empty()) throw Error(ErrorKind::EmptyChain, "nothing to write");
    const ChainRecord& first = chain.front();
    out << "seed,iter,burn_in";
    for (std::size_t i = 1; i <= first.eta.size(); ++i) out << ",eta_" << i;
    for (std::size_t i = 1; i <= first.nu.size(); ++i) out << ",nu_" << i;
    for (std::size_t i = 1; i <= first.xi_hat.size(); ++i) out << ",xi_" << i;
    out << ",sigma2,loss";
    for (const auto& label : accept_labels) out << ",accept_" << label;
    out << '\n';
    for (const ChainRecord& rec : chain) {
        out << seed << ',' << rec.iter << ',' << (rec.burn_in ? 1 : 0);
        for (double v : rec.eta) out << ',' << num(v);
        for (double v : rec.nu) out << ',' << num(v);
        for (double v : rec.xi_hat) out << ',' << num(v);
        out << ',' << num(rec.sigma2) << ',' << num(rec.loss);
        for (double v : rec.accept) out << ',' << num(v);
        out << '\n';
    }
}

Chain read_chain_csv(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::IoError, path.string() + ": empty file");
    const std::vector<std::string> header = split_csv(line);
    Chain chain;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw Error(ErrorKind::IoError, path.string() + ": ragged row");
        }
        ChainRecord rec;
        for (std::size_t c = 0; c < header.size(); ++c) {
            const std::string& name = header[c];
            if (name == "seed") continue;
            const double v = parse_cell(cells[c], path);
            if (name == "iter") rec.iter = static_cast<std::size_t>(v);
            else if (name == "burn_in") rec.burn_in = v != 0.0;
            else if (name == "sigma2") rec.sigma2 = v;
            else if (name == "loss") rec.loss = v;
            else if (name.rfind("eta_", 0) == 0) rec.eta.push_back(v);
            else if (name.rfind("nu_", 0) == 0) rec.nu.push_back(v);
            else if (name.rfind("xi_", 0) == 0) rec.xi_hat.push_back(v);
            else if (name.rfind("accept_", 0) == 0) rec.accept.push_back(v);
            else throw Error(ErrorKind::IoError, path.string() + ": unknown column " + name);
        }
        chain.push_back(std::move(rec));
    }
    return chain;
}

void write_summary_csv(const fs::path& path, const ChainSummary& summary,
                       const std::vector<std::string>& accept_labels)
{
    std::ofstream out = open_out(path);
    out << "name,mean,sd,q2.5,q25,q50,q75,q97.5,ess\n";
    for (const auto& c : summary.coordinates) {
        out << c.name << ',' << num(c.mean) << ',' << num(c.sd);
        for (double q : c.quantiles) out << ',' << num(q);
        out << ',' << num(c.ess) << '\n';
    }
    for (std::size_t i = 0; i < summary.acceptance.size(); ++i) {
        const std::string label = i < accept_labels.size() ? accept_labels[i] : std::to_string(i + 1);
        out << "accept_" << label << ',' << num(summary.acceptance[i]) << ",,,,,,,\n";
    }
}

void write_band_csv(const fs::path& path, const Band& band)
{
    std::ofstream out = open_out(path);
    out << "t,lower,upper\n";
    for (std::size_t i = 0; i < band.times.size(); ++i) {
        out << num(band.times[i]) << ',' << num(band.lower[i]) << ',' << num(band.upper[i]) << '\n';
    }
}

void write_manifest(const fs::path& dir, const RunConfig& config, const std::string& command)
{
    nlohmann::ordered_json j;
    j["command"] = command;
    j["seed"] = config.seed;
    j["data_seed"] = config.noise_seed();
    j["preset"] = config.preset;
    j["sampler"] = std::string(to_string(config.sampler));
    j["config_sha256"] = config_hash(config);
    j["versions"] = {{"isofit", ISOFIT_VERSION},
                     {"compiler", __VERSION__},
                     {"boost", BOOST_LIB_VERSION},
                     {"cplusplus", __cplusplus}};
    j["config"] = config.serialize();
    std::ofstream out = open_out(dir / "manifest.json");
    out << j.dump(2) << '\n';
    std::ofstream ini = open_out(dir / "config.ini");
    ini << config.serialize();
}

void write_error(const fs::path& dir, const std::exception& error)
{
    nlohmann::ordered_json j;
    if (const auto* e = dynamic_cast<const Error*>(&error)) {
        j["kind"] = std::string(to_string(e->kind()));
    } else {
        j["kind"] = "Unexpected";
    }
    j["message"] = error.what();
    fs::create_directories(dir);
    std::ofstream out = open_out(dir / "error.json");
    out << j.dump(2) << '\n';
}

FitReport fit_observation(const RunConfig& config, const Observation& obs)
{
    config.validate();
    const ForwardModel model = config.forward_model();
    const PosteriorContext ctx(model, config.reparam_map(), obs, config.hyperparameters());
    FitReport report;
    report.run = run_sampler(ctx, config.sampler_settings());
    report.summary = summarize(report.run.chain);
    report.band = credible_band(report.run.chain, model, obs.times());
    report.xi_mean = mean_of(report.run.chain, &ChainRecord::xi_hat);
    if (config.truth.size() == model.dimension()) {
        const std::vector<double> clean = model.evaluate(config.truth, obs.times());
        report.re_mean = relative_error(model.evaluate(report.xi_mean, obs.times()), clean);
        report.re_band_lower = relative_error(report.band.lower, clean);
        report.re_band_upper = relative_error(report.band.upper, clean);
        report.re_observation = relative_error(obs.values(), clean);
    }
    return report;
}

std::string format_report(const RunConfig& config, const FitReport& report)
{
    std::ostringstream out;
    out << "preset: " << config.preset << "\n";
    out << "sampler: " << to_string(config.sampler) << "\n";
    out << "seed: " << config.seed << "\n";
    out << "records: " << report.run.chain.size() << " (post burn-in " << report.summary.samples
        << ")\n";
    out << "beta: " << num(report.run.psi.beta) << (config.beta_auto ? " (auto)" : "") << "\n";
    if (report.run.nu_fallback) out << "note: nu start used the fallback\n";
    const auto labels = accept_labels(config.sampler_settings(), config.reparam_map());
    out << "acceptance:";
    for (std::size_t i = 0; i < report.summary.acceptance.size(); ++i) {
        out << ' ' << (i < labels.size() ? labels[i] : std::to_string(i)) << '='
            << num(report.summary.acceptance[i]);
    }
    out << "\n\nname mean sd q2.5 q50 q97.5 ess\n";
    for (const auto& c : report.summary.coordinates) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%s %.6g %.3g %.6g %.6g %.6g %.1f\n", c.name.c_str(), c.mean,
                      c.sd, c.quantiles[0], c.quantiles[2], c.quantiles[4], c.ess);
        out << buf;
    }
    if (report.re_mean) {
        out << "\nrelative error vs clean truth\n";
        out << "  posterior mean: " << num(*report.re_mean) << "\n";
        out << "  band lower: " << num(*report.re_band_lower) << "\n";
        out << "  band upper: " << num(*report.re_band_upper) << "\n";
        out << "  observation: " << num(*report.re_observation) << "\n";
    }
    return out.str();
}

FitReport fit(const RunConfig& config, const fs::path& dir)
{
    config.validate();
    const Observation obs = load_or_simulate(config);
    FitReport report = fit_observation(config, obs);
    fs::create_directories(dir);
    write_observation_csv(dir / "observation.csv", obs);
    const auto labels = accept_labels(config.sampler_settings(), config.reparam_map());
    write_chain_csv(dir / "chain.csv", report.run.chain, config.seed, labels);
    write_summary_csv(dir / "summary.csv", report.summary, labels);
    write_band_csv(dir / "band.csv", report.band);
    {
        std::ofstream out = open_out(dir / "report.txt");
        out << format_report(config, report);
    }
    if (config.dump_field && config.model == ModelKind::Column && !config.truth.empty()) {
        ColumnField field;
        solve_column(config.column, IsothermParams::from_xi(config.truth), config.column.horizon,
                     &field);
        field.write_csv((dir / "field.csv").string());
    }
    write_manifest(dir, config, "fit");
    return report;
}

std::vector<TrialResult> repeat(const RunConfig& config, const fs::path& dir,
                                const RepeatOptions& options)
{
    if (options.reps == 0) throw Error(ErrorKind::ConfigError, "need at least one repetition");
    config.validate();
    fs::create_directories(dir);
    std::vector<TrialResult> results(options.reps);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < options.reps; i = next++) {
            RunConfig trial = config;
            trial.seed = config.seed + i;
            // Trials resample the same observation.
            trial.data_seed = config.noise_seed();
            TrialResult& result = results[i];
            result.seed = trial.seed;
            char name[32];
            std::snprintf(name, sizeof name, "trial_%03zu", i);
            const fs::path trial_dir = dir / name;
            try {
                if (options.adjust) options.adjust(i, trial);
                const FitReport report = fit(trial, trial_dir);
                result.eta_mean = mean_of(report.run.chain, &ChainRecord::eta);
                result.nu_mean = mean_of(report.run.chain, &ChainRecord::nu);
                result.max_re = report.re_band_lower
                                    ? std::max(*report.re_band_lower, *report.re_band_upper)
                                    : std::numeric_limits<double>::quiet_NaN();
                result.ok = true;
            } catch (const std::exception& e) {
                result.ok = false;
                result.error = e.what();
                try {
                    write_error(trial_dir, e);
                } catch (const std::exception&) {
                }
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(options.workers, 1, options.reps);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    {
        std::ofstream out = open_out(dir / "trials.csv");
        out << "seed,ok,max_re,eta_mean,nu_mean,error\n";
        for (const auto& r : results) {
            out << r.seed << ',' << (r.ok ? 1 : 0) << ',' << num(r.max_re) << ',';
            for (std::size_t i = 0; i < r.eta_mean.size(); ++i) out << (i ? ";" : "") << num(r.eta_mean[i]);
            out << ',';
            for (std::size_t i = 0; i < r.nu_mean.size(); ++i) out << (i ? ";" : "") << num(r.nu_mean[i]);
            std::string message = r.error;
            std::replace(message.begin(), message.end(), ',', ';');
            std::replace(message.begin(), message.end(), '\n', ' ');
            out << ',' << message << '\n';
        }
    }
    if (std::any_of(results.begin(), results.end(), [](const TrialResult& r) { return r.ok; })) {
        std::ofstream out = open_out(dir / "aggregate.csv");
        out << "quantity,mean,sd\n";
        for (const auto& row : aggregate_trials(results)) {
            out << row.quantity << ',' << num(row.mean) << ',' << num(row.sd) << '\n';
        }
    }
    write_manifest(dir, config, "repeat");
    return results;
}

std::size_t resolve_workers(std::optional<std::size_t> flag)
{
    if (flag) return std::max<std::size_t>(*flag, 1);
    if (const char* env = std::getenv("ISOFIT_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v >= 1) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
        throw Error(ErrorKind::ConfigError, std::string("ISOFIT_WORKERS is not a positive integer: ") + env);
    }
    return 1;
}

ChainSummary summarize_directory(const fs::path& dir)
{
    const Chain chain = read_chain_csv(dir / "chain.csv");
    std::vector<std::string> labels;
    {
        std::ifstream in(dir / "chain.csv");
        std::string header;
        std::getline(in, header);
        for (const auto& name : split_csv(header)) {
            if (name.rfind("accept_", 0) == 0) labels.push_back(name.substr(7));
        }
    }
    const ChainSummary summary = summarize(chain);
    write_summary_csv(dir / "summary.csv", summary, labels);
    return summary;
}

} // namespace isofit
