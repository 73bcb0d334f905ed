#include "fixtures.hpp"

#include "isofit/app.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace isofit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir(const std::string& name)
{
    fs::path dir = fs::temp_directory_path() / ("isofit_test_" + name);
    fs::remove_all(dir);
    return dir;
}

RunConfig quick_linear(std::size_t k = 600)
{
    auto c = RunConfig::from_preset("linear");
    c.psi.chain_length = k;
    c.psi.burn_in = 100;
    return c;
}

} // namespace

TEST_CASE("noise-free simulation equals the clean curve")
{
    auto c = RunConfig::from_preset("case1");
    c.noise_variance = 0.0;
    auto obs = simulate(c, 3);
    auto clean = c.forward_model().evaluate(c.truth, c.grid());
    CHECK(obs.size() == 50);
    CHECK(obs.times().front() == -2.0);
    CHECK(obs.times().back() == 7.0);
    for (std::size_t i = 0; i < obs.size(); ++i) CHECK(obs.values()[i] == clean[i]);
}

TEST_CASE("simulated noise has the configured variance")
{
    auto c = RunConfig::from_preset("case1");
    c.grid_points = 10000;
    auto obs = simulate(c, 11);
    auto clean = c.forward_model().evaluate(c.truth, c.grid());
    double mean = 0, sq = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        double e = obs.values()[i] - clean[i];
        mean += e;
        sq += e * e;
    }
    mean /= obs.size();
    double var = sq / obs.size() - mean * mean;
    CHECK(std::abs(var - 0.001) < 0.05 * 0.001);
    auto again = simulate(c, 11);
    CHECK(std::equal(obs.values().begin(), obs.values().end(), again.values().begin()));
}

TEST_CASE("observation CSV is lossless")
{
    auto dir = scratch_dir("obs");
    fs::create_directories(dir);
    auto obs = simulate(RunConfig::from_preset("case3"), 5);
    write_observation_csv(dir / "obs.csv", obs);
    CHECK(slurp(dir / "obs.csv").rfind("t,r\n", 0) == 0);
    auto back = read_observation_csv(dir / "obs.csv", 0.0, 10.0);
    REQUIRE(back.size() == obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        CHECK(back.times()[i] == obs.times()[i]);
        CHECK(back.values()[i] == obs.values()[i]);
    }
    CHECK(fixtures::kind_of([&] { read_observation_csv(dir / "missing.csv", 0, 1); }) ==
          ErrorKind::IoError);
}

TEST_CASE("fit writes every output and is byte-reproducible")
{
    auto c = quick_linear();
    auto a = scratch_dir("fit_a"), b = scratch_dir("fit_b");
    auto report = fit(c, a);
    fit(c, b);
    for (const char* f : {"observation.csv", "chain.csv", "summary.csv", "band.csv", "report.txt",
                          "manifest.json"}) {
        CHECK(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(report.re_observation.has_value());
    auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
    CHECK(manifest["config_sha256"] == config_hash(c));
    CHECK(manifest["seed"] == c.seed);
    // the manifest carries enough to rerun
    auto rerun = RunConfig::parse(manifest["config"].get<std::string>());
    CHECK(rerun == c);
    auto chain = read_chain_csv(a / "chain.csv");
    REQUIRE(chain.size() == report.run.chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) {
        CHECK(chain[i].xi_hat == report.run.chain[i].xi_hat);
        CHECK(chain[i].sigma2 == report.run.chain[i].sigma2);
        CHECK(chain[i].accept == report.run.chain[i].accept);
    }
    auto summary = summarize_directory(a);
    CHECK(summary.at("xi_1").mean == doctest::Approx(report.summary.at("xi_1").mean).epsilon(1e-15));
}

TEST_CASE("invalid config produces no outputs")
{
    auto c = quick_linear();
    c.psi.burn_in = c.psi.chain_length;
    auto dir = scratch_dir("bad");
    CHECK(fixtures::kind_of([&] { fit(c, dir); }) == ErrorKind::ConfigError);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("repeat isolates failing trials")
{
    auto c = quick_linear(300);
    auto dir = scratch_dir("repeat");
    RepeatOptions options;
    options.reps = 4;
    options.workers = 2;
    options.adjust = [](std::size_t i, RunConfig& trial) {
        if (i == 1) trial.psi.burn_in = trial.psi.chain_length;
    };
    auto trials = repeat(c, dir, options);
    REQUIRE(trials.size() == 4);
    CHECK(trials[0].ok);
    CHECK_FALSE(trials[1].ok);
    CHECK(trials[2].ok);
    CHECK(trials[3].ok);
    CHECK(trials[2].seed == c.seed + 2);
    CHECK(fs::exists(dir / "trial_001" / "error.json"));
    CHECK(fs::exists(dir / "trial_003" / "chain.csv"));
    CHECK(fs::exists(dir / "aggregate.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
    auto err = nlohmann::json::parse(slurp(dir / "trial_001" / "error.json"));
    CHECK(err["kind"] == "ConfigError");
    // every trial sees the same observation
    CHECK(slurp(dir / "trial_000" / "observation.csv") == slurp(dir / "trial_002" / "observation.csv"));
}

TEST_CASE("single repetition gives zero spread")
{
    auto c = quick_linear(300);
    RepeatOptions options;
    options.reps = 1;
    auto trials = repeat(c, scratch_dir("single"), options);
    for (const auto& row : aggregate_trials(trials)) CHECK(row.sd == 0.0);
}

TEST_CASE("parallel and serial repeats agree")
{
    auto c = quick_linear(300);
    RepeatOptions serial;
    serial.reps = 3;
    RepeatOptions parallel = serial;
    parallel.workers = 3;
    auto a = scratch_dir("serial"), b = scratch_dir("parallel");
    repeat(c, a, serial);
    repeat(c, b, parallel);
    CHECK(slurp(a / "aggregate.csv") == slurp(b / "aggregate.csv"));
    CHECK(slurp(a / "trial_002" / "chain.csv") == slurp(b / "trial_002" / "chain.csv"));
}

TEST_CASE("worker resolution")
{
    CHECK(resolve_workers(3) == 3);
    ::setenv("ISOFIT_WORKERS", "5", 1);
    CHECK(resolve_workers(std::nullopt) == 5);
    CHECK(resolve_workers(2) == 2);
    ::setenv("ISOFIT_WORKERS", "many", 1);
    CHECK(fixtures::kind_of([] { resolve_workers(std::nullopt); }) == ErrorKind::ConfigError);
    ::unsetenv("ISOFIT_WORKERS");
    CHECK(resolve_workers(std::nullopt) == 1);
}
