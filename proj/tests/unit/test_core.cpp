#include "isofit/core_types.hpp"
#include "isofit/error.hpp"
#include "isofit/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace isofit;

namespace {

void check_close(std::span<const double> got, std::span<const double> want, double tol = 1e-14)
{
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= tol);
}

ErrorKind kind_of(auto&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an isofit::Error");
    return ErrorKind::IoError;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("parameter vector rejects negative and non-finite entries")
{
    CHECK(kind_of([] { ParameterVector({1.0, -0.1}); }) == ErrorKind::DomainViolation);
    CHECK(kind_of([] { ParameterVector({NAN}); }) == ErrorKind::DomainViolation);
    CHECK(ParameterVector({0.0, 2.0}).size() == 2);
}

TEST_CASE("split examples")
{
    auto ws = ReparamMap::weight_sum(2).split(ParameterVector({1.0 / 3, 2.0 / 3, 8.0 / 3, 4.0 / 3}));
    check_close(ws.eta, std::vector{1.0 / 3, 2.0 / 3});
    check_close(ws.nu, std::vector{1.0, 4.0});

    auto ss = ReparamMap::shape_scale(2).split(ParameterVector({4.0, 0.75, 2.0, 0.25}));
    check_close(ss.eta, std::vector{0.75, 0.25});
    check_close(ss.nu, std::vector{4.0, 2.0});

    auto cr = ReparamMap::chroma_ratio_sum(1).split(ParameterVector({2.0, 1.0, 0.1, 0.05}));
    check_close(cr.eta, std::vector{2.0 / 3, 2.0 / 3});
    check_close(cr.nu, std::vector{3.0, 0.15});
}

TEST_CASE("split errors")
{
    auto map = ReparamMap::weight_sum(2);
    CHECK(kind_of([&] { map.split(ParameterVector({0.0, 0.0, 1.0, 1.0})); }) ==
          ErrorKind::DegeneratePair);
    CHECK(kind_of([&] { map.split(ParameterVector({1.0, 1.0, 1.0})); }) ==
          ErrorKind::DimensionMismatch);
}

TEST_CASE("restore examples")
{
    auto ws = ReparamMap::weight_sum(2);
    check_close(ws.restore(std::vector{1.0 / 3, 2.0 / 3}, std::vector{1.0, 4.0}).values(),
                std::vector{1.0 / 3, 2.0 / 3, 8.0 / 3, 4.0 / 3});
    check_close(ws.restore(std::vector{0.0, 1.0}, std::vector{1.0, 1.0}).values(),
                std::vector{0.0, 1.0, 1.0, 0.0});
    check_close(ReparamMap::chroma_ratio_sum(1)
                    .restore(std::vector{2.0 / 3, 2.0 / 3}, std::vector{3.0, 0.15})
                    .values(),
                std::vector{2.0, 1.0, 0.1, 0.05}, 1e-15);
    CHECK(kind_of([&] { ws.restore(std::vector{1.2, 0.5}, std::vector{1.0, 1.0}); }) ==
          ErrorKind::DomainViolation);
    CHECK(kind_of([&] { ws.restore(std::vector{-0.1, 0.5}, std::vector{1.0, 1.0}); }) ==
          ErrorKind::DomainViolation);
}

TEST_CASE("round trip over random parameters for every map")
{
    Philox rng(2024);
    std::vector<ReparamMap> maps{ReparamMap::weight_sum(2), ReparamMap::weight_sum(4),
                                 ReparamMap::shape_scale(2), ReparamMap::chroma_ratio_sum(1),
                                 ReparamMap::chroma_ratio_sum(2), ReparamMap::identity(3, 1)};
    for (const auto& map : maps) {
        double worst = 0.0, worst_back = 0.0;
        for (int k = 0; k < 1000; ++k) {
            std::vector<double> x(map.dimension());
            for (auto& v : x) v = 1e-3 + 10.0 * uniform01(rng);
            ParameterVector xi(x);
            auto reduced = map.split(xi);
            worst = std::max(worst, max_abs_diff(map.restore(reduced).values(), x));
            auto again = map.split(map.restore(reduced));
            worst_back = std::max(worst_back, max_abs_diff(again.eta, reduced.eta));
            worst_back = std::max(worst_back, max_abs_diff(again.nu, reduced.nu));
        }
        CHECK(worst < 1e-12);
        CHECK(worst_back < 1e-12);
    }
}

TEST_CASE("sort rule examples")
{
    auto [e1, n1] = apply_sort_rule(SortRule::SortAscending, {0.9, 0.1}, {4.0, 1.0});
    CHECK(e1 == std::vector{0.1, 0.9});
    CHECK(n1 == std::vector{1.0, 4.0});
    auto [e2, n2] = apply_sort_rule(SortRule::SortAscending, {0.1, 0.9}, {1.0, 4.0});
    CHECK(e2 == std::vector{0.1, 0.9});
    CHECK(n2 == std::vector{1.0, 4.0});
    auto [e3, n3] = apply_sort_rule(SortRule::None, {0.9, 0.1}, {4.0, 1.0});
    CHECK(e3 == std::vector{0.9, 0.1});
    CHECK(n3 == std::vector{4.0, 1.0});
    auto [e4, n4] = apply_sort_rule(SortRule::SwapSmallerFirst, {0.9, 0.1}, {4.0, 1.0});
    CHECK(e4 == std::vector{0.1, 0.9});
    CHECK(n4 == std::vector{1.0, 4.0});
}

TEST_CASE("sorting is idempotent and preserves pairs")
{
    Philox rng(7);
    for (int k = 0; k < 200; ++k) {
        std::vector<double> eta(4), nu(4);
        for (auto& v : eta) v = uniform01(rng);
        for (auto& v : nu) v = 5.0 * uniform01(rng);
        auto [se, sn] = apply_sort_rule(SortRule::SortAscending, eta, nu);
        CHECK(std::is_sorted(se.begin(), se.end()));
        auto [se2, sn2] = apply_sort_rule(SortRule::SortAscending, se, sn);
        CHECK(se2 == se);
        CHECK(sn2 == sn);
        std::vector<std::pair<double, double>> before, after;
        for (std::size_t i = 0; i < 4; ++i) {
            before.emplace_back(eta[i], nu[i]);
            after.emplace_back(se[i], sn[i]);
        }
        std::sort(before.begin(), before.end());
        std::sort(after.begin(), after.end());
        CHECK(before == after);
    }
}

TEST_CASE("unconstrained transform examples")
{
    auto r = from_unconstrained({{0.0}, {0.0}});
    CHECK(r.eta[0] == 0.5);
    CHECK(r.nu[0] == 1.0);
    auto u = to_unconstrained({{0.5, 0.5}, {3.0, 0.15}});
    check_close(u.eta_tilde, std::vector{0.0, 0.0});
    check_close(u.nu_tilde, std::vector{std::log(3.0), std::log(0.15)});
    CHECK(kind_of([] { to_unconstrained({{1.0}, {1.0}}); }) == ErrorKind::DomainViolation);
    CHECK(kind_of([] { to_unconstrained({{0.0}, {1.0}}); }) == ErrorKind::DomainViolation);
}

TEST_CASE("unconstrained round trip and monotonicity")
{
    double worst = 0.0;
    double prev_et = -INFINITY, prev_nt = -INFINITY;
    for (int k = 0; k <= 2000; ++k) {
        double eta = 0.001 + 0.998 * k / 2000.0;
        double nu = std::pow(10.0, -6.0 + 12.0 * k / 2000.0);
        auto u = to_unconstrained({{eta}, {nu}});
        CHECK(u.eta_tilde[0] > prev_et);
        CHECK(u.nu_tilde[0] > prev_nt);
        prev_et = u.eta_tilde[0];
        prev_nt = u.nu_tilde[0];
        auto back = from_unconstrained(u);
        worst = std::max(worst, std::abs(back.eta[0] - eta));
        worst = std::max(worst, std::abs(back.nu[0] - nu) / nu);
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("observation invariants")
{
    CHECK_NOTHROW(Observation({0.0, 1.0}, {1.0, 2.0}, 0.0, 1.0));
    CHECK(kind_of([] { Observation({0.0, 0.0}, {1.0, 2.0}, 0.0, 1.0); }) ==
          ErrorKind::DomainViolation);
    CHECK(kind_of([] { Observation({0.0, 2.0}, {1.0, 2.0}, 0.0, 1.0); }) ==
          ErrorKind::DomainViolation);
    CHECK(kind_of([] { Observation({0.0, 1.0}, {1.0, NAN}, 0.0, 1.0); }) ==
          ErrorKind::NonFiniteValue);
    CHECK(kind_of([] { Observation({0.0}, {1.0, 2.0}, 0.0, 1.0); }) ==
          ErrorKind::DimensionMismatch);
    auto g = equally_spaced(-2.0, 7.0, 50);
    CHECK(g.size() == 50);
    CHECK(g.front() == -2.0);
    CHECK(g.back() == 7.0);
}

TEST_CASE("hyperparameter validation")
{
    Hyperparameters psi;
    CHECK_NOTHROW(psi.validate());
    psi.burn_in = psi.chain_length;
    CHECK(kind_of([&] { psi.validate(); }) == ErrorKind::ConfigError);
    psi = {};
    psi.alpha = 0.0;
    CHECK(kind_of([&] { psi.validate(); }) == ErrorKind::ConfigError);
    psi = {};
    psi.gamma = -1.0;
    CHECK(kind_of([&] { psi.validate(); }) == ErrorKind::ConfigError);
    psi = {};
    psi.m = 0;
    CHECK(kind_of([&] { psi.validate(); }) == ErrorKind::ConfigError);
}
