#pragma once

#include "isofit/core_types.hpp"
#include "isofit/error.hpp"
#include "isofit/posterior.hpp"
#include "isofit/random.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace fixtures {

inline const std::vector<double> kCase1Truth{1.0 / 3, 2.0 / 3, 8.0 / 3, 4.0 / 3};

/// Case 1 context on n points of [-2, 7]; noise-free when `noise_seed` is empty.
inline isofit::PosteriorContext case1(std::size_t n, std::optional<std::uint64_t> noise_seed = {},
                                      isofit::Hyperparameters psi = {})
{
    using namespace isofit;
    auto model = MixtureModel::gaussian(2);
    auto grid = equally_spaced(-2.0, 7.0, n);
    auto r = model.evaluate(kCase1Truth, grid);
    if (noise_seed) {
        Philox rng(*noise_seed, 99);
        for (double& v : r) v += std::sqrt(0.001) * standard_normal(rng);
    }
    psi.sort_rule = SortRule::SwapSmallerFirst;
    return PosteriorContext(ForwardModel(model), ReparamMap::weight_sum(2),
                            Observation(grid, r, -2.0, 7.0), psi);
}

template <class F>
isofit::ErrorKind kind_of(F&& f)
{
    try {
        f();
    } catch (const isofit::Error& e) {
        return e.kind();
    }
    return static_cast<isofit::ErrorKind>(-1);
}

} // namespace fixtures
