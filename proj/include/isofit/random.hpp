#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace isofit {

/// Philox4x32-10 counter-based generator with 64-bit output.
///
/// The key is the run seed; the upper half of the counter selects a
/// sub-stream, so `Philox(seed, k)` for different k never overlap.
class Philox {
public:
    using result_type = std::uint64_t;

    explicit Philox(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Independent generator sharing this seed, on sub-stream `stream`.
    Philox substream(std::uint64_t stream) const noexcept { return Philox(seed_, stream); }

    std::uint64_t seed() const noexcept { return seed_; }

    /// Raw block function; exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                              std::array<std::uint32_t, 2> key) noexcept;

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t position_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 2;
};

double uniform01(Philox& rng);
double standard_normal(Philox& rng);
/// Gamma(shape, scale = 1).
double gamma_draw(Philox& rng, double shape);

/// Inverse-gamma(alpha, beta) draw, beta / Gamma(alpha, 1).
double inverse_gamma_draw(Philox& rng, double alpha, double beta);

/// Normal(mu, sd^2) restricted to [lo, hi], drawn by inverting the CDF.
/// `hi` may be +infinity.
double truncated_normal_sample(Philox& rng, double mu, double sd, double lo, double hi);

/// log density of that truncated normal at x; -infinity outside [lo, hi].
double truncated_normal_log_density(double x, double mu, double sd, double lo, double hi);

} // namespace isofit
