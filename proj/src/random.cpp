#include "isofit/random.hpp"

#include "isofit/error.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace isofit {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept
{
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

/// P(Z > x) for a standard normal, accurate in the upper tail.
double upper_tail(double x)
{
    return 0.5 * boost::math::erfc(x / std::numbers::sqrt2);
}

} // namespace

Philox::Philox(std::uint64_t seed, std::uint64_t stream) noexcept : seed_(seed), stream_(stream) {}

std::array<std::uint32_t, 4> Philox::block(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

void Philox::refill() noexcept
{
    const std::array<std::uint32_t, 4> counter{
        static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
        static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                           static_cast<std::uint32_t>(seed_ >> 32)};
    buffer_ = block(counter, key);
    ++position_;
    used_ = 0;
}

Philox::result_type Philox::operator()() noexcept
{
    if (used_ == 2) refill();
    const std::uint64_t lo = buffer_[2 * used_];
    const std::uint64_t hi = buffer_[2 * used_ + 1];
    ++used_;
    return (hi << 32) | lo;
}

double uniform01(Philox& rng)
{
    return boost::random::uniform_01<double>{}(rng);
}

double standard_normal(Philox& rng)
{
    return boost::random::normal_distribution<double>{0.0, 1.0}(rng);
}

double gamma_draw(Philox& rng, double shape)
{
    if (!(shape > 0.0)) throw Error(ErrorKind::DomainViolation, "gamma shape must be > 0");
    return boost::random::gamma_distribution<double>{shape, 1.0}(rng);
}

double inverse_gamma_draw(Philox& rng, double alpha, double beta)
{
    if (!(alpha > 0.0) || !(beta > 0.0)) {
        throw Error(ErrorKind::DomainViolation, "inverse-gamma parameters must be > 0");
    }
    double g = 0.0;
    while (!(g > 0.0)) g = gamma_draw(rng, alpha);
    return beta / g;
}

double truncated_normal_sample(Philox& rng, double mu, double sd, double lo, double hi)
{
    if (!(lo < hi) || !(sd > 0.0)) {
        throw Error(ErrorKind::DomainViolation, "truncated normal needs lo < hi and sd > 0");
    }
    double a = (lo - mu) / sd;
    double b = (hi - mu) / sd;
    // Work in whichever tail keeps the CDF values small and precise.
    const bool flip = a > 0.0;
    if (flip) {
        std::swap(a, b);
        a = -a;
        b = -b;
    }
    const boost::math::normal_distribution<double> unit;
    const double pa = upper_tail(-a);
    const double pb = upper_tail(-b);
    const double u = uniform01(rng);
    double z;
    if (pb - pa > 0.0) {
        const double p = std::clamp(pa + u * (pb - pa), std::nextafter(pa, 1.0), std::nextafter(pb, 0.0));
        z = p > 0.0 && p < 1.0 ? boost::math::quantile(unit, p) : (p <= 0.0 ? a : b);
    } else {
        z = std::isfinite(b) ? a + u * (b - a) : a;
    }
    z = std::clamp(z, a, b);
    if (flip) z = -z;
    return std::clamp(mu + sd * z, lo, hi);
}

double truncated_normal_log_density(double x, double mu, double sd, double lo, double hi)
{
    if (!(lo < hi) || !(sd > 0.0)) {
        throw Error(ErrorKind::DomainViolation, "truncated normal needs lo < hi and sd > 0");
    }
    if (x < lo || x > hi) return -std::numeric_limits<double>::infinity();
    const double a = (lo - mu) / sd;
    const double b = (hi - mu) / sd;
    const double mass = a > 0.0 ? upper_tail(a) - upper_tail(b) : upper_tail(-b) - upper_tail(-a);
    const double z = (x - mu) / sd;
    return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(mass);
}

} // namespace isofit
