#include "isofit/chroma.hpp"

#include "isofit/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace isofit {

IsothermParams IsothermParams::from_xi(std::span<const double> xi)
{
    IsothermParams p;
    if (xi.size() != 4 && xi.size() != 8) {
        throw Error(ErrorKind::DimensionMismatch, "isotherm parameters need 4 or 8 entries");
    }
    p.a_I1 = xi[0];
    p.a_II1 = xi[1];
    p.b_I1 = xi[2];
    p.b_II1 = xi[3];
    if (xi.size() == 8) {
        p.a_I2 = xi[4];
        p.a_II2 = xi[5];
        p.b_I2 = xi[6];
        p.b_II2 = xi[7];
    }
    p.validate();
    return p;
}

void IsothermParams::validate() const
{
    for (double v : {a_I1, a_II1, b_I1, b_II1, a_I2, a_II2, b_I2, b_II2}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorKind::DomainViolation, "isotherm coefficients must be finite and >= 0");
        }
    }
}

Loadings bilangmuir_q(double c1, double c2, const IsothermParams& p)
{
    const double site_I = 1.0 + p.b_I1 * c1 + p.b_I2 * c2;
    const double site_II = 1.0 + p.b_II1 * c1 + p.b_II2 * c2;
    return {p.a_I1 * c1 / site_I + p.a_II1 * c1 / site_II,
            p.a_I2 * c2 / site_I + p.a_II2 * c2 / site_II};
}

Jacobian2 bilangmuir_jacobian(double c1, double c2, const IsothermParams& p)
{
    const double site_I = 1.0 + p.b_I1 * c1 + p.b_I2 * c2;
    const double site_II = 1.0 + p.b_II1 * c1 + p.b_II2 * c2;
    const double inv_I2 = 1.0 / (site_I * site_I);
    const double inv_II2 = 1.0 / (site_II * site_II);
    Jacobian2 j{};
    j[0][0] = p.a_I1 * (site_I - p.b_I1 * c1) * inv_I2 + p.a_II1 * (site_II - p.b_II1 * c1) * inv_II2;
    j[0][1] = -p.a_I1 * c1 * p.b_I2 * inv_I2 - p.a_II1 * c1 * p.b_II2 * inv_II2;
    j[1][0] = -p.a_I2 * c2 * p.b_I1 * inv_I2 - p.a_II2 * c2 * p.b_II1 * inv_II2;
    j[1][1] = p.a_I2 * (site_I - p.b_I2 * c2) * inv_I2 + p.a_II2 * (site_II - p.b_II2 * c2) * inv_II2;
    return j;
}

void ColumnConfig::validate() const
{
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw Error(ErrorKind::DomainViolation, std::string(name) + " must be > 0");
        }
    };
    positive(velocity, "velocity");
    positive(length, "column length");
    positive(dispersion, "dispersion");
    positive(horizon, "horizon");
    positive(inject_duration, "injection duration");
    positive(cfl, "cfl factor");
    if (!(phase_ratio >= 0.0)) throw Error(ErrorKind::DomainViolation, "phase ratio must be >= 0");
    if (cells < 2) throw Error(ErrorKind::DomainViolation, "need at least two cells");
    for (double h : inject) {
        if (!(h >= 0.0)) throw Error(ErrorKind::DomainViolation, "injection must be >= 0");
    }
    for (double g : initial) {
        if (!(g >= 0.0)) throw Error(ErrorKind::DomainViolation, "initial state must be >= 0");
    }
    if (time_step < 0.0) throw Error(ErrorKind::DomainViolation, "time step must be >= 0");
    if (cfl > 1.0) throw Error(ErrorKind::StabilityViolation, "cfl factor must not exceed 1");
    if (time_step > 0.0) {
        const double dx = cell_width();
        const double rate = velocity / dx + 2.0 * dispersion / (dx * dx);
        if (time_step * rate > cfl) {
            throw Error(ErrorKind::StabilityViolation,
                        "time step violates the convection/diffusion bound (dt*(u/dx+2D/dx^2) = " +
                            std::to_string(time_step * rate) + ")");
        }
    }
}

std::vector<double> ColumnOutlet::total_on(std::span<const double> grid) const
{
    std::vector<double> out;
    out.reserve(grid.size());
    std::size_t k = 0;
    for (double g : grid) {
        if (g < times.front() || g > times.back() * (1.0 + 1e-12)) {
            throw Error(ErrorKind::DomainViolation, "requested time outside simulated horizon");
        }
        while (k + 2 < times.size() && times[k + 1] < g) ++k;
        while (k > 0 && times[k] > g) --k;
        const double t0 = times[k];
        const double t1 = times[k + 1];
        const double w = t1 > t0 ? std::clamp((g - t0) / (t1 - t0), 0.0, 1.0) : 0.0;
        const double v0 = c1[k] + c2[k];
        const double v1 = c1[k + 1] + c2[k + 1];
        out.push_back(std::max(0.0, v0 + w * (v1 - v0)));
    }
    return out;
}

void ColumnField::write_csv(const std::string& path) const
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::IoError, "cannot open " + path);
    out << "t,x,c1,c2\n" << std::setprecision(17);
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            out << times[k] << ',' << x[i] << ',' << c1[k][i] << ',' << c2[k][i] << '\n';
        }
    }
}

namespace {

/// Smallest |eigenvalue| of I + F*J, i.e. 1 / spectral radius of its inverse.
double min_abs_eigen(const Jacobian2& j, double f)
{
    const double m00 = 1.0 + f * j[0][0];
    const double m11 = 1.0 + f * j[1][1];
    const double m01 = f * j[0][1];
    const double m10 = f * j[1][0];
    const double half_tr = 0.5 * (m00 + m11);
    const double det = m00 * m11 - m01 * m10;
    const double disc = half_tr * half_tr - det;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        return std::min(std::abs(half_tr - root), std::abs(half_tr + root));
    }
    return std::sqrt(std::abs(det));
}

class ColumnSolver {
public:
    ColumnSolver(const ColumnConfig& cfg, const IsothermParams& p)
        : cfg_(cfg), p_(p), n_(cfg.cells), dx_(cfg.cell_width()),
          two_components_(cfg.inject[1] > 0.0 || cfg.initial[1] > 0.0),
          c1_(n_, cfg.initial[0]), c2_(n_, cfg.initial[1]), flux1_(n_ + 1), flux2_(n_ + 1),
          m00_(n_), m01_(n_), m10_(n_), m11_(n_), w1_(n_), w2_(n_)
    {
        base_rate_ = cfg_.velocity / dx_ + 2.0 * cfg_.dispersion / (dx_ * dx_);
        if (cfg_.coupling == TimeCoupling::Conservative) {
            for (std::size_t i = 0; i < n_; ++i) {
                const Loadings q = bilangmuir_q(c1_[i], c2_[i], p_);
                w1_[i] = c1_[i] + cfg_.phase_ratio * q.q1;
                w2_[i] = c2_[i] + cfg_.phase_ratio * q.q2;
            }
        }
    }

    ColumnOutlet run(double t_end, ColumnField* field, std::size_t stride)
    {
        ColumnOutlet out;
        const std::size_t expected =
            static_cast<std::size_t>(t_end * base_rate_ / cfg_.cfl) + 16;
        out.times.reserve(expected);
        out.c1.reserve(expected);
        out.c2.reserve(expected);
        record(out, 0.0);
        if (field) {
            field->x.resize(n_);
            for (std::size_t i = 0; i < n_; ++i) field->x[i] = (static_cast<double>(i) + 0.5) * dx_;
            snapshot(*field, 0.0);
        }

        double t = 0.0;
        std::size_t step = 0;
        const double t_stop = t_end * (1.0 - 1e-14);
        while (t < t_stop) {
            const double rho = prepare_jacobians();
            double dt = cfg_.time_step > 0.0 ? cfg_.time_step : cfg_.cfl / (base_rate_ * rho);
            if (t < cfg_.inject_duration) dt = std::min(dt, cfg_.inject_duration - t);
            dt = std::min(dt, t_end - t);
            const bool injecting = t < cfg_.inject_duration;
            advance(dt, injecting);
            t = (t_end - t - dt) <= 0.0 ? t_end : t + dt;
            ++step;
            record(out, t);
            if (!std::isfinite(out.c1.back()) || !std::isfinite(out.c2.back())) {
                throw Error(ErrorKind::NonFiniteState, "column state became non-finite");
            }
            if (field && step % stride == 0) snapshot(*field, t);
        }
        if (field && step % stride != 0) snapshot(*field, t);
        return out;
    }

private:
    /// Fills I + F*J per cell and returns the largest spectral radius of its inverse.
    double prepare_jacobians()
    {
        const double f = cfg_.phase_ratio;
        double min_eig = std::numeric_limits<double>::infinity();
        if (!two_components_) {
            for (std::size_t i = 0; i < n_; ++i) {
                const double c = std::max(c1_[i], 0.0);
                const double site_I = 1.0 + p_.b_I1 * c;
                const double site_II = 1.0 + p_.b_II1 * c;
                const double slope = p_.a_I1 / (site_I * site_I) + p_.a_II1 / (site_II * site_II);
                m00_[i] = 1.0 + f * slope;
                min_eig = std::min(min_eig, m00_[i]);
            }
            return 1.0 / min_eig;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            const Jacobian2 j = bilangmuir_jacobian(std::max(c1_[i], 0.0), std::max(c2_[i], 0.0), p_);
            m00_[i] = 1.0 + f * j[0][0];
            m01_[i] = f * j[0][1];
            m10_[i] = f * j[1][0];
            m11_[i] = 1.0 + f * j[1][1];
            min_eig = std::min(min_eig, min_abs_eigen(j, f));
        }
        if (!(min_eig > 0.0)) {
            throw Error(ErrorKind::NonFiniteState, "singular accumulation matrix");
        }
        return 1.0 / min_eig;
    }

    static void fluxes(const std::vector<double>& c, std::vector<double>& flux, double inlet,
                       double u, double d_over_dx)
    {
        const std::size_t n = c.size();
        flux[0] = u * inlet;
        for (std::size_t i = 1; i < n; ++i) flux[i] = u * c[i - 1] - d_over_dx * (c[i] - c[i - 1]);
        flux[n] = u * c[n - 1];
    }

    void advance(double dt, bool injecting)
    {
        const double u = cfg_.velocity;
        const double d_over_dx = cfg_.dispersion / dx_;
        const double scale = dt / dx_;
        fluxes(c1_, flux1_, injecting ? cfg_.inject[0] : 0.0, u, d_over_dx);
        if (two_components_) fluxes(c2_, flux2_, injecting ? cfg_.inject[1] : 0.0, u, d_over_dx);

        if (cfg_.coupling == TimeCoupling::Conservative) {
            advance_conservative(scale);
            return;
        }
        if (!two_components_) {
            for (std::size_t i = 0; i < n_; ++i) {
                c1_[i] += scale * (flux1_[i] - flux1_[i + 1]) / m00_[i];
            }
            return;
        }
        for (std::size_t i = 0; i < n_; ++i) {
            const double r1 = flux1_[i] - flux1_[i + 1];
            const double r2 = flux2_[i] - flux2_[i + 1];
            const double det = m00_[i] * m11_[i] - m01_[i] * m10_[i];
            c1_[i] += scale * (m11_[i] * r1 - m01_[i] * r2) / det;
            c2_[i] += scale * (m00_[i] * r2 - m10_[i] * r1) / det;
        }
    }

    void advance_conservative(double scale)
    {
        const double f = cfg_.phase_ratio;
        for (std::size_t i = 0; i < n_; ++i) {
            w1_[i] += scale * (flux1_[i] - flux1_[i + 1]);
            if (two_components_) w2_[i] += scale * (flux2_[i] - flux2_[i + 1]);
            // Newton on C + F q(C) = w. The map is monotone and concave per
            // component, so the iteration converges from the previous state.
            double x1 = c1_[i];
            double x2 = c2_[i];
            bool converged = false;
            for (int it = 0; it < 100 && !converged; ++it) {
                const double y1 = std::max(x1, 0.0);
                const double y2 = std::max(x2, 0.0);
                const Loadings q = bilangmuir_q(y1, y2, p_);
                const double r1 = w1_[i] - x1 - f * q.q1;
                if (!two_components_) {
                    const double site_I = 1.0 + p_.b_I1 * y1;
                    const double site_II = 1.0 + p_.b_II1 * y1;
                    const double slope =
                        1.0 + f * (p_.a_I1 / (site_I * site_I) + p_.a_II1 / (site_II * site_II));
                    x1 += r1 / slope;
                    converged = std::abs(r1) <= 1e-14 * (1.0 + std::abs(w1_[i]));
                    continue;
                }
                const double r2 = w2_[i] - x2 - f * q.q2;
                const Jacobian2 j = bilangmuir_jacobian(y1, y2, p_);
                const double m00 = 1.0 + f * j[0][0], m01 = f * j[0][1];
                const double m10 = f * j[1][0], m11 = 1.0 + f * j[1][1];
                const double det = m00 * m11 - m01 * m10;
                x1 += (m11 * r1 - m01 * r2) / det;
                x2 += (m00 * r2 - m10 * r1) / det;
                converged = std::abs(r1) + std::abs(r2) <=
                            1e-14 * (1.0 + std::abs(w1_[i]) + std::abs(w2_[i]));
            }
            c1_[i] = x1;
            c2_[i] = x2;
        }
    }

    void record(ColumnOutlet& out, double t) const
    {
        out.times.push_back(t);
        out.c1.push_back(std::max(0.0, c1_.back()));
        out.c2.push_back(two_components_ ? std::max(0.0, c2_.back()) : 0.0);
    }

    void snapshot(ColumnField& field, double t) const
    {
        field.times.push_back(t);
        field.c1.push_back(c1_);
        field.c2.push_back(two_components_ ? c2_ : std::vector<double>(n_, 0.0));
    }

    const ColumnConfig& cfg_;
    IsothermParams p_;
    std::size_t n_;
    double dx_;
    bool two_components_;
    double base_rate_ = 0.0;
    std::vector<double> c1_, c2_;
    std::vector<double> flux1_, flux2_;
    std::vector<double> m00_, m01_, m10_, m11_;
    std::vector<double> w1_, w2_;
};

} // namespace

ColumnOutlet solve_column(const ColumnConfig& config, const IsothermParams& p, double t_end,
                          ColumnField* field, std::size_t field_stride)
{
    config.validate();
    p.validate();
    if (!(t_end > 0.0) || t_end > config.horizon * (1.0 + 1e-12)) {
        throw Error(ErrorKind::DomainViolation, "simulation end must lie in (0, horizon]");
    }
    ColumnSolver solver(config, p);
    return solver.run(t_end, field, std::max<std::size_t>(field_stride, 1));
}

std::vector<double> chroma_signal(const ColumnConfig& config, std::span<const double> xi,
                                  std::span<const double> grid)
{
    if (grid.empty()) return {};
    const IsothermParams p = IsothermParams::from_xi(xi);
    const double t_end = std::max(grid.back(), 1e-9);
    return solve_column(config, p, t_end).total_on(grid);
}

} // namespace isofit
