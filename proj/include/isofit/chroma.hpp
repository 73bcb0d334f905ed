#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace isofit {

/// Bi-Langmuir coefficients, ordered as the 8-entry parameter vector
/// (a_I1, a_II1, b_I1, b_II1, a_I2, a_II2, b_I2, b_II2).
struct IsothermParams {
    double a_I1 = 0.0, a_II1 = 0.0, b_I1 = 0.0, b_II1 = 0.0;
    double a_I2 = 0.0, a_II2 = 0.0, b_I2 = 0.0, b_II2 = 0.0;

    /// Accepts 4 entries (component 2 zeroed) or 8 entries.
    static IsothermParams from_xi(std::span<const double> xi);
    void validate() const;
};

struct Loadings {
    double q1;
    double q2;
};

using Jacobian2 = std::array<std::array<double, 2>, 2>;

/// Competitive bi-Langmuir loadings.
Loadings bilangmuir_q(double c1, double c2, const IsothermParams& p);

/// Analytic partial derivatives dq_i/dC_j.
Jacobian2 bilangmuir_jacobian(double c1, double c2, const IsothermParams& p);

/// How the accumulation term F dq/dt enters the explicit update.
enum class TimeCoupling {
    /// March the conserved quantity C + F q(C) and recover C by Newton's
    /// method in each cell. Conserves mass across adsorption fronts.
    Conservative,
    /// Solve (I + F J_q) dC/dt = rhs cell by cell with J_q from the previous
    /// step. Cheaper per step but loses mass at steep fronts; reference only.
    JacobianElimination,
};

/// Fixed-bed column, Danckwerts inlet and zero-gradient outlet.
struct ColumnConfig {
    double velocity = 0.125;        ///< u [cm/s]
    double length = 15.0;           ///< L [cm]
    double phase_ratio = 0.7806;    ///< F
    double dispersion = 0.00010417; ///< D_a [cm^2/s]
    double horizon = 750.0;         ///< recording end T [s]
    std::array<double, 2> inject{5.0, 0.0}; ///< h [mM]
    double inject_duration = 1.0;   ///< rectangular pulse length [s]
    std::array<double, 2> initial{0.0, 0.0}; ///< uniform g_i(x) [mM]
    std::size_t cells = 200;
    /// Fixed step [s]; 0 selects an adaptive step from `cfl`.
    double time_step = 0.0;
    double cfl = 0.8;
    TimeCoupling coupling = TimeCoupling::Conservative;

    double dead_time() const noexcept { return length / velocity; }
    double cell_width() const noexcept { return length / static_cast<double>(cells); }
    /// Throws StabilityViolation / DomainViolation.
    void validate() const;

    friend bool operator==(const ColumnConfig&, const ColumnConfig&) = default;
};

/// Outlet concentrations at the solver's native time levels.
struct ColumnOutlet {
    std::vector<double> times;
    std::vector<double> c1;
    std::vector<double> c2;

    /// Linear interpolation of C1 + C2 onto `grid`, clamped at 0.
    std::vector<double> total_on(std::span<const double> grid) const;
};

/// Full space-time field, recorded every `stride` steps when requested.
struct ColumnField {
    std::vector<double> x;
    std::vector<double> times;
    std::vector<std::vector<double>> c1;
    std::vector<std::vector<double>> c2;

    void write_csv(const std::string& path) const;
};

ColumnOutlet solve_column(const ColumnConfig& config, const IsothermParams& p, double t_end,
                          ColumnField* field = nullptr, std::size_t field_stride = 10);

/// Total outlet response C1(L,t) + C2(L,t) on `grid`.
std::vector<double> chroma_signal(const ColumnConfig& config, std::span<const double> xi,
                                  std::span<const double> grid);

} // namespace isofit
