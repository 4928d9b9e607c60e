#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sidecool/physics.hpp"

// Rate-equation evolution of the mean occupancy,
//   dn/dt = -(Gamma_m^T + Gamma_opt) n + Gamma_m^T n_m^T + Gamma_opt n_sr,
// for cooling transients and pump-off rethermalization. Coefficients are
// constant over a timeline; pump schedules are piecewise-constant segments
// chained by the caller.

namespace sidecool::dynamics {

struct CoolingTimeline {
    std::vector<double> times;      // s
    std::vector<double> occupancy;  // quanta
    double steady_state = 0.0;
    double rate_total = 0.0;        // 1/s
};

namespace detail {

inline void check_grid(const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("dynamics: time grid must not be empty");
    if (!(t_grid.front() >= 0.0))
        throw std::invalid_argument("dynamics: time grid must start at t >= 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("dynamics: time grid must be strictly increasing");
}

}  // namespace detail

// Closed-form solution n(t) = n_ss + (n0 - n_ss) exp(-Gamma_total t).
// The endpoint shares steady_state_occupancy with the static formula.
inline CoolingTimeline evolve_occupancy(double n0, double gamma_m_t, double n_m_thermal,
                                        double gamma_opt, double n_sr,
                                        const std::vector<double>& t_grid) {
    if (!(n0 >= 0.0)) throw std::invalid_argument("evolve_occupancy: n0 must be >= 0");
    detail::check_grid(t_grid);
    const double n_ss = phys::steady_state_occupancy(gamma_m_t, n_m_thermal, gamma_opt, n_sr);
    const double rate = gamma_m_t + gamma_opt;
    CoolingTimeline timeline;
    timeline.times = t_grid;
    timeline.occupancy.resize(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        timeline.occupancy[i] = n_ss + (n0 - n_ss) * std::exp(-rate * t_grid[i]);
    timeline.steady_state = n_ss;
    timeline.rate_total = rate;
    return timeline;
}

// Same trajectory by adaptive Cash-Karp RK4(5) integration; the independent
// cross-check route for the closed form.
inline CoolingTimeline evolve_occupancy_numeric(double n0, double gamma_m_t, double n_m_thermal,
                                                double gamma_opt, double n_sr,
                                                const std::vector<double>& t_grid,
                                                double rel_tol = 1e-9) {
    if (!(n0 >= 0.0)) throw std::invalid_argument("evolve_occupancy_numeric: n0 must be >= 0");
    detail::check_grid(t_grid);
    const double n_ss = phys::steady_state_occupancy(gamma_m_t, n_m_thermal, gamma_opt, n_sr);
    const double rate = gamma_m_t + gamma_opt;
    const double source = gamma_m_t * n_m_thermal + gamma_opt * n_sr;
    const auto deriv = [&](double n) { return -rate * n + source; };

    // Cash-Karp tableau (node coefficients drop out for an autonomous RHS).
    static constexpr double b21 = 0.2;
    static constexpr double b31 = 3.0 / 40.0, b32 = 9.0 / 40.0;
    static constexpr double b41 = 0.3, b42 = -0.9, b43 = 1.2;
    static constexpr double b51 = -11.0 / 54.0, b52 = 2.5, b53 = -70.0 / 27.0, b54 = 35.0 / 27.0;
    static constexpr double b61 = 1631.0 / 55296.0, b62 = 175.0 / 512.0, b63 = 575.0 / 13824.0,
                            b64 = 44275.0 / 110592.0, b65 = 253.0 / 4096.0;
    static constexpr double c1 = 37.0 / 378.0, c3 = 250.0 / 621.0, c4 = 125.0 / 594.0,
                            c6 = 512.0 / 1771.0;
    static constexpr double d1 = c1 - 2825.0 / 27648.0, d3 = c3 - 18575.0 / 48384.0,
                            d4 = c4 - 13525.0 / 55296.0, d5 = -277.0 / 14336.0,
                            d6 = c6 - 0.25;

    CoolingTimeline timeline;
    timeline.times = t_grid;
    timeline.occupancy.resize(t_grid.size());
    timeline.steady_state = n_ss;
    timeline.rate_total = rate;

    double t = 0.0;
    double n = n0;
    double h = rate > 0.0 ? 0.1 / rate : (t_grid.back() - t);
    const double scale_floor = 1e-30;

    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const double t_target = t_grid[i];
        while (t < t_target) {
            h = std::min(h, t_target - t);
            const double k1 = deriv(n);
            const double k2 = deriv(n + h * b21 * k1);
            const double k3 = deriv(n + h * (b31 * k1 + b32 * k2));
            const double k4 = deriv(n + h * (b41 * k1 + b42 * k2 + b43 * k3));
            const double k5 = deriv(n + h * (b51 * k1 + b52 * k2 + b53 * k3 + b54 * k4));
            const double k6 = deriv(n + h * (b61 * k1 + b62 * k2 + b63 * k3 + b64 * k4 + b65 * k5));
            const double n5 = n + h * (c1 * k1 + c3 * k3 + c4 * k4 + c6 * k6);
            const double err = std::abs(h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6));
            const double tol = rel_tol * std::max({std::abs(n), std::abs(n5), scale_floor});
            if (err <= tol) {
                t += h;
                n = n5;
                const double grow = err > 0.0 ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
                h *= std::min(grow, 5.0);
            } else {
                h *= std::max(0.9 * std::pow(tol / err, 0.25), 0.1);
            }
        }
        timeline.occupancy[i] = n;
    }
    return timeline;
}

// Pump-off decay toward the thermal bath:
// n(t) = n_m^T + (n_start - n_m^T) exp(-Gamma_m^T t). The initial slope is
// ndot_T - Gamma_m^T n_start.
inline CoolingTimeline pump_off_rethermalization(double n_start, double gamma_m_t,
                                                 double n_m_thermal,
                                                 const std::vector<double>& t_grid) {
    return evolve_occupancy(n_start, gamma_m_t, n_m_thermal, 0.0, 0.0, t_grid);
}

}  // namespace sidecool::dynamics
