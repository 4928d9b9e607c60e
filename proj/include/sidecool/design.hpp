#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sidecool/physics.hpp"

// Pump-power design: heating budget versus pump strength, occupancy sweeps,
// and the occupancy-minimizing pump point under that budget.

namespace sidecool::design {

// Bath heating versus pump occupation: flat baseline n_dot_0 up to the knee,
// then a continuous power law n_dot_0 * (n_p/knee)^exponent.
struct HeatingModel {
    double n_dot_0 = 0.0;   // quanta/s
    double n_p_knee = 0.0;  // pump photons at onset
    double exponent = 0.0;  // >= 0

    void validate() const {
        if (!(n_dot_0 >= 0.0)) throw std::invalid_argument("HeatingModel.n_dot_0: must be >= 0");
        if (!(n_p_knee > 0.0)) throw std::invalid_argument("HeatingModel.n_p_knee: must be > 0");
        if (!(exponent >= 0.0)) throw std::invalid_argument("HeatingModel.exponent: must be >= 0");
    }
};

inline double heating_rate_vs_pump(const HeatingModel& model, double n_p) {
    model.validate();
    if (!(n_p >= 0.0)) throw std::invalid_argument("heating_rate_vs_pump: n_p must be >= 0");
    if (n_p <= model.n_p_knee) return model.n_dot_0;
    return model.n_dot_0 * std::pow(n_p / model.n_p_knee, model.exponent);
}

// Piecewise-linear lookup table for the measured excess cavity occupancy
// n_sr(n_p); clamps outside the tabulated range. A one-entry table is a
// constant.
class NsrTable {
public:
    explicit NsrTable(std::vector<std::pair<double, double>> points) : points_(std::move(points)) {
        if (points_.empty()) throw std::invalid_argument("NsrTable: need at least one point");
        std::sort(points_.begin(), points_.end());
        for (std::size_t i = 1; i < points_.size(); ++i)
            if (!(points_[i].first > points_[i - 1].first))
                throw std::invalid_argument("NsrTable: n_p abscissae must be distinct");
        for (const auto& [np, nsr] : points_)
            if (!(np >= 0.0) || !(nsr >= 0.0))
                throw std::invalid_argument("NsrTable: entries must be >= 0");
    }

    static NsrTable constant(double n_sr) { return NsrTable({{0.0, n_sr}}); }

    double operator()(double n_p) const {
        if (n_p <= points_.front().first) return points_.front().second;
        if (n_p >= points_.back().first) return points_.back().second;
        auto hi = std::upper_bound(points_.begin(), points_.end(), n_p,
                                   [](double v, const auto& pt) { return v < pt.first; });
        auto lo = hi - 1;
        const double f = (n_p - lo->first) / (hi->first - lo->first);
        return lo->second + f * (hi->second - lo->second);
    }

    const std::vector<std::pair<double, double>>& points() const { return points_; }

private:
    std::vector<std::pair<double, double>> points_;
};

// Device + operating temperature; everything a per-point sweep evaluation
// needs besides the pump.
struct CoolingSystem {
    phys::MechanicalMode mechanics;
    phys::CavityMode cavity;
    double g = 0.0;            // rad/s per m
    double temperature = 0.0;  // K

    void validate() const {
        mechanics.validate();
        cavity.validate();
        if (!(g >= 0.0)) throw std::invalid_argument("CoolingSystem.g: must be >= 0");
        if (!(temperature > 0.0)) throw std::invalid_argument("CoolingSystem.temperature: must be > 0");
    }
};

struct SweepResult {
    std::vector<double> n_p;
    std::vector<double> gamma_opt;  // 1/s
    std::vector<double> n_m;
    std::vector<double> n_dot_t;    // quanta/s
    std::vector<double> q_dot;      // W
};

// Per pump point: Gamma_opt from the coupling, bath heating from the model,
// the effective thermal occupancy ndot_T / Gamma_m^T, and the
// detailed-balance steady state against the tabulated n_sr.
inline SweepResult sweep_occupancy_vs_pump(const CoolingSystem& system, const HeatingModel& heating,
                                           const NsrTable& n_sr_table,
                                           const std::vector<double>& n_p_grid) {
    system.validate();
    heating.validate();
    if (n_p_grid.empty()) throw std::invalid_argument("sweep_occupancy_vs_pump: empty grid");
    for (std::size_t i = 0; i < n_p_grid.size(); ++i)
        if (!(n_p_grid[i] > 0.0) || (i > 0 && !(n_p_grid[i] > n_p_grid[i - 1])))
            throw std::invalid_argument("sweep_occupancy_vs_pump: grid must be positive ascending");

    const double x_zp = phys::zero_point_amplitude(system.mechanics);
    const double gamma_m_t = phys::gamma_m_thermal(system.mechanics, system.temperature);
    SweepResult sweep;
    sweep.n_p.reserve(n_p_grid.size());
    for (double n_p : n_p_grid) {
        const double gamma_opt = phys::optical_damping_rate(x_zp, system.g, n_p, system.cavity.gamma_sr);
        const double n_dot_t = heating_rate_vs_pump(heating, n_p);
        const double n_m_thermal_eff = n_dot_t / gamma_m_t;
        const double n_m = phys::steady_state_occupancy(gamma_m_t, n_m_thermal_eff, gamma_opt,
                                                        n_sr_table(n_p));
        sweep.n_p.push_back(n_p);
        sweep.gamma_opt.push_back(gamma_opt);
        sweep.n_m.push_back(n_m);
        sweep.n_dot_t.push_back(n_dot_t);
        sweep.q_dot.push_back(phys::cooling_power(system.mechanics.omega_m, gamma_opt));
    }
    return sweep;
}

inline std::vector<double> log_spaced_grid(double lo, double hi, int points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2)
        throw std::invalid_argument("log_spaced_grid: need 0 < lo < hi and >= 2 points");
    std::vector<double> grid(points);
    const double llo = std::log(lo);
    const double step = (std::log(hi) - llo) / (points - 1);
    for (int i = 0; i < points; ++i) grid[i] = std::exp(llo + step * i);
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

struct PumpOptimum {
    double n_p = 0.0;
    double n_m = 0.0;
};

// Occupancy-minimizing pump point: 1000-point log grid scan, then
// golden-section refinement in log(n_p) on the bracketing cell. Ties break
// toward smaller n_p.
inline PumpOptimum optimize_pump(const CoolingSystem& system, const HeatingModel& heating,
                                 const NsrTable& n_sr_table, double n_p_lo, double n_p_hi) {
    if (!(n_p_lo > 0.0) || !(n_p_hi > n_p_lo))
        throw std::invalid_argument("optimize_pump: need 0 < lo < hi");
    system.validate();
    heating.validate();

    const double x_zp = phys::zero_point_amplitude(system.mechanics);
    const double gamma_m_t = phys::gamma_m_thermal(system.mechanics, system.temperature);
    const auto objective = [&](double n_p) {
        const double gamma_opt = phys::optical_damping_rate(x_zp, system.g, n_p, system.cavity.gamma_sr);
        const double n_dot_t = heating_rate_vs_pump(heating, n_p);
        return phys::steady_state_occupancy(gamma_m_t, n_dot_t / gamma_m_t, gamma_opt,
                                            n_sr_table(n_p));
    };

    constexpr int scan_points = 1000;
    const std::vector<double> grid = log_spaced_grid(n_p_lo, n_p_hi, scan_points);
    std::size_t best = 0;
    double best_val = objective(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double v = objective(grid[i]);
        if (v < best_val) {  // strict: ties keep the smaller n_p
            best_val = v;
            best = i;
        }
    }

    // Golden-section on the bracket around the best scan cell.
    double lo = std::log(grid[best > 0 ? best - 1 : 0]);
    double hi = std::log(grid[std::min(best + 1, grid.size() - 1)]);
    PumpOptimum opt{grid[best], best_val};
    constexpr double inv_phi = 0.6180339887498949;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(std::exp(x1));
    double f2 = objective(std::exp(x2));
    for (int i = 0; i < 200 && (hi - lo) > 1e-12; ++i) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(std::exp(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(std::exp(x2));
        }
        const double cand_x = f1 <= f2 ? x1 : x2;
        const double cand_f = std::min(f1, f2);
        if (cand_f < opt.n_m || (cand_f == opt.n_m && std::exp(cand_x) < opt.n_p)) {
            opt.n_m = cand_f;
            opt.n_p = std::exp(cand_x);
        }
    }
    return opt;
}

// Cavity photons excited by pump phase noise at the mechanical sideband:
// n_pn = C * n_p * 10^(L/10) * Gamma_sr / 4, with L in dBc/Hz. The overall
// constant C is a calibration knob (default 1).
inline double phase_noise_occupancy(double l_dbc_per_hz, double n_p, double gamma_sr,
                                    double model_constant = 1.0) {
    if (!(n_p >= 0.0)) throw std::invalid_argument("phase_noise_occupancy: n_p must be >= 0");
    if (!(gamma_sr > 0.0)) throw std::invalid_argument("phase_noise_occupancy: gamma_sr must be > 0");
    if (!(model_constant >= 0.0))
        throw std::invalid_argument("phase_noise_occupancy: model_constant must be >= 0");
    return model_constant * n_p * std::pow(10.0, l_dbc_per_hz / 10.0) * gamma_sr / 4.0;
}

// Intracavity photon number of a driven two-port cavity:
// n_p = (kappa_ext P_in / hbar omega_p) / ((kappa_total/2)^2 + detuning^2).
inline double pump_photons_from_power(double p_in, double kappa_ext, double kappa_total,
                                      double detuning, double omega_p) {
    if (!(p_in >= 0.0)) throw std::invalid_argument("pump_photons_from_power: p_in must be >= 0");
    if (!(kappa_ext > 0.0) || !(kappa_total > 0.0) || !(omega_p > 0.0))
        throw std::invalid_argument("pump_photons_from_power: rates and omega_p must be > 0");
    const double half = 0.5 * kappa_total;
    return kappa_ext * p_in / (constants::hbar * omega_p) / (half * half + detuning * detuning);
}

// What-if projection: scale Gamma_opt while holding the bath heating rate
// fixed, and re-evaluate the detailed-balance steady state.
inline double scaled_damping_occupancy(double gamma_opt, double scale, double n_dot_t,
                                       double gamma_m_t, double n_sr) {
    if (!(scale > 0.0)) throw std::invalid_argument("scaled_damping_occupancy: scale must be > 0");
    if (!(gamma_m_t > 0.0))
        throw std::invalid_argument("scaled_damping_occupancy: gamma_m_t must be > 0");
    const double scaled = gamma_opt * scale;
    return phys::steady_state_occupancy(gamma_m_t, n_dot_t / gamma_m_t, scaled, n_sr);
}

}  // namespace sidecool::design
