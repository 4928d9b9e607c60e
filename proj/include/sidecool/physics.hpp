#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "sidecool/constants.hpp"

// Closed-form relations for a mechanical resonator sideband-cooled by a
// driven microwave cavity. Everything here is a pure function of its
// arguments; shared state is limited to the physical constants.

namespace sidecool::phys {

// Radio-frequency mechanical resonator (NR). The intrinsic damping is a
// linear-in-temperature law anchored at (t_ref, q_ref).
struct MechanicalMode {
    double omega_m = 0.0;  // rad/s
    double mass = 0.0;     // kg
    double q_ref = 0.0;    // quality factor at t_ref
    double t_ref = 0.0;    // K

    void validate() const {
        if (!(omega_m > 0.0)) throw std::invalid_argument("MechanicalMode.omega_m: must be > 0");
        if (!(mass > 0.0)) throw std::invalid_argument("MechanicalMode.mass: must be > 0");
        if (!(q_ref > 0.0)) throw std::invalid_argument("MechanicalMode.q_ref: must be > 0");
        if (!(t_ref > 0.0)) throw std::invalid_argument("MechanicalMode.t_ref: must be > 0");
    }
};

// Microwave cavity (SR). gamma_sr is the full energy decay rate.
struct CavityMode {
    double omega_sr = 0.0;      // rad/s
    double gamma_sr = 0.0;      // rad/s
    double n_sr_thermal = 0.0;  // thermal photon occupancy

    void validate() const {
        if (!(gamma_sr > 0.0)) throw std::invalid_argument("CavityMode.gamma_sr: must be > 0");
        if (!(omega_sr > gamma_sr)) throw std::invalid_argument("CavityMode.omega_sr: must exceed gamma_sr");
        if (!(n_sr_thermal >= 0.0)) throw std::invalid_argument("CavityMode.n_sr_thermal: must be >= 0");
    }
};

// Electromechanical coupling of the beam to the cavity.
struct Coupling {
    double g = 0.0;       // d(omega_sr)/dx, rad/s per m
    double lambda = 0.0;  // d^2 coupling term, rad/s per m^2
    double c_g = 0.0;     // coupling capacitance, F
    double c_t = 0.0;     // total cavity capacitance, F
    double gap = 0.0;     // beam-gate gap, m

    void validate() const {
        if (!(g >= 0.0)) throw std::invalid_argument("Coupling.g: must be >= 0");
        if (!(c_g > 0.0)) throw std::invalid_argument("Coupling.c_g: must be > 0");
        if (!(c_t > c_g)) throw std::invalid_argument("Coupling.c_t: must exceed c_g");
        if (!(gap > 0.0)) throw std::invalid_argument("Coupling.gap: must be > 0");
    }
};

// Pump drive state. detuning is pump frequency relative to omega_sr; the
// red-sideband cooling configuration is detuning = -omega_m.
struct PumpConfig {
    double n_p = 0.0;       // intracavity pump photon number
    double detuning = 0.0;  // rad/s

    void validate() const {
        if (!(n_p >= 0.0)) throw std::invalid_argument("PumpConfig.n_p: must be >= 0");
    }
};

// Bose-Einstein occupancy 1/(exp(hbar*omega/kB*T) - 1).
// Switches to the Laurent series 1/x - 1/2 + x/12 for x < 1e-6 to avoid
// cancellation in the classical limit. Returns 0 at T = 0.
inline double bose_occupancy(double omega, double temperature) {
    if (!(omega > 0.0)) throw std::invalid_argument("bose_occupancy: omega must be > 0");
    if (!(temperature >= 0.0)) throw std::invalid_argument("bose_occupancy: temperature must be >= 0");
    if (temperature == 0.0) return 0.0;
    const double x = constants::hbar * omega / (constants::k_b * temperature);
    if (x < 1e-6) return 1.0 / x - 0.5 + x / 12.0;
    if (x > 700.0) return std::exp(-x);  // expm1 would overflow
    return 1.0 / std::expm1(x);
}

// x_zp = sqrt(hbar / (2 m omega_m)), the rms ground-state amplitude.
inline double zero_point_amplitude(const MechanicalMode& mode) {
    mode.validate();
    return std::sqrt(constants::hbar / (2.0 * mode.mass * mode.omega_m));
}

// Geometric mass of a layered beam: sum_k L * w * t_k * rho_k.
inline double beam_mass(double length, double width,
                        std::span<const double> layer_thicknesses,
                        std::span<const double> layer_densities) {
    if (!(length > 0.0) || !(width > 0.0))
        throw std::invalid_argument("beam_mass: length and width must be > 0");
    if (layer_thicknesses.size() != layer_densities.size())
        throw std::invalid_argument("beam_mass: thickness/density lists must have equal length");
    double mass = 0.0;
    for (std::size_t i = 0; i < layer_thicknesses.size(); ++i) {
        if (layer_thicknesses[i] < 0.0 || layer_densities[i] < 0.0)
            throw std::invalid_argument("beam_mass: layer values must be >= 0");
        mass += length * width * layer_thicknesses[i] * layer_densities[i];
    }
    return mass;
}

// Parallel-plate estimate dCg/dx = Cg / gap.
inline double parallel_plate_dcg_dx(double c_g, double gap) {
    if (!(c_g > 0.0) || !(gap > 0.0))
        throw std::invalid_argument("parallel_plate_dcg_dx: c_g and gap must be > 0");
    return c_g / gap;
}

// g = omega_sr * (dCg/dx) / (2 Ct), in rad/s per m.
inline double coupling_from_geometry(double omega_sr, double c_t, double dcg_dx) {
    if (!(omega_sr > 0.0) || !(c_t > 0.0) || !(dcg_dx >= 0.0))
        throw std::invalid_argument("coupling_from_geometry: arguments out of range");
    return omega_sr * dcg_dx / (2.0 * c_t);
}

// Sideband up-conversion rate Gamma_opt = 4 x_zp^2 g^2 n_p / Gamma_sr.
// Valid in the resolved-sideband regime (Gamma_sr < omega_m); the caller
// owns that check.
inline double optical_damping_rate(double x_zp, double g, double n_p, double gamma_sr) {
    if (!(gamma_sr > 0.0)) throw std::invalid_argument("optical_damping_rate: gamma_sr must be > 0");
    if (x_zp < 0.0 || g < 0.0 || n_p < 0.0)
        throw std::invalid_argument("optical_damping_rate: arguments must be >= 0");
    return 4.0 * x_zp * x_zp * g * g * n_p / gamma_sr;
}

// Effective cavity occupancy seen by the mechanics when Gamma_opt < Gamma_sr:
// (Gamma_sr/4 omega_m)^2 + n_sr_thermal * (1 + 2 (Gamma_sr/4 omega_m)^2).
// The first term is the quantum back-action floor of the pump field.
inline double cavity_effective_occupancy(double gamma_sr, double omega_m, double n_sr_thermal) {
    if (!(omega_m > 0.0)) throw std::invalid_argument("cavity_effective_occupancy: omega_m must be > 0");
    if (gamma_sr < 0.0 || n_sr_thermal < 0.0)
        throw std::invalid_argument("cavity_effective_occupancy: arguments must be >= 0");
    const double r = gamma_sr / (4.0 * omega_m);
    return r * r + n_sr_thermal * (1.0 + 2.0 * r * r);
}

// Detailed-balance steady state: the rate-weighted mean of the thermal-bath
// and cavity-bath occupancies.
inline double steady_state_occupancy(double gamma_m_t, double n_m_thermal,
                                     double gamma_opt, double n_sr_eff) {
    if (gamma_m_t < 0.0 || gamma_opt < 0.0)
        throw std::invalid_argument("steady_state_occupancy: rates must be >= 0");
    const double total = gamma_m_t + gamma_opt;
    if (!(total > 0.0))
        throw std::invalid_argument("steady_state_occupancy: at least one rate must be > 0");
    return (gamma_m_t * n_m_thermal + gamma_opt * n_sr_eff) / total;
}

// Thermal-state ground-state probability P0 = 1/(n+1).
inline double ground_state_probability(double n_m) {
    if (!(n_m >= 0.0)) throw std::invalid_argument("ground_state_probability: n_m must be >= 0");
    return 1.0 / (n_m + 1.0);
}

// Refrigeration power extracted from the mode, Qdot = hbar omega_m Gamma_opt.
inline double cooling_power(double omega_m, double gamma_opt) {
    if (omega_m < 0.0 || gamma_opt < 0.0)
        throw std::invalid_argument("cooling_power: arguments must be >= 0");
    return constants::hbar * omega_m * gamma_opt;
}

// The linear damping law holds below ~600 mK for this device family.
constexpr double gamma_m_law_t_max = 0.6;  // K
constexpr bool gamma_m_law_in_range(double temperature) {
    return temperature <= gamma_m_law_t_max;
}

// Intrinsic damping Gamma_m^T = (omega_m / q_ref) * (T / t_ref).
// Extrapolates linearly above gamma_m_law_t_max; use gamma_m_law_in_range
// to flag that regime.
inline double gamma_m_thermal(const MechanicalMode& mode, double temperature) {
    mode.validate();
    if (!(temperature >= 0.0)) throw std::invalid_argument("gamma_m_thermal: temperature must be >= 0");
    return (mode.omega_m / mode.q_ref) * (temperature / mode.t_ref);
}

// Bath heating rate ndot_T = Gamma_m^T * n_m^T, in quanta/s.
inline double bath_heating_rate(double gamma_m_t, double n_m_thermal) {
    if (gamma_m_t < 0.0 || n_m_thermal < 0.0)
        throw std::invalid_argument("bath_heating_rate: arguments must be >= 0");
    return gamma_m_t * n_m_thermal;
}

// Time for one thermal quantum to re-enter the mode, tau = 1/ndot_T.
inline double rethermalization_time(double n_dot_t) {
    if (!(n_dot_t > 0.0)) throw std::invalid_argument("rethermalization_time: rate must be > 0");
    return 1.0 / n_dot_t;
}

// Electrostatic pull of the mechanical frequency by the pumped cavity,
// first-order in the -lambda x^2 coupling: delta = -hbar lambda n_p / (m omega_m).
inline double frequency_pull(double lambda, double n_p, const MechanicalMode& mode) {
    mode.validate();
    if (n_p < 0.0) throw std::invalid_argument("frequency_pull: n_p must be >= 0");
    return -constants::hbar * lambda * n_p / (mode.mass * mode.omega_m);
}

// Heating rate from a white force noise of single-sided PSD S_F:
// ndot = S_F / (4 m hbar omega_m) = S_F x_zp^2 / (2 hbar^2), quanta/s.
inline double force_noise_heating_rate(double s_f, const MechanicalMode& mode) {
    mode.validate();
    if (!(s_f >= 0.0)) throw std::invalid_argument("force_noise_heating_rate: s_f must be >= 0");
    return s_f / (4.0 * mode.mass * constants::hbar * mode.omega_m);
}

// Down- to up-conversion rate ratio (n+1)/n; the zero-point asymmetry used
// for absolute thermometry. Diverges at n = 0.
inline double sideband_asymmetry(double n_m) {
    if (!(n_m > 0.0))
        throw std::invalid_argument("sideband_asymmetry: out of domain, n_m must be > 0");
    return (n_m + 1.0) / n_m;
}

}  // namespace sidecool::phys
