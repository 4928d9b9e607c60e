#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sidecool/physics.hpp"
#include "sidecool/spectra.hpp"

// Inverse problem: weighted Lorentzian fits to PSD traces, thermal
// calibration of the power-to-quanta conversion, and occupancy extraction
// with the squashing correction n_m = n_eff + 2 n_sr.

namespace sidecool::inference {

struct insufficient_data : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct inconsistent_occupancy : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Parameter order used in std_errors and covariance: floor, area, center, width.
struct FitResult {
    spectra::SpectrumModel model;
    std::array<double, 4> std_errors{};
    Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();
    double chi2_reduced = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Proportionality between integrated sideband power and n * Gamma_opt,
// fixed against the equipartition regime of the thermal sweep.
struct CalibrationFit {
    double cal = 0.0;      // power per quantum per (1/s)
    double cal_err = 0.0;  // standard error, same units
    std::pair<double, double> fit_range{0.0, 0.0};  // (T_min, T_max) used, K
    int points_used = 0;
};

struct OccupancyResult {
    double n_eff = 0.0;  // signed; negative in the squashed regime
    double n_sr = 0.0;
    double n_m = 0.0;    // n_eff + 2 n_sr
    double n_m_err = 0.0;
    double p0 = 0.0;     // 1/(n_m+1), meaningful when consistent
    bool consistent = true;  // n_m >= 0
};

namespace detail {

inline double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid) - 1,
                         v.begin() + static_cast<std::ptrdiff_t>(mid));
        m = 0.5 * (m + v[mid - 1]);
    }
    return m;
}

// Model value and parameter gradient at a single frequency.
inline double eval_model(const std::array<double, 4>& p, double omega,
                         std::array<double, 4>& grad) {
    const double dx = omega - p[2];
    const double hw = 0.5 * p[3];
    const double den = dx * dx + hw * hw;
    const double lor = p[3] / (constants::two_pi * den);
    grad[0] = 1.0;
    grad[1] = lor;
    grad[2] = p[1] * lor * 2.0 * dx / den;
    grad[3] = p[1] * (dx * dx - hw * hw) / (constants::two_pi * den * den);
    return p[0] + p[1] * lor;
}

inline double chi2_of(const std::array<double, 4>& p, const std::vector<double>& freqs,
                      const std::vector<double>& values, const std::vector<double>& inv_sigma) {
    double chi2 = 0.0;
    std::array<double, 4> grad;
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        const double r = (eval_model(p, freqs[i], grad) - values[i]) * inv_sigma[i];
        chi2 += r * r;
    }
    return chi2;
}

// floor = median; center at the extremum of |values - floor|; width from the
// grid span; area from the extremum height via the peak identity 2/(pi w).
inline spectra::SpectrumModel self_initialize(const spectra::PsdTrace& trace) {
    spectra::SpectrumModel init;
    init.floor = median(trace.values);
    std::size_t k = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < trace.values.size(); ++i) {
        const double dev = std::abs(trace.values[i] - init.floor);
        if (dev > best) {
            best = dev;
            k = i;
        }
    }
    init.center = trace.freqs[k];
    init.width = (trace.freqs.back() - trace.freqs.front()) / 20.0;
    init.area = (trace.values[k] - init.floor) * std::numbers::pi * init.width / 2.0;
    return init;
}

// Pseudo-inverse of the scaled normal matrix; directions with negligible
// curvature get zero inverse weight instead of blowing up the solve.
inline Eigen::Matrix4d pinv_spd(const Eigen::Matrix4d& m, double rel_tol = 1e-12) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(m);
    const Eigen::Vector4d ev = eig.eigenvalues();
    const double thresh = rel_tol * std::max(ev.maxCoeff(), 0.0);
    Eigen::Vector4d inv = Eigen::Vector4d::Zero();
    for (int i = 0; i < 4; ++i)
        if (ev[i] > thresh && ev[i] > 0.0) inv[i] = 1.0 / ev[i];
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

struct LmOutcome {
    std::array<double, 4> p{};
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

// One damped least-squares run with fixed weights.
inline LmOutcome run_damped_lsq(const spectra::PsdTrace& trace,
                                const std::vector<double>& inv_sigma, std::array<double, 4> p,
                                int max_iterations) {
    const std::size_t n = trace.freqs.size();
    double chi2 = chi2_of(p, trace.freqs, trace.values, inv_sigma);
    double lambda = 1e-3;
    bool converged = false;
    int iter = 0;

    Eigen::Matrix4d hessian = Eigen::Matrix4d::Zero();
    Eigen::Vector4d gradient = Eigen::Vector4d::Zero();
    bool need_linearization = true;

    for (; iter < max_iterations && !converged; ++iter) {
        if (need_linearization) {
            hessian.setZero();
            gradient.setZero();
            std::array<double, 4> g;
            for (std::size_t i = 0; i < n; ++i) {
                const double y = eval_model(p, trace.freqs[i], g);
                const double w2 = inv_sigma[i] * inv_sigma[i];
                const double resid = trace.values[i] - y;
                for (int a = 0; a < 4; ++a) {
                    gradient[a] += w2 * g[a] * resid;
                    for (int b = a; b < 4; ++b) hessian(a, b) += w2 * g[a] * g[b];
                }
            }
            for (int a = 1; a < 4; ++a)
                for (int b = 0; b < a; ++b) hessian(a, b) = hessian(b, a);
            need_linearization = false;
        }

        // Column scaling keeps the solve well conditioned across the very
        // different parameter magnitudes (floor ~1, center ~1e7).
        Eigen::Vector4d scale;
        for (int a = 0; a < 4; ++a) scale[a] = hessian(a, a) > 0.0 ? std::sqrt(hessian(a, a)) : 1.0;
        Eigen::Matrix4d hs;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) hs(a, b) = hessian(a, b) / (scale[a] * scale[b]);
        const Eigen::Matrix4d damped = hs + lambda * Eigen::Matrix4d::Identity();
        const Eigen::Vector4d gs = gradient.cwiseQuotient(scale);
        const Eigen::Vector4d step_scaled = damped.ldlt().solve(gs);
        const Eigen::Vector4d step = step_scaled.cwiseQuotient(scale);

        std::array<double, 4> trial{p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]};
        double trial_chi2 = std::numeric_limits<double>::infinity();
        if (trial[3] > 0.0 && step.allFinite())
            trial_chi2 = chi2_of(trial, trace.freqs, trace.values, inv_sigma);

        if (trial_chi2 <= chi2) {
            double rel_change = 0.0;
            for (int a = 0; a < 4; ++a) {
                const double denom =
                    std::max(std::abs(trial[a]), std::numeric_limits<double>::min());
                rel_change = std::max(rel_change, std::abs(step[a]) / denom);
            }
            p = trial;
            chi2 = trial_chi2;
            lambda = std::max(lambda * 0.25, 1e-14);
            need_linearization = true;
            if (rel_change < 1e-8) converged = true;
        } else {
            lambda *= 8.0;
            if (lambda > 1e15) {
                // Damping has shrunk the step to nothing: numerical minimum.
                converged = true;
            }
        }
    }

    return LmOutcome{p, chi2, iter, converged};
}

// Gamma-statistics weights sigma_i = value_i / sqrt(n_avg). Bins at exactly
// zero would get infinite weight; they fall back to the guard level.
inline std::vector<double> weights_from(const std::vector<double>& values, int n_avg,
                                        double zero_guard) {
    const double sqrt_navg = std::sqrt(static_cast<double>(n_avg));
    std::vector<double> inv_sigma(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i] > 0.0 ? values[i] : zero_guard;
        inv_sigma[i] = sqrt_navg / v;
    }
    return inv_sigma;
}

}  // namespace detail

// Weighted least squares by damped (Levenberg-Marquardt) iteration with the
// analytic Jacobian. Weights follow the Gamma bin statistics,
// sigma_i = value_i / sqrt(n_avg). The scheme assumes the relative bin noise
// 1/sqrt(n_avg) is small; for n_avg below ~100 the averaged-periodogram
// distribution is strongly skewed and a least-squares point estimate
// degrades no matter the weighting. Convergence: relative parameter change
// below 1e-8 on an accepted step, capped at max_iterations (200). A
// negative-area (dip) trace is fitted like any other; a non-converged
// result is returned with converged = false and the last iterate.
inline FitResult fit_lorentzian(const spectra::PsdTrace& trace,
                                std::optional<spectra::SpectrumModel> init = std::nullopt,
                                int max_iterations = 200) {
    trace.validate();
    if (trace.freqs.size() < 50)
        throw std::invalid_argument("fit_lorentzian: need at least 50 bins");

    const std::size_t n = trace.freqs.size();
    const double med = detail::median(trace.values);

    const spectra::SpectrumModel start = init ? *init : detail::self_initialize(trace);
    std::array<double, 4> p0{start.floor, start.area, start.center, start.width};
    if (!(p0[3] > 0.0)) throw std::invalid_argument("fit_lorentzian: init width must be > 0");

    const std::vector<double> inv_sigma =
        detail::weights_from(trace.values, trace.n_avg, med > 0.0 ? med : 1.0);
    const detail::LmOutcome out = detail::run_damped_lsq(trace, inv_sigma, p0, max_iterations);

    FitResult result;
    result.model = spectra::SpectrumModel{out.p[0], out.p[1], out.p[2], out.p[3]};
    result.converged = out.converged;
    result.iterations = out.iterations;
    result.chi2_reduced = out.chi2 / static_cast<double>(n - 4);

    // Covariance from the undamped normal matrix at the final iterate, with
    // the final weights.
    Eigen::Matrix4d hessian = Eigen::Matrix4d::Zero();
    std::array<double, 4> g;
    for (std::size_t i = 0; i < n; ++i) {
        detail::eval_model(out.p, trace.freqs[i], g);
        const double w2 = inv_sigma[i] * inv_sigma[i];
        for (int a = 0; a < 4; ++a)
            for (int b = a; b < 4; ++b) hessian(a, b) += w2 * g[a] * g[b];
    }
    for (int a = 1; a < 4; ++a)
        for (int b = 0; b < a; ++b) hessian(a, b) = hessian(b, a);
    Eigen::Vector4d scale;
    for (int a = 0; a < 4; ++a) scale[a] = hessian(a, a) > 0.0 ? std::sqrt(hessian(a, a)) : 1.0;
    Eigen::Matrix4d hs;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) hs(a, b) = hessian(a, b) / (scale[a] * scale[b]);
    const Eigen::Matrix4d hs_inv = detail::pinv_spd(hs);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) result.covariance(a, b) = hs_inv(a, b) / (scale[a] * scale[b]);
    for (int a = 0; a < 4; ++a)
        result.std_errors[a] = std::sqrt(std::max(result.covariance(a, a), 0.0));
    return result;
}

// Equipartition calibration: regress integrated sideband power against
// n_m^T(T) * Gamma_opt through the origin. Points below the 150 mK validity
// cut are excluded (non-thermal force noise dominates there).
inline constexpr double calibration_t_min = 0.150;  // K

inline CalibrationFit calibrate_conversion(
    const std::vector<std::pair<double, double>>& points,  // (temperature K, integrated power)
    const phys::MechanicalMode& mode, double gamma_opt) {
    mode.validate();
    if (!(gamma_opt > 0.0))
        throw std::invalid_argument("calibrate_conversion: gamma_opt must be > 0");

    std::vector<std::pair<double, double>> used;  // (abscissa, power)
    double t_lo = std::numeric_limits<double>::infinity();
    double t_hi = -std::numeric_limits<double>::infinity();
    for (const auto& [t, power] : points) {
        if (t < calibration_t_min) continue;
        used.emplace_back(phys::bose_occupancy(mode.omega_m, t) * gamma_opt, power);
        t_lo = std::min(t_lo, t);
        t_hi = std::max(t_hi, t);
    }
    if (used.size() < 3)
        throw insufficient_data("calibrate_conversion: need >= 3 points with T >= 150 mK");

    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : used) {
        sxx += x * x;
        sxy += x * y;
    }
    if (!(sxx > 0.0)) throw insufficient_data("calibrate_conversion: degenerate abscissa");
    const double cal = sxy / sxx;
    // Heteroscedasticity-robust standard error: valid whether the scatter is
    // absolute or proportional to the sideband power.
    double sandwich = 0.0;
    for (const auto& [x, y] : used) {
        const double r = y - cal * x;
        sandwich += x * x * r * r;
    }
    const double n_used = static_cast<double>(used.size());
    CalibrationFit fit;
    fit.cal = cal;
    fit.cal_err = std::sqrt(sandwich * n_used / (n_used - 1.0)) / sxx;
    fit.fit_range = {t_lo, t_hi};
    fit.points_used = static_cast<int>(used.size());
    if (!(fit.cal > 0.0))
        throw insufficient_data("calibrate_conversion: non-positive calibration constant");
    return fit;
}

// Occupancy with the squashing correction: n_eff from the fitted area,
// n_m = n_eff + 2 n_sr, errors combined in quadrature
// (n_m_err = sqrt(sigma_eff^2 + 4 sigma_sr^2)). n_sr and its uncertainty are
// measured inputs, not inferred from the trace.
inline OccupancyResult occupancy_from_fit(const FitResult& fit, const CalibrationFit& cal,
                                          double gamma_opt, double n_sr, double n_sr_err) {
    if (!fit.converged) throw std::invalid_argument("occupancy_from_fit: fit did not converge");
    if (!(cal.cal > 0.0)) throw std::invalid_argument("occupancy_from_fit: invalid calibration");
    if (!(gamma_opt > 0.0)) throw std::invalid_argument("occupancy_from_fit: gamma_opt must be > 0");
    if (n_sr < 0.0 || n_sr_err < 0.0)
        throw std::invalid_argument("occupancy_from_fit: n_sr and its error must be >= 0");

    OccupancyResult out;
    out.n_eff = fit.model.area / (cal.cal * gamma_opt);
    out.n_sr = n_sr;
    const double sigma_from_area = fit.std_errors[1] / (cal.cal * gamma_opt);
    const double sigma_from_cal = out.n_eff * cal.cal_err / cal.cal;
    const double sigma_eff = std::hypot(sigma_from_area, sigma_from_cal);
    out.n_m = out.n_eff + 2.0 * n_sr;
    out.n_m_err = std::hypot(sigma_eff, 2.0 * n_sr_err);
    if (out.n_m < -out.n_m_err)
        throw inconsistent_occupancy("occupancy_from_fit: n_m < 0 beyond 1 sigma, check n_sr input");
    out.consistent = out.n_m >= 0.0;
    out.p0 = out.n_m > -1.0 ? 1.0 / (out.n_m + 1.0) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

}  // namespace sidecool::inference
