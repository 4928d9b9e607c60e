#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "sidecool/constants.hpp"

// Forward synthesis of detected output noise spectra: a flat floor plus a
// signed Lorentzian whose area tracks the effective mode occupancy. Negative
// area is the squashed (inverted-peak) regime.

namespace sidecool::spectra {

// Four-parameter spectrum model. `area` is signed; `width` is the full
// linewidth Gamma_m. Units of floor/area are the calibrated power units of
// the detection chain, per unit angular frequency.
struct SpectrumModel {
    double floor = 0.0;   // baseline level
    double area = 0.0;    // integrated peak power, signed
    double center = 0.0;  // rad/s
    double width = 0.0;   // rad/s, full width

    void validate() const {
        if (!(floor > 0.0)) throw std::invalid_argument("SpectrumModel.floor: must be > 0");
        if (!(width > 0.0)) throw std::invalid_argument("SpectrumModel.width: must be > 0");
    }
};

// A synthetic averaged-periodogram measurement on a uniform frequency grid.
struct PsdTrace {
    std::vector<double> freqs;   // rad/s, uniform ascending
    std::vector<double> values;  // >= 0, calibrated power units
    int n_avg = 1;               // periodogram averaging count
    std::optional<std::uint64_t> seed;

    void validate() const {
        if (freqs.size() != values.size())
            throw std::invalid_argument("PsdTrace: freqs/values size mismatch");
        if (freqs.size() < 2) throw std::invalid_argument("PsdTrace: need at least 2 bins");
        if (n_avg < 1) throw std::invalid_argument("PsdTrace.n_avg: must be >= 1");
        const double step = freqs[1] - freqs[0];
        if (!(step > 0.0)) throw std::invalid_argument("PsdTrace.freqs: must be strictly increasing");
        for (std::size_t i = 1; i < freqs.size(); ++i) {
            const double d = freqs[i] - freqs[i - 1];
            if (std::abs(d - step) > 1e-9 * std::abs(step))
                throw std::invalid_argument("PsdTrace.freqs: grid must be uniform");
        }
        for (double v : values)
            if (!(v >= 0.0)) throw std::invalid_argument("PsdTrace.values: must be >= 0");
    }
};

// Unit-area Lorentzian (width/2pi) / ((w-c)^2 + (width/2)^2); peak value
// 2/(pi*width) at the center.
inline double lorentzian_density(double omega, double center, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("lorentzian_density: width must be > 0");
    const double dx = omega - center;
    const double hw = 0.5 * width;
    return (width / constants::two_pi) / (dx * dx + hw * hw);
}

// Uniform grid of `bins` points covering center +- span_widths * width.
// The defaults match the sideband window used for fitting.
inline std::vector<double> uniform_grid(double center, double width,
                                        double span_widths = 20.0, int bins = 2001) {
    if (!(width > 0.0) || !(span_widths > 0.0) || bins < 2)
        throw std::invalid_argument("uniform_grid: bad grid parameters");
    std::vector<double> grid(bins);
    const double lo = center - span_widths * width;
    const double hi = center + span_widths * width;
    const double step = (hi - lo) / (bins - 1);
    for (int i = 0; i < bins; ++i) grid[i] = lo + step * i;
    return grid;
}

// Noiseless spectrum floor + area * L(w). Rejects models whose dip would
// undershoot zero anywhere (output power cannot be negative). For reliable
// downstream fitting the grid should span at least ~10 widths around the
// center; uniform_grid's default is 40.
inline PsdTrace synthesize_psd(const SpectrumModel& model, const std::vector<double>& grid) {
    model.validate();
    const double peak = 2.0 / (std::numbers::pi * model.width);
    if (model.floor + model.area * peak < 0.0)
        throw std::domain_error("synthesize_psd: unphysical model, dip undershoots zero");
    PsdTrace trace;
    trace.freqs = grid;
    trace.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v =
            model.floor + model.area * lorentzian_density(grid[i], model.center, model.width);
        // A dip that exactly touches zero can round to -1 ulp.
        trace.values[i] = std::max(v, 0.0);
    }
    trace.n_avg = 1;
    trace.validate();
    return trace;
}

// Sideband power area = cal * n_eff * Gamma_opt. One up-converted photon per
// extracted quantum, so the area is proportional to occupancy times rate;
// `cal` is the single opaque gain/attenuation constant of the chain.
inline double signed_area_from_occupancy(double n_eff, double gamma_opt, double cal) {
    if (!(cal > 0.0)) throw std::invalid_argument("signed_area_from_occupancy: cal must be > 0");
    if (gamma_opt < 0.0) throw std::invalid_argument("signed_area_from_occupancy: gamma_opt must be >= 0");
    return cal * n_eff * gamma_opt;
}

// Inverse of signed_area_from_occupancy.
inline double occupancy_from_area(double area, double gamma_opt, double cal) {
    if (!(cal > 0.0) || !(gamma_opt > 0.0))
        throw std::invalid_argument("occupancy_from_area: cal and gamma_opt must be > 0");
    return area / (cal * gamma_opt);
}

// Averaged-periodogram statistics: each bin is an independent Gamma draw
// with shape n_avg and mean equal to the noiseless value, so the relative
// spread is 1/sqrt(n_avg) and low-n_avg traces stay non-negative.
// Deterministic for a fixed seed.
inline PsdTrace add_measurement_noise(const PsdTrace& trace, int n_avg, std::uint64_t seed) {
    trace.validate();
    if (n_avg < 1) throw std::invalid_argument("add_measurement_noise: n_avg must be >= 1");
    PsdTrace noisy;
    noisy.freqs = trace.freqs;
    noisy.values.resize(trace.values.size());
    noisy.n_avg = n_avg;
    noisy.seed = seed;
    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> gamma(static_cast<double>(n_avg), 1.0);
    for (std::size_t i = 0; i < trace.values.size(); ++i) {
        const double mean = trace.values[i];
        noisy.values[i] = mean > 0.0 ? gamma(rng) * mean / n_avg : 0.0;
    }
    return noisy;
}

}  // namespace sidecool::spectra
