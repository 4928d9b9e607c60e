#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sidecool/config.hpp"
#include "sidecool/io.hpp"

// Command dispatch behind the executable. Commands are pure functions of
// (config, inputs): identical config + seed gives byte-identical output
// files. All JSON outputs embed the digest of the fully resolved config.

namespace sidecool::cli {

// Exit codes: 0 success, 1 runtime failure (e.g. fit non-convergence),
// 2 missing file, 3 malformed JSON, 4 constraint violation / unknown key.
enum ExitCode : int {
    exit_ok = 0,
    exit_runtime = 1,
    exit_missing_file = 2,
    exit_parse_error = 3,
    exit_constraint = 4,
};

struct CommandResult {
    int code = exit_ok;
    std::vector<std::filesystem::path> outputs;
    std::string message;
};

namespace detail {

inline std::string config_digest(const cfg::RunConfig& config) {
    return io::fnv1a64(cfg::to_json(config).dump());
}

inline void write_json(const std::filesystem::path& path, nlohmann::json j,
                       const std::string& digest) {
    j["config_digest"] = digest;
    io::write_text_file(path, j.dump(2) + "\n");
}

// Steady-state pipeline shared by the steady command: bath heating at the
// configured pump point sets the effective thermal occupancy.
struct SteadyState {
    double n_dot_t = 0.0;
    double n_m = 0.0;
    double n_m_err = 0.0;
    double n_eff = 0.0;
};

inline SteadyState steady_state(const cfg::RunConfig& config, const cfg::Resolved& res) {
    SteadyState s;
    s.n_dot_t = design::heating_rate_vs_pump(config.environment.heating, res.n_p);
    const double n_m_thermal_eff = s.n_dot_t / res.gamma_m_t;
    s.n_m = phys::steady_state_occupancy(res.gamma_m_t, n_m_thermal_eff, res.gamma_opt, res.n_sr);
    const double total = res.gamma_m_t + res.gamma_opt;
    s.n_m_err = res.gamma_opt / total * res.n_sr_err;
    s.n_eff = s.n_m - 2.0 * res.n_sr;
    return s;
}

// Forward spectrum model at the configured operating point.
inline spectra::SpectrumModel forward_model(const cfg::RunConfig& config,
                                            const cfg::Resolved& res) {
    const SteadyState s = steady_state(config, res);
    spectra::SpectrumModel model;
    model.floor = config.spectrum.floor;
    model.center =
        res.mechanics.omega_m + phys::frequency_pull(res.coupling.lambda, res.n_p, res.mechanics);
    model.width = res.gamma_m_t + res.gamma_opt;
    model.area = spectra::signed_area_from_occupancy(s.n_eff, res.gamma_opt, config.spectrum.cal);
    return model;
}

}  // namespace detail

inline CommandResult run_steady(const cfg::RunConfig& config,
                                const std::filesystem::path& out_dir) {
    const cfg::Resolved res = cfg::resolve(config);
    const detail::SteadyState s = detail::steady_state(config, res);
    nlohmann::json j;
    j["n_eff"] = s.n_eff;
    j["n_sr"] = res.n_sr;
    j["n_m"] = s.n_m;
    j["n_m_err"] = s.n_m_err;
    j["p0"] = phys::ground_state_probability(s.n_m);
    j["consistent"] = true;
    j["derived"] = {
        {"n_p", res.n_p},
        {"pump_detuning_hz", hz_from_angular(res.pump.detuning)},
        {"x_zp_m", res.x_zp},
        {"gamma_opt_hz", hz_from_angular(res.gamma_opt)},
        {"gamma_m_t_hz", hz_from_angular(res.gamma_m_t)},
        {"n_m_thermal", res.n_m_thermal},
        {"n_dot_t", s.n_dot_t},
        {"q_dot_w", phys::cooling_power(res.mechanics.omega_m, res.gamma_opt)},
        {"rethermalization_s", phys::rethermalization_time(s.n_dot_t)},
        {"damping_law_in_range", phys::gamma_m_law_in_range(res.temperature)},
    };
    const auto path = out_dir / "steady.json";
    detail::write_json(path, j, detail::config_digest(config));
    return {exit_ok, {path}, ""};
}

inline CommandResult run_spectrum(const cfg::RunConfig& config,
                                  const std::filesystem::path& out_dir) {
    const cfg::Resolved res = cfg::resolve(config);
    const spectra::SpectrumModel model = detail::forward_model(config, res);
    const auto grid = spectra::uniform_grid(model.center, model.width,
                                            config.spectrum.span_widths, config.spectrum.n_bins);
    spectra::PsdTrace trace = spectra::synthesize_psd(model, grid);
    trace = spectra::add_measurement_noise(trace, config.spectrum.n_avg, config.spectrum.seed);
    const auto path = out_dir / "spectrum.csv";
    io::write_text_file(path, io::to_csv(trace));
    return {exit_ok, {path}, ""};
}

// Writes fit.json. A non-converged fit still produces the diagnostic JSON
// with the last iterate, but the command fails.
inline CommandResult emit_fit_result(const inference::FitResult& fit,
                                     const cfg::RunConfig& config, const cfg::Resolved& res,
                                     const std::filesystem::path& out_dir) {
    nlohmann::json j;
    j["fit"] = io::to_json(fit);
    const auto path = out_dir / "fit.json";
    if (!fit.converged) {
        j["error"] = "fit did not converge within the iteration cap";
        detail::write_json(path, j, detail::config_digest(config));
        return {exit_runtime, {path}, "fit: no convergence; last iterate written to fit.json"};
    }
    if (res.gamma_opt > 0.0) {
        inference::CalibrationFit cal;
        cal.cal = config.spectrum.cal;
        cal.cal_err = 0.0;
        cal.points_used = 0;
        j["occupancy"] = io::to_json(
            inference::occupancy_from_fit(fit, cal, res.gamma_opt, res.n_sr, res.n_sr_err));
    }
    detail::write_json(path, j, detail::config_digest(config));
    return {exit_ok, {path}, ""};
}

inline CommandResult run_fit(const cfg::RunConfig& config, const std::filesystem::path& out_dir,
                             const std::filesystem::path& input) {
    const cfg::Resolved res = cfg::resolve(config);
    const spectra::PsdTrace trace = io::psd_from_csv(io::read_text_file(input));
    return emit_fit_result(inference::fit_lorentzian(trace), config, res, out_dir);
}

inline CommandResult run_calibrate(const cfg::RunConfig& config,
                                   const std::filesystem::path& out_dir,
                                   const std::filesystem::path& input) {
    const cfg::Resolved res = cfg::resolve(config);
    const auto points = io::calibration_points_from_csv(io::read_text_file(input));
    const inference::CalibrationFit fit =
        inference::calibrate_conversion(points, res.mechanics, res.gamma_opt);
    const auto path = out_dir / "calibrate.json";
    detail::write_json(path, io::to_json(fit), detail::config_digest(config));
    return {exit_ok, {path}, ""};
}

inline CommandResult run_sweep(const cfg::RunConfig& config,
                               const std::filesystem::path& out_dir) {
    const cfg::Resolved res = cfg::resolve(config);
    const design::CoolingSystem system{res.mechanics, res.cavity, res.coupling.g,
                                       res.temperature};
    const design::NsrTable table(config.sweep.n_sr_table);
    const auto grid =
        design::log_spaced_grid(config.sweep.n_p_min, config.sweep.n_p_max, config.sweep.points);
    const design::SweepResult sweep =
        design::sweep_occupancy_vs_pump(system, config.environment.heating, table, grid);
    const auto path = out_dir / "sweep.csv";
    io::write_text_file(path, io::to_csv(sweep));
    return {exit_ok, {path}, ""};
}

inline CommandResult run_dynamics(const cfg::RunConfig& config,
                                  const std::filesystem::path& out_dir) {
    const auto& dc = config.dynamics;
    std::vector<double> t_grid(dc.points);
    for (int i = 0; i < dc.points; ++i)
        t_grid[i] = dc.t_max_s * i / (dc.points - 1);
    const auto timeline = dynamics::evolve_occupancy(dc.n0, dc.gamma_m_t_per_s, dc.n_m_thermal,
                                                     dc.gamma_opt_per_s, dc.n_sr, t_grid);
    const auto path = out_dir / "dynamics.csv";
    io::write_text_file(path, io::to_csv(timeline));
    return {exit_ok, {path}, ""};
}

inline CommandResult run_budget(const cfg::RunConfig& config,
                                const std::filesystem::path& out_dir) {
    const cfg::Resolved res = cfg::resolve(config);
    const auto grid =
        design::log_spaced_grid(config.sweep.n_p_min, config.sweep.n_p_max, config.sweep.points);
    std::string csv = "n_p,gamma_opt_hz,n_dot_t,tau_s,n_pn\n";
    for (double n_p : grid) {
        const double gamma_opt =
            phys::optical_damping_rate(res.x_zp, res.coupling.g, n_p, res.cavity.gamma_sr);
        const double n_dot_t = design::heating_rate_vs_pump(config.environment.heating, n_p);
        const double n_pn = design::phase_noise_occupancy(
            config.environment.phase_noise_l_dbc_per_hz, n_p, res.cavity.gamma_sr,
            config.environment.phase_noise_model_constant);
        csv += io::fmt17(n_p);
        csv += ',';
        csv += io::fmt17(hz_from_angular(gamma_opt));
        csv += ',';
        csv += io::fmt17(n_dot_t);
        csv += ',';
        csv += io::fmt17(phys::rethermalization_time(n_dot_t));
        csv += ',';
        csv += io::fmt17(n_pn);
        csv += '\n';
    }
    const auto path = out_dir / "budget.csv";
    io::write_text_file(path, csv);
    return {exit_ok, {path}, ""};
}

// Apply a `--set key=value` override onto the raw JSON tree; the value is
// parsed as JSON, falling back to a plain string. Unknown keys surface later
// through the strict config validation.
inline void apply_override(nlohmann::json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw cfg::config_constraint_error("--set: expected key=value, got '" + assignment + "'");
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(value);
    } catch (const nlohmann::json::parse_error&) {
        parsed = value;
    }
    nlohmann::json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty())
            throw cfg::config_constraint_error("--set: bad key path '" + key + "'");
        if (dot == std::string::npos) {
            (*node)[part] = parsed;
            break;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

inline CommandResult run_command(const std::string& name, const std::filesystem::path& config_path,
                                 const std::vector<std::string>& overrides,
                                 const std::filesystem::path& out_dir_override = {},
                                 const std::filesystem::path& input = {}) {
    cfg::RunConfig config;
    try {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) return {exit_missing_file, {}, "config: cannot open " + config_path.string()};
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        nlohmann::json root;
        try {
            root = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error& e) {
            return {exit_parse_error, {}, std::string("config: malformed JSON: ") + e.what()};
        }
        if (!root.is_object())
            return {exit_constraint, {}, "config: top level must be a JSON object"};
        for (const auto& assignment : overrides) apply_override(root, assignment);
        config = cfg::config_from_json(root);
    } catch (const cfg::config_constraint_error& e) {
        return {exit_constraint, {}, e.what()};
    }

    const std::filesystem::path out_dir =
        out_dir_override.empty() ? std::filesystem::path(config.out_dir) : out_dir_override;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);

    try {
        if (name == "steady") return run_steady(config, out_dir);
        if (name == "spectrum") return run_spectrum(config, out_dir);
        if (name == "fit") {
            if (input.empty()) return {exit_missing_file, {}, "fit: --in <psd.csv> is required"};
            return run_fit(config, out_dir, input);
        }
        if (name == "calibrate") {
            if (input.empty())
                return {exit_missing_file, {}, "calibrate: --in <points.csv> is required"};
            return run_calibrate(config, out_dir, input);
        }
        if (name == "sweep") return run_sweep(config, out_dir);
        if (name == "dynamics") return run_dynamics(config, out_dir);
        if (name == "budget") return run_budget(config, out_dir);
    } catch (const cfg::config_constraint_error& e) {
        return {exit_constraint, {}, e.what()};
    } catch (const io::io_error& e) {
        return {exit_missing_file, {}, e.what()};
    } catch (const std::exception& e) {
        return {exit_runtime, {}, e.what()};
    }
    return {exit_constraint, {}, "unknown command: " + name};
}

}  // namespace sidecool::cli
