#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sidecool/design.hpp"
#include "sidecool/physics.hpp"

// Run configuration: a single JSON file, strict (unknown keys rejected),
// frequencies in plain Hz, bare rates with a _per_s suffix. Every section is
// optional and falls back to the reference-device defaults; the shipped
// configs/default.json spells those defaults out so archived runs stay
// self-describing.

namespace sidecool::cfg {

struct config_missing_file : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct config_parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct config_constraint_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MechanicsConfig {
    double omega_m_hz = 6.3e6;
    double q_ref = 1.0e6;
    double t_ref_k = 0.1;
    std::optional<double> mass_kg;  // direct mass, exclusive with geometry
    struct Geometry {
        double length_m = 30e-6;
        double width_m = 170e-9;
        std::vector<double> layer_thicknesses_m{60e-9, 80e-9};
        std::vector<double> layer_densities_kg_m3{3100.0, 2700.0};  // SiN, Al
    };
    std::optional<Geometry> geometry = Geometry{};
    double effective_mass_factor = 1.0;
};

struct CavityConfig {
    double omega_sr_hz = 7.5e9;
    double gamma_sr_hz = 6.0e5;
    std::optional<double> n_sr_thermal;  // default: Bose occupancy at temperature_k
};

struct CouplingConfig {
    double g_hz_per_m = 8.4e13;           // 84 kHz/nm
    double lambda_hz_per_m2 = 2.1e21;     // 2.1 kHz/nm^2
    double c_g_f = 450e-18;
    double c_t_f = 260e-15;
    double gap_m = 75e-9;
};

struct EnvironmentConfig {
    double temperature_k = 0.146;
    design::HeatingModel heating{3.0e4, 3.0e7, 1.2218487496163564};
    double force_noise_n_per_sqrt_hz = 1.0e-18;
    double phase_noise_l_dbc_per_hz = -195.0;
    double phase_noise_model_constant = 4473.6;  // anchored: 0.04 photons at -195 dBc/Hz, n_p = 3e8
};

struct PumpChainConfig {
    double power_w = 0.0;
    double kappa_ext_hz = 0.0;
    double kappa_total_hz = 0.0;
    std::optional<double> detuning_hz;  // default: -omega_m_hz (red sideband)
};

struct PumpSectionConfig {
    std::optional<double> n_p = 3.0e7;
    std::optional<PumpChainConfig> chain;
    std::optional<double> n_sr;  // default: effective cavity occupancy
    double n_sr_err = 0.58;
};

struct SpectrumConfig {
    int n_bins = 2001;
    double span_widths = 20.0;  // grid covers center +- span_widths * width
    int n_avg = 10000;
    std::uint64_t seed = 0;
    double floor = 1.0;
    double cal = 0.5;  // power per quantum per (1/s)
};

struct SweepConfig {
    double n_p_min = 1.0e6;
    double n_p_max = 3.0e8;
    int points = 200;
    std::vector<std::pair<double, double>> n_sr_table{{1.0e6, 0.3}, {3.0e8, 2.0}};
};

// Anchored cooling/rethermalization scenario; rates are bare 1/s values.
struct DynamicsConfig {
    double n0 = 500.0;
    double gamma_m_t_per_s = 40.0;
    double n_m_thermal = 480.0;
    double gamma_opt_per_s = 2.4e4;
    double n_sr = 2.0;
    double t_max_s = 1.0e-3;
    int points = 501;
};

struct RunConfig {
    MechanicsConfig mechanics;
    CavityConfig cavity;
    CouplingConfig coupling;
    EnvironmentConfig environment;
    PumpSectionConfig pump;
    SpectrumConfig spectrum;
    SweepConfig sweep;
    DynamicsConfig dynamics;
    std::string out_dir = ".";
};

namespace detail {

inline void check_keys(const nlohmann::json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw config_constraint_error(path + ": must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) throw config_constraint_error(path + "." + it.key() + ": unknown key");
    }
}

inline double number_at(const nlohmann::json& obj, const std::string& path, const char* key,
                        double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw config_constraint_error(path + "." + key + ": must be a number");
    return v.get<double>();
}

inline int int_at(const nlohmann::json& obj, const std::string& path, const char* key,
                  int fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer())
        throw config_constraint_error(path + "." + key + ": must be an integer");
    return v.get<int>();
}

inline void require(bool ok, const std::string& path, const char* key, const char* constraint) {
    if (!ok) throw config_constraint_error(path + "." + key + ": " + constraint);
}

}  // namespace detail

inline RunConfig config_from_json_checked(const nlohmann::json& root) {
    using detail::check_keys;
    using detail::int_at;
    using detail::number_at;
    using detail::require;

    RunConfig cfg;
    check_keys(root, "config",
               {"device", "environment", "pump", "spectrum", "sweep", "dynamics", "paths"});

    if (root.contains("device")) {
        const auto& dev = root.at("device");
        check_keys(dev, "device", {"mechanics", "cavity", "coupling"});

        if (dev.contains("mechanics")) {
            const auto& m = dev.at("mechanics");
            const std::string p = "device.mechanics";
            check_keys(m, p, {"omega_m_hz", "q_ref", "t_ref_k", "mass_kg", "geometry",
                              "effective_mass_factor"});
            auto& mc = cfg.mechanics;
            mc.omega_m_hz = number_at(m, p, "omega_m_hz", mc.omega_m_hz);
            mc.q_ref = number_at(m, p, "q_ref", mc.q_ref);
            mc.t_ref_k = number_at(m, p, "t_ref_k", mc.t_ref_k);
            mc.effective_mass_factor =
                number_at(m, p, "effective_mass_factor", mc.effective_mass_factor);
            if (m.contains("mass_kg") && m.contains("geometry"))
                throw config_constraint_error(p + ".mass_kg: exclusive with geometry");
            if (m.contains("mass_kg")) {
                mc.mass_kg = number_at(m, p, "mass_kg", 0.0);
                mc.geometry.reset();
                require(*mc.mass_kg > 0.0, p, "mass_kg", "must be > 0");
            } else if (m.contains("geometry")) {
                const auto& g = m.at("geometry");
                const std::string gp = p + ".geometry";
                check_keys(g, gp,
                           {"length_m", "width_m", "layer_thicknesses_m", "layer_densities_kg_m3"});
                MechanicsConfig::Geometry geo;
                geo.length_m = number_at(g, gp, "length_m", geo.length_m);
                geo.width_m = number_at(g, gp, "width_m", geo.width_m);
                if (g.contains("layer_thicknesses_m"))
                    geo.layer_thicknesses_m = g.at("layer_thicknesses_m").get<std::vector<double>>();
                if (g.contains("layer_densities_kg_m3"))
                    geo.layer_densities_kg_m3 = g.at("layer_densities_kg_m3").get<std::vector<double>>();
                require(geo.layer_thicknesses_m.size() == geo.layer_densities_kg_m3.size(), gp.c_str(),
                        "layer_thicknesses_m", "must match layer_densities_kg_m3 in length");
                mc.geometry = geo;
                mc.mass_kg.reset();
            }
            require(mc.omega_m_hz > 0.0, p, "omega_m_hz", "must be > 0");
            require(mc.q_ref > 0.0, p, "q_ref", "must be > 0");
            require(mc.t_ref_k > 0.0, p, "t_ref_k", "must be > 0");
            require(mc.effective_mass_factor > 0.0, p, "effective_mass_factor", "must be > 0");
        }

        if (dev.contains("cavity")) {
            const auto& c = dev.at("cavity");
            const std::string p = "device.cavity";
            check_keys(c, p, {"omega_sr_hz", "gamma_sr_hz", "n_sr_thermal"});
            auto& cc = cfg.cavity;
            cc.omega_sr_hz = number_at(c, p, "omega_sr_hz", cc.omega_sr_hz);
            cc.gamma_sr_hz = number_at(c, p, "gamma_sr_hz", cc.gamma_sr_hz);
            if (c.contains("n_sr_thermal")) {
                cc.n_sr_thermal = number_at(c, p, "n_sr_thermal", 0.0);
                require(*cc.n_sr_thermal >= 0.0, p, "n_sr_thermal", "must be >= 0");
            }
            require(cc.gamma_sr_hz > 0.0, p, "gamma_sr_hz", "must be > 0");
            require(cc.omega_sr_hz > cc.gamma_sr_hz, p, "omega_sr_hz", "must exceed gamma_sr_hz");
        }

        if (dev.contains("coupling")) {
            const auto& c = dev.at("coupling");
            const std::string p = "device.coupling";
            check_keys(c, p, {"g_hz_per_m", "lambda_hz_per_m2", "c_g_f", "c_t_f", "gap_m"});
            auto& cp = cfg.coupling;
            cp.g_hz_per_m = number_at(c, p, "g_hz_per_m", cp.g_hz_per_m);
            cp.lambda_hz_per_m2 = number_at(c, p, "lambda_hz_per_m2", cp.lambda_hz_per_m2);
            cp.c_g_f = number_at(c, p, "c_g_f", cp.c_g_f);
            cp.c_t_f = number_at(c, p, "c_t_f", cp.c_t_f);
            cp.gap_m = number_at(c, p, "gap_m", cp.gap_m);
            require(cp.g_hz_per_m >= 0.0, p, "g_hz_per_m", "must be >= 0");
            require(cp.c_g_f > 0.0, p, "c_g_f", "must be > 0");
            require(cp.c_t_f > cp.c_g_f, p, "c_t_f", "must exceed c_g_f");
            require(cp.gap_m > 0.0, p, "gap_m", "must be > 0");
        }
    }

    if (root.contains("environment")) {
        const auto& env = root.at("environment");
        const std::string p = "environment";
        check_keys(env, p,
                   {"temperature_k", "heating", "force_noise_n_per_sqrt_hz", "phase_noise"});
        auto& ec = cfg.environment;
        ec.temperature_k = number_at(env, p, "temperature_k", ec.temperature_k);
        ec.force_noise_n_per_sqrt_hz =
            number_at(env, p, "force_noise_n_per_sqrt_hz", ec.force_noise_n_per_sqrt_hz);
        require(ec.temperature_k > 0.0, p, "temperature_k", "must be > 0");
        require(ec.force_noise_n_per_sqrt_hz >= 0.0, p, "force_noise_n_per_sqrt_hz",
                "must be >= 0");
        if (env.contains("heating")) {
            const auto& h = env.at("heating");
            const std::string hp = p + ".heating";
            check_keys(h, hp, {"n_dot_0", "n_p_knee", "exponent"});
            ec.heating.n_dot_0 = number_at(h, hp, "n_dot_0", ec.heating.n_dot_0);
            ec.heating.n_p_knee = number_at(h, hp, "n_p_knee", ec.heating.n_p_knee);
            ec.heating.exponent = number_at(h, hp, "exponent", ec.heating.exponent);
            require(ec.heating.n_dot_0 >= 0.0, hp, "n_dot_0", "must be >= 0");
            require(ec.heating.n_p_knee > 0.0, hp, "n_p_knee", "must be > 0");
            require(ec.heating.exponent >= 0.0, hp, "exponent", "must be >= 0");
        }
        if (env.contains("phase_noise")) {
            const auto& ph = env.at("phase_noise");
            const std::string pp = p + ".phase_noise";
            check_keys(ph, pp, {"l_dbc_per_hz", "model_constant"});
            ec.phase_noise_l_dbc_per_hz =
                number_at(ph, pp, "l_dbc_per_hz", ec.phase_noise_l_dbc_per_hz);
            ec.phase_noise_model_constant =
                number_at(ph, pp, "model_constant", ec.phase_noise_model_constant);
            require(ec.phase_noise_model_constant >= 0.0, pp, "model_constant", "must be >= 0");
        }
    }

    if (root.contains("pump")) {
        const auto& pu = root.at("pump");
        const std::string p = "pump";
        check_keys(pu, p,
                   {"n_p", "power_w", "kappa_ext_hz", "kappa_total_hz", "detuning_hz", "n_sr",
                    "n_sr_err"});
        auto& pc = cfg.pump;
        const bool has_chain =
            pu.contains("power_w") || pu.contains("kappa_ext_hz") || pu.contains("kappa_total_hz");
        if (pu.contains("n_p") && has_chain)
            throw config_constraint_error("pump.n_p: exclusive with the power-chain keys");
        if (has_chain) {
            require(pu.contains("power_w") && pu.contains("kappa_ext_hz") &&
                        pu.contains("kappa_total_hz"),
                    p, "power_w", "power chain needs power_w, kappa_ext_hz and kappa_total_hz");
            PumpChainConfig chain;
            chain.power_w = number_at(pu, p, "power_w", 0.0);
            chain.kappa_ext_hz = number_at(pu, p, "kappa_ext_hz", 0.0);
            chain.kappa_total_hz = number_at(pu, p, "kappa_total_hz", 0.0);
            if (pu.contains("detuning_hz")) chain.detuning_hz = number_at(pu, p, "detuning_hz", 0.0);
            require(chain.power_w >= 0.0, p, "power_w", "must be >= 0");
            require(chain.kappa_ext_hz > 0.0, p, "kappa_ext_hz", "must be > 0");
            require(chain.kappa_total_hz >= chain.kappa_ext_hz, p, "kappa_total_hz",
                    "must be >= kappa_ext_hz");
            pc.chain = chain;
            pc.n_p.reset();
        } else if (pu.contains("n_p")) {
            pc.n_p = number_at(pu, p, "n_p", 0.0);
            require(*pc.n_p >= 0.0, p, "n_p", "must be >= 0");
        }
        if (pu.contains("n_sr")) {
            pc.n_sr = number_at(pu, p, "n_sr", 0.0);
            require(*pc.n_sr >= 0.0, p, "n_sr", "must be >= 0");
        }
        pc.n_sr_err = number_at(pu, p, "n_sr_err", pc.n_sr_err);
        require(pc.n_sr_err >= 0.0, p, "n_sr_err", "must be >= 0");
    }

    if (root.contains("spectrum")) {
        const auto& sp = root.at("spectrum");
        const std::string p = "spectrum";
        check_keys(sp, p, {"n_bins", "span_widths", "n_avg", "seed", "floor", "cal"});
        auto& sc = cfg.spectrum;
        sc.n_bins = int_at(sp, p, "n_bins", sc.n_bins);
        sc.span_widths = number_at(sp, p, "span_widths", sc.span_widths);
        sc.n_avg = int_at(sp, p, "n_avg", sc.n_avg);
        if (sp.contains("seed")) {
            const auto& v = sp.at("seed");
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
                throw config_constraint_error("spectrum.seed: must be a non-negative integer");
            sc.seed = v.get<std::uint64_t>();
        }
        sc.floor = number_at(sp, p, "floor", sc.floor);
        sc.cal = number_at(sp, p, "cal", sc.cal);
        require(sc.n_bins >= 50, p, "n_bins", "must be >= 50");
        require(sc.span_widths >= 5.0, p, "span_widths", "must be >= 5");
        require(sc.n_avg >= 1, p, "n_avg", "must be >= 1");
        require(sc.floor > 0.0, p, "floor", "must be > 0");
        require(sc.cal > 0.0, p, "cal", "must be > 0");
    }

    if (root.contains("sweep")) {
        const auto& sw = root.at("sweep");
        const std::string p = "sweep";
        check_keys(sw, p, {"n_p_min", "n_p_max", "points", "n_sr_table", "n_sr_const"});
        auto& wc = cfg.sweep;
        wc.n_p_min = number_at(sw, p, "n_p_min", wc.n_p_min);
        wc.n_p_max = number_at(sw, p, "n_p_max", wc.n_p_max);
        wc.points = int_at(sw, p, "points", wc.points);
        if (sw.contains("n_sr_table") && sw.contains("n_sr_const"))
            throw config_constraint_error("sweep.n_sr_table: exclusive with n_sr_const");
        if (sw.contains("n_sr_table")) {
            wc.n_sr_table.clear();
            for (const auto& row : sw.at("n_sr_table")) {
                if (!row.is_array() || row.size() != 2)
                    throw config_constraint_error("sweep.n_sr_table: rows must be [n_p, n_sr] pairs");
                wc.n_sr_table.emplace_back(row[0].get<double>(), row[1].get<double>());
            }
        } else if (sw.contains("n_sr_const")) {
            wc.n_sr_table = {{0.0, number_at(sw, p, "n_sr_const", 0.0)}};
        }
        require(wc.n_p_min > 0.0, p, "n_p_min", "must be > 0");
        require(wc.n_p_max > wc.n_p_min, p, "n_p_max", "must exceed n_p_min");
        require(wc.points >= 2, p, "points", "must be >= 2");
        require(!wc.n_sr_table.empty(), p, "n_sr_table", "must not be empty");
    }

    if (root.contains("dynamics")) {
        const auto& dy = root.at("dynamics");
        const std::string p = "dynamics";
        check_keys(dy, p, {"n0", "gamma_m_t_per_s", "n_m_thermal", "gamma_opt_per_s", "n_sr",
                           "t_max_s", "points"});
        auto& dc = cfg.dynamics;
        dc.n0 = number_at(dy, p, "n0", dc.n0);
        dc.gamma_m_t_per_s = number_at(dy, p, "gamma_m_t_per_s", dc.gamma_m_t_per_s);
        dc.n_m_thermal = number_at(dy, p, "n_m_thermal", dc.n_m_thermal);
        dc.gamma_opt_per_s = number_at(dy, p, "gamma_opt_per_s", dc.gamma_opt_per_s);
        dc.n_sr = number_at(dy, p, "n_sr", dc.n_sr);
        dc.t_max_s = number_at(dy, p, "t_max_s", dc.t_max_s);
        dc.points = int_at(dy, p, "points", dc.points);
        require(dc.n0 >= 0.0, p, "n0", "must be >= 0");
        require(dc.gamma_m_t_per_s >= 0.0, p, "gamma_m_t_per_s", "must be >= 0");
        require(dc.n_m_thermal >= 0.0, p, "n_m_thermal", "must be >= 0");
        require(dc.gamma_opt_per_s >= 0.0, p, "gamma_opt_per_s", "must be >= 0");
        require(dc.gamma_m_t_per_s + dc.gamma_opt_per_s > 0.0, p, "gamma_m_t_per_s",
                "total relaxation rate must be > 0");
        require(dc.n_sr >= 0.0, p, "n_sr", "must be >= 0");
        require(dc.t_max_s > 0.0, p, "t_max_s", "must be > 0");
        require(dc.points >= 2, p, "points", "must be >= 2");
    }

    if (root.contains("paths")) {
        const auto& pa = root.at("paths");
        check_keys(pa, "paths", {"out_dir"});
        if (pa.contains("out_dir")) {
            if (!pa.at("out_dir").is_string())
                throw config_constraint_error("paths.out_dir: must be a string");
            cfg.out_dir = pa.at("out_dir").get<std::string>();
        }
    }

    return cfg;
}

// Wrong JSON types (a string where an array is expected, ...) surface as
// constraint errors, not as raw library exceptions.
inline RunConfig config_from_json(const nlohmann::json& root) {
    try {
        return config_from_json_checked(root);
    } catch (const nlohmann::json::exception& e) {
        throw config_constraint_error(std::string("config: ") + e.what());
    }
}

// Canonical JSON with every default filled in; the digest of this string is
// the provenance tag embedded in JSON outputs.
inline nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json j;
    auto& mech = j["device"]["mechanics"];
    mech["omega_m_hz"] = cfg.mechanics.omega_m_hz;
    mech["q_ref"] = cfg.mechanics.q_ref;
    mech["t_ref_k"] = cfg.mechanics.t_ref_k;
    mech["effective_mass_factor"] = cfg.mechanics.effective_mass_factor;
    if (cfg.mechanics.mass_kg) mech["mass_kg"] = *cfg.mechanics.mass_kg;
    if (cfg.mechanics.geometry) {
        auto& g = mech["geometry"];
        g["length_m"] = cfg.mechanics.geometry->length_m;
        g["width_m"] = cfg.mechanics.geometry->width_m;
        g["layer_thicknesses_m"] = cfg.mechanics.geometry->layer_thicknesses_m;
        g["layer_densities_kg_m3"] = cfg.mechanics.geometry->layer_densities_kg_m3;
    }
    auto& cav = j["device"]["cavity"];
    cav["omega_sr_hz"] = cfg.cavity.omega_sr_hz;
    cav["gamma_sr_hz"] = cfg.cavity.gamma_sr_hz;
    if (cfg.cavity.n_sr_thermal) cav["n_sr_thermal"] = *cfg.cavity.n_sr_thermal;
    auto& cpl = j["device"]["coupling"];
    cpl["g_hz_per_m"] = cfg.coupling.g_hz_per_m;
    cpl["lambda_hz_per_m2"] = cfg.coupling.lambda_hz_per_m2;
    cpl["c_g_f"] = cfg.coupling.c_g_f;
    cpl["c_t_f"] = cfg.coupling.c_t_f;
    cpl["gap_m"] = cfg.coupling.gap_m;
    auto& env = j["environment"];
    env["temperature_k"] = cfg.environment.temperature_k;
    env["heating"] = {{"n_dot_0", cfg.environment.heating.n_dot_0},
                      {"n_p_knee", cfg.environment.heating.n_p_knee},
                      {"exponent", cfg.environment.heating.exponent}};
    env["force_noise_n_per_sqrt_hz"] = cfg.environment.force_noise_n_per_sqrt_hz;
    env["phase_noise"] = {{"l_dbc_per_hz", cfg.environment.phase_noise_l_dbc_per_hz},
                          {"model_constant", cfg.environment.phase_noise_model_constant}};
    auto& pump = j["pump"];
    if (cfg.pump.n_p) pump["n_p"] = *cfg.pump.n_p;
    if (cfg.pump.chain) {
        pump["power_w"] = cfg.pump.chain->power_w;
        pump["kappa_ext_hz"] = cfg.pump.chain->kappa_ext_hz;
        pump["kappa_total_hz"] = cfg.pump.chain->kappa_total_hz;
        if (cfg.pump.chain->detuning_hz) pump["detuning_hz"] = *cfg.pump.chain->detuning_hz;
    }
    if (cfg.pump.n_sr) pump["n_sr"] = *cfg.pump.n_sr;
    pump["n_sr_err"] = cfg.pump.n_sr_err;
    auto& spec = j["spectrum"];
    spec["n_bins"] = cfg.spectrum.n_bins;
    spec["span_widths"] = cfg.spectrum.span_widths;
    spec["n_avg"] = cfg.spectrum.n_avg;
    spec["seed"] = cfg.spectrum.seed;
    spec["floor"] = cfg.spectrum.floor;
    spec["cal"] = cfg.spectrum.cal;
    auto& sw = j["sweep"];
    sw["n_p_min"] = cfg.sweep.n_p_min;
    sw["n_p_max"] = cfg.sweep.n_p_max;
    sw["points"] = cfg.sweep.points;
    auto& table = sw["n_sr_table"] = nlohmann::json::array();
    for (const auto& [np, nsr] : cfg.sweep.n_sr_table) table.push_back({np, nsr});
    auto& dy = j["dynamics"];
    dy["n0"] = cfg.dynamics.n0;
    dy["gamma_m_t_per_s"] = cfg.dynamics.gamma_m_t_per_s;
    dy["n_m_thermal"] = cfg.dynamics.n_m_thermal;
    dy["gamma_opt_per_s"] = cfg.dynamics.gamma_opt_per_s;
    dy["n_sr"] = cfg.dynamics.n_sr;
    dy["t_max_s"] = cfg.dynamics.t_max_s;
    dy["points"] = cfg.dynamics.points;
    j["paths"]["out_dir"] = cfg.out_dir;
    return j;
}

inline RunConfig parse_config_text(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_parse_error(std::string("config: malformed JSON: ") + e.what());
    }
    if (!root.is_object()) throw config_constraint_error("config: top level must be a JSON object");
    return config_from_json(root);
}

inline RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_missing_file("config: cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

// --- Resolved physical quantities --------------------------------------

struct Resolved {
    phys::MechanicalMode mechanics;
    phys::CavityMode cavity;
    phys::Coupling coupling;
    phys::PumpConfig pump;      // photon number + detuning (default red sideband)
    double temperature = 0.0;   // K
    double n_p = 0.0;           // intracavity pump photons
    double x_zp = 0.0;          // m
    double gamma_opt = 0.0;     // 1/s
    double gamma_m_t = 0.0;     // 1/s
    double n_m_thermal = 0.0;   // Bose occupancy of the mechanics at T
    double n_sr = 0.0;          // occupancy seen by the mechanics
    double n_sr_err = 0.0;
};

inline Resolved resolve(const RunConfig& cfg) {
    Resolved r;
    const double t = cfg.environment.temperature_k;
    r.temperature = t;

    double mass = 0.0;
    if (cfg.mechanics.mass_kg) {
        mass = *cfg.mechanics.mass_kg;
    } else if (cfg.mechanics.geometry) {
        const auto& g = *cfg.mechanics.geometry;
        mass = phys::beam_mass(g.length_m, g.width_m, g.layer_thicknesses_m,
                               g.layer_densities_kg_m3);
    } else {
        throw config_constraint_error("device.mechanics.mass_kg: mass or geometry required");
    }
    r.mechanics = phys::MechanicalMode{angular_from_hz(cfg.mechanics.omega_m_hz),
                                       mass * cfg.mechanics.effective_mass_factor,
                                       cfg.mechanics.q_ref, cfg.mechanics.t_ref_k};
    r.mechanics.validate();

    const double omega_sr = angular_from_hz(cfg.cavity.omega_sr_hz);
    const double n_sr_thermal =
        cfg.cavity.n_sr_thermal ? *cfg.cavity.n_sr_thermal : phys::bose_occupancy(omega_sr, t);
    r.cavity = phys::CavityMode{omega_sr, angular_from_hz(cfg.cavity.gamma_sr_hz), n_sr_thermal};
    r.cavity.validate();

    r.coupling = phys::Coupling{angular_from_hz(cfg.coupling.g_hz_per_m),
                                angular_from_hz(cfg.coupling.lambda_hz_per_m2), cfg.coupling.c_g_f,
                                cfg.coupling.c_t_f, cfg.coupling.gap_m};
    r.coupling.validate();

    double detuning = -r.mechanics.omega_m;  // red sideband unless overridden
    if (cfg.pump.chain) {
        const auto& ch = *cfg.pump.chain;
        if (ch.detuning_hz) detuning = angular_from_hz(*ch.detuning_hz);
        const double omega_p = r.cavity.omega_sr + detuning;
        r.n_p = design::pump_photons_from_power(ch.power_w, angular_from_hz(ch.kappa_ext_hz),
                                                angular_from_hz(ch.kappa_total_hz), detuning,
                                                omega_p);
    } else if (cfg.pump.n_p) {
        r.n_p = *cfg.pump.n_p;
    }
    r.pump = phys::PumpConfig{r.n_p, detuning};
    r.pump.validate();

    r.x_zp = phys::zero_point_amplitude(r.mechanics);
    r.gamma_opt = phys::optical_damping_rate(r.x_zp, r.coupling.g, r.n_p, r.cavity.gamma_sr);
    r.gamma_m_t = phys::gamma_m_thermal(r.mechanics, t);
    r.n_m_thermal = phys::bose_occupancy(r.mechanics.omega_m, t);
    r.n_sr = cfg.pump.n_sr ? *cfg.pump.n_sr
                           : phys::cavity_effective_occupancy(r.cavity.gamma_sr,
                                                              r.mechanics.omega_m, n_sr_thermal);
    r.n_sr_err = cfg.pump.n_sr_err;
    return r;
}

}  // namespace sidecool::cfg
