#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sidecool/cli.hpp"

using namespace sidecool;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

const fs::path kConfigDir = SIDECOOL_CONFIG_DIR;
const fs::path kDefaultConfig = kConfigDir / "default.json";

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("sidecool_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) { return io::read_text_file(p); }

// Parse one named column out of a headered CSV.
std::vector<double> csv_column(const std::string& text, const std::string& column) {
    std::istringstream in(text);
    std::string line;
    REQUIRE(std::getline(in, line));
    std::size_t idx = std::string::npos;
    {
        std::istringstream header(line);
        std::string name;
        for (std::size_t i = 0; std::getline(header, name, ','); ++i)
            if (name == column) idx = i;
    }
    REQUIRE(idx != std::string::npos);
    std::vector<double> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        for (std::size_t i = 0; std::getline(row, field, ','); ++i)
            if (i == idx) out.push_back(std::stod(field));
    }
    return out;
}

}  // namespace

TEST_CASE("cli determinism: identical config and seed give identical bytes") {
    for (const std::string cmd : {"steady", "spectrum", "sweep", "dynamics", "budget"}) {
        const auto dir_a = fresh_dir(cmd + "_a");
        const auto dir_b = fresh_dir(cmd + "_b");
        const auto ra = cli::run_command(cmd, kDefaultConfig, {}, dir_a);
        const auto rb = cli::run_command(cmd, kDefaultConfig, {}, dir_b);
        REQUIRE(ra.code == 0);
        REQUIRE(rb.code == 0);
        REQUIRE(ra.outputs.size() == 1);
        CHECK(slurp(ra.outputs[0]) == slurp(rb.outputs[0]));
    }
}

TEST_CASE("cli spectrum then fit recovers the configured occupancy") {
    const auto dir = fresh_dir("roundtrip");
    const auto spec = cli::run_command("spectrum", kDefaultConfig, {}, dir);
    REQUIRE(spec.code == 0);

    const auto fit = cli::run_command("fit", kDefaultConfig, {}, dir, spec.outputs[0]);
    REQUIRE(fit.code == 0);
    const auto j = nlohmann::json::parse(slurp(fit.outputs[0]));
    REQUIRE(j.contains("occupancy"));
    REQUIRE(j.at("fit").at("converged").get<bool>());
    CHECK(j.contains("config_digest"));

    // Configured truth from the forward pipeline.
    const auto config = cfg::parse_config(kDefaultConfig);
    const auto res = cfg::resolve(config);
    const auto steady = cli::detail::steady_state(config, res);
    const double n_eff_fit = j.at("occupancy").at("n_eff").get<double>();
    const double sigma_area = j.at("fit").at("std_errors").at("area").get<double>();
    const double sigma_eff = sigma_area / (config.spectrum.cal * res.gamma_opt);
    CHECK(std::abs(n_eff_fit - steady.n_eff) <= 3.0 * sigma_eff);
}

TEST_CASE("cli squashed config produces a dip and a negative fitted n_eff") {
    const auto dir = fresh_dir("squash");
    const auto spec = cli::run_command("spectrum", kConfigDir / "squashed.json", {}, dir);
    REQUIRE(spec.code == 0);
    const auto psd = csv_column(slurp(spec.outputs[0]), "psd");
    // The dip pulls well below the floor of 1.
    double min_v = psd[0];
    for (double v : psd) min_v = std::min(min_v, v);
    CHECK(min_v < 0.75);

    const auto fit = cli::run_command("fit", kConfigDir / "squashed.json", {}, dir, spec.outputs[0]);
    REQUIRE(fit.code == 0);
    const auto j = nlohmann::json::parse(slurp(fit.outputs[0]));
    CHECK(j.at("fit").at("model").at("area").get<double>() < 0.0);
    CHECK(j.at("occupancy").at("n_eff").get<double>() < 0.0);
    CHECK(j.at("occupancy").at("n_m").get<double>() > 0.0);
}

TEST_CASE("cli sweep output") {
    const auto dir = fresh_dir("sweep");
    const auto r = cli::run_command("sweep", kDefaultConfig, {}, dir);
    REQUIRE(r.code == 0);
    const auto text = slurp(r.outputs[0]);
    CHECK(text.rfind("n_p,gamma_opt_hz,n_m,n_dot_t,q_dot_w\n", 0) == 0);
    const auto n_m = csv_column(text, "n_m");
    REQUIRE(n_m.size() == 200);
    double min_nm = n_m[0];
    for (double v : n_m) min_nm = std::min(min_nm, v);
    CHECK(min_nm > 3.0);
    CHECK(min_nm < 6.0);
}

TEST_CASE("cli dynamics output") {
    const auto dir = fresh_dir("dynamics");
    const auto r = cli::run_command("dynamics", kDefaultConfig, {}, dir);
    REQUIRE(r.code == 0);
    const auto text = slurp(r.outputs[0]);
    CHECK(text.rfind("t_s,n_m\n", 0) == 0);
    const auto t = csv_column(text, "t_s");
    const auto n = csv_column(text, "n_m");
    REQUIRE(t.size() == 501);
    // n(200 us) within a factor two of 4 quanta.
    std::size_t idx = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (std::abs(t[i] - 200e-6) < 1e-9) idx = i;
    CHECK(n[idx] > 3.0);
    CHECK(n[idx] < 8.0);
    CHECK(n.front() == 500.0);
}

TEST_CASE("cli budget output") {
    const auto dir = fresh_dir("budget");
    const auto r = cli::run_command("budget", kDefaultConfig, {}, dir);
    REQUIRE(r.code == 0);
    const auto text = slurp(r.outputs[0]);
    CHECK(text.rfind("n_p,gamma_opt_hz,n_dot_t,tau_s,n_pn\n", 0) == 0);
    const auto n_pn = csv_column(text, "n_pn");
    const auto n_dot = csv_column(text, "n_dot_t");
    // Phase-noise photons anchored to 0.04 at the top of the sweep range.
    CHECK_THAT(n_pn.back(), WithinAbs(0.04, 1e-6));
    CHECK_THAT(n_dot.back(), WithinAbs(5e5, 1.0));
    CHECK_THAT(n_dot.front(), WithinAbs(3e4, 1e-9));
}

TEST_CASE("cli calibrate") {
    const auto dir = fresh_dir("calibrate");
    // Exact-linear synthetic calibration data for the default device.
    const auto config = cfg::parse_config(kDefaultConfig);
    const auto res = cfg::resolve(config);
    const double cal_true = 0.5;
    std::string csv = "temp_k,power\n";
    for (int i = 0; i < 10; ++i) {
        const double t = 0.16 + 0.05 * i;
        const double power = cal_true * phys::bose_occupancy(res.mechanics.omega_m, t) * res.gamma_opt;
        csv += io::fmt17(t) + "," + io::fmt17(power) + "\n";
    }
    const auto in_path = dir / "points.csv";
    io::write_text_file(in_path, csv);

    const auto r = cli::run_command("calibrate", kDefaultConfig, {}, dir, in_path);
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(r.outputs[0]));
    CHECK_THAT(j.at("cal").get<double>(), WithinAbs(cal_true, 1e-9));
    CHECK(j.at("points_used").get<int>() == 10);
    CHECK(j.contains("config_digest"));
}

TEST_CASE("cli error paths and exit codes") {
    const auto dir = fresh_dir("errors");

    SECTION("missing config file") {
        const auto r = cli::run_command("steady", dir / "nope.json", {}, dir);
        CHECK(r.code == cli::exit_missing_file);
    }
    SECTION("malformed config") {
        const auto bad = dir / "bad.json";
        io::write_text_file(bad, "{not json");
        const auto r = cli::run_command("steady", bad, {}, dir);
        CHECK(r.code == cli::exit_parse_error);
    }
    SECTION("constraint violation names the key") {
        const auto bad = dir / "constraint.json";
        io::write_text_file(bad, R"({"device":{"cavity":{"gamma_sr_hz":0.0}}})");
        const auto r = cli::run_command("steady", bad, {}, dir);
        CHECK(r.code == cli::exit_constraint);
        CHECK_THAT(r.message, ContainsSubstring("cavity.gamma_sr_hz"));
    }
    SECTION("unknown command") {
        const auto r = cli::run_command("frobnicate", kDefaultConfig, {}, dir);
        CHECK(r.code == cli::exit_constraint);
    }
    SECTION("fit requires an input file") {
        const auto r = cli::run_command("fit", kDefaultConfig, {}, dir);
        CHECK(r.code == cli::exit_missing_file);
    }
    SECTION("fit on a missing input file") {
        const auto r = cli::run_command("fit", kDefaultConfig, {}, dir, dir / "absent.csv");
        CHECK(r.code == cli::exit_missing_file);
    }
}

TEST_CASE("cli non-convergent fit writes diagnostic JSON and fails") {
    const auto dir = fresh_dir("nonconv");
    const auto config = cfg::parse_config(kDefaultConfig);
    const auto res = cfg::resolve(config);
    inference::FitResult stuck;
    stuck.model = {1.0, 2.0, angular_from_hz(6.3e6), 5.0e3};
    stuck.converged = false;
    stuck.iterations = 200;
    const auto r = cli::emit_fit_result(stuck, config, res, dir);
    CHECK(r.code == cli::exit_runtime);
    const auto j = nlohmann::json::parse(slurp(dir / "fit.json"));
    CHECK_FALSE(j.at("fit").at("converged").get<bool>());
    CHECK(j.contains("error"));
    CHECK(j.at("fit").at("iterations").get<int>() == 200);
}

TEST_CASE("cli --set overrides reach the pipeline") {
    const auto dir_a = fresh_dir("set_a");
    const auto dir_b = fresh_dir("set_b");
    const auto base = cli::run_command("steady", kDefaultConfig, {}, dir_a);
    const auto bumped =
        cli::run_command("steady", kDefaultConfig, {"pump.n_p=1.0e8"}, dir_b);
    REQUIRE(base.code == 0);
    REQUIRE(bumped.code == 0);
    const auto ja = nlohmann::json::parse(slurp(base.outputs[0]));
    const auto jb = nlohmann::json::parse(slurp(bumped.outputs[0]));
    CHECK(jb.at("derived").at("n_p").get<double>() == 1.0e8);
    CHECK(ja.at("n_m").get<double>() != jb.at("n_m").get<double>());
    CHECK(ja.at("config_digest") != jb.at("config_digest"));

    SECTION("override hitting an unknown key is rejected") {
        const auto r =
            cli::run_command("steady", kDefaultConfig, {"pump.bogus=1"}, fresh_dir("set_c"));
        CHECK(r.code == cli::exit_constraint);
        CHECK_THAT(r.message, ContainsSubstring("pump.bogus"));
    }
    SECTION("malformed override") {
        const auto r = cli::run_command("steady", kDefaultConfig, {"nonsense"}, fresh_dir("set_d"));
        CHECK(r.code == cli::exit_constraint);
    }
}

TEST_CASE("psd csv and json round trips are lossless") {
    const auto config = cfg::parse_config(kDefaultConfig);
    const auto res = cfg::resolve(config);
    const auto model = cli::detail::forward_model(config, res);
    const auto grid = spectra::uniform_grid(model.center, model.width, 20.0, 301);
    const auto trace =
        spectra::add_measurement_noise(spectra::synthesize_psd(model, grid), 500, 21);

    const auto back_csv = io::psd_from_csv(io::to_csv(trace));
    REQUIRE(back_csv.values.size() == trace.values.size());
    CHECK(back_csv.values == trace.values);
    for (std::size_t i = 0; i < trace.freqs.size(); ++i)
        CHECK_THAT(back_csv.freqs[i], Catch::Matchers::WithinRel(trace.freqs[i], 1e-15));
    CHECK(back_csv.n_avg == trace.n_avg);

    const auto back_json = io::psd_from_json(io::to_json(trace));
    CHECK(back_json.values == trace.values);
    CHECK(back_json.seed == trace.seed);
}

TEST_CASE("steady json carries the derived physics block") {
    const auto dir = fresh_dir("steady");
    const auto r = cli::run_command("steady", kDefaultConfig, {}, dir);
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(r.outputs[0]));
    CHECK(j.at("derived").at("damping_law_in_range").get<bool>());
    CHECK_THAT(j.at("derived").at("n_m_thermal").get<double>(), WithinAbs(482.4, 0.1));
    CHECK_THAT(j.at("derived").at("q_dot_w").get<double>(),
               WithinAbs(phys::cooling_power(angular_from_hz(6.3e6),
                                             j.at("derived").at("gamma_opt_hz").get<double>() *
                                                 constants::two_pi),
                         1e-30));
    // n_m = n_eff + 2 n_sr by construction.
    CHECK_THAT(j.at("n_m").get<double>(),
               WithinAbs(j.at("n_eff").get<double>() + 2.0 * j.at("n_sr").get<double>(), 1e-12));
}
