#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>

#include "sidecool/config.hpp"
#include "sidecool/io.hpp"

using namespace sidecool;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const std::filesystem::path kConfigDir = SIDECOOL_CONFIG_DIR;

}  // namespace

TEST_CASE("shipped default config loads and reproduces the reference device") {
    const auto config = cfg::parse_config(kConfigDir / "default.json");
    const auto res = cfg::resolve(config);

    CHECK_THAT(res.mechanics.mass, WithinRel(2.0502e-15, 1e-12));
    CHECK_THAT(res.n_m_thermal, WithinRel(480.0, 0.01));
    CHECK_THAT(res.gamma_m_t, WithinRel(57.79, 1e-3));
    CHECK_THAT(hz_from_angular(res.cavity.gamma_sr), WithinRel(6.0e5, 1e-12));
    CHECK(res.n_p == 3.0e7);
    CHECK(res.n_sr == 2.0);
    // Cavity thermal occupancy defaults to the Bose value at 146 mK.
    const double n_sr_t = phys::bose_occupancy(res.cavity.omega_sr, 0.146);
    CHECK_THAT(res.cavity.n_sr_thermal, WithinRel(n_sr_t, 1e-12));
    CHECK_THAT(res.cavity.n_sr_thermal, WithinRel(0.09, 0.05));
    CHECK(config.spectrum.seed == 0);
}

TEST_CASE("empty config falls back to full defaults") {
    const auto config = cfg::parse_config_text("{}");
    const auto res = cfg::resolve(config);
    CHECK_THAT(res.n_m_thermal, WithinRel(482.38, 1e-3));
    // Without an explicit pump n_sr the effective cavity occupancy is used.
    const double expected = phys::cavity_effective_occupancy(
        res.cavity.gamma_sr, res.mechanics.omega_m, res.cavity.n_sr_thermal);
    CHECK_THAT(res.n_sr, WithinRel(expected, 1e-12));
    CHECK(config.spectrum.seed == 0);  // omitted seed defaults to zero
}

TEST_CASE("constraint violations name the offending key") {
    SECTION("zero cavity linewidth") {
        try {
            cfg::parse_config_text(R"({"device":{"cavity":{"gamma_sr_hz":0.0}}})");
            FAIL("expected config_constraint_error");
        } catch (const cfg::config_constraint_error& e) {
            CHECK_THAT(e.what(), ContainsSubstring("cavity.gamma_sr_hz"));
            CHECK_THAT(e.what(), ContainsSubstring("must be > 0"));
        }
    }
    SECTION("unknown key") {
        try {
            cfg::parse_config_text(R"({"device":{"cavity":{"quality":100}}})");
            FAIL("expected config_constraint_error");
        } catch (const cfg::config_constraint_error& e) {
            CHECK_THAT(e.what(), ContainsSubstring("device.cavity.quality"));
            CHECK_THAT(e.what(), ContainsSubstring("unknown key"));
        }
    }
    SECTION("top-level unknown section") {
        CHECK_THROWS_AS(cfg::parse_config_text(R"({"devices":{}})"),
                        cfg::config_constraint_error);
    }
    SECTION("negative occupancy") {
        CHECK_THROWS_AS(cfg::parse_config_text(R"({"pump":{"n_sr":-1.0}})"),
                        cfg::config_constraint_error);
    }
    SECTION("mass and geometry are exclusive") {
        CHECK_THROWS_AS(cfg::parse_config_text(
                            R"({"device":{"mechanics":{"mass_kg":1e-15,"geometry":{}}}})"),
                        cfg::config_constraint_error);
    }
    SECTION("n_p and power chain are exclusive") {
        CHECK_THROWS_AS(cfg::parse_config_text(R"({"pump":{"n_p":1e7,"power_w":1e-12}})"),
                        cfg::config_constraint_error);
    }
    SECTION("wrong JSON types are constraint errors") {
        CHECK_THROWS_AS(
            cfg::parse_config_text(
                R"({"device":{"mechanics":{"geometry":{"layer_thicknesses_m":"thin"}}}})"),
            cfg::config_constraint_error);
        CHECK_THROWS_AS(cfg::parse_config_text(R"({"sweep":{"n_sr_table":[["a","b"]]}})"),
                        cfg::config_constraint_error);
        CHECK_THROWS_AS(cfg::parse_config_text(R"({"spectrum":{"n_bins":"many"}})"),
                        cfg::config_constraint_error);
    }
}

TEST_CASE("malformed JSON and missing files are distinct errors") {
    CHECK_THROWS_AS(cfg::parse_config_text("{pump:"), cfg::config_parse_error);
    CHECK_THROWS_AS(cfg::parse_config_text("[1,2,3]"), cfg::config_constraint_error);
    CHECK_THROWS_AS(cfg::parse_config(kConfigDir / "does_not_exist.json"),
                    cfg::config_missing_file);
}

TEST_CASE("pump power chain resolves the photon number") {
    const std::string text = R"({
        "pump": {"power_w": 1e-12, "kappa_ext_hz": 3.0e5, "kappa_total_hz": 6.0e5}
    })";
    const auto config = cfg::parse_config_text(text);
    const auto res = cfg::resolve(config);
    // Default detuning is the red sideband, -omega_m.
    const double detuning = -angular_from_hz(6.3e6);
    const double omega_p = angular_from_hz(7.5e9) + detuning;
    const double expected = design::pump_photons_from_power(
        1e-12, angular_from_hz(3.0e5), angular_from_hz(6.0e5), detuning, omega_p);
    CHECK_THAT(res.n_p, WithinRel(expected, 1e-12));
    CHECK(res.n_p > 0.0);
    CHECK_THAT(res.pump.detuning, WithinRel(detuning, 1e-12));
}

TEST_CASE("direct mass overrides geometry") {
    const auto config = cfg::parse_config_text(
        R"({"device":{"mechanics":{"mass_kg":3.0e-15,"effective_mass_factor":0.5}}})");
    const auto res = cfg::resolve(config);
    CHECK_THAT(res.mechanics.mass, WithinRel(1.5e-15, 1e-12));
}

TEST_CASE("config digest is stable and value-sensitive") {
    const auto a = cfg::parse_config(kConfigDir / "default.json");
    const auto b = cfg::parse_config(kConfigDir / "default.json");
    const auto da = io::fnv1a64(cfg::to_json(a).dump());
    const auto db = io::fnv1a64(cfg::to_json(b).dump());
    CHECK(da == db);
    CHECK(da.size() == 16);

    auto c = a;
    c.pump.n_p = 1.0e8;
    CHECK(io::fnv1a64(cfg::to_json(c).dump()) != da);
}

TEST_CASE("sweep table parsing") {
    const auto config = cfg::parse_config_text(
        R"({"sweep":{"n_sr_table":[[1e6,0.1],[1e8,1.5]],"points":10}})");
    REQUIRE(config.sweep.n_sr_table.size() == 2);
    CHECK(config.sweep.n_sr_table[1].second == 1.5);
    CHECK_THROWS_AS(cfg::parse_config_text(R"({"sweep":{"n_sr_table":[[1e6]]}})"),
                    cfg::config_constraint_error);
    const auto constant = cfg::parse_config_text(R"({"sweep":{"n_sr_const":0.4}})");
    REQUIRE(constant.sweep.n_sr_table.size() == 1);
    CHECK(constant.sweep.n_sr_table[0].second == 0.4);
    CHECK_THROWS_AS(
        cfg::parse_config_text(R"({"sweep":{"n_sr_const":0.4,"n_sr_table":[[1e6,0.1]]}})"),
        cfg::config_constraint_error);
}
