#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sidecool/constants.hpp"
#include "sidecool/design.hpp"
#include "sidecool/dynamics.hpp"
#include "sidecool/inference.hpp"
#include "sidecool/spectra.hpp"

// File formats. CSVs carry a one-line header; frequencies cross the boundary
// in Hz. Doubles are printed with 17 significant digits so every round trip
// is lossless.

namespace sidecool::io {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// FNV-1a 64-bit; used as the config provenance digest in JSON outputs.
inline std::string fnv1a64(const std::string& data) {
    std::uint64_t hash = 1469598103934665603ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw io_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

inline double parse_double(const std::string& s, const char* what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || (end && *end != '\0' && *end != '\r'))
        throw io_error(std::string("bad numeric field in ") + what + ": '" + s + "'");
    return v;
}

}  // namespace detail

// --- PsdTrace ---------------------------------------------------------

inline std::string psd_csv_header() { return "freq_hz,psd,navg"; }

inline std::string to_csv(const spectra::PsdTrace& trace) {
    std::string out = psd_csv_header() + "\n";
    for (std::size_t i = 0; i < trace.freqs.size(); ++i) {
        out += fmt17(hz_from_angular(trace.freqs[i]));
        out += ',';
        out += fmt17(trace.values[i]);
        out += ',';
        out += std::to_string(trace.n_avg);
        out += '\n';
    }
    return out;
}

inline spectra::PsdTrace psd_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw io_error("psd csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != psd_csv_header())
        throw io_error("psd csv: expected header '" + psd_csv_header() + "', got '" + line + "'");
    spectra::PsdTrace trace;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 3) throw io_error("psd csv: expected 3 columns");
        trace.freqs.push_back(angular_from_hz(detail::parse_double(fields[0], "psd csv")));
        trace.values.push_back(detail::parse_double(fields[1], "psd csv"));
        const int navg = static_cast<int>(detail::parse_double(fields[2], "psd csv"));
        if (first) {
            trace.n_avg = navg;
            first = false;
        } else if (navg != trace.n_avg) {
            throw io_error("psd csv: navg column must be constant");
        }
    }
    trace.validate();
    return trace;
}

inline nlohmann::json to_json(const spectra::PsdTrace& trace) {
    nlohmann::json j;
    auto& freqs = j["freq_hz"] = nlohmann::json::array();
    for (double f : trace.freqs) freqs.push_back(hz_from_angular(f));
    j["psd"] = trace.values;
    j["n_avg"] = trace.n_avg;
    if (trace.seed)
        j["seed"] = *trace.seed;
    else
        j["seed"] = nullptr;
    return j;
}

inline spectra::PsdTrace psd_from_json(const nlohmann::json& j) {
    spectra::PsdTrace trace;
    for (const auto& f : j.at("freq_hz")) trace.freqs.push_back(angular_from_hz(f.get<double>()));
    trace.values = j.at("psd").get<std::vector<double>>();
    trace.n_avg = j.at("n_avg").get<int>();
    if (j.contains("seed") && !j.at("seed").is_null())
        trace.seed = j.at("seed").get<std::uint64_t>();
    trace.validate();
    return trace;
}

// --- CoolingTimeline ---------------------------------------------------

inline std::string to_csv(const dynamics::CoolingTimeline& timeline) {
    std::string out = "t_s,n_m\n";
    for (std::size_t i = 0; i < timeline.times.size(); ++i) {
        out += fmt17(timeline.times[i]);
        out += ',';
        out += fmt17(timeline.occupancy[i]);
        out += '\n';
    }
    return out;
}

// --- SweepResult --------------------------------------------------------

inline std::string to_csv(const design::SweepResult& sweep) {
    std::string out = "n_p,gamma_opt_hz,n_m,n_dot_t,q_dot_w\n";
    for (std::size_t i = 0; i < sweep.n_p.size(); ++i) {
        out += fmt17(sweep.n_p[i]);
        out += ',';
        out += fmt17(hz_from_angular(sweep.gamma_opt[i]));
        out += ',';
        out += fmt17(sweep.n_m[i]);
        out += ',';
        out += fmt17(sweep.n_dot_t[i]);
        out += ',';
        out += fmt17(sweep.q_dot[i]);
        out += '\n';
    }
    return out;
}

// --- Fit / calibration / occupancy results ------------------------------

inline nlohmann::json to_json(const inference::FitResult& fit) {
    nlohmann::json j;
    j["model"] = {{"floor", fit.model.floor},
                  {"area", fit.model.area},
                  {"center_hz", hz_from_angular(fit.model.center)},
                  {"width_hz", hz_from_angular(fit.model.width)}};
    j["std_errors"] = {{"floor", fit.std_errors[0]},
                       {"area", fit.std_errors[1]},
                       {"center_hz", hz_from_angular(fit.std_errors[2])},
                       {"width_hz", hz_from_angular(fit.std_errors[3])}};
    auto& cov = j["covariance"] = nlohmann::json::array();
    for (int a = 0; a < 4; ++a) {
        nlohmann::json row = nlohmann::json::array();
        for (int b = 0; b < 4; ++b) row.push_back(fit.covariance(a, b));
        cov.push_back(row);
    }
    j["chi2_reduced"] = fit.chi2_reduced;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    return j;
}

inline nlohmann::json to_json(const inference::CalibrationFit& cal) {
    return {{"cal", cal.cal},
            {"cal_err", cal.cal_err},
            {"fit_range_k", {cal.fit_range.first, cal.fit_range.second}},
            {"points_used", cal.points_used}};
}

inline nlohmann::json to_json(const inference::OccupancyResult& occ) {
    return {{"n_eff", occ.n_eff}, {"n_sr", occ.n_sr},       {"n_m", occ.n_m},
            {"n_m_err", occ.n_m_err}, {"p0", occ.p0},       {"consistent", occ.consistent}};
}

// Calibration input: one-line header `temp_k,power`.
inline std::vector<std::pair<double, double>> calibration_points_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw io_error("calibration csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "temp_k,power")
        throw io_error("calibration csv: expected header 'temp_k,power', got '" + line + "'");
    std::vector<std::pair<double, double>> points;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 2) throw io_error("calibration csv: expected 2 columns");
        points.emplace_back(detail::parse_double(fields[0], "calibration csv"),
                            detail::parse_double(fields[1], "calibration csv"));
    }
    return points;
}

}  // namespace sidecool::io
