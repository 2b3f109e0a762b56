#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinflow/cutoff_force.hpp"
#include "kinflow/drive.hpp"
#include "kinflow/force_model.hpp"
#include "kinflow/initial_density.hpp"

namespace kinflow {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fully validated run configuration.  Parsed from the flat key-value format
///
///     section.key = value        # comment
///
/// Unknown keys are hard errors; every physical constraint is checked at
/// parse time with the key path in the message, so runs never start on a
/// half-broken setup.
struct RunConfig {
    // force
    RadialProfile profile = RadialProfile::spring;
    double k_n = 1.0;
    double gamma_n = 0.5;
    double gamma_t = 1.0;
    double R = 0.05;
    double R_tilde = 1.0;
    // cutoff
    double theta = 0.25;
    // drive
    std::string drive_kind = "constant";
    double drive_gx = 0.0, drive_gy = 0.0;
    double drive_amp = 0.0, drive_center_x = 0.0, drive_center_y = 0.0,
           drive_sigma = 1.0;
    double drive_speed = 0.0, drive_pull = 0.0, drive_lane_center = 0.0,
           drive_lane_width = 1.0;
    int quadrature_order = 24;
    // density
    std::string density_kind; // required
    double density_mass = 1.0;
    double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
    double vx_lo = -0.5, vx_hi = 0.5, vy_lo = -0.5, vy_hi = 0.5;
    double mu_x = 0.0, mu_y = 0.0, mu_vx = 0.0, mu_vy = 0.0;
    double mu2_x = 0.0, mu2_y = 0.0, mu2_vx = 0.0, mu2_vy = 0.0;
    double sigma_x = 0.1, sigma_v = 0.1, trunc = 3.0;
    // run
    std::size_t n_particles = 0; // required
    double t_final = -1.0;       // required
    double dt = 1e-3;
    int record_stride = 10;
    std::uint64_t seed = 0;
    // grid
    int grid_bins = 20;
    double grid_inflate = 0.05;
    // output
    std::string out_dir = "runs";
    std::vector<double> snapshot_times;
    // converge
    std::vector<std::size_t> sizes;
    int n_seeds = 8;
    int subsamples = 16;
    // stability perturbation (applied to the partner density)
    double perturb_x = 0.0, perturb_y = 0.0, perturb_vx = 0.0, perturb_vy = 0.0;

    ForceModel force_model() const {
        return ForceModel(profile, k_n, gamma_n, gamma_t, R, R_tilde);
    }

    CutoffForce cutoff(std::size_t n) const {
        return CutoffForce(force_model(), n, theta);
    }

    DriveField drive_field() const {
        if (drive_kind == "constant") return DriveField::constant({drive_gx, drive_gy});
        if (drive_kind == "gaussian_well")
            return DriveField::gaussian_well(drive_amp, {drive_center_x, drive_center_y},
                                             drive_sigma);
        return DriveField::lane(drive_speed, drive_pull, drive_lane_center,
                                drive_lane_width);
    }

    MollifiedDrive mollified(std::size_t n) const {
        return MollifiedDrive(drive_field(), 1.0 / static_cast<double>(n),
                              quadrature_order);
    }

    InitialDensity initial_density() const {
        if (density_kind == "uniform_box") {
            Box4 box{{x_lo, y_lo, vx_lo, vy_lo}, {x_hi, y_hi, vx_hi, vy_hi}};
            return InitialDensity::uniform_box(box, density_mass);
        }
        if (density_kind == "truncated_gaussian")
            return InitialDensity::truncated_gaussian({mu_x, mu_y}, {mu_vx, mu_vy},
                                                      sigma_x, sigma_v, trunc,
                                                      density_mass);
        return InitialDensity::two_bump({mu_x, mu_y}, {mu_vx, mu_vy}, {mu2_x, mu2_y},
                                        {mu2_vx, mu2_vy}, sigma_x, sigma_v, trunc,
                                        density_mass);
    }

    Vec2 perturb_dx() const { return {perturb_x, perturb_y}; }
    Vec2 perturb_dv() const { return {perturb_vx, perturb_vy}; }

    double record_interval() const { return record_stride * dt; }

    /// Every key with its effective value (defaults filled), sorted by key.
    /// This is the manifest echo and the text that gets hashed into the run
    /// directory name.
    std::map<std::string, std::string> canonical_items() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ConfigError(key + ": expected a number, got '" + value + "'");
    return out;
}

inline long long parse_int(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ConfigError(key + ": expected an integer, got '" + value + "'");
    return out;
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(value);
    while (std::getline(is, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) parts.push_back(cur);
    }
    return parts;
}

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace detail

inline std::map<std::string, std::string> RunConfig::canonical_items() const {
    using detail::fmt_double;
    std::map<std::string, std::string> m;
    m["force.profile"] = profile == RadialProfile::spring ? "spring" : "morse";
    m["force.k_n"] = fmt_double(k_n);
    m["force.gamma_n"] = fmt_double(gamma_n);
    m["force.gamma_t"] = fmt_double(gamma_t);
    m["force.R"] = fmt_double(R);
    m["force.R_tilde"] = fmt_double(R_tilde);
    m["cutoff.theta"] = fmt_double(theta);
    m["drive.kind"] = drive_kind;
    m["drive.gx"] = fmt_double(drive_gx);
    m["drive.gy"] = fmt_double(drive_gy);
    m["drive.amp"] = fmt_double(drive_amp);
    m["drive.center_x"] = fmt_double(drive_center_x);
    m["drive.center_y"] = fmt_double(drive_center_y);
    m["drive.sigma"] = fmt_double(drive_sigma);
    m["drive.speed"] = fmt_double(drive_speed);
    m["drive.pull"] = fmt_double(drive_pull);
    m["drive.lane_center"] = fmt_double(drive_lane_center);
    m["drive.lane_width"] = fmt_double(drive_lane_width);
    m["drive.quadrature_order"] = std::to_string(quadrature_order);
    m["density.kind"] = density_kind;
    m["density.mass"] = fmt_double(density_mass);
    m["density.x_lo"] = fmt_double(x_lo);
    m["density.x_hi"] = fmt_double(x_hi);
    m["density.y_lo"] = fmt_double(y_lo);
    m["density.y_hi"] = fmt_double(y_hi);
    m["density.vx_lo"] = fmt_double(vx_lo);
    m["density.vx_hi"] = fmt_double(vx_hi);
    m["density.vy_lo"] = fmt_double(vy_lo);
    m["density.vy_hi"] = fmt_double(vy_hi);
    m["density.mu_x"] = fmt_double(mu_x);
    m["density.mu_y"] = fmt_double(mu_y);
    m["density.mu_vx"] = fmt_double(mu_vx);
    m["density.mu_vy"] = fmt_double(mu_vy);
    m["density.mu2_x"] = fmt_double(mu2_x);
    m["density.mu2_y"] = fmt_double(mu2_y);
    m["density.mu2_vx"] = fmt_double(mu2_vx);
    m["density.mu2_vy"] = fmt_double(mu2_vy);
    m["density.sigma_x"] = fmt_double(sigma_x);
    m["density.sigma_v"] = fmt_double(sigma_v);
    m["density.trunc"] = fmt_double(trunc);
    m["run.n_particles"] = std::to_string(n_particles);
    m["run.t_final"] = fmt_double(t_final);
    m["run.dt"] = fmt_double(dt);
    m["run.record_stride"] = std::to_string(record_stride);
    m["run.seed"] = std::to_string(seed);
    m["grid.bins"] = std::to_string(grid_bins);
    m["grid.inflate"] = fmt_double(grid_inflate);
    m["output.dir"] = out_dir;
    {
        std::string v;
        for (double t : snapshot_times) {
            if (!v.empty()) v += ",";
            v += fmt_double(t);
        }
        m["output.snapshot_times"] = v;
    }
    {
        std::string v;
        for (std::size_t s : sizes) {
            if (!v.empty()) v += ",";
            v += std::to_string(s);
        }
        m["converge.sizes"] = v;
    }
    m["converge.seeds"] = std::to_string(n_seeds);
    m["converge.subsamples"] = std::to_string(subsamples);
    m["stability.dx"] = fmt_double(perturb_x);
    m["stability.dy"] = fmt_double(perturb_y);
    m["stability.dvx"] = fmt_double(perturb_vx);
    m["stability.dvy"] = fmt_double(perturb_vy);
    return m;
}

inline RunConfig parse_config(std::istream& in) {
    using detail::parse_double;
    using detail::parse_int;
    using detail::trim;

    RunConfig cfg;
    bool has_density_kind = false, has_n = false, has_t_final = false;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");

        if (key == "force.profile") {
            if (value != "spring" && value != "morse")
                throw ConfigError("force.profile: expected spring or morse, got '" +
                                  value + "'");
            cfg.profile = radial_profile_from_string(value);
        } else if (key == "force.k_n") {
            cfg.k_n = parse_double(key, value);
            if (!(cfg.k_n >= 0.0)) throw ConfigError("force.k_n must be >= 0");
        } else if (key == "force.gamma_n") {
            cfg.gamma_n = parse_double(key, value);
            if (!(cfg.gamma_n >= 0.0)) throw ConfigError("force.gamma_n must be >= 0");
        } else if (key == "force.gamma_t") {
            cfg.gamma_t = parse_double(key, value);
            if (!(cfg.gamma_t >= 0.0)) throw ConfigError("force.gamma_t must be >= 0");
        } else if (key == "force.R") {
            cfg.R = parse_double(key, value);
            if (!(cfg.R > 0.0)) throw ConfigError("force.R must be positive");
        } else if (key == "force.R_tilde") {
            cfg.R_tilde = parse_double(key, value);
            if (!(cfg.R_tilde > 0.0)) throw ConfigError("force.R_tilde must be positive");
        } else if (key == "cutoff.theta") {
            cfg.theta = parse_double(key, value);
            if (!(cfg.theta > 0.0)) throw ConfigError("cutoff.theta must be positive");
        } else if (key == "drive.kind") {
            if (value != "constant" && value != "gaussian_well" && value != "lane")
                throw ConfigError(
                    "drive.kind: expected constant, gaussian_well or lane, got '" +
                    value + "'");
            cfg.drive_kind = value;
        } else if (key == "drive.gx") {
            cfg.drive_gx = parse_double(key, value);
        } else if (key == "drive.gy") {
            cfg.drive_gy = parse_double(key, value);
        } else if (key == "drive.amp") {
            cfg.drive_amp = parse_double(key, value);
        } else if (key == "drive.center_x") {
            cfg.drive_center_x = parse_double(key, value);
        } else if (key == "drive.center_y") {
            cfg.drive_center_y = parse_double(key, value);
        } else if (key == "drive.sigma") {
            cfg.drive_sigma = parse_double(key, value);
            if (!(cfg.drive_sigma > 0.0)) throw ConfigError("drive.sigma must be positive");
        } else if (key == "drive.speed") {
            cfg.drive_speed = parse_double(key, value);
        } else if (key == "drive.pull") {
            cfg.drive_pull = parse_double(key, value);
        } else if (key == "drive.lane_center") {
            cfg.drive_lane_center = parse_double(key, value);
        } else if (key == "drive.lane_width") {
            cfg.drive_lane_width = parse_double(key, value);
            if (!(cfg.drive_lane_width > 0.0))
                throw ConfigError("drive.lane_width must be positive");
        } else if (key == "drive.quadrature_order") {
            const long long v = parse_int(key, value);
            if (v < 2 || v > 512)
                throw ConfigError("drive.quadrature_order must lie in [2, 512]");
            cfg.quadrature_order = static_cast<int>(v);
        } else if (key == "density.kind") {
            if (value != "uniform_box" && value != "truncated_gaussian" &&
                value != "two_bump")
                throw ConfigError("density.kind: expected uniform_box, "
                                  "truncated_gaussian or two_bump, got '" +
                                  value + "'");
            cfg.density_kind = value;
            has_density_kind = true;
        } else if (key == "density.mass") {
            cfg.density_mass = parse_double(key, value);
            if (!(cfg.density_mass > 0.0))
                throw ConfigError("density.mass must be positive");
        } else if (key == "density.x_lo") {
            cfg.x_lo = parse_double(key, value);
        } else if (key == "density.x_hi") {
            cfg.x_hi = parse_double(key, value);
        } else if (key == "density.y_lo") {
            cfg.y_lo = parse_double(key, value);
        } else if (key == "density.y_hi") {
            cfg.y_hi = parse_double(key, value);
        } else if (key == "density.vx_lo") {
            cfg.vx_lo = parse_double(key, value);
        } else if (key == "density.vx_hi") {
            cfg.vx_hi = parse_double(key, value);
        } else if (key == "density.vy_lo") {
            cfg.vy_lo = parse_double(key, value);
        } else if (key == "density.vy_hi") {
            cfg.vy_hi = parse_double(key, value);
        } else if (key == "density.mu_x") {
            cfg.mu_x = parse_double(key, value);
        } else if (key == "density.mu_y") {
            cfg.mu_y = parse_double(key, value);
        } else if (key == "density.mu_vx") {
            cfg.mu_vx = parse_double(key, value);
        } else if (key == "density.mu_vy") {
            cfg.mu_vy = parse_double(key, value);
        } else if (key == "density.mu2_x") {
            cfg.mu2_x = parse_double(key, value);
        } else if (key == "density.mu2_y") {
            cfg.mu2_y = parse_double(key, value);
        } else if (key == "density.mu2_vx") {
            cfg.mu2_vx = parse_double(key, value);
        } else if (key == "density.mu2_vy") {
            cfg.mu2_vy = parse_double(key, value);
        } else if (key == "density.sigma_x") {
            cfg.sigma_x = parse_double(key, value);
            if (!(cfg.sigma_x > 0.0)) throw ConfigError("density.sigma_x must be positive");
        } else if (key == "density.sigma_v") {
            cfg.sigma_v = parse_double(key, value);
            if (!(cfg.sigma_v > 0.0)) throw ConfigError("density.sigma_v must be positive");
        } else if (key == "density.trunc") {
            cfg.trunc = parse_double(key, value);
            if (!(cfg.trunc > 0.0)) throw ConfigError("density.trunc must be positive");
        } else if (key == "run.n_particles") {
            const long long v = parse_int(key, value);
            if (v < 1) throw ConfigError("run.n_particles must be >= 1");
            cfg.n_particles = static_cast<std::size_t>(v);
            has_n = true;
        } else if (key == "run.t_final") {
            cfg.t_final = parse_double(key, value);
            if (!(cfg.t_final >= 0.0)) throw ConfigError("run.t_final must be >= 0");
            has_t_final = true;
        } else if (key == "run.dt") {
            cfg.dt = parse_double(key, value);
            if (!(cfg.dt > 0.0)) throw ConfigError("run.dt must be positive");
        } else if (key == "run.record_stride") {
            const long long v = parse_int(key, value);
            if (v < 1) throw ConfigError("run.record_stride must be >= 1");
            cfg.record_stride = static_cast<int>(v);
        } else if (key == "run.seed") {
            const long long v = parse_int(key, value);
            if (v < 0) throw ConfigError("run.seed must be >= 0");
            cfg.seed = static_cast<std::uint64_t>(v);
        } else if (key == "grid.bins") {
            const long long v = parse_int(key, value);
            if (v < 2 || v > 64) throw ConfigError("grid.bins must lie in [2, 64]");
            cfg.grid_bins = static_cast<int>(v);
        } else if (key == "grid.inflate") {
            cfg.grid_inflate = parse_double(key, value);
            if (!(cfg.grid_inflate >= 0.0)) throw ConfigError("grid.inflate must be >= 0");
        } else if (key == "output.dir") {
            if (value.empty()) throw ConfigError("output.dir must not be empty");
            cfg.out_dir = value;
        } else if (key == "output.snapshot_times") {
            cfg.snapshot_times.clear();
            for (const auto& part : detail::split_list(value)) {
                const double t = parse_double(key, part);
                if (!(t >= 0.0))
                    throw ConfigError("output.snapshot_times entries must be >= 0");
                cfg.snapshot_times.push_back(t);
            }
        } else if (key == "converge.sizes") {
            cfg.sizes.clear();
            for (const auto& part : detail::split_list(value)) {
                const long long v = parse_int(key, part);
                if (v < 1 || v > 1024)
                    throw ConfigError("converge.sizes entries must lie in [1, 1024]");
                cfg.sizes.push_back(static_cast<std::size_t>(v));
            }
        } else if (key == "converge.seeds") {
            const long long v = parse_int(key, value);
            if (v < 1 || v > 64) throw ConfigError("converge.seeds must lie in [1, 64]");
            cfg.n_seeds = static_cast<int>(v);
        } else if (key == "converge.subsamples") {
            const long long v = parse_int(key, value);
            if (v < 1 || v > 256)
                throw ConfigError("converge.subsamples must lie in [1, 256]");
            cfg.subsamples = static_cast<int>(v);
        } else if (key == "stability.dx") {
            cfg.perturb_x = parse_double(key, value);
        } else if (key == "stability.dy") {
            cfg.perturb_y = parse_double(key, value);
        } else if (key == "stability.dvx") {
            cfg.perturb_vx = parse_double(key, value);
        } else if (key == "stability.dvy") {
            cfg.perturb_vy = parse_double(key, value);
        } else {
            throw ConfigError("unknown key '" + key + "' (line " +
                              std::to_string(lineno) + ")");
        }
    }

    std::string missing;
    if (!has_density_kind) missing += " density.kind";
    if (!has_n) missing += " run.n_particles";
    if (!has_t_final) missing += " run.t_final";
    if (!missing.empty())
        throw ConfigError("missing required keys:" + missing);

    if (cfg.density_kind == "uniform_box") {
        if (!(cfg.x_lo < cfg.x_hi) || !(cfg.y_lo < cfg.y_hi) ||
            !(cfg.vx_lo < cfg.vx_hi) || !(cfg.vy_lo < cfg.vy_hi))
            throw ConfigError("density box bounds must satisfy lo < hi on every axis");
    }
    // constructing the model objects surfaces any remaining cross-field issues
    try {
        (void)cfg.force_model();
        (void)cfg.drive_field();
        (void)cfg.initial_density();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline RunConfig parse_config(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file: " + path.string());
    return parse_config(is);
}

} // namespace kinflow
