#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kinflow/config.hpp"
#include "kinflow/diagnostics.hpp"
#include "kinflow/flow.hpp"
#include "kinflow/phase_density.hpp"
#include "kinflow/stability.hpp"
#include "kinflow/transport.hpp"

#include <json.hpp>

namespace kinflow {

inline constexpr const char* artifact_version = "0.1.0";

struct HarnessOptions {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool force = false;
    /// Debug override of the energy cap, to exercise the failure path.
    std::optional<double> e_cap_override;
    /// Alternative second config for stability runs (its density becomes the
    /// perturbed partner); defaults to shifting the primary density by the
    /// stability.* offsets.
    std::optional<RunConfig> config_b;
};

namespace detail {

inline RunConfig effective_config(RunConfig cfg, const HarnessOptions& opts) {
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.out_dir) cfg.out_dir = *opts.out_dir;
    return cfg;
}

/// FNV-1a over the canonical key-value text, seed excluded (the seed is its
/// own suffix in the directory name).
inline std::string config_hash(const RunConfig& cfg) {
    auto items = cfg.canonical_items();
    items.erase("run.seed");
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [k, v] : items) {
        mix(k);
        mix("=");
        mix(v);
        mix("\n");
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::filesystem::path prepare_run_dir(const RunConfig& cfg, bool force) {
    const std::filesystem::path dir =
        std::filesystem::path(cfg.out_dir) /
        (config_hash(cfg) + "_s" + std::to_string(cfg.seed));
    std::error_code ec;
    if (std::filesystem::exists(dir, ec)) {
        if (!force)
            throw IoError("run directory exists: " + dir.string() +
                          " (use --force to overwrite)");
    } else {
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create run directory " + dir.string() + ": " +
                              ec.message());
    }
    return dir;
}

inline void write_json_atomic(const nlohmann::json& j, const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp);
        if (!os) throw IoError("cannot open " + tmp.string());
        os << j.dump(2) << '\n';
        if (!os) throw IoError("short write on " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

inline nlohmann::json manifest_json(const RunConfig& cfg, const BoundCertificates& b,
                                    double wall_seconds) {
    nlohmann::json j;
    j["artifact_version"] = artifact_version;
    j["config"] = cfg.canonical_items();
    j["derived"] = {{"total_mass", b.total_mass},
                    {"e0", b.e0},
                    {"m2_0", b.m2_0},
                    {"sup_f0", b.sup_f0},
                    {"f_inf_bound", b.f_inf_bound},
                    {"grad_v_bound", b.grad_v_bound},
                    {"sup_g", b.sup_g},
                    {"forcing_a", b.forcing_a},
                    {"e_cap", b.e_cap},
                    {"c_max", b.c_max},
                    {"kernel_lipschitz", b.kernel_lipschitz}};
    j["wall_seconds"] = wall_seconds;
    return j;
}

inline std::string csv_row(const DiagnosticRecord& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.mass,
                  r.kinetic, r.second_moment, r.sup_log_growth,
                  r.sup_density ? *r.sup_density : 0.0);
    return buf;
}

inline std::string snapshot_name(double t) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", t);
    std::string s(buf);
    for (char& c : s)
        if (c == '.') c = 'p';
    return "snapshot_t" + s + ".kflo";
}

struct SimulationOutput {
    std::filesystem::path run_dir;
    std::vector<DiagnosticRecord> records;
    BoundCertificates certs;
};

/// Shared pipeline of `simulate` and `invariants`: prepare the directory,
/// write the manifest, sample, integrate, stream diagnostics, snapshot.
inline SimulationOutput run_simulation(const RunConfig& cfg, bool force) {
    const auto t_start = std::chrono::steady_clock::now();
    const InitialDensity f0 = cfg.initial_density();
    const CutoffForce cf = cfg.cutoff(cfg.n_particles);
    const MollifiedDrive md = cfg.mollified(cfg.n_particles);

    SimulationOutput out;
    out.certs = BoundCertificates::derive(cf, md, f0);
    out.run_dir = prepare_run_dir(cfg, force);

    if (cfg.dt > dt_max_hint(cf))
        std::cerr << "warning: run.dt = " << cfg.dt
                  << " exceeds the stiffness hint " << dt_max_hint(cf)
                  << " for this cut-off\n";

    write_json_atomic(manifest_json(cfg, out.certs, 0.0), out.run_dir / "manifest.json");

    std::vector<double> visits = cfg.snapshot_times;
    std::sort(visits.begin(), visits.end());
    for (double t : visits)
        if (t > cfg.t_final)
            throw ConfigError("output.snapshot_times entry " + std::to_string(t) +
                              " exceeds run.t_final");

    ParticleEnsemble ens = sample_initial(f0, cfg.n_particles, cfg.seed);

    std::ofstream csv(out.run_dir / "diagnostics.csv");
    if (!csv) throw IoError("cannot open diagnostics.csv under " + out.run_dir.string());
    csv << "t,mass,kinetic,m2,sup_neg_logJ,sup_density\n";

    auto with_density = [&cfg](const ParticleEnsemble& e, DiagnosticRecord rec) {
        const PhaseGrid4D grid = PhaseGrid4D::covering(e, cfg.grid_bins, cfg.grid_inflate);
        rec.sup_density = sup_density(histogram_density(e, grid));
        return rec;
    };

    DiagnosticRecord r0 = with_density(ens, record(ens));
    csv << csv_row(r0);
    out.records.push_back(r0);
    if (!visits.empty() && visits.front() == 0.0)
        save_snapshot(ens, out.run_dir / snapshot_name(0.0));

    AdvanceOptions opts;
    opts.record_interval = cfg.record_interval();
    opts.visit_times = visits;
    opts.on_visit = [&](const ParticleEnsemble& e) {
        save_snapshot(e, out.run_dir / snapshot_name(e.time));
    };
    opts.observer = [&](const ParticleEnsemble& e, const DiagnosticRecord& rec) {
        const DiagnosticRecord full = with_density(e, rec);
        csv << csv_row(full);
        out.records.push_back(full);
    };
    advance(ens, cf, md, cfg.t_final, cfg.dt, opts);
    if (!csv) throw IoError("short write on diagnostics.csv");
    csv.close();

    save_snapshot(ens, out.run_dir / "snapshot_final.kflo");

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    write_json_atomic(manifest_json(cfg, out.certs, wall), out.run_dir / "manifest.json");
    return out;
}

} // namespace detail

inline int cmd_simulate(const RunConfig& config, const HarnessOptions& opts = {}) {
    const RunConfig cfg = detail::effective_config(config, opts);
    const auto out = detail::run_simulation(cfg, opts.force);
    std::cout << "simulate: " << out.records.size() << " records -> "
              << out.run_dir.string() << "\n";
    return 0;
}

inline int cmd_invariants(const RunConfig& config, const HarnessOptions& opts = {}) {
    const RunConfig cfg = detail::effective_config(config, opts);
    auto out = detail::run_simulation(cfg, opts.force);
    if (opts.e_cap_override) out.certs.e_cap = *opts.e_cap_override;

    // the debug override replaces the cap verbatim, floor included
    const bool floor = !opts.e_cap_override.has_value();
    const CertificateResult results[] = {
        certify_mass(out.records),
        certify_energy(out.records, out.certs, 1e-2, floor),
        certify_second_moment(out.records, out.certs, 1e-2, floor),
        certify_maximum_principle(out.records, out.certs),
    };

    nlohmann::json j;
    j["constants"] = detail::manifest_json(cfg, out.certs, 0.0)["derived"];
    bool all_pass = true;
    std::printf("%-26s %-6s %-14s %s\n", "certificate", "pass", "worst", "at_t");
    for (const auto& r : results) {
        all_pass = all_pass && r.pass;
        std::printf("%-26s %-6s %-14.6g %.6g\n", r.name.c_str(), r.pass ? "yes" : "NO",
                    r.worst, r.worst_t);
        j["certificates"].push_back({{"name", r.name},
                                     {"pass", r.pass},
                                     {"worst", r.worst},
                                     {"worst_t", r.worst_t}});
    }
    j["all_pass"] = all_pass;
    detail::write_json_atomic(j, out.run_dir / "certificates.json");
    return all_pass ? 0 : 1;
}

inline int cmd_stability(const RunConfig& config, const HarnessOptions& opts = {}) {
    const RunConfig cfg = detail::effective_config(config, opts);
    const InitialDensity da = cfg.initial_density();
    const InitialDensity db = opts.config_b
                                  ? opts.config_b->initial_density()
                                  : da.shifted(cfg.perturb_dx(), cfg.perturb_dv());

    const auto dir = detail::prepare_run_dir(cfg, opts.force);
    const StabilityReport rep =
        dobrushin_pair_run(da, db, cfg.n_particles, cfg.seed, cfg.force_model(),
                           cfg.theta, cfg.drive_field(), cfg.quadrature_order,
                           cfg.t_final, cfg.dt);

    nlohmann::json j;
    j["t"] = rep.t;
    j["w1_initial"] = rep.w1_initial;
    j["w1_final"] = rep.w1_final;
    j["kernel_lipschitz"] = rep.kernel_lipschitz;
    j["bound"] = rep.bound;
    j["within_bound"] = rep.within_bound;
    j["config"] = cfg.canonical_items();
    detail::write_json_atomic(j, dir / "stability.json");

    std::printf("stability: W1(0) = %.6g, W1(%.6g) = %.6g, bound = %.6g -> %s\n",
                rep.w1_initial, rep.t, rep.w1_final, rep.bound,
                rep.within_bound ? "within bound" : "VIOLATION");
    return rep.within_bound ? 0 : 1;
}

inline int cmd_converge(const RunConfig& config, const HarnessOptions& opts = {}) {
    const RunConfig cfg = detail::effective_config(config, opts);
    if (cfg.sizes.size() < 2)
        throw ConfigError("converge requires converge.sizes with at least two entries");

    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < cfg.n_seeds; ++s)
        seeds.push_back(cfg.seed + static_cast<std::uint64_t>(s));

    const auto dir = detail::prepare_run_dir(cfg, opts.force);
    const ConvergenceStudy study = convergence_study(
        cfg.initial_density(), cfg.sizes, seeds, cfg.force_model(), cfg.theta,
        cfg.drive_field(), cfg.quadrature_order, cfg.t_final, cfg.dt,
        static_cast<std::size_t>(cfg.subsamples));

    std::ofstream csv(dir / "convergence.csv");
    if (!csv) throw IoError("cannot open convergence.csv under " + dir.string());
    csv << "n_low,n_high,seed,t,w1\n";
    char buf[160];
    for (const auto& row : study.rows) {
        std::snprintf(buf, sizeof buf, "%zu,%zu,%llu,%.17g,%.17g\n", row.n_low,
                      row.n_high, static_cast<unsigned long long>(row.seed), row.t,
                      row.w1);
        csv << buf;
    }
    if (!csv) throw IoError("short write on convergence.csv");

    nlohmann::json j;
    j["t_final"] = study.t_final;
    for (std::size_t k = 0; k < study.pairs.size(); ++k) {
        j["pairs"].push_back({{"n_low", study.pairs[k].first},
                              {"n_high", study.pairs[k].second},
                              {"median_w1_t0", study.median_t0[k]},
                              {"median_w1_tf", study.median_tf[k]}});
        std::printf("converge: %4zu -> %4zu  median W1(0) = %.6g  median W1(%g) = %.6g\n",
                    study.pairs[k].first, study.pairs[k].second, study.median_t0[k],
                    study.t_final, study.median_tf[k]);
    }
    j["config"] = cfg.canonical_items();
    detail::write_json_atomic(j, dir / "convergence_summary.json");
    return 0;
}

} // namespace kinflow
