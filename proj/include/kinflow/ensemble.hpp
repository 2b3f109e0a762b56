#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinflow/initial_density.hpp"
#include "kinflow/pairwise_sum.hpp"
#include "kinflow/rng.hpp"
#include "kinflow/vec2.hpp"

#include <json.hpp>

namespace kinflow {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Empirical measure state: N phase points with a common weight M0/N, the
/// per-particle accumulated log phase-volume Jacobian, and the retained
/// initial points (needed to evaluate the transported density along the flow).
struct ParticleEnsemble {
    std::vector<PhasePoint> pts;
    std::vector<double> log_jacobian;
    std::vector<PhasePoint> initial;
    double weight = 0.0;
    double time = 0.0;

    std::size_t size() const { return pts.size(); }

    /// Total mass, constant by construction: weight does not change and no
    /// particle is ever created or destroyed.
    double mass() const { return weight * static_cast<double>(pts.size()); }

    double kinetic_energy() const {
        return weight * pairwise_sum(pts.size(), [this](std::size_t i) {
                   return 0.5 * norm2(pts[i].v);
               });
    }

    double second_moment() const {
        return weight * pairwise_sum(pts.size(), [this](std::size_t i) {
                   return norm2(pts[i].x);
               });
    }
};

/// Draw N points from f0/M0 by rejection against the uniform envelope on the
/// support box, with weight M0/N each.  Deterministic given the seed.
inline ParticleEnsemble sample_initial(const InitialDensity& f0, std::size_t n,
                                       std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("sample_initial: need n >= 1");
    const Box4& box = f0.support();
    const double envelope = f0.sup_value();
    if (!(envelope > 0.0) || !std::isfinite(envelope))
        throw std::invalid_argument("sample_initial: unusable density sup bound");

    ParticleEnsemble ens;
    ens.pts.resize(n);
    ens.log_jacobian.assign(n, 0.0);
    ens.weight = f0.mass() / static_cast<double>(n);
    Rng rng(derive_seed(seed, 0));
    for (std::size_t i = 0; i < n; ++i) {
        PhasePoint z;
        std::size_t attempts = 0;
        for (;;) {
            z.x.x = rng.uniform(box.lo[0], box.hi[0]);
            z.x.y = rng.uniform(box.lo[1], box.hi[1]);
            z.v.x = rng.uniform(box.lo[2], box.hi[2]);
            z.v.y = rng.uniform(box.lo[3], box.hi[3]);
            if (rng.uniform() * envelope <= f0.value(z)) break;
            if (++attempts > 100000)
                throw std::runtime_error("sample_initial: rejection stalled");
        }
        ens.pts[i] = z;
    }
    ens.initial = ens.pts;
    return ens;
}

// -- snapshot format ----------------------------------------------------------
//
// Binary: magic "KFLO", u32 version, u64 N, f64 time, f64 weight, then N
// records of 5 f64 (x1, x2, v1, v2, logJ).  All fields little endian.  A JSON
// twin with the same payload is written next to it for inspection.

namespace detail {
constexpr std::uint32_t snapshot_version = 1;

inline void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    os.write(b, 8);
}

inline void put_f64(std::ostream& os, double x) {
    put_u64(os, std::bit_cast<std::uint64_t>(x));
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }
} // namespace detail

inline void save_snapshot(const ParticleEnsemble& ens, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open snapshot for writing: " + path.string());
    os.write("KFLO", 4);
    detail::put_u32(os, detail::snapshot_version);
    detail::put_u64(os, ens.pts.size());
    detail::put_f64(os, ens.time);
    detail::put_f64(os, ens.weight);
    for (std::size_t i = 0; i < ens.pts.size(); ++i) {
        detail::put_f64(os, ens.pts[i].x.x);
        detail::put_f64(os, ens.pts[i].x.y);
        detail::put_f64(os, ens.pts[i].v.x);
        detail::put_f64(os, ens.pts[i].v.y);
        detail::put_f64(os, ens.log_jacobian[i]);
    }
    if (!os) throw IoError("short write on snapshot: " + path.string());

    nlohmann::json j;
    j["format"] = "KFLO";
    j["version"] = detail::snapshot_version;
    j["n"] = ens.pts.size();
    j["time"] = ens.time;
    j["weight"] = ens.weight;
    auto& rows = j["particles"] = nlohmann::json::array();
    for (std::size_t i = 0; i < ens.pts.size(); ++i)
        rows.push_back({ens.pts[i].x.x, ens.pts[i].x.y, ens.pts[i].v.x, ens.pts[i].v.y,
                        ens.log_jacobian[i]});
    std::filesystem::path jpath = path;
    jpath.replace_extension(".json");
    std::ofstream js(jpath);
    if (!js) throw IoError("cannot open snapshot twin: " + jpath.string());
    js << j.dump(2) << '\n';
}

/// Load a binary snapshot.  The retained initial points are not part of the
/// format; they are reset to the loaded state, so a loaded ensemble restarts
/// the Jacobian bookkeeping from its own time.
inline ParticleEnsemble load_snapshot(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open snapshot: " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "KFLO")
        throw IoError("bad snapshot magic: " + path.string());
    const std::uint32_t version = detail::get_u32(is);
    if (version != detail::snapshot_version)
        throw IoError("unsupported snapshot version " + std::to_string(version));
    const std::uint64_t n = detail::get_u64(is);
    ParticleEnsemble ens;
    ens.time = detail::get_f64(is);
    ens.weight = detail::get_f64(is);
    ens.pts.resize(n);
    ens.log_jacobian.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        ens.pts[i].x.x = detail::get_f64(is);
        ens.pts[i].x.y = detail::get_f64(is);
        ens.pts[i].v.x = detail::get_f64(is);
        ens.pts[i].v.y = detail::get_f64(is);
        ens.log_jacobian[i] = detail::get_f64(is);
    }
    if (!is) throw IoError("truncated snapshot: " + path.string());
    ens.initial = ens.pts;
    return ens;
}

} // namespace kinflow
