#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinflow/ensemble.hpp"
#include "kinflow/initial_density.hpp"
#include "kinflow/pairwise_sum.hpp"
#include "kinflow/parallel.hpp"

#include <json.hpp>

namespace kinflow {

struct OutOfGridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Regular 4-d grid over phase space, axes (x1, x2, v1, v2).
struct PhaseGrid4D {
    std::array<double, 4> lo{};
    std::array<double, 4> hi{};
    std::array<int, 4> bins{};

    static PhaseGrid4D from_box(const Box4& box, std::array<int, 4> bins) {
        PhaseGrid4D g{box.lo, box.hi, bins};
        g.validate();
        return g;
    }

    /// Bounding box of the ensemble inflated by the given fraction per side.
    static PhaseGrid4D covering(const ParticleEnsemble& ens, int bins_per_axis,
                                double inflate = 0.05) {
        if (ens.pts.empty())
            throw std::invalid_argument("PhaseGrid4D::covering: empty ensemble");
        PhaseGrid4D g;
        g.bins = {bins_per_axis, bins_per_axis, bins_per_axis, bins_per_axis};
        for (int a = 0; a < 4; ++a) {
            g.lo[a] = std::numeric_limits<double>::infinity();
            g.hi[a] = -std::numeric_limits<double>::infinity();
        }
        for (const auto& p : ens.pts) {
            const std::array<double, 4> c{p.x.x, p.x.y, p.v.x, p.v.y};
            for (int a = 0; a < 4; ++a) {
                g.lo[a] = std::min(g.lo[a], c[a]);
                g.hi[a] = std::max(g.hi[a], c[a]);
            }
        }
        for (int a = 0; a < 4; ++a) {
            const double w = g.hi[a] - g.lo[a];
            const double pad = w > 0.0 ? inflate * w
                                       : std::max(1e-9, 1e-9 * std::abs(g.lo[a])) + 1e-9;
            g.lo[a] -= pad;
            g.hi[a] += pad;
        }
        g.validate();
        return g;
    }

    void validate() const {
        for (int a = 0; a < 4; ++a) {
            if (bins[a] < 2)
                throw std::invalid_argument("PhaseGrid4D: need >= 2 bins per axis");
            if (!(lo[a] < hi[a]))
                throw std::invalid_argument("PhaseGrid4D: empty extent on axis " +
                                            std::to_string(a));
        }
    }

    double width(int axis) const { return (hi[axis] - lo[axis]) / bins[axis]; }

    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < 4; ++a) v *= width(a);
        return v;
    }

    std::size_t cell_count() const {
        std::size_t n = 1;
        for (int a = 0; a < 4; ++a) n *= static_cast<std::size_t>(bins[a]);
        return n;
    }

    /// Bin indices of a phase point; the upper boundary is closed.
    std::array<int, 4> locate(const PhasePoint& z) const {
        const std::array<double, 4> c{z.x.x, z.x.y, z.v.x, z.v.y};
        std::array<int, 4> idx{};
        for (int a = 0; a < 4; ++a) {
            if (c[a] < lo[a] || c[a] > hi[a])
                throw OutOfGridError("coordinate " + std::to_string(a) + " = " +
                                     std::to_string(c[a]) + " outside [" +
                                     std::to_string(lo[a]) + ", " + std::to_string(hi[a]) +
                                     "]");
            int b = static_cast<int>((c[a] - lo[a]) / width(a));
            if (b >= bins[a]) b = bins[a] - 1;
            idx[a] = b;
        }
        return idx;
    }

    std::size_t flatten(const std::array<int, 4>& idx) const {
        std::size_t f = 0;
        for (int a = 0; a < 4; ++a) f = f * bins[a] + static_cast<std::size_t>(idx[a]);
        return f;
    }

    double center(int axis, int bin) const {
        return lo[axis] + (bin + 0.5) * width(axis);
    }
};

struct DensityEstimate {
    PhaseGrid4D grid;
    std::vector<double> values;
    std::array<double, 4> bandwidth{}; // zero for histograms

    double value_at(const PhasePoint& z) const {
        return values[grid.flatten(grid.locate(z))];
    }

    /// Integral of the estimate, by pairwise summation.
    double mass() const {
        return pairwise_sum(values) * grid.cell_volume();
    }
};

/// Counting estimator: cell value = weight * count / cell volume.  Counts are
/// integers, so the partial tallies of the parallel pass merge exactly and the
/// result is independent of the thread count.
inline DensityEstimate histogram_density(const ParticleEnsemble& ens,
                                         const PhaseGrid4D& grid) {
    const std::size_t cells = grid.cell_count();
    const std::size_t n = ens.pts.size();
    std::vector<std::vector<std::uint32_t>> partial(
        static_cast<std::size_t>(max_threads()));
    std::vector<std::size_t> bad(partial.size(), n);
    const std::size_t used =
        parallel_chunks_indexed(n, [&](std::size_t slot, std::size_t b, std::size_t e) {
            auto& counts = partial[slot];
            counts.assign(cells, 0);
            for (std::size_t i = b; i < e; ++i) {
                try {
                    ++counts[grid.flatten(grid.locate(ens.pts[i]))];
                } catch (const OutOfGridError&) {
                    if (i < bad[slot]) bad[slot] = i;
                }
            }
        });
    std::size_t first_bad = n;
    for (std::size_t s : bad) first_bad = std::min(first_bad, s);
    if (first_bad < n) {
        const auto& p = ens.pts[first_bad];
        throw OutOfGridError("particle " + std::to_string(first_bad) + " at (" +
                             std::to_string(p.x.x) + ", " + std::to_string(p.x.y) + ", " +
                             std::to_string(p.v.x) + ", " + std::to_string(p.v.y) +
                             ") lies outside the density grid");
    }

    DensityEstimate est;
    est.grid = grid;
    est.values.assign(cells, 0.0);
    const double scale = ens.weight / grid.cell_volume();
    for (std::size_t c = 0; c < cells; ++c) {
        std::uint64_t total = 0;
        for (std::size_t w = 0; w < used; ++w)
            if (!partial[w].empty()) total += partial[w][c];
        est.values[c] = scale * static_cast<double>(total);
    }
    return est;
}

/// Product-Gaussian KDE projected onto the grid: each particle spreads its
/// mass over cells with per-axis weights equal to exact Gaussian cell
/// integrals (erf differences), renormalized per axis so no mass is lost at
/// the grid boundary.  Bandwidths follow Scott's rule, h_a = sigma_a n^{-1/8}.
inline DensityEstimate kde_density(const ParticleEnsemble& ens, const PhaseGrid4D& grid) {
    const std::size_t n = ens.pts.size();
    if (n < 2) throw std::invalid_argument("kde_density: need >= 2 particles");

    std::array<double, 4> h{};
    {
        std::array<double, 4> mean{}, var{};
        for (const auto& p : ens.pts) {
            const std::array<double, 4> c{p.x.x, p.x.y, p.v.x, p.v.y};
            for (int a = 0; a < 4; ++a) mean[a] += c[a];
        }
        for (int a = 0; a < 4; ++a) mean[a] /= static_cast<double>(n);
        for (const auto& p : ens.pts) {
            const std::array<double, 4> c{p.x.x, p.x.y, p.v.x, p.v.y};
            for (int a = 0; a < 4; ++a) var[a] += (c[a] - mean[a]) * (c[a] - mean[a]);
        }
        const double scott = std::pow(static_cast<double>(n), -0.125);
        for (int a = 0; a < 4; ++a) {
            const double sd = std::sqrt(var[a] / static_cast<double>(n - 1));
            h[a] = sd > 0.0 ? sd * scott : grid.width(a);
        }
    }

    DensityEstimate est;
    est.grid = grid;
    est.bandwidth = h;
    est.values.assign(grid.cell_count(), 0.0);

    const double inv_sqrt2 = 0.70710678118654752440084436210485;
    std::array<std::vector<double>, 4> row;
    std::array<int, 4> first{}, count{};
    for (std::size_t i = 0; i < n; ++i) {
        const std::array<double, 4> c{ens.pts[i].x.x, ens.pts[i].x.y, ens.pts[i].v.x,
                                      ens.pts[i].v.y};
        for (int a = 0; a < 4; ++a) {
            const double w = grid.width(a);
            int b0 = static_cast<int>(std::floor((c[a] - 5.0 * h[a] - grid.lo[a]) / w));
            int b1 = static_cast<int>(std::floor((c[a] + 5.0 * h[a] - grid.lo[a]) / w));
            b0 = std::clamp(b0, 0, grid.bins[a] - 1);
            b1 = std::clamp(b1, 0, grid.bins[a] - 1);
            first[a] = b0;
            count[a] = b1 - b0 + 1;
            row[a].resize(static_cast<std::size_t>(count[a]));
            double total = 0.0;
            for (int b = b0; b <= b1; ++b) {
                const double e0 = grid.lo[a] + b * w;
                const double cdf0 = 0.5 * std::erfc(-(e0 - c[a]) / h[a] * inv_sqrt2);
                const double cdf1 = 0.5 * std::erfc(-(e0 + w - c[a]) / h[a] * inv_sqrt2);
                row[a][static_cast<std::size_t>(b - b0)] = cdf1 - cdf0;
                total += cdf1 - cdf0;
            }
            if (!(total > 0.0))
                throw OutOfGridError("particle " + std::to_string(i) +
                                     " contributes no kernel mass inside the grid");
            for (auto& r : row[a]) r /= total;
        }
        for (int b0 = 0; b0 < count[0]; ++b0)
            for (int b1 = 0; b1 < count[1]; ++b1) {
                const double w01 = row[0][b0] * row[1][b1];
                for (int b2 = 0; b2 < count[2]; ++b2) {
                    const double w012 = w01 * row[2][b2];
                    const std::size_t base = grid.flatten(
                        {first[0] + b0, first[1] + b1, first[2] + b2, first[3]});
                    for (int b3 = 0; b3 < count[3]; ++b3)
                        est.values[base + b3] += w012 * row[3][b3];
                }
            }
    }
    const double scale = ens.weight / grid.cell_volume();
    for (double& v : est.values) v *= scale;
    return est;
}

inline double sup_density(const DensityEstimate& est) {
    double sup = 0.0;
    for (double v : est.values) sup = std::max(sup, v);
    return sup;
}

/// Per-particle relative mismatch between an estimated density and the
/// transported prediction f0(z_i(0)) e^{-L_i(t)} of the Liouville formula.
inline std::vector<double> liouville_residual(const ParticleEnsemble& ens,
                                              const InitialDensity& f0,
                                              const DensityEstimate& est,
                                              double floor = 1e-8) {
    const std::size_t n = ens.pts.size();
    if (ens.initial.size() != n || ens.log_jacobian.size() != n)
        throw std::invalid_argument(
            "liouville_residual: ensemble lacks retained initial points");
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = f0.value(ens.initial[i]) * std::exp(-ens.log_jacobian[i]);
        const double est_i = est.value_at(ens.pts[i]);
        r[i] = std::abs(est_i - pred) / std::max(pred, floor);
    }
    return r;
}

/// Same residual against an arbitrary density function (e.g. a closed form).
template <class DensityFn>
std::vector<double> liouville_residual_fn(const ParticleEnsemble& ens,
                                          const InitialDensity& f0, DensityFn&& f_hat,
                                          double floor = 1e-8) {
    const std::size_t n = ens.pts.size();
    if (ens.initial.size() != n || ens.log_jacobian.size() != n)
        throw std::invalid_argument(
            "liouville_residual: ensemble lacks retained initial points");
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pred = f0.value(ens.initial[i]) * std::exp(-ens.log_jacobian[i]);
        const double est_i = f_hat(ens.pts[i]);
        r[i] = std::abs(est_i - pred) / std::max(pred, floor);
    }
    return r;
}

/// Flat binary of cell values (little-endian f64, C-order over axes) with a
/// JSON header describing the grid.
inline void export_density(const DensityEstimate& est, const std::filesystem::path& base) {
    std::filesystem::path bin = base;
    bin.replace_extension(".bin");
    std::ofstream os(bin, std::ios::binary);
    if (!os) throw IoError("cannot open density export: " + bin.string());
    for (double v : est.values) detail::put_f64(os, v);
    if (!os) throw IoError("short write on density export: " + bin.string());

    nlohmann::json j;
    j["lo"] = est.grid.lo;
    j["hi"] = est.grid.hi;
    j["bins"] = est.grid.bins;
    j["cell_volume"] = est.grid.cell_volume();
    j["cells"] = est.values.size();
    j["bandwidth"] = est.bandwidth;
    j["order"] = "C order, axes (x1, x2, v1, v2)";
    std::filesystem::path jpath = base;
    jpath.replace_extension(".json");
    std::ofstream js(jpath);
    if (!js) throw IoError("cannot open density header: " + jpath.string());
    js << j.dump(2) << '\n';
}

/// 2-d marginal over a pair of axes (the other two integrated out), as CSV.
inline void export_marginal_csv(const DensityEstimate& est, int axis_a, int axis_b,
                                const std::filesystem::path& path) {
    if (axis_a == axis_b || axis_a < 0 || axis_b < 0 || axis_a > 3 || axis_b > 3)
        throw std::invalid_argument("export_marginal_csv: need two distinct axes in 0..3");
    int oa = -1, ob = -1;
    for (int a = 0; a < 4; ++a)
        if (a != axis_a && a != axis_b) (oa < 0 ? oa : ob) = a;
    const double slab = est.grid.width(oa) * est.grid.width(ob);

    std::ofstream os(path);
    if (!os) throw IoError("cannot open marginal export: " + path.string());
    os << "axis" << axis_a << "_center,axis" << axis_b << "_center,value\n";
    char line[128];
    for (int ba = 0; ba < est.grid.bins[axis_a]; ++ba)
        for (int bb = 0; bb < est.grid.bins[axis_b]; ++bb) {
            double acc = 0.0;
            std::array<int, 4> idx{};
            idx[axis_a] = ba;
            idx[axis_b] = bb;
            for (int ca = 0; ca < est.grid.bins[oa]; ++ca)
                for (int cb = 0; cb < est.grid.bins[ob]; ++cb) {
                    idx[oa] = ca;
                    idx[ob] = cb;
                    acc += est.values[est.grid.flatten(idx)];
                }
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n",
                          est.grid.center(axis_a, ba), est.grid.center(axis_b, bb),
                          acc * slab);
            os << line;
        }
    if (!os) throw IoError("short write on marginal export: " + path.string());
}

} // namespace kinflow
