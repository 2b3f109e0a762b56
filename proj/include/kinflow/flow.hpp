#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "kinflow/cutoff_force.hpp"
#include "kinflow/diagnostics.hpp"
#include "kinflow/drive.hpp"
#include "kinflow/ensemble.hpp"
#include "kinflow/neighbor_grid.hpp"
#include "kinflow/parallel.hpp"

namespace kinflow {

/// Phase derivative of one particle: dx/dt, dv/dt and the log-Jacobian rate
/// d/dt logJ = div_v(F^N * mu + G^N) evaluated along the trajectory.
struct PhaseDeriv {
    Vec2 dx;
    Vec2 dv;
    double dlogj = 0.0;
};

namespace detail {
inline std::uint64_t fingerprint(std::span<const PhasePoint> pts) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : pts) {
        for (double c : {p.x.x, p.x.y, p.v.x, p.v.y}) {
            h ^= std::bit_cast<std::uint64_t>(c);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}
} // namespace detail

/// Mean-field right hand side against a frozen ensemble snapshot:
///
///   dZ_i = (v_i,  weight * sum_j F^N(x_i - x_j, v_i - v_j) + G^N(x_i, v_i))
///
/// The pair sum runs over the grid candidates in ascending j (self term
/// included: F^N(0,0) = 0 exactly), so the result does not depend on the
/// thread count or on whether a grid or an all-pairs loop produced the
/// candidate set.
inline void eval_rhs(std::span<const PhasePoint> pts, double weight,
                     const CutoffForce& cf, const MollifiedDrive& md,
                     std::span<PhaseDeriv> out) {
    const std::size_t n = pts.size();
    if (out.size() != n) throw std::invalid_argument("eval_rhs: output size mismatch");

    if (cf.model().f_inf_bound() == 0.0) {
        // Interaction vanishes identically; skip the neighbor machinery.
        parallel_for(n, [&](std::size_t i) {
            out[i] = {pts[i].v, md(pts[i].x, pts[i].v), MollifiedDrive::div_v()};
        });
        return;
    }

    NeighborGrid grid(2.0 * cf.model().R());
    grid.build(pts);
    parallel_chunks(n, [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint32_t> cand;
        for (std::size_t i = begin; i < end; ++i) {
            grid.gather(pts[i].x, cand);
            Vec2 fsum;
            double tr = 0.0;
            for (std::uint32_t j : cand) {
                const Vec2 dx = pts[i].x - pts[j].x;
                const Vec2 dv = pts[i].v - pts[j].v;
                fsum += cf(dx, dv);
                tr += cf.grad_v_trace(dx, dv);
            }
            out[i] = {pts[i].v, weight * fsum + md(pts[i].x, pts[i].v),
                      weight * tr + MollifiedDrive::div_v()};
        }
    });
}

/// Single-particle view of the right hand side.  Builds its own grid at
/// construction and refuses to answer if the ensemble positions have changed
/// since (the grid would silently return wrong neighbor sets).
class MeanFieldRhs {
public:
    MeanFieldRhs(const ParticleEnsemble& ens, const CutoffForce& cf,
                 const MollifiedDrive& md)
        : ens_(ens), cf_(cf), md_(md), grid_(2.0 * cf.model().R()),
          stamp_(detail::fingerprint(ens.pts)) {
        grid_.build(ens.pts);
    }

    PhaseDeriv operator()(std::size_t i) const {
        if (i >= ens_.pts.size())
            throw std::out_of_range("MeanFieldRhs: particle index out of range");
        if (detail::fingerprint(ens_.pts) != stamp_)
            throw std::logic_error("MeanFieldRhs: ensemble moved, grid is stale");
        std::vector<std::uint32_t> cand;
        grid_.gather(ens_.pts[i].x, cand);
        Vec2 fsum;
        double tr = 0.0;
        for (std::uint32_t j : cand) {
            const Vec2 dx = ens_.pts[i].x - ens_.pts[j].x;
            const Vec2 dv = ens_.pts[i].v - ens_.pts[j].v;
            fsum += cf_(dx, dv);
            tr += cf_.grad_v_trace(dx, dv);
        }
        return {ens_.pts[i].v, ens_.weight * fsum + md_(ens_.pts[i].x, ens_.pts[i].v),
                ens_.weight * tr + MollifiedDrive::div_v()};
    }

private:
    const ParticleEnsemble& ens_;
    const CutoffForce& cf_;
    const MollifiedDrive& md_;
    NeighborGrid grid_;
    std::uint64_t stamp_;
};

/// One classical RK4 step of the coupled characteristic system, the empirical
/// measure refreshed at every stage, the log-Jacobian co-integrated with the
/// state.  dt may be negative (time-reversed flow) but not zero.
inline void step(ParticleEnsemble& ens, const CutoffForce& cf, const MollifiedDrive& md,
                 double dt) {
    if (dt == 0.0 || !std::isfinite(dt))
        throw std::invalid_argument("step: dt must be finite and nonzero");
    const std::size_t n = ens.pts.size();
    std::vector<PhaseDeriv> k1(n), k2(n), k3(n), k4(n);
    std::vector<PhasePoint> stage(n);

    eval_rhs(ens.pts, ens.weight, cf, md, k1);
    parallel_for(n, [&](std::size_t i) {
        stage[i] = {ens.pts[i].x + 0.5 * dt * k1[i].dx, ens.pts[i].v + 0.5 * dt * k1[i].dv};
    });
    eval_rhs(stage, ens.weight, cf, md, k2);
    parallel_for(n, [&](std::size_t i) {
        stage[i] = {ens.pts[i].x + 0.5 * dt * k2[i].dx, ens.pts[i].v + 0.5 * dt * k2[i].dv};
    });
    eval_rhs(stage, ens.weight, cf, md, k3);
    parallel_for(n, [&](std::size_t i) {
        stage[i] = {ens.pts[i].x + dt * k3[i].dx, ens.pts[i].v + dt * k3[i].dv};
    });
    eval_rhs(stage, ens.weight, cf, md, k4);

    const double h = dt / 6.0;
    parallel_for(n, [&](std::size_t i) {
        ens.pts[i].x += h * (k1[i].dx + 2.0 * k2[i].dx + 2.0 * k3[i].dx + k4[i].dx);
        ens.pts[i].v += h * (k1[i].dv + 2.0 * k2[i].dv + 2.0 * k3[i].dv + k4[i].dv);
        ens.log_jacobian[i] +=
            h * (k1[i].dlogj + 2.0 * k2[i].dlogj + 2.0 * k3[i].dlogj + k4[i].dlogj);
    });
    ens.time += dt;
}

struct AdvanceOptions {
    /// Spacing of diagnostic records in time; 0 means only the final state is
    /// recorded.  Record times live on the absolute grid t0 + k * interval,
    /// independent of dt: steps are shortened to land on them exactly.
    double record_interval = 0.0;
    std::function<void(const ParticleEnsemble&, const DiagnosticRecord&)> observer;
    /// Extra times (sorted ascending) the integrator must land on exactly,
    /// e.g. snapshot times.  They do not create diagnostic records.
    std::vector<double> visit_times;
    std::function<void(const ParticleEnsemble&)> on_visit;
};

/// Integrate to t_final, recording diagnostics along the way.  Returns the
/// records in time order; the final time always carries one.  t_final equal
/// to the current time yields an empty trajectory.
inline std::vector<DiagnosticRecord> advance(ParticleEnsemble& ens, const CutoffForce& cf,
                                             const MollifiedDrive& md, double t_final,
                                             double dt, AdvanceOptions opts = {}) {
    if (!(dt > 0.0)) throw std::invalid_argument("advance: dt must be positive");
    if (t_final < ens.time - 1e-12 * std::max(1.0, std::abs(ens.time)))
        throw std::invalid_argument("advance: t_final lies in the past");

    std::vector<DiagnosticRecord> records;
    const double t0 = ens.time;
    if (t_final <= t0) return records;

    const double interval = opts.record_interval;
    std::size_t k = 1;
    std::size_t vi = 0;
    while (ens.time < t_final) {
        double stop = t_final;
        if (interval > 0.0) {
            const double next_record = t0 + static_cast<double>(k) * interval;
            if (next_record <= ens.time) { // interval below time resolution
                ++k;
                continue;
            }
            stop = std::min(stop, next_record);
        }
        if (vi < opts.visit_times.size()) {
            const double next_visit = opts.visit_times[vi];
            if (next_visit <= ens.time) { // stale or duplicate visit time
                ++vi;
                continue;
            }
            stop = std::min(stop, next_visit);
        }
        while (ens.time + dt < stop - 1e-12) step(ens, cf, md, dt);
        if (stop > ens.time) step(ens, cf, md, stop - ens.time);
        ens.time = stop; // snap off accumulated roundoff
        const bool was_record =
            interval > 0.0 && stop == t0 + static_cast<double>(k) * interval;
        if (was_record) ++k;
        if (vi < opts.visit_times.size() && stop == opts.visit_times[vi]) {
            ++vi;
            if (opts.on_visit) opts.on_visit(ens);
        }
        if (was_record || stop == t_final) {
            DiagnosticRecord rec = record(ens);
            if (opts.observer) opts.observer(ens, rec);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

} // namespace kinflow
