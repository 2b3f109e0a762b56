#pragma once

// Independent oracles for the test suites: brute-force reference
// implementations, finite differences, closed forms and scalar ODE
// integration.  Everything here is deliberately naive; the point is that none
// of it shares code with the library paths it checks.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "kinflow/cutoff_force.hpp"
#include "kinflow/drive.hpp"
#include "kinflow/ensemble.hpp"
#include "kinflow/transport.hpp"
#include "kinflow/vec2.hpp"

namespace oracle {

using kinflow::CutoffForce;
using kinflow::DiscreteMeasure;
using kinflow::MollifiedDrive;
using kinflow::ParticleEnsemble;
using kinflow::PhaseDeriv;
using kinflow::PhasePoint;
using kinflow::Vec2;

/// All-pairs right hand side, ascending j, no grid.  The candidate pruning of
/// the grid path must not change a single bit relative to this loop.
inline std::vector<PhaseDeriv> rhs_all_pairs(const std::vector<PhasePoint>& pts,
                                             double weight, const CutoffForce& cf,
                                             const MollifiedDrive& md) {
    std::vector<PhaseDeriv> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        Vec2 fsum;
        double tr = 0.0;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            const Vec2 dx = pts[i].x - pts[j].x;
            const Vec2 dv = pts[i].v - pts[j].v;
            fsum += cf(dx, dv);
            tr += cf.grad_v_trace(dx, dv);
        }
        out[i] = {pts[i].v, weight * fsum + md(pts[i].x, pts[i].v),
                  weight * tr + MollifiedDrive::div_v()};
    }
    return out;
}

/// Central finite-difference velocity gradient of the cut-off force.
inline kinflow::Mat2 grad_v_fd(const CutoffForce& cf, Vec2 x, Vec2 v, double h = 1e-6) {
    const Vec2 fxp = cf(x, {v.x + h, v.y});
    const Vec2 fxm = cf(x, {v.x - h, v.y});
    const Vec2 fyp = cf(x, {v.x, v.y + h});
    const Vec2 fym = cf(x, {v.x, v.y - h});
    const double s = 0.5 / h;
    return {(fxp.x - fxm.x) * s, (fyp.x - fym.x) * s,
            (fxp.y - fxm.y) * s, (fyp.y - fym.y) * s};
}

/// Exact W1 by enumerating all permutations; usable up to n = 8 or so.
inline double w1_brute_force(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    const std::size_t n = a.size();
    std::vector<std::uint32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    double best = std::numeric_limits<double>::infinity();
    do {
        best = std::min(best, kinflow::detail::assignment_cost(a, b, perm));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Decoupled characteristics (F = 0, g = g0 constant):
///   v(t) = g0 + (v0 - g0) e^{-t},  x(t) = x0 + g0 t + (v0 - g0)(1 - e^{-t}).
inline PhasePoint decoupled_flow(const PhasePoint& z0, double t, Vec2 g0 = {0.0, 0.0}) {
    const double decay = std::exp(-t);
    const Vec2 dv0 = z0.v - g0;
    return {z0.x + g0 * t + dv0 * (1.0 - decay), g0 + dv0 * decay};
}

/// Scalar RK4 for the energy envelope ODE dE/dt = A sqrt(E) - 2E.
inline double energy_envelope(double e0, double a, double t, double dt = 1e-4) {
    auto f = [a](double e) { return a * std::sqrt(std::max(e, 0.0)) - 2.0 * e; };
    double e = e0, time = 0.0;
    while (time < t - 1e-12) {
        const double h = std::min(dt, t - time);
        const double k1 = f(e);
        const double k2 = f(e + 0.5 * h * k1);
        const double k3 = f(e + 0.5 * h * k2);
        const double k4 = f(e + h * k3);
        e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        time += h;
    }
    return e;
}

/// E[c^2] of a truncated normal on [mu - a sigma, mu + a sigma] by dense
/// Simpson quadrature, independent of the closed form in the library.
inline double tn_second_moment_quadrature(double mu, double sigma, double a) {
    const int n = 4000; // even
    const double lo = mu - a * sigma, hi = mu + a * sigma;
    const double h = (hi - lo) / n;
    auto pdf = [&](double x) {
        const double z = (x - mu) / sigma;
        return std::exp(-0.5 * z * z);
    };
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = lo + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        num += w * x * x * pdf(x);
        den += w * pdf(x);
    }
    return num / den;
}

inline double median_of(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t m = xs.size() / 2;
    return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

inline double max_abs_diff(const Vec2& a, const Vec2& b) {
    return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

} // namespace oracle
