#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "kinflow/force_model.hpp"
#include "kinflow/vec2.hpp"

namespace kinflow {

/// Cut-off interaction force F^N.
///
/// Outside the ball of radius r_cut = N^(-theta) it equals the model force;
/// inside, the unit direction x/|x| is replaced by N^theta * x, which agrees
/// with x/|x| on the sphere |x| = r_cut and extends linearly through the
/// origin.  This removes the non-Lipschitz point at x = 0 at the price of a
/// Lipschitz constant that grows like N^theta:
///
///     |F^N(x,v) - F^N(y,v)| <= max(q(x), q(y)) |x - y|
///     q(x) = C/|x| + C   for r_cut <= |x| < 2R,
///     q(x) = C N^theta   for |x| < r_cut,      q(x) = 0 for |x| >= 2R.
///
/// N^theta is stored as 1/r_cut so the two branches coincide bitwise at the
/// seam.
class CutoffForce {
public:
    CutoffForce(ForceModel model, std::size_t n_particles, double theta)
        : model_(std::move(model)), n_(n_particles), theta_(theta) {
        if (n_particles == 0)
            throw std::invalid_argument("CutoffForce: empty ensemble");
        if (!(theta > 0.0))
            throw std::invalid_argument("CutoffForce: theta must be positive");
        r_cut_ = std::pow(static_cast<double>(n_particles), -theta);
        n_theta_ = 1.0 / r_cut_;
    }

    Vec2 operator()(Vec2 x, Vec2 v) const {
        const double r = norm(x);
        if (r >= 2.0 * model_.R()) return {0.0, 0.0};
        const double w = norm(v);
        const double scale = (r >= r_cut_) ? 1.0 / r : n_theta_;
        const double f = model_.rho(r) * model_.vel_factor(w) *
                         model_.space_window()(r) * model_.velocity_window()(w) * scale;
        return f * x;
    }

    /// grad_v F^N: rank-one, (rho H scale x) (psi'(|v|) vhat)^T, psi = phi*Ht.
    Mat2 grad_v(Vec2 x, Vec2 v) const {
        const double r = norm(x);
        if (r >= 2.0 * model_.R()) return {};
        const double w = norm(v);
        if (w == 0.0) return {};
        const double scale = (r >= r_cut_) ? 1.0 / r : n_theta_;
        const double radial = model_.rho(r) * model_.space_window()(r) * scale;
        const double dpsi = model_.dvel_factor(w) * model_.velocity_window()(w) +
                            model_.vel_factor(w) * model_.velocity_window().derivative(w);
        const double c = radial * dpsi / w;
        return {c * x.x * v.x, c * x.x * v.y,
                c * x.y * v.x, c * x.y * v.y};
    }

    /// trace(grad_v F^N), the per-pair phase-volume divergence contribution.
    /// Same arithmetic as grad_v's diagonal so the two agree bitwise.
    double grad_v_trace(Vec2 x, Vec2 v) const {
        const double r = norm(x);
        if (r >= 2.0 * model_.R()) return 0.0;
        const double w = norm(v);
        if (w == 0.0) return 0.0;
        const double scale = (r >= r_cut_) ? 1.0 / r : n_theta_;
        const double radial = model_.rho(r) * model_.space_window()(r) * scale;
        const double dpsi = model_.dvel_factor(w) * model_.velocity_window()(w) +
                            model_.vel_factor(w) * model_.velocity_window().derivative(w);
        const double c = radial * dpsi / w;
        return c * x.x * v.x + c * x.y * v.y;
    }

    /// Pointwise Lipschitz majorant q^N.
    double lipschitz_estimate(Vec2 x) const {
        const double r = norm(x);
        const double c = model_.lipschitz_scale();
        if (r >= 2.0 * model_.R()) return 0.0;
        if (r >= r_cut_) return c / r + c;
        return c * n_theta_;
    }

    /// sup_x q^N(x).  When the seam lies inside the support the branch-one
    /// value at the seam, C(N^theta + 1), is the maximum.
    double lipschitz_sup() const {
        const double c = model_.lipschitz_scale();
        if (r_cut_ < 2.0 * model_.R()) return c * (n_theta_ + 1.0);
        return c * n_theta_;
    }

    const ForceModel& model() const { return model_; }
    std::size_t size() const { return n_; }
    double theta() const { return theta_; }
    double cut_radius() const { return r_cut_; }
    double n_pow_theta() const { return n_theta_; }

private:
    ForceModel model_;
    std::size_t n_;
    double theta_;
    double r_cut_;
    double n_theta_;
};

/// Step-size hint: RK4 resolves the stiffest pair interaction when
/// dt * sup q^N stays well below 1.
inline double dt_max_hint(const CutoffForce& cf) {
    return 0.1 / (1.0 + cf.lipschitz_sup());
}

} // namespace kinflow
