#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kinflow/bump.hpp"
#include "kinflow/vec2.hpp"

namespace kinflow {

/// Radial derivative profiles for the interaction potential V(r, v).
/// Both are bounded on [0, 2R]; neither is Lipschitz once combined with the
/// unit direction x/|x|, which is the whole point of the cut-off treatment.
enum class RadialProfile { spring, morse };

inline RadialProfile radial_profile_from_string(const std::string& s) {
    if (s == "spring") return RadialProfile::spring;
    if (s == "morse") return RadialProfile::morse;
    throw std::invalid_argument("unknown force profile '" + s + "'");
}

/// Finite-range pair force
///
///     F(x, v) = rho(|x|) * phi(|v|) * (x/|x|) * H(|x|) * Ht(|v|)
///
/// with rho = d/dr V, phi(w) = 1 + gamma_n * tanh(gamma_t * w) a saturating
/// velocity factor, H the spatial window (ramp from R to 2R) and Ht the
/// velocity window (ramp from Rt to 2Rt).
///
/// Alongside evaluation the model exposes certified analytic bounds: a sup
/// bound on |F|, a sup bound on |grad_v F|, and the constant C for the
/// Lipschitz majorant of the cut-off force.  These feed every growth estimate
/// downstream, so they must be true upper bounds, not empirical fits.
class ForceModel {
public:
    ForceModel(RadialProfile profile, double k_n, double gamma_n, double gamma_t,
               double R, double R_tilde)
        : profile_(profile), k_n_(k_n), gamma_n_(gamma_n), gamma_t_(gamma_t),
          R_(R), R_tilde_(R_tilde),
          bump_x_(R, 2.0 * R), bump_v_(R_tilde, 2.0 * R_tilde) {
        if (!(k_n >= 0.0) || !(gamma_n >= 0.0) || !(gamma_t >= 0.0))
            throw std::invalid_argument("ForceModel: coefficients must be >= 0");
        if (!(R > 0.0) || !(R_tilde > 0.0))
            throw std::invalid_argument("ForceModel: ranges must be positive");
    }

    /// d/dr V at separation r (velocity factor excluded).
    double rho(double r) const {
        switch (profile_) {
        case RadialProfile::spring:
            return -k_n_ * (2.0 * R_ - r);
        case RadialProfile::morse: {
            const double a = 2.0 / R_;
            const double u = std::exp(-a * (r - R_));
            return 2.0 * k_n_ * a * (1.0 - u) * u;
        }
        }
        return 0.0;
    }

    double drho(double r) const {
        switch (profile_) {
        case RadialProfile::spring:
            return k_n_;
        case RadialProfile::morse: {
            const double a = 2.0 / R_;
            const double u = std::exp(-a * (r - R_));
            return -2.0 * k_n_ * a * a * u * (1.0 - 2.0 * u);
        }
        }
        return 0.0;
    }

    double vel_factor(double w) const { return 1.0 + gamma_n_ * std::tanh(gamma_t_ * w); }

    double dvel_factor(double w) const {
        const double c = std::cosh(gamma_t_ * w);
        return gamma_n_ * gamma_t_ / (c * c);
    }

    /// Full force.  Undefined at x = 0 (unit direction does not exist there);
    /// the cut-off force is the object that extends continuously through 0.
    /// The arithmetic mirrors the cut-off force's far branch term for term,
    /// so the two agree bitwise outside the cut radius.
    Vec2 force(Vec2 x, Vec2 v) const {
        const double r = norm(x);
        if (r == 0.0)
            throw std::domain_error("ForceModel::force: singular at x = 0");
        if (r >= 2.0 * R_) return {0.0, 0.0};
        const double w = norm(v);
        const double f = rho(r) * vel_factor(w) * bump_x_(r) * bump_v_(w) * (1.0 / r);
        return f * x;
    }

    // -- certified bounds ---------------------------------------------------

    double sup_abs_rho() const {
        switch (profile_) {
        case RadialProfile::spring:
            return 2.0 * R_ * k_n_;
        case RadialProfile::morse: {
            // |(1-u)u| over u in [e^{-2}, e^{2}] (r in [0, 2R]); interior
            // critical point at u = 1/2.
            const double a = 2.0 / R_;
            const double lo = std::exp(-2.0), hi = std::exp(2.0);
            const double m = std::max({std::abs((1.0 - lo) * lo),
                                       std::abs((1.0 - hi) * hi), 0.25});
            return 2.0 * k_n_ * a * m;
        }
        }
        return 0.0;
    }

    double sup_abs_drho() const {
        switch (profile_) {
        case RadialProfile::spring:
            return k_n_;
        case RadialProfile::morse: {
            // |u(1-2u)| over u in [e^{-2}, e^{2}]; interior critical point at 1/4.
            const double a = 2.0 / R_;
            const double lo = std::exp(-2.0), hi = std::exp(2.0);
            const double m = std::max({std::abs(lo * (1.0 - 2.0 * lo)),
                                       std::abs(hi * (1.0 - 2.0 * hi)), 0.125});
            return 2.0 * k_n_ * a * a * m;
        }
        }
        return 0.0;
    }

    /// sup |F|: the direction is unit and both windows are <= 1.
    double f_inf_bound() const { return sup_abs_rho() * (1.0 + gamma_n_); }

    /// sup of the operator norm of grad_v F.  The gradient is the rank-one
    /// matrix rho*H*(x dir) (psi'(|v|) vhat)^T with psi = phi*Ht, so its norm
    /// is |rho*H| * |psi'| <= sup|rho| * (|phi'| + sup phi * sup|Ht'|).
    double grad_v_bound() const {
        return sup_abs_rho() *
               (gamma_n_ * gamma_t_ + (1.0 + gamma_n_) * bump_v_.max_abs_derivative());
    }

    /// Constant C of the Lipschitz majorant q^N (see CutoffForce).  Splitting
    /// |F(x)-F(y)| <= sup|(rho H)'| |x-y| + sup|rho H| |xhat-yhat| and using
    /// |xhat - yhat| <= 2|x-y| / max(|x|,|y|) gives C/|x| + C with
    /// C = sup phi * (2 sup|rho| + sup|rho'| + sup|rho| sup|H'|).
    double lipschitz_scale() const {
        return (1.0 + gamma_n_) *
               (2.0 * sup_abs_rho() + sup_abs_drho() +
                sup_abs_rho() * bump_x_.max_abs_derivative());
    }

    RadialProfile profile() const { return profile_; }
    double k_n() const { return k_n_; }
    double gamma_n() const { return gamma_n_; }
    double gamma_t() const { return gamma_t_; }
    double R() const { return R_; }
    double R_tilde() const { return R_tilde_; }
    const BumpProfile& space_window() const { return bump_x_; }
    const BumpProfile& velocity_window() const { return bump_v_; }

private:
    RadialProfile profile_;
    double k_n_;
    double gamma_n_;
    double gamma_t_;
    double R_;
    double R_tilde_;
    BumpProfile bump_x_;
    BumpProfile bump_v_;
};

} // namespace kinflow
