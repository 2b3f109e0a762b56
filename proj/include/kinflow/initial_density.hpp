#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "kinflow/vec2.hpp"

namespace kinflow {

/// Axis-aligned box in phase space, axes ordered (x1, x2, v1, v2).
struct Box4 {
    std::array<double, 4> lo{};
    std::array<double, 4> hi{};

    double volume() const {
        double v = 1.0;
        for (int a = 0; a < 4; ++a) v *= hi[a] - lo[a];
        return v;
    }

    bool contains(const PhasePoint& z) const {
        const std::array<double, 4> c{z.x.x, z.x.y, z.v.x, z.v.y};
        for (int a = 0; a < 4; ++a)
            if (c[a] < lo[a] || c[a] > hi[a]) return false;
        return true;
    }
};

enum class DensityKind { uniform_box, truncated_gaussian, two_bump };

namespace detail {
constexpr double sqrt_2pi = 2.5066282746310005024157652848110;

/// Mass of the standard normal on [-a, a].
inline double tn_mass(double a) { return std::erf(a / std::sqrt(2.0)); }

inline double tn_pdf(double x, double mu, double sigma, double a) {
    const double z = (x - mu) / sigma;
    if (std::abs(z) > a) return 0.0;
    return std::exp(-0.5 * z * z) / (sigma * tn_mass(a) * sqrt_2pi);
}

inline double tn_variance(double sigma, double a) {
    const double phi_a = std::exp(-0.5 * a * a) / sqrt_2pi;
    return sigma * sigma * (1.0 - 2.0 * a * phi_a / tn_mass(a));
}

inline double tn_peak(double sigma, double a) {
    return 1.0 / (sigma * tn_mass(a) * sqrt_2pi);
}

/// E[x^2] of the uniform law on [lo, hi].
inline double uniform_second(double lo, double hi) {
    return (lo * lo + lo * hi + hi * hi) / 3.0;
}
} // namespace detail

/// Compactly supported initial phase density descriptor.  Carries closed-form
/// mass, kinetic energy, spatial second moment and a sup bound, which the
/// sampler, the growth certificates and the density estimators all consume.
///
/// All variants integrate to `mass` exactly (truncated Gaussians are
/// renormalized on their truncation box).
class InitialDensity {
public:
    static InitialDensity uniform_box(const Box4& box, double mass) {
        check_mass(mass);
        for (int a = 0; a < 4; ++a)
            if (!(box.lo[a] < box.hi[a]))
                throw std::invalid_argument("uniform_box: empty extent on axis " +
                                            std::to_string(a));
        InitialDensity d;
        d.kind_ = DensityKind::uniform_box;
        d.mass_ = mass;
        d.box_ = box;
        return d;
    }

    static InitialDensity truncated_gaussian(Vec2 mu_x, Vec2 mu_v, double sigma_x,
                                             double sigma_v, double trunc, double mass) {
        check_mass(mass);
        check_gaussian(sigma_x, sigma_v, trunc);
        InitialDensity d;
        d.kind_ = DensityKind::truncated_gaussian;
        d.mass_ = mass;
        d.mu_x_ = mu_x;
        d.mu_v_ = mu_v;
        d.sigma_x_ = sigma_x;
        d.sigma_v_ = sigma_v;
        d.trunc_ = trunc;
        d.box_ = gaussian_box(mu_x, mu_v, sigma_x, sigma_v, trunc);
        return d;
    }

    static InitialDensity two_bump(Vec2 mu_x, Vec2 mu_v, Vec2 mu2_x, Vec2 mu2_v,
                                   double sigma_x, double sigma_v, double trunc,
                                   double mass) {
        check_mass(mass);
        check_gaussian(sigma_x, sigma_v, trunc);
        InitialDensity d;
        d.kind_ = DensityKind::two_bump;
        d.mass_ = mass;
        d.mu_x_ = mu_x;
        d.mu_v_ = mu_v;
        d.mu2_x_ = mu2_x;
        d.mu2_v_ = mu2_v;
        d.sigma_x_ = sigma_x;
        d.sigma_v_ = sigma_v;
        d.trunc_ = trunc;
        const Box4 b1 = gaussian_box(mu_x, mu_v, sigma_x, sigma_v, trunc);
        const Box4 b2 = gaussian_box(mu2_x, mu2_v, sigma_x, sigma_v, trunc);
        for (int a = 0; a < 4; ++a) {
            d.box_.lo[a] = std::min(b1.lo[a], b2.lo[a]);
            d.box_.hi[a] = std::max(b1.hi[a], b2.hi[a]);
        }
        return d;
    }

    double value(const PhasePoint& z) const {
        switch (kind_) {
        case DensityKind::uniform_box:
            return box_.contains(z) ? mass_ / box_.volume() : 0.0;
        case DensityKind::truncated_gaussian:
            return mass_ * bump_value(z, mu_x_, mu_v_);
        case DensityKind::two_bump:
            return 0.5 * mass_ *
                   (bump_value(z, mu_x_, mu_v_) + bump_value(z, mu2_x_, mu2_v_));
        }
        return 0.0;
    }

    double mass() const { return mass_; }

    /// E_0 = integral of |v|^2/2 f0.
    double kinetic_energy() const {
        switch (kind_) {
        case DensityKind::uniform_box:
            return 0.5 * mass_ *
                   (detail::uniform_second(box_.lo[2], box_.hi[2]) +
                    detail::uniform_second(box_.lo[3], box_.hi[3]));
        case DensityKind::truncated_gaussian:
            return 0.5 * mass_ * gaussian_second(mu_v_, sigma_v_);
        case DensityKind::two_bump:
            return 0.25 * mass_ *
                   (gaussian_second(mu_v_, sigma_v_) + gaussian_second(mu2_v_, sigma_v_));
        }
        return 0.0;
    }

    /// m2(0) = integral of |x|^2 f0.
    double second_moment() const {
        switch (kind_) {
        case DensityKind::uniform_box:
            return mass_ * (detail::uniform_second(box_.lo[0], box_.hi[0]) +
                            detail::uniform_second(box_.lo[1], box_.hi[1]));
        case DensityKind::truncated_gaussian:
            return mass_ * gaussian_second(mu_x_, sigma_x_);
        case DensityKind::two_bump:
            return 0.5 * mass_ *
                   (gaussian_second(mu_x_, sigma_x_) + gaussian_second(mu2_x_, sigma_x_));
        }
        return 0.0;
    }

    /// Upper bound on sup f0; tight except for overlapping bumps, where the
    /// sum of the individual peaks is used.
    double sup_value() const {
        switch (kind_) {
        case DensityKind::uniform_box:
            return mass_ / box_.volume();
        case DensityKind::truncated_gaussian:
            return mass_ * bump_peak();
        case DensityKind::two_bump:
            return mass_ * bump_peak();
        }
        return 0.0;
    }

    const Box4& support() const { return box_; }
    DensityKind kind() const { return kind_; }

    /// Same density translated by dx in position and dv in velocity.  Used to
    /// build perturbed partners for stability runs.
    InitialDensity shifted(Vec2 dx, Vec2 dv) const {
        InitialDensity d = *this;
        const std::array<double, 4> s{dx.x, dx.y, dv.x, dv.y};
        for (int a = 0; a < 4; ++a) {
            d.box_.lo[a] += s[a];
            d.box_.hi[a] += s[a];
        }
        d.mu_x_ += dx;
        d.mu_v_ += dv;
        d.mu2_x_ += dx;
        d.mu2_v_ += dv;
        return d;
    }

private:
    static void check_mass(double mass) {
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw std::invalid_argument("density mass must be positive and finite");
    }

    static void check_gaussian(double sigma_x, double sigma_v, double trunc) {
        if (!(sigma_x > 0.0) || !(sigma_v > 0.0))
            throw std::invalid_argument("density sigma must be positive");
        if (!(trunc > 0.0))
            throw std::invalid_argument("density truncation must be positive");
    }

    static Box4 gaussian_box(Vec2 mu_x, Vec2 mu_v, double sx, double sv, double a) {
        Box4 b;
        b.lo = {mu_x.x - a * sx, mu_x.y - a * sx, mu_v.x - a * sv, mu_v.y - a * sv};
        b.hi = {mu_x.x + a * sx, mu_x.y + a * sx, mu_v.x + a * sv, mu_v.y + a * sv};
        return b;
    }

    /// Product of the four per-axis truncated-normal pdfs (unit total mass).
    double bump_value(const PhasePoint& z, Vec2 cx, Vec2 cv) const {
        return detail::tn_pdf(z.x.x, cx.x, sigma_x_, trunc_) *
               detail::tn_pdf(z.x.y, cx.y, sigma_x_, trunc_) *
               detail::tn_pdf(z.v.x, cv.x, sigma_v_, trunc_) *
               detail::tn_pdf(z.v.y, cv.y, sigma_v_, trunc_);
    }

    double bump_peak() const {
        const double px = detail::tn_peak(sigma_x_, trunc_);
        const double pv = detail::tn_peak(sigma_v_, trunc_);
        return px * px * pv * pv;
    }

    /// E[c1^2 + c2^2] for a pair of axes with common sigma.
    double gaussian_second(Vec2 mu, double sigma) const {
        const double var = detail::tn_variance(sigma, trunc_);
        return mu.x * mu.x + mu.y * mu.y + 2.0 * var;
    }

    DensityKind kind_ = DensityKind::uniform_box;
    double mass_ = 1.0;
    Box4 box_;
    Vec2 mu_x_, mu_v_, mu2_x_, mu2_v_;
    double sigma_x_ = 1.0, sigma_v_ = 1.0, trunc_ = 3.0;
};

} // namespace kinflow
