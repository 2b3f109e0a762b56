#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinflow/quadrature.hpp"
#include "kinflow/vec2.hpp"

namespace kinflow {

/// Bounded, closed-form background drive g : R^2 -> R^2.
struct DriveField {
    enum class Kind { constant, gaussian_well, lane };

    Kind kind = Kind::constant;
    Vec2 g0;                       // constant
    double amp = 0.0;              // gaussian well
    double sigma = 1.0;
    Vec2 center;
    double speed = 0.0;            // lane: streaming along x inside a band in y
    double pull = 0.0;
    double lane_center = 0.0;
    double lane_width = 1.0;

    static DriveField constant(Vec2 g) {
        DriveField d;
        d.kind = Kind::constant;
        d.g0 = g;
        return d;
    }

    static DriveField gaussian_well(double amp, Vec2 center, double sigma) {
        if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_well: sigma > 0");
        DriveField d;
        d.kind = Kind::gaussian_well;
        d.amp = amp;
        d.center = center;
        d.sigma = sigma;
        return d;
    }

    static DriveField lane(double speed, double pull, double center, double width) {
        if (!(width > 0.0)) throw std::invalid_argument("lane: width > 0");
        DriveField d;
        d.kind = Kind::lane;
        d.speed = speed;
        d.pull = pull;
        d.lane_center = center;
        d.lane_width = width;
        return d;
    }

    Vec2 operator()(Vec2 x) const {
        switch (kind) {
        case Kind::constant:
            return g0;
        case Kind::gaussian_well: {
            // radial pull toward the center, g = -amp * (x-c)/sigma * exp(-|x-c|^2/(2 sigma^2))
            const Vec2 d = x - center;
            const double s = -amp / sigma * std::exp(-0.5 * norm2(d) / (sigma * sigma));
            return s * d;
        }
        case Kind::lane: {
            const double u = (x.y - lane_center) / lane_width;
            const double env = std::exp(-0.5 * u * u);
            return {speed * env, -pull * u * env};
        }
        }
        return {};
    }

    double sup_norm() const {
        switch (kind) {
        case Kind::constant:
            return norm(g0);
        case Kind::gaussian_well:
            // |g| = amp * (r/sigma) exp(-r^2/(2 sigma^2)), max at r = sigma.
            return std::abs(amp) * std::exp(-0.5);
        case Kind::lane:
            // components bounded by |speed| and |pull| sup |u e^{-u^2/2}| = |pull| e^{-1/2}
            return std::hypot(speed, pull * std::exp(-0.5));
        }
        return 0.0;
    }
};

namespace detail {

/// Radial quadrature for the bump mollifier.  The integrand
/// e^{-1/(1-r^2)} r has an essential singularity at the support edge r = 1,
/// which caps plain Gauss-Legendre at a few digits for moderate orders.
/// Substituting s = 1 - r^2, s = e^{-y} turns the radial integral into
/// int_0^inf e^{-e^y} e^{-y} dy / 2 whose integrand is entire, so the same
/// orders converge geometrically.  Beyond y = 4.2 the tail is < 1e-27.
struct RadialRule {
    std::vector<double> r;       // node radius in [0, 1)
    std::vector<double> weight;  // includes the substitution Jacobian
};

inline RadialRule mollifier_radial_rule(int order) {
    const QuadratureRule gl = gauss_legendre(order, 0.0, 4.2);
    RadialRule rule;
    rule.r.resize(gl.nodes.size());
    rule.weight.resize(gl.nodes.size());
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double y = gl.nodes[k];
        const double s = std::exp(-y);
        rule.r[k] = std::sqrt(1.0 - s);
        rule.weight[k] = 0.5 * gl.weights[k] * std::exp(-std::exp(y)) * s;
    }
    return rule;
}

/// Normalization constant of the standard bump mollifier
/// j(x) = c * exp(-1/(1-|x|^2)) on the unit disc, cached once:
/// 1 / (2*pi*int_0^1 e^{-1/(1-r^2)} r dr) via the substituted rule.
inline double mollifier_normalization() {
    static const double c = [] {
        const RadialRule rule = mollifier_radial_rule(200);
        double integral = 0.0;
        for (std::size_t k = 0; k < rule.r.size(); ++k) integral += rule.weight[k];
        return 1.0 / (2.0 * 3.14159265358979323846 * integral);
    }();
    return c;
}

} // namespace detail

/// Mollified drive G^N(x, v) = (j_eps * g)(x) - v, with j_eps the standard
/// bump mollifier scaled to support radius eps (eps = 1/N in the mean-field
/// construction).  The convolution is a tensor Gauss-Legendre rule in polar
/// coordinates over the unit disc, precomputed once per instance.
///
/// The raw quadrature mass (the rule applied to j itself) is exposed for
/// validation; the weights used for convolution are renormalized by it so
/// that mollifying a constant field is exact and the sup bound
/// |j_eps * g| <= sup|g| holds without quadrature slack.
class MollifiedDrive {
public:
    MollifiedDrive(DriveField g, double scale, int order = 24)
        : g_(g), eps_(scale), order_(order) {
        if (!(scale > 0.0))
            throw std::invalid_argument("MollifiedDrive: scale must be positive");
        if (order < 2)
            throw std::invalid_argument("MollifiedDrive: quadrature order >= 2");
        const double c = detail::mollifier_normalization();
        const detail::RadialRule rad = detail::mollifier_radial_rule(order);
        const QuadratureRule ang = gauss_legendre(order, 0.0, 2.0 * 3.14159265358979323846);
        raw_mass_ = 0.0;
        nodes_.reserve(static_cast<std::size_t>(order) * order);
        weights_.reserve(static_cast<std::size_t>(order) * order);
        for (int k = 0; k < order; ++k) {
            const double r = rad.r[k];
            for (int l = 0; l < order; ++l) {
                const double w = c * rad.weight[k] * ang.weights[l];
                nodes_.push_back({r * std::cos(ang.nodes[l]), r * std::sin(ang.nodes[l])});
                weights_.push_back(w);
                raw_mass_ += w;
            }
        }
        for (double& w : weights_) w /= raw_mass_;
    }

    /// (j_eps * g)(x).  Constant fields short-circuit: the convolution of a
    /// constant against a unit-mass mollifier is the constant itself.
    Vec2 convolved_g(Vec2 x) const {
        if (g_.kind == DriveField::Kind::constant) return g_.g0;
        Vec2 acc;
        for (std::size_t q = 0; q < nodes_.size(); ++q)
            acc += weights_[q] * g_(x - eps_ * nodes_[q]);
        return acc;
    }

    Vec2 operator()(Vec2 x, Vec2 v) const { return convolved_g(x) - v; }

    /// div_v G^N = -2 identically (the -v term is the only v dependence).
    static constexpr double div_v() { return -2.0; }

    /// Quadrature mass of the mollifier before renormalization; the distance
    /// to 1 measures the quadrature error committed on j itself.
    double mollifier_mass() const { return raw_mass_; }

    double sup_g() const { return g_.sup_norm(); }
    const DriveField& field() const { return g_; }
    double scale() const { return eps_; }
    int order() const { return order_; }

private:
    DriveField g_;
    double eps_;
    int order_;
    std::vector<Vec2> nodes_;
    std::vector<double> weights_;
    double raw_mass_ = 0.0;
};

} // namespace kinflow
