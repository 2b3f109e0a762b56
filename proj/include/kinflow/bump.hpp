#pragma once

#include <stdexcept>

namespace kinflow {

/// Compactly supported radial window: identically 1 on [0, inner], quintic
/// smoothstep down to 0 at outer, identically 0 beyond.  The quintic has zero
/// first and second derivative at both ends, so profiles built from it are C^2.
class BumpProfile {
public:
    BumpProfile(double inner, double outer) : inner_(inner), outer_(outer) {
        if (!(0.0 < inner && inner < outer))
            throw std::invalid_argument("BumpProfile: need 0 < inner < outer");
    }

    double operator()(double s) const {
        if (s < 0.0) throw std::domain_error("BumpProfile: negative radius");
        if (s <= inner_) return 1.0;
        if (s >= outer_) return 0.0;
        const double t = (s - inner_) / (outer_ - inner_);
        return 1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0);
    }

    double derivative(double s) const {
        if (s < 0.0) throw std::domain_error("BumpProfile: negative radius");
        if (s <= inner_ || s >= outer_) return 0.0;
        const double w = outer_ - inner_;
        const double t = (s - inner_) / w;
        const double u = t * (1.0 - t);
        return -30.0 * u * u / w;
    }

    double inner_radius() const { return inner_; }
    double outer_radius() const { return outer_; }

    /// sup |d/ds|, attained at the midpoint of the ramp: 30*(1/4)^2 / width.
    double max_abs_derivative() const { return 1.875 / (outer_ - inner_); }

private:
    double inner_;
    double outer_;
};

} // namespace kinflow
