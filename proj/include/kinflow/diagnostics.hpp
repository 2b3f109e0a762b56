#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>
#include <span>
#include <string>

#include "kinflow/cutoff_force.hpp"
#include "kinflow/drive.hpp"
#include "kinflow/ensemble.hpp"
#include "kinflow/initial_density.hpp"

namespace kinflow {

struct DiagnosticRecord {
    double t = 0.0;
    double mass = 0.0;
    double kinetic = 0.0;
    double second_moment = 0.0;
    /// sup_i of -logJ_i(t); the maximum principle bounds it by C_max * t.
    double sup_log_growth = 0.0;
    std::optional<double> sup_density;
};

inline DiagnosticRecord record(const ParticleEnsemble& ens) {
    DiagnosticRecord r;
    r.t = ens.time;
    r.mass = ens.mass();
    r.kinetic = ens.kinetic_energy();
    r.second_moment = ens.second_moment();
    double sup = 0.0;
    for (double lj : ens.log_jacobian) sup = std::max(sup, -lj);
    r.sup_log_growth = sup;
    return r;
}

/// Constants certified by the model, the drive and the initial density.
/// Everything here is an analytic consequence of the descriptors, derived
/// once per run and frozen into the manifest:
///
///   A      forcing scale of dE/dt <= A sqrt(E) - 2E, from Cauchy-Schwarz on
///          the transport and damping terms: A = (sup|F| M0 + sup|g|) sqrt(2 M0)
///   E_cap  max(E0, (A/2)^2); the envelope never exceeds it because the right
///          hand side is negative above the fixed point sqrt(E) = A/2
///   C_max  sup|div_v (F^N * mu + G^N)| <= grad_v_bound * M0 + 2
///   L_K    Lipschitz bound of the interaction kernel on phase space:
///          2 + sup q^N + grad_v_bound * M0 (crude but certified)
struct BoundCertificates {
    double total_mass = 0.0;
    double e0 = 0.0;
    double m2_0 = 0.0;
    double sup_f0 = 0.0;
    double f_inf_bound = 0.0;
    double grad_v_bound = 0.0;
    double sup_g = 0.0;
    double forcing_a = 0.0;
    double e_cap = 0.0;
    double c_max = 0.0;
    double kernel_lipschitz = 0.0;

    static BoundCertificates derive(const CutoffForce& cf, const MollifiedDrive& md,
                                    const InitialDensity& f0) {
        BoundCertificates b;
        b.total_mass = f0.mass();
        b.e0 = f0.kinetic_energy();
        b.m2_0 = f0.second_moment();
        b.sup_f0 = f0.sup_value();
        b.f_inf_bound = cf.model().f_inf_bound();
        b.grad_v_bound = cf.model().grad_v_bound();
        b.sup_g = md.sup_g();
        b.forcing_a = (b.f_inf_bound * b.total_mass + b.sup_g) *
                      std::sqrt(2.0 * b.total_mass);
        b.e_cap = std::max(b.e0, 0.25 * b.forcing_a * b.forcing_a);
        b.c_max = b.grad_v_bound * b.total_mass + 2.0;
        b.kernel_lipschitz = 2.0 + cf.lipschitz_sup() + b.grad_v_bound * b.total_mass;
        return b;
    }

    /// m2(t) <= (m2(0) + 2 E_cap) e^t, from d/dt m2 = 2 int x.v f <= m2 + 2E.
    double m2_envelope(double t) const { return (m2_0 + 2.0 * e_cap) * std::exp(t); }

    /// Density ceiling of the maximum principle.
    double density_envelope(double t) const { return sup_f0 * std::exp(c_max * t); }
};

struct CertificateResult {
    std::string name;
    bool pass = false;
    /// Worst observed value / bound ratio (or absolute excess for the
    /// Jacobian check), and the record time where it occurred.
    double worst = 0.0;
    double worst_t = 0.0;
};

/// Mass must be reproduced bit-identically at every record: the estimator is
/// weight * N and neither factor is touched by the integrator.
inline CertificateResult certify_mass(std::span<const DiagnosticRecord> records) {
    CertificateResult res;
    res.name = "mass_conservation";
    res.pass = true;
    if (records.empty()) return res;
    const double m0 = records.front().mass;
    for (const auto& r : records) {
        if (std::memcmp(&r.mass, &m0, sizeof(double)) != 0) {
            res.pass = false;
            res.worst = r.mass - m0;
            res.worst_t = r.t;
            return res;
        }
    }
    return res;
}

inline CertificateResult certify_energy(std::span<const DiagnosticRecord> records,
                                        const BoundCertificates& b, double tol = 1e-2,
                                        bool pathwise_floor = true) {
    CertificateResult res;
    res.name = "energy_cap";
    res.pass = true;
    // The envelope dE/dt <= A sqrt(E) - 2E is a pathwise comparison from the
    // first recorded energy, so max(E(first), (A/2)^2) is certified for every
    // later record.  e_cap is the descriptor-level version of the same
    // constant (analytic E0 in place of the realized one, which fluctuates by
    // O(1/sqrt(N))); taking the max keeps both statements.
    double cap = b.e_cap;
    if (pathwise_floor && !records.empty())
        cap = std::max(cap, records.front().kinetic);
    for (const auto& r : records) {
        const double ratio = r.kinetic / cap;
        if (ratio > res.worst) {
            res.worst = ratio;
            res.worst_t = r.t;
        }
        if (!(r.kinetic <= cap * (1.0 + tol))) res.pass = false;
    }
    return res;
}

inline CertificateResult certify_second_moment(std::span<const DiagnosticRecord> records,
                                               const BoundCertificates& b,
                                               double tol = 1e-2,
                                               bool pathwise_floor = true) {
    CertificateResult res;
    res.name = "second_moment_envelope";
    res.pass = true;
    // Same pathwise reading as the energy cap: d/dt m2 <= m2 + 2E integrates
    // from the first recorded m2 with the realized energy cap.
    double base = b.m2_0 + 2.0 * b.e_cap;
    if (pathwise_floor && !records.empty())
        base = std::max(base, records.front().second_moment +
                                  2.0 * std::max(b.e_cap, records.front().kinetic));
    for (const auto& r : records) {
        const double ratio = r.second_moment / (base * std::exp(r.t));
        if (ratio > res.worst) {
            res.worst = ratio;
            res.worst_t = r.t;
        }
        if (!(ratio <= 1.0 + tol)) res.pass = false;
    }
    return res;
}

/// Maximum principle along characteristics: f stays nonnegative by
/// construction (it is a pushforward), and the certified statement is
/// -logJ_i(t) <= C_max * t.  Estimated sup densities can exceed the
/// analytic ceiling by sampling noise alone, so they are reported via the
/// ratio but never fail the certificate on their own.
inline CertificateResult certify_maximum_principle(
    std::span<const DiagnosticRecord> records, const BoundCertificates& b,
    double tol_abs = 1e-6) {
    CertificateResult res;
    res.name = "maximum_principle";
    res.pass = true;
    for (const auto& r : records) {
        const double excess = r.sup_log_growth - b.c_max * r.t;
        if (excess > res.worst) {
            res.worst = excess;
            res.worst_t = r.t;
        }
        if (!(excess <= tol_abs)) res.pass = false;
    }
    return res;
}

} // namespace kinflow
