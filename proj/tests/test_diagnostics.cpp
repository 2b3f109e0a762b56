#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "kinflow/diagnostics.hpp"
#include "kinflow/flow.hpp"
#include "kinflow/pairwise_sum.hpp"
#include "kinflow/phase_density.hpp"
#include "oracles.hpp"

using namespace kinflow;
using Catch::Approx;

namespace {

const Box4 unit_box{{0.0, 0.0, -0.5, -0.5}, {1.0, 1.0, 0.5, 0.5}};

ParticleEnsemble sampled(std::size_t n, std::uint64_t seed, double mass = 1.0) {
    return sample_initial(InitialDensity::uniform_box(unit_box, mass), n, seed);
}

} // namespace

TEST_CASE("record computes the worked functional examples") {
    ParticleEnsemble ens;
    ens.pts = {{{0.0, 0.0}, {3.0, 4.0}}};
    ens.log_jacobian = {0.0};
    ens.initial = ens.pts;
    ens.weight = 1.0;
    const DiagnosticRecord r = record(ens);
    CHECK(r.kinetic == 12.5);
    CHECK(r.mass == 1.0);
    CHECK(r.second_moment == 0.0);
    CHECK(r.sup_log_growth == 0.0);
    CHECK_FALSE(r.sup_density.has_value());

    ens.pts = {{{1.0, 2.0}, {0.0, 0.0}}, {{-2.0, 0.0}, {0.0, 0.0}}};
    ens.log_jacobian = {-0.25, 0.5};
    ens.weight = 0.5;
    const DiagnosticRecord r2 = record(ens);
    CHECK(r2.kinetic == 0.0);
    CHECK(r2.second_moment == Approx(0.5 * (5.0 + 4.0)));
    CHECK(r2.sup_log_growth == 0.25); // max of -logJ
}

TEST_CASE("pairwise summation agrees with long-double accumulation") {
    std::vector<double> xs(100001);
    Rng rng(5);
    for (auto& x : xs) x = rng.uniform(-1.0, 1.0) * std::exp(rng.uniform(-8.0, 8.0));
    long double acc = 0.0L;
    for (double x : xs) acc += static_cast<long double>(x);
    const double want = static_cast<double>(acc);
    const double got = pairwise_sum(std::span<const double>(xs));
    CHECK(got == Approx(want).epsilon(1e-13));
}

TEST_CASE("derived certificate constants follow their formulas") {
    const ForceModel m(RadialProfile::spring, 2.0, 0.5, 1.0, 0.1, 1.0);
    const CutoffForce cf(m, 500, 0.25);
    const MollifiedDrive md(DriveField::gaussian_well(0.8, {0, 0}, 0.5), 1.0 / 500.0);
    const auto f0 =
        InitialDensity::truncated_gaussian({0, 0}, {0, 0}, 0.2, 0.3, 3.0, 2.0);
    const BoundCertificates b = BoundCertificates::derive(cf, md, f0);

    CHECK(b.total_mass == 2.0);
    CHECK(b.e0 == Approx(f0.kinetic_energy()));
    CHECK(b.m2_0 == Approx(f0.second_moment()));
    CHECK(b.sup_f0 == Approx(f0.sup_value()));
    CHECK(b.f_inf_bound == Approx(m.f_inf_bound()));
    CHECK(b.grad_v_bound == Approx(m.grad_v_bound()));
    CHECK(b.sup_g == Approx(0.8 * std::exp(-0.5)));
    CHECK(b.forcing_a ==
          Approx((b.f_inf_bound * 2.0 + b.sup_g) * std::sqrt(4.0)));
    CHECK(b.e_cap == Approx(std::max(b.e0, 0.25 * b.forcing_a * b.forcing_a)));
    CHECK(b.c_max == Approx(b.grad_v_bound * 2.0 + 2.0));
    CHECK(b.kernel_lipschitz ==
          Approx(2.0 + cf.lipschitz_sup() + b.grad_v_bound * 2.0));
    CHECK(b.m2_envelope(0.0) == Approx(b.m2_0 + 2.0 * b.e_cap));
    CHECK(b.m2_envelope(1.0) == Approx((b.m2_0 + 2.0 * b.e_cap) * std::exp(1.0)));
    CHECK(b.density_envelope(1.0) == Approx(b.sup_f0 * std::exp(b.c_max)));
}

TEST_CASE("mass certificate demands bit-identical records") {
    std::vector<DiagnosticRecord> recs(5);
    for (std::size_t k = 0; k < recs.size(); ++k) {
        recs[k].t = 0.1 * static_cast<double>(k);
        recs[k].mass = 0.1 + 0.2; // same expression every time: identical bits
    }
    CHECK(certify_mass(recs).pass);

    recs[3].mass = std::nextafter(recs[3].mass, 1.0);
    const CertificateResult bad = certify_mass(recs);
    CHECK_FALSE(bad.pass);
    CHECK(bad.worst != 0.0);
    CHECK(bad.worst_t == Approx(0.3));
    CHECK(certify_mass(std::vector<DiagnosticRecord>{}).pass);
}

TEST_CASE("decoupled run: exact energy decay and certificate equalities") {
    const std::size_t n = 256;
    auto ens = sampled(n, 20);
    const double e0 = ens.kinetic_energy();
    const double m2_exact_t = [&] {
        // x(t) = x0 + v0 (1 - e^-t) at t = 1
        const double s = 1.0 - std::exp(-1.0);
        double acc = 0.0;
        for (const auto& p : ens.pts) acc += norm2(p.x + s * p.v);
        return acc * ens.weight;
    }();

    const ForceModel none(RadialProfile::spring, 0.0, 0.5, 1.0, 0.3, 1.0);
    const CutoffForce cf(none, n, 0.25);
    const MollifiedDrive md(DriveField::constant({0.0, 0.0}), 1.0 / double(n));
    const auto recs = advance(ens, cf, md, 1.0, 1e-3, {.record_interval = 0.1});
    REQUIRE(recs.size() == 10);

    // E(t) = E0 e^{-2t} to 1e-6 relative at t = 1
    CHECK(recs.back().kinetic == Approx(e0 * std::exp(-2.0)).epsilon(1e-6));
    // m2(t) from the closed form
    CHECK(recs.back().second_moment == Approx(m2_exact_t).epsilon(1e-9));

    const BoundCertificates b = BoundCertificates::derive(cf, md,
        InitialDensity::uniform_box(unit_box, 1.0));
    CHECK(b.forcing_a == 0.0);
    CHECK(b.e_cap == Approx(b.e0));
    CHECK(b.c_max == 2.0);

    CHECK(certify_mass(recs).pass);
    const auto energy = certify_energy(recs, b);
    CHECK(energy.pass);
    CHECK(energy.worst < 1.0); // decay: strictly below the cap at every record
    CHECK(certify_second_moment(recs, b).pass);

    // -L_i = 2t is the equality case of the maximum principle
    const auto maxp = certify_maximum_principle(recs, b);
    CHECK(maxp.pass);
    for (const auto& r : recs)
        CHECK(r.sup_log_growth == Approx(2.0 * r.t).margin(1e-9));

    // forced failures: a cap below E0 and a zero growth constant; the
    // pathwise floor is off, as in the harness debug override
    BoundCertificates tight = b;
    tight.e_cap = 0.5 * recs.front().kinetic;
    CHECK_FALSE(certify_energy(recs, tight, 1e-2, false).pass);
    CHECK(certify_energy(recs, tight).pass); // the floor restores soundness
    tight.c_max = 0.0;
    CHECK_FALSE(certify_maximum_principle(recs, tight).pass);
    tight.m2_0 = 1e-6;
    tight.e_cap = 1e-6;
    CHECK_FALSE(certify_second_moment(recs, tight, 1e-2, false).pass);
}

TEST_CASE("flat velocity window keeps the jacobian at the drive rate") {
    // gamma_n = 0 and R_tilde far above every relative speed: grad_v F^N = 0,
    // so -L_i = 2t exactly even with active spring forces
    const std::size_t n = 128;
    auto ens = sampled(n, 33);
    const ForceModel m(RadialProfile::spring, 1.0, 0.0, 1.0, 0.2, 10.0);
    const CutoffForce cf(m, n, 0.25);
    const MollifiedDrive md(DriveField::constant({0.0, 0.0}), 1.0 / double(n));
    const auto recs = advance(ens, cf, md, 0.5, 5e-3, {.record_interval = 0.1});

    const BoundCertificates b = BoundCertificates::derive(cf, md,
        InitialDensity::uniform_box(unit_box, 1.0));
    CHECK(b.c_max > 2.0);
    for (const auto& r : recs) {
        CHECK(r.sup_log_growth == Approx(2.0 * r.t).margin(1e-9));
        CHECK(r.sup_log_growth <= b.c_max * r.t + 1e-6);
    }
    CHECK(certify_maximum_principle(recs, b).pass);
}

TEST_CASE("dissipation-dominant run decays and obeys the envelope oracle") {
    const std::size_t n = 200;
    auto ens = sampled(n, 44);
    const ForceModel weak(RadialProfile::spring, 0.01, 0.5, 1.0, 0.1, 1.0);
    const CutoffForce cf(weak, n, 0.25);
    const MollifiedDrive md(DriveField::constant({0.0, 0.0}), 1.0 / double(n));
    const BoundCertificates b = BoundCertificates::derive(cf, md,
        InitialDensity::uniform_box(unit_box, 1.0));
    REQUIRE(b.e0 > 0.25 * b.forcing_a * b.forcing_a); // dissipation dominates
    CHECK(b.e_cap == Approx(b.e0));

    const double e_start = ens.kinetic_energy();
    const auto recs = advance(ens, cf, md, 1.5, 2e-3, {.record_interval = 0.25});
    double prev = e_start;
    for (const auto& r : recs) {
        CHECK(r.kinetic < prev); // strictly decreasing past every record
        prev = r.kinetic;
        // scalar envelope ODE dy/dt = A sqrt(y) - 2y majorizes E(t)
        const double env = oracle::energy_envelope(e_start, b.forcing_a, r.t);
        CHECK(r.kinetic <= env * (1.0 + 1e-3));
    }
    CHECK(certify_energy(recs, b).pass);
    CHECK(certify_second_moment(recs, b).pass);
}

TEST_CASE("interacting spring run passes the whole certificate suite") {
    const std::size_t n = 400;
    auto ens = sampled(n, 55, 2.0);
    const ForceModel m(RadialProfile::spring, 2.0, 0.5, 1.0, 0.1, 1.0);
    const CutoffForce cf(m, n, 0.25);
    const MollifiedDrive md(DriveField::constant({0.05, 0.0}), 1.0 / double(n));
    const auto f0 = InitialDensity::uniform_box(unit_box, 2.0);
    const BoundCertificates b = BoundCertificates::derive(cf, md, f0);

    const auto recs = advance(ens, cf, md, 1.0, 2e-3, {.record_interval = 0.1});
    const auto energy = certify_energy(recs, b);
    const auto m2 = certify_second_moment(recs, b);
    const auto maxp = certify_maximum_principle(recs, b);
    CHECK(certify_mass(recs).pass);
    CHECK(energy.pass);
    CHECK(m2.pass);
    CHECK(maxp.pass);
    CHECK(energy.worst > 0.0);
    CHECK(energy.worst <= 1.0);
    CHECK(m2.worst <= 1.0);

    // loosening the constants can only keep a passing run passing
    BoundCertificates loose = b;
    loose.e_cap *= 2.0;
    loose.c_max *= 2.0;
    CHECK(certify_energy(recs, loose).pass);
    CHECK(certify_maximum_principle(recs, loose).pass);
    CHECK(certify_second_moment(recs, loose).pass);
}

TEST_CASE("estimated sup density stays under the analytic ceiling") {
    // decoupled transport compresses velocity space by e^-2t; the histogram
    // sup must sit near sup f0 e^{2t} and under the certified ceiling with a
    // statistical margin
    const std::size_t n = 100000;
    auto ens = sampled(n, 66);
    const ForceModel none(RadialProfile::spring, 0.0, 0.5, 1.0, 0.3, 1.0);
    const CutoffForce cf(none, n, 0.25);
    const MollifiedDrive md(DriveField::constant({0.0, 0.0}), 1.0 / double(n));
    advance(ens, cf, md, 1.0, 1e-3);

    const DensityEstimate est = histogram_density(ens, PhaseGrid4D::covering(ens, 4));
    const double sup = sup_density(est);
    const double ceiling = 1.0 * std::exp(2.0); // sup f0 = 1, C_max = 2, t = 1
    CHECK(sup <= ceiling * 1.2);
    CHECK(sup >= ceiling * 0.5);
}
