#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "kinflow/stability.hpp"
#include "kinflow/transport.hpp"
#include "oracles.hpp"

using namespace kinflow;
using Catch::Approx;

namespace {

const Box4 unit_box{{0.0, 0.0, -0.5, -0.5}, {1.0, 1.0, 0.5, 0.5}};

DiscreteMeasure random_measure(std::size_t n, std::uint64_t seed, double spread = 1.0) {
    Rng rng(seed);
    DiscreteMeasure m;
    m.support.resize(n);
    for (auto& z : m.support)
        z = {{spread * rng.uniform(-1.0, 1.0), spread * rng.uniform(-1.0, 1.0)},
             {spread * rng.uniform(-1.0, 1.0), spread * rng.uniform(-1.0, 1.0)}};
    return m;
}

} // namespace

TEST_CASE("identical measures have zero distance and identity coupling") {
    const DiscreteMeasure a = random_measure(24, 5);
    const CouplingPlan plan = w1_exact(a, a);
    CHECK(plan.cost == 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(plan.permutation[i] == static_cast<std::uint32_t>(i));

    // a reshuffled copy is still at distance zero
    DiscreteMeasure b = a;
    std::rotate(b.support.begin(), b.support.begin() + 7, b.support.end());
    CHECK(w1_distance(a, b) == 0.0);
}

TEST_CASE("single-pair distance is the phase-space metric") {
    const DiscreteMeasure a{{{{0.0, 0.0}, {0.0, 0.0}}}};
    const DiscreteMeasure b{{{{3.0, 0.0}, {0.0, 4.0}}}};
    const CouplingPlan plan = w1_exact(a, b);
    CHECK(plan.cost == 5.0);
    CHECK(plan.permutation == std::vector<std::uint32_t>{0});
}

TEST_CASE("solver matches the brute-force oracle up to n = 7") {
    std::uint64_t seed = 1000;
    for (int inst = 0; inst < 1000; ++inst) {
        const std::size_t n = 2 + static_cast<std::size_t>(inst % 6);
        const DiscreteMeasure a = random_measure(n, seed++);
        const DiscreteMeasure b = random_measure(n, seed++);
        const double got = w1_distance(a, b);
        const double want = oracle::w1_brute_force(a, b);
        REQUIRE(got == want);
    }
}

TEST_CASE("metric axioms on random triples") {
    std::uint64_t seed = 9000;
    for (int trip = 0; trip < 100; ++trip) {
        const std::size_t n = 4 + static_cast<std::size_t>(trip % 13);
        const DiscreteMeasure a = random_measure(n, seed++);
        const DiscreteMeasure b = random_measure(n, seed++);
        const DiscreteMeasure c = random_measure(n, seed++);
        const double ab = w1_distance(a, b);
        const double ba = w1_distance(b, a);
        const double bc = w1_distance(b, c);
        const double ac = w1_distance(a, c);
        REQUIRE(std::abs(ab - ba) <= 1e-12);
        REQUIRE(ac <= ab + bc + 1e-12);
        REQUIRE(ab >= 0.0);
        REQUIRE(w1_distance(a, a) == 0.0);
    }
}

TEST_CASE("scale and translation behavior of the distance") {
    const DiscreteMeasure a = random_measure(32, 77);
    const DiscreteMeasure b = random_measure(32, 78);
    const double base = w1_distance(a, b);

    // doubling all coordinates doubles the distance bitwise (exact in fp)
    DiscreteMeasure a2 = a, b2 = b;
    for (auto& z : a2.support) { z.x *= 2.0; z.v *= 2.0; }
    for (auto& z : b2.support) { z.x *= 2.0; z.v *= 2.0; }
    CHECK(w1_distance(a2, b2) == 2.0 * base);

    // translating both measures leaves the distance unchanged
    const Vec2 c{0.37, -1.4};
    DiscreteMeasure at = a, bt = b;
    for (auto& z : at.support) z.x += c;
    for (auto& z : bt.support) z.x += c;
    CHECK(w1_distance(at, bt) == Approx(base).margin(1e-12));

    // shifting one measure by delta moves it exactly |delta|
    const double delta = 0.21;
    DiscreteMeasure shifted = a;
    for (auto& z : shifted.support) z.v.x += delta;
    CHECK(w1_distance(a, shifted) == Approx(delta).margin(1e-12));
}

TEST_CASE("input validation of the exact solver") {
    const DiscreteMeasure a = random_measure(4, 1);
    const DiscreteMeasure b = random_measure(5, 2);
    CHECK_THROWS_AS(w1_exact(a, b), std::invalid_argument);
    CHECK_THROWS_AS(w1_exact(DiscreteMeasure{}, a), std::invalid_argument);

    DiscreteMeasure big = random_measure(1025, 3);
    CHECK_THROWS_AS(w1_exact(big, big), std::invalid_argument);

    DiscreteMeasure nan_m = random_measure(4, 4);
    nan_m.support[2].v.y = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(w1_exact(a, nan_m), std::invalid_argument);
    CHECK_THROWS_AS(w1_exact(nan_m, a), std::invalid_argument);

    ParticleEnsemble empty;
    CHECK_THROWS_AS(DiscreteMeasure::from_ensemble(empty), std::invalid_argument);
}

TEST_CASE("subsampling is deterministic and without replacement") {
    const DiscreteMeasure m = random_measure(50, 11);
    const DiscreteMeasure s1 = subsample(m, 20, 42);
    const DiscreteMeasure s2 = subsample(m, 20, 42);
    REQUIRE(s1.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(s1.support[i].x.x == s2.support[i].x.x);
        CHECK(s1.support[i].v.y == s2.support[i].v.y);
    }
    // all drawn points are distinct members of the parent support
    std::set<double> seen;
    for (const auto& z : s1.support) {
        CHECK(std::any_of(m.support.begin(), m.support.end(), [&](const PhasePoint& p) {
            return p.x.x == z.x.x && p.x.y == z.x.y && p.v.x == z.v.x && p.v.y == z.v.y;
        }));
        CHECK(seen.insert(z.x.x).second); // coordinates are a.s. unique
    }
    const DiscreteMeasure other = subsample(m, 20, 43);
    CHECK(std::any_of(other.support.begin(), other.support.end(), [&](const PhasePoint& p) {
        return p.x.x != s1.support[0].x.x;
    }));

    // k = n is a permutation: distance to the parent is zero
    CHECK(w1_distance(subsample(m, 50, 7), m) == 0.0);
    CHECK_THROWS_AS(subsample(m, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(subsample(m, 51, 1), std::invalid_argument);
}

TEST_CASE("decoupled flow contracts pairs within the closed-form Lipschitz factor") {
    const auto f0 = InitialDensity::uniform_box(unit_box, 1.0);
    const ForceModel none(RadialProfile::spring, 0.0, 0.5, 1.0, 0.3, 1.0);
    const DriveField g = DriveField::constant({0.0, 0.0});

    auto run = [&](std::uint64_t seed) {
        ParticleEnsemble e = sample_initial(f0, 128, seed);
        const CutoffForce cf(none, 128, 0.25);
        const MollifiedDrive md(g, 1.0 / 128.0);
        advance(e, cf, md, 1.0, 1e-2);
        return e;
    };
    ParticleEnsemble ea = sample_initial(f0, 128, 100);
    ParticleEnsemble eb = sample_initial(f0, 128, 200);
    const double w0 = w1_distance(DiscreteMeasure::from_ensemble(ea),
                                  DiscreteMeasure::from_ensemble(eb));
    const ParticleEnsemble fa = run(100);
    const ParticleEnsemble fb = run(200);
    const double wt = w1_distance(DiscreteMeasure::from_ensemble(fa),
                                  DiscreteMeasure::from_ensemble(fb));
    CHECK(w0 > 0.0);
    CHECK(wt <= 2.0 * w0);
}

TEST_CASE("dobrushin pair run: zero perturbation, exact shift, certified bound") {
    const auto f0 = InitialDensity::uniform_box(unit_box, 1.0);
    const ForceModel spring(RadialProfile::spring, 1.0, 0.5, 1.0, 0.1, 1.0);
    const DriveField g = DriveField::constant({0.0, 0.0});

    const StabilityReport zero =
        dobrushin_pair_run(f0, f0, 64, 5, spring, 0.25, g, 24, 0.5, 5e-3);
    CHECK(zero.w1_initial == 0.0);
    CHECK(zero.w1_final == 0.0);
    CHECK(zero.within_bound);

    const auto fb = f0.shifted({0.0, 0.0}, {0.05, 0.0});
    const StabilityReport rep =
        dobrushin_pair_run(f0, fb, 64, 5, spring, 0.25, g, 24, 0.5, 5e-3);
    CHECK(rep.w1_initial == Approx(0.05).margin(1e-12));
    CHECK(rep.w1_final > 0.0);
    CHECK(rep.bound == Approx(std::exp(2.0 * rep.kernel_lipschitz * 0.5) * 0.05)
                           .epsilon(1e-12));
    CHECK(rep.within_bound);

    const auto heavy = InitialDensity::uniform_box(unit_box, 2.0);
    CHECK_THROWS_AS(dobrushin_pair_run(f0, heavy, 16, 1, spring, 0.25, g, 24, 0.1, 1e-2),
                    std::invalid_argument);
}

TEST_CASE("convergence study bookkeeping and trivial zero case") {
    const auto f0 = InitialDensity::uniform_box(unit_box, 1.0);
    const ForceModel spring(RadialProfile::spring, 1.0, 0.5, 1.0, 0.05, 1.0);
    const DriveField g = DriveField::constant({0.0, 0.0});

    // equal sizes with a shared seed: identical ensembles, all distances zero
    const ConvergenceStudy same = convergence_study(f0, {48, 48}, {7}, spring, 0.25,
                                                    g, 24, 0.2, 5e-3, 4);
    REQUIRE(same.median_t0.size() == 1);
    CHECK(same.median_t0[0] == 0.0);
    CHECK(same.median_tf[0] == 0.0);

    const ConvergenceStudy study = convergence_study(f0, {24, 48, 96}, {1, 2, 3}, spring,
                                                     0.25, g, 24, 0.2, 5e-3, 4);
    REQUIRE(study.pairs.size() == 2);
    CHECK(study.pairs[0] == std::pair<std::size_t, std::size_t>{24, 48});
    REQUIRE(study.rows.size() == 2 * 3 * 2); // pairs x seeds x {t0, tf}
    for (const auto& row : study.rows) {
        CHECK(row.w1 >= 0.0);
        CHECK((row.t == 0.0 || row.t == 0.2));
        CHECK(row.n_low < row.n_high);
    }
    for (double m : study.median_t0) CHECK(m > 0.0);
    for (double m : study.median_tf) CHECK(m > 0.0);

    CHECK_THROWS_AS(convergence_study(f0, {32}, {1}, spring, 0.25, g, 24, 0.1, 1e-2),
                    std::invalid_argument);
    CHECK_THROWS_AS(convergence_study(f0, {64, 32}, {1}, spring, 0.25, g, 24, 0.1, 1e-2),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        convergence_study(f0, {512, 2048}, {1}, spring, 0.25, g, 24, 0.1, 1e-2),
        std::invalid_argument);
    CHECK_THROWS_AS(convergence_study(f0, {32, 64}, {}, spring, 0.25, g, 24, 0.1, 1e-2),
                    std::invalid_argument);
}
