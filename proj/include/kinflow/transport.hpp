#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "kinflow/cutoff_force.hpp"
#include "kinflow/drive.hpp"
#include "kinflow/ensemble.hpp"
#include "kinflow/flow.hpp"
#include "kinflow/initial_density.hpp"
#include "kinflow/rng.hpp"

namespace kinflow {

/// Uniform-weight discrete probability measure on phase space (weight 1/n per
/// support point).  The normalization makes measures of different particle
/// counts comparable.
struct DiscreteMeasure {
    std::vector<PhasePoint> support;

    static DiscreteMeasure from_ensemble(const ParticleEnsemble& ens) {
        if (ens.pts.empty())
            throw std::invalid_argument("DiscreteMeasure: empty ensemble");
        return {ens.pts};
    }

    std::size_t size() const { return support.size(); }
};

struct CouplingPlan {
    std::vector<std::uint32_t> permutation; // a-index -> b-index
    double cost = 0.0;
};

namespace detail {

/// Mean assignment cost of a given permutation, summed in ascending a-index.
/// Shared by the solver and the brute-force oracle so equal permutations give
/// bitwise equal costs.
inline double assignment_cost(const DiscreteMeasure& a, const DiscreteMeasure& b,
                              const std::vector<std::uint32_t>& perm) {
    double s = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i)
        s += phase_dist(a.support[i], b.support[perm[i]]);
    return s / static_cast<double>(perm.size());
}

/// Jonker-Volgenant style shortest augmenting path assignment, O(n^3).
/// col_of[i] = column matched to row i.  Ties during the Dijkstra sweep go to
/// the smallest column index.
inline std::vector<std::uint32_t> solve_assignment(const std::vector<double>& cost,
                                                   std::size_t n) {
    const double inf = std::numeric_limits<double>::infinity();
    // row/column potentials; p[j] = row matched to column j, n means free.
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, n), way(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        p[n] = i;
        std::size_t j0 = n;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = n;
            for (std::size_t j = 0; j < n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 * n + j] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != n);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != n);
    }
    std::vector<std::uint32_t> col_of(n);
    for (std::size_t j = 0; j < n; ++j)
        if (p[j] != n) col_of[p[j]] = static_cast<std::uint32_t>(j);
    return col_of;
}

} // namespace detail

/// Exact W1 between equal-size uniform discrete measures, in Monge form
/// (uniform weights and equal sizes make an optimal coupling a permutation).
///
/// Among cost-equal options the returned permutation is made lexicographically
/// minimal under pairwise transpositions: exact fp ties are resolved toward
/// the smaller image, which in particular maps identical measures to the
/// identity.
inline CouplingPlan w1_exact(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    const std::size_t n = a.size();
    if (n == 0 || b.size() == 0)
        throw std::invalid_argument("w1_exact: empty measure");
    if (n != b.size())
        throw std::invalid_argument("w1_exact: support sizes differ (" +
                                    std::to_string(n) + " vs " +
                                    std::to_string(b.size()) + ")");
    if (n > 1024)
        throw std::invalid_argument("w1_exact: size " + std::to_string(n) +
                                    " exceeds the exact-solver limit 1024");
    for (const auto& z : a.support)
        if (!std::isfinite(z.x.x) || !std::isfinite(z.x.y) || !std::isfinite(z.v.x) ||
            !std::isfinite(z.v.y))
            throw std::invalid_argument("w1_exact: non-finite coordinate in measure a");
    for (const auto& z : b.support)
        if (!std::isfinite(z.x.x) || !std::isfinite(z.x.y) || !std::isfinite(z.v.x) ||
            !std::isfinite(z.v.y))
            throw std::invalid_argument("w1_exact: non-finite coordinate in measure b");

    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            cost[i * n + j] = phase_dist(a.support[i], b.support[j]);

    CouplingPlan plan;
    plan.permutation = detail::solve_assignment(cost, n);

    // Transposition polish: swap images that keep the cost bitwise equal but
    // lower the permutation lexicographically.
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i + 1 < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const std::uint32_t pi = plan.permutation[i], pj = plan.permutation[j];
                if (pi <= pj) continue;
                const double before = cost[i * n + pi] + cost[j * n + pj];
                const double after = cost[i * n + pj] + cost[j * n + pi];
                if (after == before) {
                    plan.permutation[i] = pj;
                    plan.permutation[j] = pi;
                    changed = true;
                }
            }
    }

    plan.cost = detail::assignment_cost(a, b, plan.permutation);
    return plan;
}

inline double w1_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    return w1_exact(a, b).cost;
}

/// Uniformly sub-sample k support points (without replacement), deterministic
/// in the seed.  Used to compare measures of unequal sizes at equal size.
inline DiscreteMeasure subsample(const DiscreteMeasure& m, std::size_t k,
                                 std::uint64_t seed) {
    if (k == 0 || k > m.size())
        throw std::invalid_argument("subsample: need 0 < k <= n");
    std::vector<std::uint32_t> idx(m.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    DiscreteMeasure sub;
    sub.support.reserve(k);
    for (std::size_t i = 0; i < k; ++i) sub.support.push_back(m.support[idx[i]]);
    return sub;
}

struct ConvergenceRow {
    std::size_t n_low = 0;
    std::size_t n_high = 0;
    std::uint64_t seed = 0;
    double t = 0.0;
    double w1 = 0.0; // median over sub-samples for this seed
};

struct ConvergenceStudy {
    std::vector<ConvergenceRow> rows;
    /// Medians over seeds per refinement pair, at t = 0 and t = t_final.
    std::vector<double> median_t0;
    std::vector<double> median_tf;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    double t_final = 0.0;
};

namespace detail {
inline double median(std::vector<double> xs) {
    if (xs.empty()) throw std::invalid_argument("median of empty set");
    std::sort(xs.begin(), xs.end());
    const std::size_t m = xs.size() / 2;
    return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}
} // namespace detail

/// Refinement study: integrate ensembles of increasing size from the same
/// density, then measure W1 between consecutive sizes at t = 0 and t_final.
/// Cross-size distances sub-sample the larger measure down to the smaller
/// size (median over `subsamples` draws).  Each size n gets its own cut-off
/// radius n^(-theta) and mollifier scale 1/n, following the construction of
/// the mean-field sequence.
inline ConvergenceStudy convergence_study(const InitialDensity& density,
                                          const std::vector<std::size_t>& sizes,
                                          const std::vector<std::uint64_t>& seeds,
                                          const ForceModel& model, double theta,
                                          const DriveField& drive, int quad_order,
                                          double t_final, double dt,
                                          std::size_t subsamples = 16) {
    if (sizes.size() < 2)
        throw std::invalid_argument("convergence_study: need at least two sizes");
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k)
        if (!(sizes[k] <= sizes[k + 1]))
            throw std::invalid_argument("convergence_study: sizes must be ascending");
    if (sizes.back() > 1024)
        throw std::invalid_argument("convergence_study: sizes exceed exact-solver limit");
    if (seeds.empty()) throw std::invalid_argument("convergence_study: need seeds");

    ConvergenceStudy study;
    study.t_final = t_final;
    for (std::size_t k = 0; k + 1 < sizes.size(); ++k)
        study.pairs.emplace_back(sizes[k], sizes[k + 1]);

    // measures[k][s] at t=0 and t_final
    std::vector<std::vector<DiscreteMeasure>> at0(sizes.size()), atf(sizes.size());
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            ParticleEnsemble ens = sample_initial(density, sizes[k], seeds[s]);
            at0[k].push_back(DiscreteMeasure::from_ensemble(ens));
            const CutoffForce cf(model, sizes[k], theta);
            const MollifiedDrive md(drive, 1.0 / static_cast<double>(sizes[k]),
                                    quad_order);
            advance(ens, cf, md, ens.time + t_final, dt);
            atf[k].push_back(DiscreteMeasure::from_ensemble(ens));
        }
    }

    for (std::size_t k = 0; k + 1 < sizes.size(); ++k) {
        std::vector<double> seed_med_t0, seed_med_tf;
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            std::vector<double> reps0, repsf;
            for (std::size_t rep = 0; rep < subsamples; ++rep) {
                const std::uint64_t sub_seed =
                    derive_seed(seeds[s], (k << 24) ^ (rep + 1));
                reps0.push_back(w1_distance(
                    subsample(at0[k + 1][s], sizes[k], sub_seed), at0[k][s]));
                repsf.push_back(w1_distance(
                    subsample(atf[k + 1][s], sizes[k], sub_seed), atf[k][s]));
            }
            const double m0 = detail::median(reps0);
            const double mf = detail::median(repsf);
            seed_med_t0.push_back(m0);
            seed_med_tf.push_back(mf);
            study.rows.push_back({sizes[k], sizes[k + 1], seeds[s], 0.0, m0});
            study.rows.push_back({sizes[k], sizes[k + 1], seeds[s], t_final, mf});
        }
        study.median_t0.push_back(detail::median(seed_med_t0));
        study.median_tf.push_back(detail::median(seed_med_tf));
    }
    return study;
}

} // namespace kinflow
