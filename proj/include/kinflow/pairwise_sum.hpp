#pragma once

#include <cstddef>
#include <span>

namespace kinflow {

namespace detail {
template <class Fn>
double pairwise_sum_impl(std::size_t begin, std::size_t end, const Fn& term) {
    const std::size_t n = end - begin;
    if (n <= 32) {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = begin + n / 2;
    return pairwise_sum_impl(begin, mid, term) + pairwise_sum_impl(mid, end, term);
}
} // namespace detail

/// Pairwise (balanced tree) summation of term(0) + ... + term(n-1).
/// The tree shape depends only on n, so the result is deterministic and the
/// rounding error grows like log n instead of n.
template <class Fn>
double pairwise_sum(std::size_t n, const Fn& term) {
    if (n == 0) return 0.0;
    return detail::pairwise_sum_impl(0, n, term);
}

inline double pairwise_sum(std::span<const double> xs) {
    return pairwise_sum(xs.size(), [&xs](std::size_t i) { return xs[i]; });
}

} // namespace kinflow
