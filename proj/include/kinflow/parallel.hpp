#pragma once

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace kinflow {

namespace detail {
inline int& thread_cap() {
    static int cap = [] {
        int hw = static_cast<int>(std::thread::hardware_concurrency());
        if (hw < 1) hw = 1;
        if (const char* env = std::getenv("KINFLOW_THREADS")) {
            const int req = std::atoi(env);
            if (req >= 1) hw = std::min(hw, req);
        }
        return hw;
    }();
    return cap;
}
} // namespace detail

inline int max_threads() { return detail::thread_cap(); }
inline void set_max_threads(int n) { detail::thread_cap() = std::max(1, n); }

/// Run fn(begin, end) over a partition of [0, n) into contiguous chunks, one
/// chunk per worker.  Results must only depend on the index, never on the
/// chunking, so any thread count produces identical output.
template <class Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n);
    if (workers <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t b = std::min(n, w * chunk);
        const std::size_t e = std::min(n, b + chunk);
        if (b < e) pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(std::size_t{0}, std::min(n, chunk));
    for (auto& t : pool) t.join();
}

/// Elementwise map: fn(i) must write only slot i of its output.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    parallel_chunks(n, [&fn](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) fn(i);
    });
}

/// Like parallel_chunks but hands fn the chunk index as well, for per-chunk
/// scratch buffers that get merged afterwards.  Returns the chunk count.
template <class Fn>
std::size_t parallel_chunks_indexed(std::size_t n, Fn&& fn) {
    if (n == 0) return 0;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(max_threads()), n);
    if (workers <= 1) {
        fn(std::size_t{0}, std::size_t{0}, n);
        return 1;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::size_t used = 0;
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t b = std::min(n, w * chunk);
        const std::size_t e = std::min(n, b + chunk);
        if (b < e) {
            pool.emplace_back([&fn, w, b, e] { fn(w, b, e); });
            used = w;
        }
    }
    fn(std::size_t{0}, std::size_t{0}, std::min(n, chunk));
    for (auto& t : pool) t.join();
    return used + 1;
}

} // namespace kinflow
