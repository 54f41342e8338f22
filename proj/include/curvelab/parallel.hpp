#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace curvelab {

namespace detail {
inline int& thread_override() {
    static int value = 0;
    return value;
}
} // namespace detail

inline void set_thread_count(int n) { detail::thread_override() = n; }

inline int default_thread_count() {
    if (detail::thread_override() > 0) return detail::thread_override();
    unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::min(hw == 0 ? 1u : hw, 8u));
}

// Index-space parallel map. Work items write only to their own slots, so the
// result is identical to the serial loop regardless of thread count.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn,
                         int threads = 0) {
    if (threads <= 0) threads = default_thread_count();
    if (threads == 1 || n <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::int64_t chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        std::int64_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

// SplitMix64; used to derive independent per-task seeds so parallel and
// serial runs draw identical streams.
inline std::uint64_t split_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace curvelab
