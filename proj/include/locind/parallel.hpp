#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace locind {

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware).
/// Work is split into contiguous chunks, so callers that write results by
/// index get output independent of the thread count. The first exception
/// (lowest index) is rethrown.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::min<std::size_t>(threads, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr error;
    std::size_t error_index = n;
    std::mutex m;
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        pool.emplace_back([&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(m);
                    if (i < error_index) {
                        error_index = i;
                        error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace locind
