#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mcre {

/// Upper bound on worker threads used by Monte Carlo loops. Results never
/// depend on it: every unit of work owns its random stream and writes to
/// its own slot.
struct Parallelism {
    unsigned threads = 1;
};

/// Calls fn(i) for i in [0, n). The first exception thrown by any worker is
/// rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t n, Parallelism par, Fn&& fn) {
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(std::max(1u, par.threads), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace mcre
