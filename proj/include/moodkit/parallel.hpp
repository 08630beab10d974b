#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace moodkit {

/// Runs fn(i) for i in [0, n) on up to `threads` workers pulling indices from a shared
/// counter. Each index is processed exactly once, so results written per index do not
/// depend on the worker count. The first exception thrown is rethrown after joining.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    const int workers = std::clamp(threads, 1, std::max(1, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers - 1));
    for (int w = 1; w < workers; ++w) pool.emplace_back(body);
    body();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// Hardware concurrency with a floor of one.
inline int default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

} // namespace moodkit
