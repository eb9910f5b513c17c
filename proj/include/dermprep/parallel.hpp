#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace dermprep {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. fn must be
/// safe to call concurrently for distinct indices. Exceptions from fn
/// propagate to the caller (first one wins).
template <typename Fn>
void parallel_for_index(std::size_t count, int workers, Fn&& fn) {
    if (count == 0) return;
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::atomic_flag error_set = ATOMIC_FLAG_INIT;

    auto body = [&]() {
        for (;;) {
            if (failed.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                if (!error_set.test_and_set()) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) threads.emplace_back(body);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace dermprep
