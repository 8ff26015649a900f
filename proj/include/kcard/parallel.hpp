#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kcard {

/// 0 means "use hardware concurrency".
inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for every i in [0, count). Work items must write to disjoint,
/// index-keyed outputs; the result is then independent of the thread count.
/// If several items throw, the exception of the lowest index is rethrown.
template <typename Body>
void parallel_for(std::ptrdiff_t count, unsigned threads, Body&& body) {
    if (count <= 0) return;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::ptrdiff_t>(resolve_threads(threads), count));
    if (workers == 1) {
        for (std::ptrdiff_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<std::ptrdiff_t> next{0};
    std::atomic<std::ptrdiff_t> error_index{count};
    std::mutex error_mutex;
    std::exception_ptr error;

    auto worker = [&] {
        for (;;) {
            const std::ptrdiff_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= count) return;
            // Items above a known failure cannot change which error is reported.
            if (i > error_index.load(std::memory_order_relaxed)) continue;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (i < error_index.load()) {
                    error_index.store(i);
                    error = std::current_exception();
                }
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace kcard
