#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace sublin {

// Index-parallel loop: body(i) must write only to slot i of preallocated
// output, so the merged result is identical for every worker count.
inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& body) {
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    const int n = workers < static_cast<int>(count) ? workers : static_cast<int>(count);
    pool.reserve(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w) pool.emplace_back(run);
    for (std::thread& t : pool) t.join();
}

} // namespace sublin
