#pragma once

// Minimal deterministic worker pool: tasks write into preassigned slots,
// so results do not depend on scheduling order.

#include <atomic>
#include <thread>
#include <vector>

namespace qplab {

template <class Fn>
void parallel_for(int jobs, long count, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (long i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    auto worker = [&] {
        for (;;) {
            long i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    int n = std::min<long>(jobs, count);
    pool.reserve((std::size_t)n);
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace qplab
