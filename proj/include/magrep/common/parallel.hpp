#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace magrep::util {

// Splits [0, n) into `threads` contiguous chunks and runs fn(chunk_index,
// begin, end) on each. Chunk boundaries depend only on (n, threads), so any
// per-chunk accumulation merged in chunk order is reproducible for a given
// thread count.
inline void parallel_chunks(std::size_t n, int threads,
                            const std::function<void(int, std::size_t, std::size_t)>& fn) {
    threads = std::max(1, threads);
    const auto t = static_cast<std::size_t>(threads);
    if (t == 1 || n < 2 * t) {
        fn(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(t);
    const std::size_t per = (n + t - 1) / t;
    for (std::size_t c = 0; c < t; ++c) {
        const std::size_t begin = std::min(n, c * per);
        const std::size_t end = std::min(n, begin + per);
        if (begin >= end) break;
        pool.emplace_back([&, c, begin, end] { fn(static_cast<int>(c), begin, end); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace magrep::util
