#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace stochwave {

inline int resolve_threads(int n_threads) {
    if (n_threads > 0) return n_threads;
    if (const char* env = std::getenv("STOCHWAVE_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

/// Runs fn(chunk_index) for chunk_index = 0..n_chunks-1 on a small pool.
/// Chunk contents and the final cross-chunk reduction order are fixed by
/// index, so results are bit-identical for any thread count.
inline void parallel_chunks(int n_chunks, int n_threads,
                            const std::function<void(int)>& fn) {
    n_threads = std::min(resolve_threads(n_threads), n_chunks);
    if (n_threads <= 1) {
        for (int c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex err_mutex;
    auto worker = [&]() {
        for (;;) {
            int c = next.fetch_add(1);
            if (c >= n_chunks) break;
            try {
                fn(c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace stochwave
