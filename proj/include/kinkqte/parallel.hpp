#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace kinkqte {

/// Run fn(i) for i in [0, count) over up to `threads` worker threads in
/// contiguous blocks. Results must be written to per-index slots; with that
/// discipline the outcome is independent of the thread count. threads <= 1
/// (or a small count) runs inline. The first exception is rethrown.
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t workers = threads <= 1 ? 1 : static_cast<std::size_t>(threads);
    workers = std::min(workers, count);
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, w, begin, end]() {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
}

}  // namespace kinkqte
