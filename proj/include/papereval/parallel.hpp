#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace papereval {

/// Runs fn(i) for i in [0, count) on at most `parallelism` threads and
/// returns results indexed by i, so output order never depends on
/// completion order. The first exception thrown by any task is rethrown.
template <typename Result>
std::vector<Result> parallel_map(std::size_t count, std::size_t parallelism,
                                 const std::function<Result(std::size_t)>& fn) {
    std::vector<Result> results(count);
    if (count == 0) return results;
    const std::size_t workers = std::max<std::size_t>(1, std::min(parallelism, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) results[i] = fn(i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    results[i] = fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

}  // namespace papereval
