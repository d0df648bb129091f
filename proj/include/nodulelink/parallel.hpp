#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "nodulelink/types.hpp"

namespace nodulelink {

/// Calls fn(i) for i in [0, n) on up to `parallelism` threads. The first exception thrown
/// by any call is rethrown after all workers stop; remaining indices are skipped.
template <typename Fn>
void parallel_for(std::size_t n, int parallelism, Fn&& fn) {
    if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < n && !stop; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                stop = true;
            }
        }
    };
    std::vector<std::thread> pool;
    const auto extra = std::min<std::size_t>(static_cast<std::size_t>(parallelism), n > 0 ? n : 1) - 1;
    for (std::size_t t = 0; t < extra; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace nodulelink
