#pragma once

// Replicate-level parallelism. Each replicate gets its own engine derived
// from (seed, index); results are returned in index order so the outcome does
// not depend on the thread count or on scheduling.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

#include "superocc/random.hpp"

namespace superocc {

/// Runs fn(index, rng) for index in [0, n) on up to `threads` workers.
template <class F>
auto run_replicates(std::size_t n, std::uint64_t seed, unsigned threads, F&& fn)
    -> std::vector<std::invoke_result_t<F&, std::size_t, Rng&>> {
    using R = std::invoke_result_t<F&, std::size_t, Rng&>;
    std::vector<std::optional<R>> slots(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            {
                std::lock_guard lock(failure_mutex);
                if (failure) return;
            }
            try {
                Rng rng = make_stream(seed, i);
                slots[i].emplace(fn(i, rng));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

}  // namespace superocc
