#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace ngf {

/// Splits [0, count) into `workers` contiguous chunks, maps each chunk on its
/// own thread and folds the partial results in chunk order. The result depends
/// on the partition, so it is deterministic for a fixed worker count.
template <typename T, typename Map, typename Combine>
T chunked_reduce(std::size_t count, int workers, T init, Map map, Combine combine) {
    const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1,
                                                  std::max<std::size_t>(count, 1));
    if (w == 1) {
        combine(init, map(std::size_t{0}, count));
        return init;
    }
    std::vector<T> partial(w);
    std::vector<std::exception_ptr> errors(w);
    {
        std::vector<std::jthread> threads;
        threads.reserve(w);
        for (std::size_t k = 0; k < w; ++k) {
            const std::size_t lo = count * k / w;
            const std::size_t hi = count * (k + 1) / w;
            threads.emplace_back([&, k, lo, hi] {
                try {
                    partial[k] = map(lo, hi);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (auto& p : partial) combine(init, std::move(p));
    return init;
}

}  // namespace ngf
