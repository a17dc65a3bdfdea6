#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace charwave
{

/// Evaluate fn(0..count-1) on up to `threads` workers. Results land in fixed
/// slots, so the output never depends on scheduling. The first exception (by
/// index) is rethrown after all workers finish.
template <class R>
std::vector<R> parallel_map(std::size_t count, unsigned threads, const std::function<R(std::size_t)>& fn)
{
    std::vector<std::optional<R>> slots(count);
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                slots[i].emplace(fn(i));
            }
            catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned k = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
    if (k == 1) {
        worker();
    }
    else {
        std::vector<std::thread> pool;
        pool.reserve(k);
        for (unsigned i = 0; i < k; ++i)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(count);
    for (auto& s : slots)
        out.push_back(std::move(*s));
    return out;
}

} // namespace charwave
