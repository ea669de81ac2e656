#ifndef T1BS_PARALLEL_HPP
#define T1BS_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace t1bs {

inline unsigned resolve_workers(unsigned requested)
{
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Runs fn(i) for i in [0, n). Work is split into contiguous blocks, one per
/// worker, so any result written to a per-index slot is identical for every
/// worker count. The first exception thrown by any worker is rethrown here.
template <typename Fn>
void parallel_for(std::size_t n, unsigned n_workers, Fn&& fn)
{
    n_workers = resolve_workers(n_workers);
    if (n == 0) return;
    if (n_workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    if (static_cast<std::size_t>(n_workers) > n) n_workers = static_cast<unsigned>(n);

    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    const std::size_t base = n / n_workers;
    const std::size_t extra = n % n_workers;
    std::size_t begin = 0;
    for (unsigned w = 0; w < n_workers; ++w) {
        const std::size_t len = base + (w < extra ? 1 : 0);
        const std::size_t end = begin + len;
        threads.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace t1bs

#endif  // T1BS_PARALLEL_HPP
