#ifndef MTPS_PARALLEL_HPP
#define MTPS_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace mtps {

    /// Number of worker threads used by parallel_for (hardware concurrency, at least 1).
    /// Overridden by the MTPS_THREADS environment variable.
    unsigned worker_count();

    /// Runs body(i) for i in [0, n), possibly concurrently. Each index runs exactly once; callers write
    /// results into per-index slots and reduce them afterwards in index order so results stay deterministic.
    /// If bodies throw, the exception of the lowest failing index is rethrown after all workers finish.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace mtps

#endif
