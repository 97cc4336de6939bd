#include <mtps/parallel.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mtps {

    unsigned worker_count()
    {
        if (const char* env = std::getenv("MTPS_THREADS")) {
            const int n = std::atoi(env);
            if (n >= 1)
                return static_cast<unsigned>(n);
        }
        return std::max(1u, std::thread::hardware_concurrency());
    }

    // Exceptions are reported from the lowest failing index, independent of scheduling.
    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
    {
        const std::size_t workers = std::min<std::size_t>(worker_count(), n);
        if (workers <= 1) {
            for (std::size_t i = 0; i < n; ++i)
                body(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::size_t error_index = n;
        std::mutex error_mutex;
        auto run = [&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                }
                catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (i < error_index) {
                        error_index = i;
                        error = std::current_exception();
                    }
                }
            }
        };
        std::vector<std::thread> threads;
        threads.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w)
            threads.emplace_back(run);
        run();
        for (auto& t : threads)
            t.join();
        if (error)
            std::rethrow_exception(error);
    }

} // namespace mtps
