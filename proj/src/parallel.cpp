#include "fabernet/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace fabernet {

unsigned thread_count() {
    if (const char* env = std::getenv("FABER_RELU_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0)
            return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

void parallel_chunks(std::size_t n, std::size_t chunk_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
    if (n == 0)
        return;
    if (chunk_size == 0)
        chunk_size = 1;
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(thread_count(), chunks));

    auto run = [&](std::size_t c) {
        const std::size_t b = c * chunk_size;
        body(c, b, std::min(n, b + chunk_size));
    };

    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            run(c);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t c = next++; c < chunks; c = next++) {
                try {
                    run(c);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

double pairwise_sum(const std::vector<double>& values) {
    if (values.empty())
        return 0.0;
    std::vector<double> level = values;
    while (level.size() > 1) {
        std::vector<double> next((level.size() + 1) / 2);
        for (std::size_t i = 0; i < next.size(); ++i)
            next[i] = (2 * i + 1 < level.size()) ? level[2 * i] + level[2 * i + 1] : level[2 * i];
        level.swap(next);
    }
    return level.front();
}

} // namespace fabernet
