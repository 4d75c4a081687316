#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace iapgev::numeric {

// Runs body(i) for i in [0, count) on up to `workers` threads. Each index is
// visited exactly once; callers write results into per-index slots so the
// outcome does not depend on the worker count. The first exception thrown by
// any worker is rethrown on the calling thread.
template <class Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += workers) body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace iapgev::numeric
