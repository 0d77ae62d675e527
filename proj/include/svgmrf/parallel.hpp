#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace svgmrf {

/// Runs body(begin, end) over `workers` contiguous chunks of [0, count).
///
/// The partition depends only on (count, workers). If several chunks throw,
/// the exception from the lowest chunk is rethrown, so error reporting is
/// the same as a serial run.
template <class Body>
void parallel_chunks(std::size_t count, unsigned workers, Body&& body) {
    workers = std::max(1u, workers);
    if (workers == 1 || count < 2) {
        body(std::size_t{0}, count);
        return;
    }
    const std::size_t chunks = std::min<std::size_t>(workers, count);
    std::vector<std::exception_ptr> errors(chunks);
    std::vector<std::thread> threads;
    threads.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t begin = count * c / chunks;
        const std::size_t end = count * (c + 1) / chunks;
        threads.emplace_back([&, c, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
    parallel_chunks(count, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            body(i);
        }
    });
}

}  // namespace svgmrf
