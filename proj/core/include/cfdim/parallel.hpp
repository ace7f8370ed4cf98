#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

#include "cfdim/real.hpp"

namespace cfdim {

// Worker count for row-parallel loops. CFDIM_THREADS=1 forces serial runs;
// results are identical either way because every row is reduced on its own.
inline unsigned thread_count() {
    static unsigned n = [] {
        if (const char* env = std::getenv("CFDIM_THREADS")) {
            long v = std::atol(env);
            if (v >= 1) return unsigned(v);
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw ? hw : 1u;
    }();
    return n;
}

// Static row partition: body(begin, end) on each chunk. Real is carried so
// worker threads can re-establish thread-local precision (MPFR).
template <class Real, class Body>
void parallel_rows(std::size_t n, Body&& body) {
    unsigned workers = thread_count();
    if (workers <= 1 || n < 2 * workers) {
        body(std::size_t(0), n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = std::size_t(w) * chunk;
        if (lo >= n) break;
        std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([lo, hi, &body] {
            real_traits<Real>::thread_init();
            body(lo, hi);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace cfdim
