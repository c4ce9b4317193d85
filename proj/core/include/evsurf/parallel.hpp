// Deterministic data-parallel loop.
//
// Work items are split into contiguous chunks handed to std::thread workers.
// Bodies must write only to locations owned by their own index (disjoint
// writes); all reductions in the library are performed sequentially, so
// results are byte-identical for every thread count.
#pragma once

#include <cstddef>
#include <thread>
#include <vector>

#include "evsurf/grid.hpp"

namespace evsurf {

/// Number of worker threads used by parallel_for (0 or 1 disables threading).
std::size_t hardware_parallelism();

/// Override the worker count; 1 forces serial execution.  Returns previous.
std::size_t set_parallelism(std::size_t workers);

/// Apply body(i) for i in [begin, end), split into contiguous chunks.
template <class Body>
void parallel_for(std::size_t begin, std::size_t end, const Body& body) {
    const std::size_t n = end > begin ? end - begin : 0;
    const std::size_t workers = hardware_parallelism();
    if (n == 0) return;
    if (workers <= 1 || n < 2 * workers) {
        for (std::size_t i = begin; i < end; ++i) body(i);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = begin + w * chunk;
        if (lo >= end) break;
        const std::size_t hi = lo + chunk < end ? lo + chunk : end;
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

/// Apply body(p, t, i, j) at every node (p = linear index), parallel over
/// time levels.
template <class Body>
void for_nodes(const Grid3& g, const Body& body) {
    parallel_for(0, g.n0, [&](std::size_t t) {
        for (std::size_t i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < g.n2; ++j)
                body(g.index(t, i, j), t, i, j);
    });
}

} // namespace evsurf
