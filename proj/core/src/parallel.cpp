#include "evsurf/parallel.hpp"

#include <algorithm>

namespace evsurf {

namespace {
std::size_t g_workers = [] {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? std::size_t(1) : std::size_t(hc);
}();
} // namespace

std::size_t hardware_parallelism() { return g_workers; }

std::size_t set_parallelism(std::size_t workers) {
    std::size_t prev = g_workers;
    g_workers = std::max<std::size_t>(1, workers);
    return prev;
}

} // namespace evsurf
