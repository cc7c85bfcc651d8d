#include "fspc/parallel.hpp"

#include <atomic>

namespace fspc {

namespace {
std::atomic<bool> g_parallel{true};
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel_enabled(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

namespace detail {

void run_indexed(std::size_t n, bool parallel, void* ctx, void (*body)(void*, std::size_t)) {
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(n); ++i)
            body(ctx, static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < n; ++i) body(ctx, i);
    }
}

} // namespace detail
} // namespace fspc
