#ifndef FSPC_PARALLEL_HPP
#define FSPC_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <vector>

namespace fspc {

// Process-wide switch between the OpenMP kernels and the serial
// reference path. Both paths produce bit-identical results (every
// iteration writes its own slot and reductions run in index order);
// the serial path is kept so tests can assert exactly that.
bool parallel_enabled();
void set_parallel_enabled(bool on);

// RAII scope for tests/benchmarks.
class ParallelGuard {
public:
    explicit ParallelGuard(bool on) : prev_(parallel_enabled()) { set_parallel_enabled(on); }
    ~ParallelGuard() { set_parallel_enabled(prev_); }
    ParallelGuard(const ParallelGuard&) = delete;
    ParallelGuard& operator=(const ParallelGuard&) = delete;

private:
    bool prev_;
};

namespace detail {
void run_indexed(std::size_t n, bool parallel, void* ctx, void (*body)(void*, std::size_t));
}

// Applies body(i) for i in [0, n). Exceptions thrown by any iteration are
// captured and the one with the lowest index is rethrown after the loop,
// so error behavior does not depend on scheduling.
template <typename F>
void par_for(std::size_t n, F&& body) {
    struct Ctx {
        F* f;
        std::vector<std::exception_ptr> errs;
    } ctx{&body, std::vector<std::exception_ptr>(n)};
    detail::run_indexed(n, parallel_enabled(), &ctx, [](void* c, std::size_t i) {
        auto* x = static_cast<Ctx*>(c);
        try {
            (*x->f)(i);
        } catch (...) {
            x->errs[i] = std::current_exception();
        }
    });
    for (std::size_t i = 0; i < n; ++i)
        if (ctx.errs[i]) std::rethrow_exception(ctx.errs[i]);
}

} // namespace fspc

#endif
