#ifndef FSPC_RNG_HPP
#define FSPC_RNG_HPP

#include <cstdint>
#include <cstddef>
#include <vector>

namespace fspc {

// splitmix64 step; used for seeding and for deriving independent
// per-item streams (order-independent, so parallel loops stay
// reproducible regardless of scheduling).
std::uint64_t splitmix64(std::uint64_t& state);

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ull + salt * 0xbf58476d1ce4e5b9ull);
    return splitmix64(s);
}

// xoshiro256** with explicit, platform-independent sampling helpers.
// std::*_distribution is avoided on purpose: its output is
// implementation-defined and we promise byte-identical replays.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    // uniform in [0, 1) with 53-bit resolution
    double next_double();
    double uniform(double lo, double hi);
    // standard normal via Box-Muller (no cached spare; deterministic)
    double normal();
    double normal(double mean, double sd);
    // rejection sampling; requires lo < hi and a nondegenerate overlap
    double trunc_normal(double mean, double sd, double lo, double hi);
    // Fisher-Yates over indices 0..n-1
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t s_[4];
};

// Halton low-discrepancy point set with a seeded Cranley-Patterson shift.
// Prefix-stable: point i does not depend on how many points are drawn,
// which keeps multistart results monotone in the number of restarts.
class HaltonSequence {
public:
    HaltonSequence(std::size_t dim, std::uint64_t seed);
    // i-th point, all coordinates in [0, 1)
    std::vector<double> point(std::size_t i) const;

private:
    std::vector<unsigned> bases_;
    std::vector<double> shift_;
};

} // namespace fspc

#endif
