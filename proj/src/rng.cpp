#include "fspc/rng.hpp"

#include <cmath>
#include <numbers>

#include "fspc/errors.hpp"

namespace fspc {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

static inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

double Rng::normal() {
    // Box-Muller; u1 nudged away from 0 so log stays finite
    double u1 = next_double();
    double u2 = next_double();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::normal(double mean, double sd) {
    return mean + sd * normal();
}

double Rng::trunc_normal(double mean, double sd, double lo, double hi) {
    if (!(lo < hi)) throw configuration_error("trunc_normal: empty interval");
    if (sd <= 0.0) {
        double v = mean;
        return v < lo ? lo : (v > hi ? hi : v);
    }
    for (int attempt = 0; attempt < 10000; ++attempt) {
        double v = normal(mean, sd);
        if (v >= lo && v <= hi) return v;
    }
    // interval carries negligible mass; fall back to a uniform draw
    return uniform(lo, hi);
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(next_u64() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

namespace {
constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                                53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113,
                                127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
                                193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263,
                                269, 271, 277, 281, 283, 293, 307, 311, 313, 317, 331, 337, 347,
                                349, 353, 359, 367, 373, 379, 383, 389, 397, 401};

double radical_inverse(std::size_t i, unsigned base) {
    double inv_base = 1.0 / base;
    double f = inv_base;
    double r = 0.0;
    while (i > 0) {
        r += f * static_cast<double>(i % base);
        i /= base;
        f *= inv_base;
    }
    return r;
}
} // namespace

HaltonSequence::HaltonSequence(std::size_t dim, std::uint64_t seed) {
    constexpr std::size_t max_dim = sizeof(kPrimes) / sizeof(kPrimes[0]);
    if (dim > max_dim) throw configuration_error("HaltonSequence: dimension too large");
    bases_.assign(kPrimes, kPrimes + dim);
    shift_.resize(dim);
    std::uint64_t sm = mix_seed(seed, 0x48414c54ull);
    for (auto& s : shift_) s = static_cast<double>(splitmix64(sm) >> 11) * 0x1.0p-53;
}

std::vector<double> HaltonSequence::point(std::size_t i) const {
    std::vector<double> p(bases_.size());
    for (std::size_t d = 0; d < bases_.size(); ++d) {
        double v = radical_inverse(i + 1, bases_[d]) + shift_[d];
        p[d] = v - std::floor(v);
    }
    return p;
}

} // namespace fspc
