#ifndef FSPC_OPTIM_HPP
#define FSPC_OPTIM_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace fspc {

// Dense row-major matrix, just big enough for the least-squares entry point.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // rows*cols, row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Minimum-norm least-squares solution via a rank-revealing QR.
// Throws identifiability_error when the design is rank deficient.
std::vector<double> least_squares_solve(const Matrix& design, const std::vector<double>& target);

struct BoxSpec {
    std::vector<double> lower;
    std::vector<double> upper; // lower[i] == upper[i] pins coordinate i

    std::size_t dim() const { return lower.size(); }
    void validate() const;
    std::vector<double> clamp(std::vector<double> x) const;
    std::vector<double> center() const;
    bool contains(std::span<const double> x, double tol = 0.0) const;
};

struct OptimReport {
    std::vector<double> best_point;
    double best_value = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

enum class OptimEngine { nelder_mead, simulated_annealing };

struct MultistartOptions {
    std::size_t restarts = 8;
    std::uint64_t seed = 0;
    OptimEngine engine = OptimEngine::nelder_mead;
    double tol_rel = 1e-12;         // relative f-spread stopping rule
    std::size_t max_evals = 0;      // per start; 0 picks a dimension-based default
    // extra start points evaluated before the seeded ones (anchors,
    // previous iterates); always included, so the seeded prefix property
    // is preserved
    std::vector<std::vector<double>> warm_starts;
    bool parallel = false;          // dispatch starts via par_for
};

struct MultistartReport {
    OptimReport best;
    std::vector<OptimReport> per_start; // index order: warm starts, then seeded
};

using Objective = std::function<double(std::span<const double>)>;

// Seeded multi-start local search over a box. Deterministic under the
// seed; best_value is non-increasing in `restarts` because start i never
// depends on the total count.
OptimReport multistart_minimize(const Objective& objective, const BoxSpec& box,
                                std::size_t restarts, std::uint64_t seed);
MultistartReport multistart_minimize(const Objective& objective, const BoxSpec& box,
                                     const MultistartOptions& opts);

// Single Nelder-Mead run clamped to the box (pinned coordinates are held).
OptimReport nelder_mead_minimize(const Objective& objective, const BoxSpec& box,
                                 std::vector<double> x0, double tol_rel, std::size_t max_evals);

// Projections onto the parameter constraint sets.
//   amplitude: (a_1..a_n, b_1..b_n) -> geometric mean of a equals 1,
//              b sums to 0, a stays positive (floored at 1e-6).
//   phase:     (k_1..k_n, z_1..z_n) -> geometric mean of k equals 1,
//              z is the exact Euclidean projection onto
//              {sum z = 0} intersected with [-1/2, 1/2]^n.
struct ProjectionResult {
    std::vector<double> value;
    std::vector<std::size_t> clamped; // indices floored to keep positivity
};

ProjectionResult project_amplitude(std::span<const double> gamma);
ProjectionResult project_phase(std::span<const double> xi);

double geometric_mean(std::span<const double> x);

} // namespace fspc

#endif
