#ifndef FSPC_FRECHET_HPP
#define FSPC_FRECHET_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "fspc/curve.hpp"
#include "fspc/optim.hpp"
#include "fspc/sim.hpp"

namespace fspc {

struct FrechetConfig {
    std::vector<double> weights; // empty -> 1/n; else n nonnegative values summing to 1
    double tolerance = 1e-6;     // stop when both stage deltas fall below this
    std::size_t max_iterations = 100;
    bool fix_kappa = false;
    RegisterConfig reg;              // per-curve fits and final re-registration
    std::size_t phase_restarts = 2;  // seeded starts of the joint phase solve
    std::size_t phase_max_evals = 0; // per start; 0 = dimension-based default
    std::uint64_t seed = 0x66726d65ull;
    bool parallel = true;
};

// Per-curve deformation parameters in the split layout used by the
// two-stage scheme: gamma = (abar_1..abar_n, beta_1..beta_n) with
// abar = 1/alpha, xi = (kappa_1..kappa_n, zeta_1..zeta_n).
struct ParamBank {
    std::vector<double> gamma;
    std::vector<double> xi;

    static ParamBank identity(std::size_t n);
    std::size_t curve_count() const { return gamma.size() / 2; }
};

// SimParams of curve j as stored in the bank.
SimParams bank_params(const ParamBank& bank, std::size_t j);

struct FrechetMeanResult {
    SampledCurve f0;
    ParamBank bank;
    double frechet_variance = 0.0;
    std::vector<RegistrationResult> ic_params; // re-registration of each training curve on f0
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace; // value per outer iteration, leading entry at start
    std::vector<double> weights;
    std::vector<SampledCurve> train_curves;
    std::vector<double> ic_deviances; // ||f_j - f0||^2 per training curve
    bool fix_kappa = false;
};

// Weighted average of the back-transformed curves; the semi-parametric
// mean candidate for the given bank.
SampledCurve build_mean_curve(std::span<const SampledCurve> curves, const ParamBank& bank,
                              std::span<const double> weights);

// Value of the objective driving the two-stage scheme: the weighted
// variance of the back-transformed curves around their weighted mean.
double frechet_objective(std::span<const SampledCurve> curves, const ParamBank& bank,
                         std::span<const double> weights);

struct StageResult {
    std::vector<double> value;       // after projection
    std::vector<double> unprojected; // the unconstrained stage solution
    std::vector<std::size_t> clamped;
};

// One amplitude step: per-curve least squares of the warped curve against
// the current mean, followed by the amplitude projection. Raises
// identifiability_error naming the offending curve when a warped curve is
// constant.
StageResult amplitude_stage(std::span<const SampledCurve> curves, const ParamBank& bank,
                            std::span<const double> weights);

// One phase step: multistart search over the 2n phase box (per-curve
// anchored fits as warm starts), followed by the phase projection.
// Deterministic under cfg.seed.
StageResult phase_stage(std::span<const SampledCurve> curves, const ParamBank& bank,
                        std::span<const double> weights, const FrechetConfig& cfg);

FrechetMeanResult estimate_frechet_mean(std::span<const SampledCurve> curves,
                                        const FrechetConfig& cfg);

std::vector<double> resolve_weights(std::size_t n, const std::vector<double>& weights);

} // namespace fspc

#endif
