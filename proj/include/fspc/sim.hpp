#ifndef FSPC_SIM_HPP
#define FSPC_SIM_HPP

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fspc/curve.hpp"
#include "fspc/optim.hpp"

namespace fspc {

// Deformation parameters mapping a base curve onto an observed one:
//   f(t) = beta + alpha * f0((t - zeta)/kappa)
struct SimParams {
    double alpha = 1.0; // amplitude scale, > 0
    double beta = 0.0;  // amplitude offset
    double kappa = 1.0; // phase scale, > 0
    double zeta = 0.0;  // phase shift, in [-1/2, 1/2]

    void validate() const;
    static SimParams identity() { return {}; }
};

struct RegisterConfig {
    double kappa_min = 0.5;
    double kappa_max = 2.0;
    double zeta_min = -0.5;
    double zeta_max = 0.5;
    bool fix_kappa = false; // pin kappa = 1
    bool pin_zeta = false;  // pin zeta = 0 (amplitude-only charts)
    std::size_t restarts = 6;
    std::uint64_t seed = 0x7265671ull;
    double tol_rel = 1e-13;
    std::size_t max_evals = 0; // 0 = engine default
    OptimEngine engine = OptimEngine::nelder_mead;
    double alpha_floor = 1e-6;
    bool parallel_starts = false;

    BoxSpec phase_box() const;
};

struct RegistrationResult {
    SimParams params;
    double residual_norm = 0.0; // L2 norm of the residual
    double objective = 0.0;     // squared L2 fitting error
    bool converged = true;
    std::size_t evaluations = 0;
};

SampledCurve apply_deformation(const SampledCurve& f0, const SimParams& p);

// Inverse map f -> (f(kappa*t + zeta) - beta) / alpha; composed with
// apply_deformation it reproduces the base wherever the warped argument
// stays inside [0, 1].
SampledCurve invert_deformation(const SampledCurve& fj, const SimParams& p);

// Optimal (alpha, beta) for fixed (kappa, zeta) under the trapezoid-rule
// inner product. Throws identifiability_error when the warped base is
// constant.
std::pair<double, double> amplitude_closed_form(const SampledCurve& fj, const SampledCurve& f0,
                                                double kappa, double zeta);

// Registration objective reduced over (kappa, zeta): the squared fitting
// error after the amplitude parameters are solved in closed form. Falls
// back to a mean-only fit where the warped base degenerates, which keeps
// the surface finite on the whole box.
double register_reduced_objective(const SampledCurve& fj, const SampledCurve& f0, double kappa,
                                  double zeta);

// Full registration of fj against f0 (phase search + closed-form
// amplitude). Objective at the result never exceeds the objective at
// identity parameters. Restart ties break by smallest |zeta|, then kappa
// closest to 1.
RegistrationResult register_curve(const SampledCurve& fj, const SampledCurve& f0,
                                  const RegisterConfig& cfg);

// Weighted multi-target fit: minimizes sum_i w_i * ||model(theta) - y_i||^2
// over theta. Registration is the single-target case; the chart update
// step uses two targets with weights (lambda, 1-lambda). Anchor points are
// (kappa, zeta) pairs added as warm starts.
RegistrationResult fit_to_targets(std::span<const SampledCurve> targets,
                                  std::span<const double> weights, const SampledCurve& f0,
                                  const RegisterConfig& cfg,
                                  std::span<const std::pair<double, double>> anchors);

} // namespace fspc

#endif
