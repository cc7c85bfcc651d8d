#ifndef FSPC_EWMA_HPP
#define FSPC_EWMA_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fspc/curve.hpp"
#include "fspc/frechet.hpp"
#include "fspc/sim.hpp"

namespace fspc {

enum class VariabilityMode { deviance, frechet_function };

struct EwmaConfig {
    double lambda = 0.10;      // exponential weight, strictly inside (0,1)
    double limit_level = 0.95; // confidence level of the empirical limits
    bool fix_kappa = false;
    bool raw_deviance = false; // use the raw curve instead of its fit in D_j
    bool enrich = false;       // grow the parameter databank on IC verdicts
    VariabilityMode mode = VariabilityMode::deviance;
    std::size_t reference_orders = 200; // random replays behind the deviance limit
    std::uint64_t seed = 0x65776d61ull;
    RegisterConfig reg;
    bool parallel = true;

    void validate() const;
};

// Indices into the per-parameter arrays.
enum ParamIndex : std::size_t { kAlpha = 0, kBeta = 1, kKappa = 2, kZeta = 3 };

struct EwmaState {
    std::size_t step = 0;
    SimParams theta_tilde;                  // joint chart fit
    SampledCurve f_tilde;                   // always apply_deformation(f0, theta_tilde)
    double d_tilde = 0.0;                   // smoothed deviance
    std::array<double, 4> param_ewma{1.0, 0.0, 1.0, 0.0}; // scalar charts on registered params
};

struct ParamLimit {
    double lcl = 0.0;
    double ucl = 0.0;
};

struct ControlLimits {
    double deviance_ucl = 0.0; // upper limit only
    std::array<ParamLimit, 4> param{};
};

struct ChartPoint {
    std::size_t step = 0;
    std::string label;
    SimParams theta;      // registered parameters of this curve
    SimParams theta_fit;  // joint chart fit theta_tilde at this step
    std::array<double, 4> param_ewma{};
    double deviance = 0.0;      // D_j
    double deviance_ewma = 0.0; // D~_j
    double residual = 0.0;      // registration residual norm
    bool ooc = false;
    std::array<bool, 4> ooc_param{};
    std::optional<bool> who_flag; // filled by the CLI when WHO rules apply
};

// Builds the initial chart state and the empirical control limits from a
// Phase I result. The deviance limit is the limit_level quantile of the
// smoothed deviances pooled from seeded random-order replays of the
// training curves; parameter limits are symmetric quantiles of the
// registered training parameters.
std::pair<EwmaState, ControlLimits> init_state(const FrechetMeanResult& ic, const EwmaConfig& cfg);

// theta_tilde update: weighted fit against the current registered curve
// and the previous chart curve (weights lambda, 1-lambda).
SimParams ewma_fit_step(const SampledCurve& f_hat_j, const EwmaState& state,
                        const SampledCurve& f0, const EwmaConfig& cfg);

// (D_j, D~_j) for one observation. `f_for_deviance` is the curve compared
// against the previous chart curve (the fitted curve by default, the raw
// one under raw_deviance); `f_tilde_next` is the chart curve after the fit
// step, used by the frechet_function mode.
std::pair<double, double> deviance_step(const SampledCurve& f_for_deviance,
                                        const SampledCurve& f_tilde_next, const EwmaState& state,
                                        std::span<const SampledCurve> ic_curves,
                                        std::span<const double> ic_weights,
                                        const EwmaConfig& cfg);

// Sequential monitoring session over one Phase I databank.
class MonitorSession {
public:
    MonitorSession(FrechetMeanResult ic, EwmaConfig cfg);
    MonitorSession(FrechetMeanResult ic, EwmaConfig cfg, ControlLimits limits);

    ChartPoint step(const SampledCurve& fj, std::string label = {});

    const EwmaState& state() const { return state_; }
    const ControlLimits& limits() const { return limits_; }
    const FrechetMeanResult& databank() const { return ic_; }
    const EwmaConfig& config() const { return cfg_; }

    void restore(EwmaState state);

private:
    FrechetMeanResult ic_;
    EwmaConfig cfg_;
    EwmaState state_;
    ControlLimits limits_;
    std::array<std::vector<double>, 4> param_bank_; // enrichment pool per parameter
    void recompute_param_limits();
};

// Single step outside a session (library-level entry point).
std::pair<EwmaState, ChartPoint> monitor_curve(const SampledCurve& fj, const EwmaState& state,
                                               const FrechetMeanResult& ic,
                                               const ControlLimits& limits, const EwmaConfig& cfg);

// limit_level quantile with linear interpolation between order statistics
double empirical_quantile(std::vector<double> values, double level);

} // namespace fspc

#endif
