#ifndef FSPC_SYNTH_HPP
#define FSPC_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fspc/curve.hpp"
#include "fspc/ewma.hpp"
#include "fspc/rng.hpp"
#include "fspc/sim.hpp"

namespace fspc {

enum class BaseFamily { sine, logistic, double_peak };

double base_family_value(BaseFamily family, double t);
SampledCurve base_family_curve(BaseFamily family, const TimeGrid& grid);
BaseFamily base_family_from_name(const std::string& name);
std::string base_family_name(BaseFamily family);

// Sampling law for one deformation coordinate.
struct ParamLaw {
    enum class Kind { constant, uniform, trunc_normal };
    Kind kind = Kind::constant;
    double value = 0.0; // constant
    double lo = 0.0;    // uniform / truncation bounds
    double hi = 0.0;
    double mean = 0.0;  // trunc_normal
    double sd = 0.0;

    static ParamLaw constant(double v);
    static ParamLaw uniform(double lo, double hi);
    static ParamLaw trunc_normal(double mean, double sd, double lo, double hi);
    double sample(Rng& rng) const;
    double law_mean() const;
    double law_variance() const;
};

struct SynthSpec {
    BaseFamily base = BaseFamily::sine;
    std::size_t n = 0;
    std::size_t grid_points = 101;
    ParamLaw alpha = ParamLaw::constant(1.0);
    ParamLaw beta = ParamLaw::constant(0.0);
    ParamLaw kappa = ParamLaw::constant(1.0);
    ParamLaw zeta = ParamLaw::constant(0.0);
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    // center the drawn parameter set with the constraint-set projections
    // so the truth is a feasible bank (training sets want this; streams
    // draw i.i.d. and leave it off)
    bool project_centrality = true;

    void validate() const;
};

struct IcSet {
    std::vector<SampledCurve> curves;
    std::vector<SimParams> params; // truth per curve
    SampledCurve base;
};

// Deterministic under spec.seed: curve_j = apply_deformation(base, theta_j)
// plus i.i.d. Gaussian noise per grid node.
IcSet generate_ic_set(const SynthSpec& spec);

// Per-coordinate change of the sampling law from a given step on.
struct ShiftSpec {
    std::size_t at_step = 0; // 1-based; 0 disables the shift
    double alpha_mult = 1.0;
    double beta_delta = 0.0;
    double kappa_mult = 1.0;
    double zeta_delta = 0.0;

    bool active_at(std::size_t step) const { return at_step >= 1 && step >= at_step; }
};

struct StreamSpec {
    SynthSpec law; // project_centrality ignored (streams draw i.i.d.)
    std::size_t length = 0;
    ShiftSpec shift;
};

struct StreamSample {
    SampledCurve curve;
    SimParams params;
    bool shifted = false;
};

// Step s of the stream depends only on (seed, s), so an identity shift
// reproduces the unshifted stream bit for bit.
StreamSample stream_sample(const StreamSpec& spec, const SampledCurve& base, std::size_t step);
std::vector<StreamSample> generate_stream(const StreamSpec& spec);

// Dense-grid exhaustive search over the reduced registration objective;
// ties break exactly like register_curve (objective, |zeta|, kappa near 1).
struct BruteGrid {
    std::size_t kappa_steps = 61;
    std::size_t zeta_steps = 201;
};

SimParams brute_force_register(const SampledCurve& fj, const SampledCurve& f0,
                               const RegisterConfig& cfg, const BruteGrid& grid);

struct RunLengthSummary {
    std::size_t replicates = 0;
    std::size_t steps_per_replicate = 0;
    std::size_t total_steps = 0;
    std::size_t total_alarms = 0; // deviance-chart alarms over all steps
    double per_step_alarm_rate = 0.0;
    // first deviance alarm per replicate (0 = none)
    std::vector<std::size_t> first_alarm_step;
    // detection delays (first alarm at/after the shift, minus shift step + 1);
    // only filled when the stream carries a shift
    std::vector<std::size_t> detection_delays;
    double delay_median = 0.0;
    double delay_q90 = 0.0;
    double false_alarm_rate_pre_shift = 0.0;
};

// Seeded Monte Carlo over independent monitoring streams. Replicate r uses
// a stream seeded by mix(spec.law.seed, r); limits/config are shared.
RunLengthSummary run_length_experiment(const StreamSpec& spec, const FrechetMeanResult& ic,
                                       const ControlLimits& limits, const EwmaConfig& cfg,
                                       std::size_t replicates);

} // namespace fspc

#endif
