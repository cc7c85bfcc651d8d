#include "fspc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fspc/errors.hpp"
#include "fspc/optim.hpp"
#include "fspc/parallel.hpp"
#include "fspc/rng.hpp"

namespace fspc {

double base_family_value(BaseFamily family, double t) {
    switch (family) {
        case BaseFamily::sine:
            return std::sin(2.0 * std::numbers::pi * t) + 2.0;
        case BaseFamily::logistic:
            return 1.0 + 2.0 / (1.0 + std::exp(-12.0 * (t - 0.5)));
        case BaseFamily::double_peak:
            // two intra-day concentration peaks over a low baseline
            return 1.0 + 2.2 * std::exp(-0.5 * std::pow((t - 0.32) / 0.09, 2)) +
                   1.6 * std::exp(-0.5 * std::pow((t - 0.78) / 0.07, 2));
    }
    throw configuration_error("base_family_value: unknown family");
}

SampledCurve base_family_curve(BaseFamily family, const TimeGrid& grid) {
    return curve_from_function(grid, [family](double t) { return base_family_value(family, t); });
}

BaseFamily base_family_from_name(const std::string& name) {
    if (name == "sine") return BaseFamily::sine;
    if (name == "logistic") return BaseFamily::logistic;
    if (name == "double_peak") return BaseFamily::double_peak;
    throw configuration_error("unknown base family: " + name);
}

std::string base_family_name(BaseFamily family) {
    switch (family) {
        case BaseFamily::sine: return "sine";
        case BaseFamily::logistic: return "logistic";
        case BaseFamily::double_peak: return "double_peak";
    }
    return "?";
}

ParamLaw ParamLaw::constant(double v) {
    ParamLaw law;
    law.kind = Kind::constant;
    law.value = v;
    return law;
}

ParamLaw ParamLaw::uniform(double lo, double hi) {
    ParamLaw law;
    law.kind = Kind::uniform;
    law.lo = lo;
    law.hi = hi;
    return law;
}

ParamLaw ParamLaw::trunc_normal(double mean, double sd, double lo, double hi) {
    ParamLaw law;
    law.kind = Kind::trunc_normal;
    law.mean = mean;
    law.sd = sd;
    law.lo = lo;
    law.hi = hi;
    return law;
}

double ParamLaw::sample(Rng& rng) const {
    switch (kind) {
        case Kind::constant: return value;
        case Kind::uniform: return rng.uniform(lo, hi);
        case Kind::trunc_normal: return rng.trunc_normal(mean, sd, lo, hi);
    }
    throw configuration_error("ParamLaw: unknown kind");
}

double ParamLaw::law_mean() const {
    switch (kind) {
        case Kind::constant: return value;
        case Kind::uniform: return 0.5 * (lo + hi);
        case Kind::trunc_normal: return mean; // ignores truncation skew; fine for checks
    }
    return 0.0;
}

double ParamLaw::law_variance() const {
    switch (kind) {
        case Kind::constant: return 0.0;
        case Kind::uniform: return (hi - lo) * (hi - lo) / 12.0;
        case Kind::trunc_normal: return sd * sd;
    }
    return 0.0;
}

void SynthSpec::validate() const {
    if (n == 0) throw configuration_error("SynthSpec: n must be positive");
    if (grid_points < 2) throw configuration_error("SynthSpec: grid too small");
    if (noise_sigma < 0.0) throw configuration_error("SynthSpec: negative noise");
}

namespace {

SimParams clamp_feasible(SimParams p) {
    p.alpha = std::max(p.alpha, 1e-6);
    p.kappa = std::max(p.kappa, 1e-6);
    p.zeta = std::min(std::max(p.zeta, -0.5), 0.5);
    return p;
}

SimParams sample_params(const SynthSpec& spec, Rng& rng) {
    SimParams p;
    p.alpha = spec.alpha.sample(rng);
    p.beta = spec.beta.sample(rng);
    p.kappa = spec.kappa.sample(rng);
    p.zeta = spec.zeta.sample(rng);
    return clamp_feasible(p);
}

std::vector<double> noise_vector(Rng& rng, std::size_t m, double sigma) {
    std::vector<double> v(m, 0.0);
    if (sigma > 0.0)
        for (auto& x : v) x = rng.normal(0.0, sigma);
    return v;
}

} // namespace

IcSet generate_ic_set(const SynthSpec& spec) {
    spec.validate();
    const TimeGrid grid(spec.grid_points);
    IcSet set;
    set.base = base_family_curve(spec.base, grid);

    Rng rng(mix_seed(spec.seed, 0x1c5e7ull));
    set.params.resize(spec.n);
    for (auto& p : set.params) p = sample_params(spec, rng);

    if (spec.project_centrality && spec.n >= 1) {
        // center the truth on the constraint sets: gamma uses
        // (1/alpha, beta), xi uses (kappa, zeta)
        const std::size_t n = spec.n;
        std::vector<double> gamma(2 * n), xi(2 * n);
        for (std::size_t j = 0; j < n; ++j) {
            gamma[j] = 1.0 / set.params[j].alpha;
            gamma[n + j] = set.params[j].beta;
            xi[j] = set.params[j].kappa;
            xi[n + j] = set.params[j].zeta;
        }
        const auto g = project_amplitude(gamma);
        const auto x = project_phase(xi);
        for (std::size_t j = 0; j < n; ++j) {
            set.params[j].alpha = 1.0 / g.value[j];
            set.params[j].beta = g.value[n + j];
            set.params[j].kappa = x.value[j];
            set.params[j].zeta = x.value[n + j];
        }
    }

    set.curves.reserve(spec.n);
    for (std::size_t j = 0; j < spec.n; ++j) {
        SampledCurve c = apply_deformation(set.base, set.params[j]);
        const auto noise = noise_vector(rng, grid.size(), spec.noise_sigma);
        for (std::size_t i = 0; i < c.size(); ++i) c.values[i] += noise[i];
        set.curves.push_back(std::move(c));
    }
    return set;
}

StreamSample stream_sample(const StreamSpec& spec, const SampledCurve& base, std::size_t step) {
    if (step < 1) throw configuration_error("stream_sample: steps are 1-based");
    Rng rng(mix_seed(spec.law.seed, 0x57a7ull + step));
    SimParams p = sample_params(spec.law, rng);
    StreamSample out;
    out.shifted = spec.shift.active_at(step);
    if (out.shifted) {
        p.alpha *= spec.shift.alpha_mult;
        p.beta += spec.shift.beta_delta;
        p.kappa *= spec.shift.kappa_mult;
        p.zeta += spec.shift.zeta_delta;
        p = clamp_feasible(p);
    }
    out.params = p;
    out.curve = apply_deformation(base, p);
    const auto noise = noise_vector(rng, base.grid.size(), spec.law.noise_sigma);
    for (std::size_t i = 0; i < out.curve.size(); ++i) out.curve.values[i] += noise[i];
    return out;
}

std::vector<StreamSample> generate_stream(const StreamSpec& spec) {
    spec.law.validate();
    if (spec.length == 0) throw configuration_error("generate_stream: empty stream");
    const TimeGrid grid(spec.law.grid_points);
    const SampledCurve base = base_family_curve(spec.law.base, grid);
    std::vector<StreamSample> stream;
    stream.reserve(spec.length);
    for (std::size_t s = 1; s <= spec.length; ++s) stream.push_back(stream_sample(spec, base, s));
    return stream;
}

SimParams brute_force_register(const SampledCurve& fj, const SampledCurve& f0,
                               const RegisterConfig& cfg, const BruteGrid& grid) {
    require_same_grid(fj, f0, "brute_force_register");
    const double k_lo = cfg.fix_kappa ? 1.0 : cfg.kappa_min;
    const double k_hi = cfg.fix_kappa ? 1.0 : cfg.kappa_max;
    const double z_lo = cfg.pin_zeta ? 0.0 : cfg.zeta_min;
    const double z_hi = cfg.pin_zeta ? 0.0 : cfg.zeta_max;
    const std::size_t nk = (k_hi > k_lo) ? grid.kappa_steps : 1;
    const std::size_t nz = (z_hi > z_lo) ? grid.zeta_steps : 1;

    double best_obj = std::numeric_limits<double>::infinity();
    double best_k = 1.0, best_z = 0.0;
    bool have = false;
    for (std::size_t a = 0; a < nk; ++a) {
        const double k = (nk == 1) ? k_lo
                                   : k_lo + (k_hi - k_lo) * static_cast<double>(a) /
                                                static_cast<double>(nk - 1);
        for (std::size_t b = 0; b < nz; ++b) {
            const double z = (nz == 1) ? z_lo
                                       : z_lo + (z_hi - z_lo) * static_cast<double>(b) /
                                                    static_cast<double>(nz - 1);
            const double obj = register_reduced_objective(fj, f0, k, z);
            // same tie order as register_curve
            bool take = false;
            if (!have || obj < best_obj) {
                take = true;
            } else if (obj == best_obj) {
                if (std::abs(z) < std::abs(best_z)) take = true;
                else if (std::abs(z) == std::abs(best_z) &&
                         std::abs(k - 1.0) < std::abs(best_k - 1.0))
                    take = true;
            }
            if (take) {
                best_obj = obj;
                best_k = k;
                best_z = z;
                have = true;
            }
        }
    }
    auto [alpha, beta] = amplitude_closed_form(fj, f0, best_k, best_z);
    SimParams p{std::max(alpha, cfg.alpha_floor), beta, best_k, best_z};
    if (alpha < cfg.alpha_floor) {
        const SampledCurve warped = apply_deformation(f0, {1.0, 0.0, best_k, best_z});
        p.beta = integral(fj) - p.alpha * integral(warped);
    }
    return p;
}

RunLengthSummary run_length_experiment(const StreamSpec& spec, const FrechetMeanResult& ic,
                                       const ControlLimits& limits, const EwmaConfig& cfg,
                                       std::size_t replicates) {
    if (replicates < 1) throw configuration_error("run_length_experiment: replicates >= 1");
    spec.law.validate();
    if (spec.law.grid_points != ic.f0.grid.size())
        throw shape_error("run_length_experiment: stream grid does not match the databank");

    RunLengthSummary sum;
    sum.replicates = replicates;
    sum.steps_per_replicate = spec.length;
    sum.first_alarm_step.assign(replicates, 0);

    std::vector<std::size_t> alarms(replicates, 0);
    std::vector<std::size_t> pre_alarms(replicates, 0);
    std::vector<std::size_t> pre_steps(replicates, 0);
    std::vector<long long> delays(replicates, -1);

    EwmaConfig run_cfg = cfg;
    run_cfg.parallel = false; // replicates own the parallel axis
    const TimeGrid grid(spec.law.grid_points);
    const SampledCurve base = base_family_curve(spec.law.base, grid);

    {
        ParallelGuard guard(cfg.parallel && parallel_enabled());
        par_for(replicates, [&](std::size_t r) {
            StreamSpec local = spec;
            local.law.seed = mix_seed(spec.law.seed, 0xae9ull + r);
            MonitorSession session(ic, run_cfg, limits);
            for (std::size_t s = 1; s <= spec.length; ++s) {
                const auto sample = stream_sample(local, base, s);
                const auto point = session.step(sample.curve);
                const bool pre_shift = spec.shift.at_step == 0 || s < spec.shift.at_step;
                if (pre_shift) ++pre_steps[r];
                if (point.ooc) {
                    ++alarms[r];
                    if (pre_shift) ++pre_alarms[r];
                    if (sum.first_alarm_step[r] == 0) sum.first_alarm_step[r] = s;
                    if (!pre_shift && delays[r] < 0)
                        delays[r] = static_cast<long long>(s - spec.shift.at_step + 1);
                }
            }
        });
    }

    sum.total_steps = replicates * spec.length;
    for (std::size_t r = 0; r < replicates; ++r) sum.total_alarms += alarms[r];
    sum.per_step_alarm_rate =
        static_cast<double>(sum.total_alarms) / static_cast<double>(sum.total_steps);

    std::size_t pre_total = 0, pre_alarm_total = 0;
    for (std::size_t r = 0; r < replicates; ++r) {
        pre_total += pre_steps[r];
        pre_alarm_total += pre_alarms[r];
    }
    sum.false_alarm_rate_pre_shift =
        pre_total ? static_cast<double>(pre_alarm_total) / static_cast<double>(pre_total) : 0.0;

    if (spec.shift.at_step >= 1) {
        for (auto d : delays)
            if (d >= 0) sum.detection_delays.push_back(static_cast<std::size_t>(d));
        if (!sum.detection_delays.empty()) {
            std::vector<double> ds(sum.detection_delays.begin(), sum.detection_delays.end());
            sum.delay_median = empirical_quantile(ds, 0.5);
            sum.delay_q90 = empirical_quantile(std::move(ds), 0.9);
        }
    }
    return sum;
}

} // namespace fspc
