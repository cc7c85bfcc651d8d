#include "fspc/ewma.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fspc/errors.hpp"
#include "fspc/parallel.hpp"
#include "fspc/rng.hpp"

namespace fspc {

void EwmaConfig::validate() const {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw configuration_error("EwmaConfig: lambda must lie strictly inside (0,1)");
    if (!(limit_level > 0.0 && limit_level < 1.0))
        throw configuration_error("EwmaConfig: limit_level must lie inside (0,1)");
    if (reference_orders < 1)
        throw configuration_error("EwmaConfig: need at least one reference order");
}

double empirical_quantile(std::vector<double> values, double level) {
    if (values.empty()) throw configuration_error("empirical_quantile: no values");
    std::sort(values.begin(), values.end());
    const double h = level * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    const double w = h - static_cast<double>(lo);
    return (1.0 - w) * values[lo] + w * values[lo + 1];
}

namespace {

std::array<double, 4> param_array(const SimParams& p) {
    return {p.alpha, p.beta, p.kappa, p.zeta};
}

RegisterConfig fit_config(const EwmaConfig& cfg) {
    RegisterConfig reg = cfg.reg;
    reg.fix_kappa = reg.fix_kappa || cfg.fix_kappa;
    return reg;
}

double raw_deviance_value(const SampledCurve& lhs, const SampledCurve& prev_chart) {
    return l2_distance_sq(lhs, prev_chart);
}

} // namespace

SimParams ewma_fit_step(const SampledCurve& f_hat_j, const EwmaState& state,
                        const SampledCurve& f0, const EwmaConfig& cfg) {
    cfg.validate();
    // degenerate blend: the incoming fit equals the chart curve, so the
    // previous parameters are the exact minimizer (this keeps chart fixed
    // points bit-stable)
    if (f_hat_j.grid == state.f_tilde.grid && f_hat_j.values == state.f_tilde.values)
        return state.theta_tilde;
    const SampledCurve targets[2] = {f_hat_j, state.f_tilde};
    const double weights[2] = {cfg.lambda, 1.0 - cfg.lambda};
    const std::pair<double, double> anchors[1] = {
        {state.theta_tilde.kappa, state.theta_tilde.zeta}};
    const auto fit = fit_to_targets(std::span<const SampledCurve>(targets, 2),
                                    std::span<const double>(weights, 2), f0, fit_config(cfg),
                                    std::span<const std::pair<double, double>>(anchors, 1));
    return fit.params;
}

std::pair<double, double> deviance_step(const SampledCurve& f_for_deviance,
                                        const SampledCurve& f_tilde_next, const EwmaState& state,
                                        std::span<const SampledCurve> ic_curves,
                                        std::span<const double> ic_weights,
                                        const EwmaConfig& cfg) {
    double d = 0.0;
    if (cfg.mode == VariabilityMode::deviance) {
        d = raw_deviance_value(f_for_deviance, state.f_tilde);
    } else {
        for (std::size_t k = 0; k < ic_curves.size(); ++k)
            d += ic_weights[k] * l2_distance_sq(f_tilde_next, ic_curves[k]);
    }
    const double d_tilde = cfg.lambda * d + (1.0 - cfg.lambda) * state.d_tilde;
    return {d, d_tilde};
}

namespace {

struct StepOutcome {
    EwmaState next;
    ChartPoint point;
};

StepOutcome run_step(const SampledCurve& fj, const EwmaState& state, const FrechetMeanResult& ic,
                     const EwmaConfig& cfg, const RegistrationResult& reg) {
    const SampledCurve f_hat = apply_deformation(ic.f0, reg.params);
    const SimParams theta_fit = ewma_fit_step(f_hat, state, ic.f0, cfg);
    const SampledCurve f_tilde_next = apply_deformation(ic.f0, theta_fit);

    const auto [d, d_tilde] =
        deviance_step(cfg.raw_deviance ? fj : f_hat, f_tilde_next, state, ic.train_curves,
                      ic.weights, cfg);

    StepOutcome out{EwmaState{state.step + 1, theta_fit, f_tilde_next, d_tilde, state.param_ewma},
                    ChartPoint{}};
    const auto reg_arr = param_array(reg.params);
    for (std::size_t k = 0; k < 4; ++k)
        out.next.param_ewma[k] = cfg.lambda * reg_arr[k] + (1.0 - cfg.lambda) * state.param_ewma[k];

    out.point.step = out.next.step;
    out.point.theta = reg.params;
    out.point.theta_fit = theta_fit;
    out.point.param_ewma = out.next.param_ewma;
    out.point.deviance = d;
    out.point.deviance_ewma = d_tilde;
    out.point.residual = reg.residual_norm;
    return out;
}

void apply_limits(ChartPoint& point, const ControlLimits& limits) {
    point.ooc = point.deviance_ewma > limits.deviance_ucl;
    for (std::size_t k = 0; k < 4; ++k)
        point.ooc_param[k] = point.param_ewma[k] < limits.param[k].lcl ||
                             point.param_ewma[k] > limits.param[k].ucl;
}

} // namespace

std::pair<EwmaState, ControlLimits> init_state(const FrechetMeanResult& ic, const EwmaConfig& cfg) {
    cfg.validate();
    const std::size_t n = ic.train_curves.size();
    if (n == 0 || ic.ic_params.size() != n || ic.ic_deviances.size() != n)
        throw configuration_error("init_state: databank has no usable training records");

    EwmaState state;
    state.theta_tilde = SimParams::identity();
    state.f_tilde = ic.f0;
    state.d_tilde = 0.0;
    for (std::size_t j = 0; j < n; ++j) state.d_tilde += ic.weights[j] * ic.ic_deviances[j];

    ControlLimits limits;
    const double lo_level = (1.0 - cfg.limit_level) / 2.0;
    const double hi_level = (1.0 + cfg.limit_level) / 2.0;
    for (std::size_t k = 0; k < 4; ++k) {
        std::vector<double> vals(n);
        for (std::size_t j = 0; j < n; ++j) vals[j] = param_array(ic.ic_params[j].params)[k];
        limits.param[k].lcl = empirical_quantile(vals, lo_level);
        limits.param[k].ucl = empirical_quantile(vals, hi_level);
    }

    // Deviance limit: replay the full chart recursion over the training
    // curves in seeded random orders and pool the smoothed deviances.
    // Registrations do not depend on the order, so the databank ones are
    // reused; only the fit/deviance recursion is replayed.
    const std::size_t R = cfg.reference_orders;
    std::vector<std::vector<double>> pooled(R);
    {
        ParallelGuard guard(cfg.parallel && parallel_enabled());
        par_for(R, [&](std::size_t r) {
            Rng rng(mix_seed(cfg.seed, 7000 + r));
            const auto order = rng.permutation(n);
            EwmaState s = state;
            std::vector<double> dts;
            dts.reserve(n);
            for (std::size_t idx : order) {
                const auto outcome =
                    run_step(ic.train_curves[idx], s, ic, cfg, ic.ic_params[idx]);
                s = outcome.next;
                dts.push_back(s.d_tilde);
            }
            pooled[r] = std::move(dts);
        });
    }
    std::vector<double> pool;
    pool.reserve(R * n);
    for (const auto& chunk : pooled) pool.insert(pool.end(), chunk.begin(), chunk.end());
    limits.deviance_ucl = empirical_quantile(std::move(pool), cfg.limit_level);

    if (!(limits.deviance_ucl > 0.0))
        throw configuration_error(
            "init_state: degenerate training set, deviance limit collapsed to zero");
    return {std::move(state), limits};
}

std::pair<EwmaState, ChartPoint> monitor_curve(const SampledCurve& fj, const EwmaState& state,
                                               const FrechetMeanResult& ic,
                                               const ControlLimits& limits, const EwmaConfig& cfg) {
    cfg.validate();
    require_same_grid(fj, ic.f0, "monitor_curve");
    RegistrationResult reg;
    try {
        reg = register_curve(fj, ic.f0, fit_config(cfg));
    } catch (const std::exception& e) {
        throw numeric_error("monitor_curve: registration failed at step " +
                            std::to_string(state.step + 1) + ": " + e.what());
    }
    auto outcome = run_step(fj, state, ic, cfg, reg);
    apply_limits(outcome.point, limits);
    return {std::move(outcome.next), std::move(outcome.point)};
}

MonitorSession::MonitorSession(FrechetMeanResult ic, EwmaConfig cfg)
    : ic_(std::move(ic)), cfg_(std::move(cfg)) {
    auto [state, limits] = init_state(ic_, cfg_);
    state_ = std::move(state);
    limits_ = limits;
    for (std::size_t k = 0; k < 4; ++k) {
        param_bank_[k].reserve(ic_.ic_params.size());
        for (const auto& r : ic_.ic_params) param_bank_[k].push_back(param_array(r.params)[k]);
    }
}

MonitorSession::MonitorSession(FrechetMeanResult ic, EwmaConfig cfg, ControlLimits limits)
    : ic_(std::move(ic)), cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::size_t n = ic_.train_curves.size();
    if (n == 0 || ic_.ic_params.size() != n || ic_.ic_deviances.size() != n ||
        ic_.weights.size() != n)
        throw configuration_error("MonitorSession: databank has no usable training records");
    state_.theta_tilde = SimParams::identity();
    state_.f_tilde = ic_.f0;
    state_.d_tilde = 0.0;
    for (std::size_t j = 0; j < n; ++j) state_.d_tilde += ic_.weights[j] * ic_.ic_deviances[j];
    limits_ = limits;
    for (std::size_t k = 0; k < 4; ++k) {
        param_bank_[k].reserve(ic_.ic_params.size());
        for (const auto& r : ic_.ic_params) param_bank_[k].push_back(param_array(r.params)[k]);
    }
}

void MonitorSession::recompute_param_limits() {
    const double lo_level = (1.0 - cfg_.limit_level) / 2.0;
    const double hi_level = (1.0 + cfg_.limit_level) / 2.0;
    for (std::size_t k = 0; k < 4; ++k) {
        limits_.param[k].lcl = empirical_quantile(param_bank_[k], lo_level);
        limits_.param[k].ucl = empirical_quantile(param_bank_[k], hi_level);
    }
}

ChartPoint MonitorSession::step(const SampledCurve& fj, std::string label) {
    auto [next, point] = monitor_curve(fj, state_, ic_, limits_, cfg_);
    point.label = std::move(label);
    state_ = std::move(next);
    if (cfg_.enrich && !point.ooc) {
        // grow the parameter databank with the smoothed fit and refresh
        // only the parameter limits
        const auto arr = param_array(point.theta_fit);
        for (std::size_t k = 0; k < 4; ++k) param_bank_[k].push_back(arr[k]);
        recompute_param_limits();
    }
    return point;
}

void MonitorSession::restore(EwmaState state) {
    require_same_grid(state.f_tilde, ic_.f0, "MonitorSession::restore");
    state_ = std::move(state);
}

} // namespace fspc
