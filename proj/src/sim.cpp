#include "fspc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fspc/errors.hpp"

namespace fspc {

void SimParams::validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw std::domain_error("SimParams: alpha must be positive");
    if (!(kappa > 0.0) || !std::isfinite(kappa))
        throw std::domain_error("SimParams: kappa must be positive");
    if (!std::isfinite(beta)) throw std::domain_error("SimParams: beta must be finite");
    if (!(zeta >= -0.5 && zeta <= 0.5))
        throw std::domain_error("SimParams: zeta must lie in [-1/2, 1/2]");
}

BoxSpec RegisterConfig::phase_box() const {
    BoxSpec box;
    box.lower = {fix_kappa ? 1.0 : kappa_min, pin_zeta ? 0.0 : zeta_min};
    box.upper = {fix_kappa ? 1.0 : kappa_max, pin_zeta ? 0.0 : zeta_max};
    return box;
}

SampledCurve apply_deformation(const SampledCurve& f0, const SimParams& p) {
    p.validate();
    std::vector<double> v(f0.size());
    for (std::size_t i = 0; i < f0.size(); ++i)
        v[i] = p.beta + p.alpha * warp_evaluate(f0, f0.grid.point(i), p.kappa, p.zeta);
    return SampledCurve(f0.grid, std::move(v));
}

SampledCurve invert_deformation(const SampledCurve& fj, const SimParams& p) {
    p.validate();
    std::vector<double> v(fj.size());
    for (std::size_t i = 0; i < fj.size(); ++i) {
        const double t = fj.grid.point(i);
        v[i] = (evaluate(fj, p.kappa * t + p.zeta) - p.beta) / p.alpha;
    }
    return SampledCurve(fj.grid, std::move(v));
}

namespace {

// first and second trapezoid moments of the warped base together with its
// cross moment against a target; one pass, no scratch storage
struct WarpMoments {
    double s_phi = 0.0;    // integral of phi
    double s_phiphi = 0.0; // integral of phi^2
    double s_phiy = 0.0;   // integral of phi*y
};

WarpMoments warp_moments(const SampledCurve& f0, std::span<const double> y, double kappa,
                         double zeta) {
    WarpMoments m;
    const std::size_t n = f0.size();
    const double h = f0.grid.spacing();
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (i == 0 || i + 1 == n) ? 0.5 * h : h;
        const double phi = warp_evaluate(f0, f0.grid.point(i), kappa, zeta);
        m.s_phi += w * phi;
        m.s_phiphi += w * phi * phi;
        m.s_phiy += w * phi * y[i];
    }
    return m;
}

double curve_norm_sq(const SampledCurve& c) { return l2_inner(c, c); }

struct BlendedTarget {
    SampledCurve blend;     // sum_i w_i * y_i
    double s_y = 0.0;       // integral of blend
    double s_yy = 0.0;      // integral of blend^2
    double offset = 0.0;    // sum_i w_i ||y_i - blend||^2
};

// target moments accumulated in exactly the warp_moments node order, so
// exact fits cancel bit for bit
void blend_moments(BlendedTarget& tgt) {
    const std::size_t n = tgt.blend.size();
    const double h = tgt.blend.grid.spacing();
    tgt.s_y = 0.0;
    tgt.s_yy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (i == 0 || i + 1 == n) ? 0.5 * h : h;
        const double y = tgt.blend.values[i];
        tgt.s_y += w * y;
        tgt.s_yy += w * y * y;
    }
}

BlendedTarget make_blend(std::span<const SampledCurve> targets, std::span<const double> weights) {
    if (targets.empty() || targets.size() != weights.size())
        throw shape_error("fit_to_targets: target/weight count mismatch");
    for (std::size_t k = 1; k < targets.size(); ++k)
        require_same_grid(targets[0], targets[k], "fit_to_targets");
    std::vector<double> v(targets[0].size(), 0.0);
    for (std::size_t k = 0; k < targets.size(); ++k)
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += weights[k] * targets[k].values[i];
    BlendedTarget out{SampledCurve(targets[0].grid, std::move(v))};
    blend_moments(out);
    for (std::size_t k = 0; k < targets.size(); ++k)
        out.offset += weights[k] * l2_distance_sq(targets[k], out.blend);
    return out;
}

struct ReducedFit {
    double alpha = 0.0;
    double beta = 0.0;
    double residual = 0.0; // ||blend - beta - alpha*phi||^2
    bool degenerate = false;
};

// residual computed pointwise; free of the moment-formula cancellation,
// so exact representations come out at the true double-precision floor
double direct_residual(const SampledCurve& f0, const BlendedTarget& tgt, double alpha, double beta,
                       double kappa, double zeta) {
    const std::size_t n = f0.size();
    const double h = f0.grid.spacing();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = (i == 0 || i + 1 == n) ? 0.5 * h : h;
        const double d = tgt.blend.values[i] -
                         (beta + alpha * warp_evaluate(f0, f0.grid.point(i), kappa, zeta));
        acc += w * d * d;
    }
    return acc;
}

// linear regression of the blended target on the warped base, in the
// trapezoid measure (total mass 1, so integrals double as means)
ReducedFit reduced_fit(const SampledCurve& f0, const BlendedTarget& tgt, double base_norm_sq,
                       double kappa, double zeta) {
    const auto m = warp_moments(f0, tgt.blend.values, kappa, zeta);
    const double var_phi = m.s_phiphi - m.s_phi * m.s_phi;
    const double cov = m.s_phiy - m.s_phi * tgt.s_y;
    const double var_y = std::max(tgt.s_yy - tgt.s_y * tgt.s_y, 0.0);
    ReducedFit fit;
    if (!(var_phi > 1e-10 * base_norm_sq) || !(var_phi > 0.0)) {
        fit.degenerate = true;
        fit.beta = tgt.s_y;
        fit.residual = var_y;
        return fit;
    }
    fit.alpha = cov / var_phi;
    fit.beta = tgt.s_y - fit.alpha * m.s_phi;
    fit.residual = std::max(var_y - cov * cov / var_phi, 0.0);
    return fit;
}

} // namespace

std::pair<double, double> amplitude_closed_form(const SampledCurve& fj, const SampledCurve& f0,
                                                double kappa, double zeta) {
    require_same_grid(fj, f0, "amplitude_closed_form");
    if (!(kappa > 0.0)) throw std::domain_error("amplitude_closed_form: kappa must be positive");
    BlendedTarget tgt{fj};
    blend_moments(tgt);
    const auto fit = reduced_fit(f0, tgt, curve_norm_sq(f0), kappa, zeta);
    if (fit.degenerate)
        throw identifiability_error("amplitude_closed_form: warped base curve is constant");
    return {fit.alpha, fit.beta};
}

double register_reduced_objective(const SampledCurve& fj, const SampledCurve& f0, double kappa,
                                  double zeta) {
    require_same_grid(fj, f0, "register_reduced_objective");
    BlendedTarget tgt{fj};
    blend_moments(tgt);
    return reduced_fit(f0, tgt, curve_norm_sq(f0), kappa, zeta).residual;
}

RegistrationResult fit_to_targets(std::span<const SampledCurve> targets,
                                  std::span<const double> weights, const SampledCurve& f0,
                                  const RegisterConfig& cfg,
                                  std::span<const std::pair<double, double>> anchors) {
    require_same_grid(targets[0], f0, "fit_to_targets");
    const auto tgt = make_blend(targets, weights);
    const double base_nsq = curve_norm_sq(f0);

    Objective obj = [&](std::span<const double> x) {
        return reduced_fit(f0, tgt, base_nsq, x[0], x[1]).residual;
    };

    MultistartOptions opts;
    opts.restarts = std::max<std::size_t>(cfg.restarts, 1);
    opts.seed = cfg.seed;
    opts.engine = cfg.engine;
    opts.tol_rel = cfg.tol_rel;
    opts.max_evals = cfg.max_evals;
    opts.parallel = cfg.parallel_starts;
    opts.warm_starts.push_back({1.0, 0.0});
    for (const auto& [k, z] : anchors) opts.warm_starts.push_back({k, z});
    const auto box = cfg.phase_box();

    // an anchor that reproduces the blend exactly ends the search; the
    // pointwise residual check stays reliable at the 1e-30 scale
    for (auto w : opts.warm_starts) {
        w = box.clamp(std::move(w));
        const auto fit = reduced_fit(f0, tgt, base_nsq, w[0], w[1]);
        if (fit.degenerate || !(fit.alpha > cfg.alpha_floor)) continue;
        if (direct_residual(f0, tgt, fit.alpha, fit.beta, w[0], w[1]) <=
            1e-20 * std::max(1.0, tgt.s_yy)) {
            RegistrationResult exact;
            exact.params = SimParams{fit.alpha, fit.beta, w[0], w[1]};
            exact.objective =
                l2_distance_sq(apply_deformation(f0, exact.params), tgt.blend) + tgt.offset;
            exact.residual_norm = std::sqrt(std::max(exact.objective, 0.0));
            exact.converged = true;
            exact.evaluations = 1;
            return exact;
        }
    }

    const auto report = multistart_minimize(obj, box, opts);

    // restart tie-break: objective, then |zeta|, then kappa nearest 1
    auto better = [](const OptimReport& a, const OptimReport& b) {
        if (a.best_value != b.best_value) return a.best_value < b.best_value;
        const double az = std::abs(a.best_point[1]), bz = std::abs(b.best_point[1]);
        if (az != bz) return az < bz;
        return std::abs(a.best_point[0] - 1.0) < std::abs(b.best_point[0] - 1.0);
    };
    const OptimReport* best = nullptr;
    for (const auto& r : report.per_start) {
        if (r.best_point.empty()) continue;
        if (reduced_fit(f0, tgt, base_nsq, r.best_point[0], r.best_point[1]).degenerate) continue;
        if (!best || better(r, *best)) best = &r;
    }

    RegistrationResult out;
    out.evaluations = report.best.evaluations;
    out.converged = report.best.converged;

    double obj_best = std::numeric_limits<double>::infinity();
    if (best) {
        const double kappa = best->best_point[0], zeta = best->best_point[1];
        auto fit = reduced_fit(f0, tgt, base_nsq, kappa, zeta);
        SimParams p{fit.alpha, fit.beta, kappa, zeta};
        if (!(p.alpha > cfg.alpha_floor)) {
            p.alpha = cfg.alpha_floor;
            p.beta = tgt.s_y - p.alpha * warp_moments(f0, tgt.blend.values, kappa, zeta).s_phi;
        }
        out.params = p;
        obj_best = l2_distance_sq(apply_deformation(f0, p), tgt.blend);
    }

    // identity parameters are always feasible; never return anything worse
    const SimParams ident;
    const double obj_ident = l2_distance_sq(f0, tgt.blend);
    if (!(obj_best <= obj_ident)) {
        out.params = ident;
        obj_best = obj_ident;
    }

    out.objective = obj_best + tgt.offset;
    out.residual_norm = std::sqrt(std::max(out.objective, 0.0));
    return out;
}

RegistrationResult register_curve(const SampledCurve& fj, const SampledCurve& f0,
                                  const RegisterConfig& cfg) {
    require_same_grid(fj, f0, "register_curve");
    const double base_var =
        curve_norm_sq(f0) - integral(f0) * integral(f0);
    if (!(base_var > 1e-10 * std::max(curve_norm_sq(f0), 1e-300)))
        throw identifiability_error("register_curve: base curve is constant");
    const SampledCurve targets[1] = {fj};
    const double weights[1] = {1.0};
    return fit_to_targets(std::span<const SampledCurve>(targets, 1),
                          std::span<const double>(weights, 1), f0, cfg, {});
}

} // namespace fspc
