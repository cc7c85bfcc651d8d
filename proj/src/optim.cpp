#include "fspc/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "fspc/errors.hpp"
#include "fspc/parallel.hpp"
#include "fspc/rng.hpp"

namespace fspc {

std::vector<double> least_squares_solve(const Matrix& design, const std::vector<double>& target) {
    if (design.rows != target.size())
        throw shape_error("least_squares_solve: design has " + std::to_string(design.rows) +
                          " rows, target has " + std::to_string(target.size()));
    if (design.cols == 0 || design.rows < design.cols)
        throw shape_error("least_squares_solve: system is underdetermined");

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A(
        design.data.data(), static_cast<Eigen::Index>(design.rows),
        static_cast<Eigen::Index>(design.cols));
    Eigen::Map<const Eigen::VectorXd> b(target.data(), static_cast<Eigen::Index>(target.size()));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(design.cols))
        throw identifiability_error("least_squares_solve: rank " + std::to_string(qr.rank()) +
                                    " < " + std::to_string(design.cols) + " columns");
    Eigen::VectorXd x = qr.solve(b);
    return std::vector<double>(x.data(), x.data() + x.size());
}

void BoxSpec::validate() const {
    if (lower.size() != upper.size() || lower.empty())
        throw configuration_error("BoxSpec: bound size mismatch");
    for (std::size_t i = 0; i < lower.size(); ++i) {
        if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || lower[i] > upper[i])
            throw configuration_error("BoxSpec: invalid bounds at coordinate " + std::to_string(i));
    }
}

std::vector<double> BoxSpec::clamp(std::vector<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::min(std::max(x[i], lower[i]), upper[i]);
    return x;
}

std::vector<double> BoxSpec::center() const {
    std::vector<double> c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
    return c;
}

bool BoxSpec::contains(std::span<const double> x, double tol) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
        if (x[i] < lower[i] - tol || x[i] > upper[i] + tol) return false;
    return true;
}

namespace {

double checked_eval(const Objective& f, std::span<const double> x, std::size_t& evals) {
    ++evals;
    double v = f(x);
    if (!std::isfinite(v)) throw numeric_error("objective returned a non-finite value");
    return v;
}

std::vector<std::size_t> active_dims(const BoxSpec& box) {
    std::vector<std::size_t> act;
    for (std::size_t i = 0; i < box.dim(); ++i)
        if (box.lower[i] < box.upper[i]) act.push_back(i);
    return act;
}

} // namespace

OptimReport nelder_mead_minimize(const Objective& objective, const BoxSpec& box,
                                 std::vector<double> x0, double tol_rel, std::size_t max_evals) {
    box.validate();
    if (x0.size() != box.dim()) throw configuration_error("nelder_mead: start point dimension");
    x0 = box.clamp(std::move(x0));

    const auto act = active_dims(box);
    const std::size_t d = act.size();
    std::size_t evals = 0;

    if (d == 0) {
        double v = checked_eval(objective, x0, evals);
        return {x0, v, evals, true};
    }
    if (max_evals == 0) max_evals = std::max<std::size_t>(600, 160 * d);

    // optimize over the free coordinates only; pinned ones ride along in x0
    auto embed = [&](const std::vector<double>& s) {
        std::vector<double> full = x0;
        for (std::size_t k = 0; k < d; ++k) {
            std::size_t i = act[k];
            full[i] = std::min(std::max(s[k], box.lower[i]), box.upper[i]);
        }
        return full;
    };

    std::vector<double> best_sub(d);
    double best_val = std::numeric_limits<double>::infinity();
    auto eval_sub = [&](const std::vector<double>& s) {
        auto full = embed(s);
        double v = checked_eval(objective, full, evals);
        if (v < best_val) {
            best_val = v;
            for (std::size_t k = 0; k < d; ++k) best_sub[k] = full[act[k]];
        }
        return v;
    };

    std::vector<std::vector<double>> pts(d + 1);
    std::vector<double> fv(d + 1);
    std::vector<double> s0(d);
    for (std::size_t k = 0; k < d; ++k) s0[k] = x0[act[k]];
    pts[0] = s0;
    for (std::size_t k = 0; k < d; ++k) {
        auto s = s0;
        std::size_t i = act[k];
        double step = 0.08 * (box.upper[i] - box.lower[i]);
        if (s[k] + step > box.upper[i]) step = -step;
        s[k] += step;
        pts[k + 1] = std::move(s);
    }
    for (std::size_t k = 0; k <= d; ++k) fv[k] = eval_sub(pts[k]);

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    bool converged = false;
    std::vector<std::size_t> order(d + 1);

    while (evals < max_evals) {
        for (std::size_t k = 0; k <= d; ++k) order[k] = k;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return fv[a] < fv[b] || (fv[a] == fv[b] && a < b);
        });
        const double f_lo = fv[order[0]], f_hi = fv[order[d]];
        if (f_hi - f_lo <= tol_rel * (std::abs(f_lo) + std::abs(f_hi)) + 1e-300) {
            converged = true;
            break;
        }

        std::vector<double> centroid(d, 0.0);
        for (std::size_t k = 0; k < d; ++k)
            for (std::size_t j = 0; j < d; ++j) centroid[j] += pts[order[k]][j];
        for (double& c : centroid) c /= static_cast<double>(d);

        const std::size_t worst = order[d];
        auto blend = [&](double coef) {
            std::vector<double> s(d);
            for (std::size_t j = 0; j < d; ++j)
                s[j] = centroid[j] + coef * (centroid[j] - pts[worst][j]);
            return s;
        };

        auto refl = blend(alpha);
        double f_refl = eval_sub(refl);

        if (f_refl < fv[order[0]]) {
            auto expa = blend(gamma);
            double f_expa = eval_sub(expa);
            if (f_expa < f_refl) {
                pts[worst] = std::move(expa);
                fv[worst] = f_expa;
            } else {
                pts[worst] = std::move(refl);
                fv[worst] = f_refl;
            }
        } else if (f_refl < fv[order[d - 1]]) {
            pts[worst] = std::move(refl);
            fv[worst] = f_refl;
        } else {
            const bool outside = f_refl < fv[worst];
            auto contr = blend(outside ? alpha * rho : -rho);
            double f_contr = eval_sub(contr);
            if (f_contr < std::min(f_refl, fv[worst])) {
                pts[worst] = std::move(contr);
                fv[worst] = f_contr;
            } else {
                const auto lo = pts[order[0]];
                for (std::size_t k = 1; k <= d; ++k) {
                    auto& p = pts[order[k]];
                    for (std::size_t j = 0; j < d; ++j) p[j] = lo[j] + sigma * (p[j] - lo[j]);
                    fv[order[k]] = eval_sub(p);
                    if (evals >= max_evals) break;
                }
            }
        }
    }

    return {embed(best_sub), best_val, evals, converged};
}

namespace {

OptimReport simulated_annealing_run(const Objective& objective, const BoxSpec& box,
                                    std::vector<double> x0, std::uint64_t seed, double tol_rel,
                                    std::size_t max_evals) {
    const auto act = active_dims(box);
    const std::size_t d = act.size();
    std::size_t evals = 0;
    x0 = box.clamp(std::move(x0));
    double f0 = checked_eval(objective, x0, evals);
    if (max_evals == 0) max_evals = std::max<std::size_t>(1200, 320 * std::max<std::size_t>(d, 1));
    if (d == 0) return {x0, f0, evals, true};

    Rng rng(mix_seed(seed, 0x5a5aull));
    std::vector<double> cur = x0, best = x0;
    double f_cur = f0, f_best = f0;
    const std::size_t steps = max_evals / 2;
    double temp = 1.0;
    const double cool = std::pow(1e-4, 1.0 / static_cast<double>(std::max<std::size_t>(steps, 2)));
    for (std::size_t it = 0; it < steps; ++it) {
        std::vector<double> cand = cur;
        for (std::size_t k = 0; k < d; ++k) {
            std::size_t i = act[k];
            double range = box.upper[i] - box.lower[i];
            cand[i] += rng.normal(0.0, 0.25 * range * temp);
            cand[i] = std::min(std::max(cand[i], box.lower[i]), box.upper[i]);
        }
        double f_cand = checked_eval(objective, cand, evals);
        const double scale = std::abs(f_cur) + std::abs(f_cand) + 1e-12;
        if (f_cand <= f_cur || rng.next_double() < std::exp(-(f_cand - f_cur) / (scale * temp))) {
            cur = cand;
            f_cur = f_cand;
        }
        if (f_cand < f_best) {
            best = cand;
            f_best = f_cand;
        }
        temp *= cool;
    }
    auto polished = nelder_mead_minimize(objective, box, best,
                                         tol_rel, max_evals > evals ? max_evals - evals : 100);
    polished.evaluations += evals;
    if (f_best < polished.best_value) {
        polished.best_value = f_best;
        polished.best_point = best;
    }
    return polished;
}

} // namespace

MultistartReport multistart_minimize(const Objective& objective, const BoxSpec& box,
                                     const MultistartOptions& opts) {
    box.validate();
    if (opts.restarts < 1) throw configuration_error("multistart_minimize: restarts must be >= 1");

    std::vector<std::vector<double>> starts;
    for (const auto& w : opts.warm_starts) {
        if (w.size() != box.dim())
            throw configuration_error("multistart_minimize: warm start dimension mismatch");
        starts.push_back(box.clamp(w));
    }

    // seeded prefix: box center first, then shifted-Halton points; start i
    // never depends on the total restart count
    starts.push_back(box.center());
    const auto act = active_dims(box);
    HaltonSequence halton(std::max<std::size_t>(act.size(), 1), opts.seed);
    for (std::size_t r = 1; r < opts.restarts; ++r) {
        auto u = halton.point(r - 1);
        auto s = box.center();
        for (std::size_t k = 0; k < act.size(); ++k) {
            std::size_t i = act[k];
            s[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * u[k];
        }
        starts.push_back(std::move(s));
    }

    MultistartReport report;
    report.per_start.resize(starts.size());
    {
        ParallelGuard guard(opts.parallel && parallel_enabled());
        par_for(starts.size(), [&](std::size_t i) {
            if (opts.engine == OptimEngine::simulated_annealing) {
                report.per_start[i] =
                    simulated_annealing_run(objective, box, starts[i], mix_seed(opts.seed, i),
                                            opts.tol_rel, opts.max_evals);
            } else {
                report.per_start[i] =
                    nelder_mead_minimize(objective, box, starts[i], opts.tol_rel, opts.max_evals);
            }
        });
    }

    std::size_t best_i = 0;
    std::size_t total_evals = 0;
    for (std::size_t i = 0; i < report.per_start.size(); ++i) {
        total_evals += report.per_start[i].evaluations;
        if (report.per_start[i].best_value < report.per_start[best_i].best_value) best_i = i;
    }
    report.best = report.per_start[best_i];
    report.best.evaluations = total_evals;
    return report;
}

OptimReport multistart_minimize(const Objective& objective, const BoxSpec& box,
                                std::size_t restarts, std::uint64_t seed) {
    MultistartOptions opts;
    opts.restarts = restarts;
    opts.seed = seed;
    return multistart_minimize(objective, box, opts).best;
}

double geometric_mean(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += std::log(v);
    return std::exp(acc / static_cast<double>(x.size()));
}

namespace {
constexpr double kPositivityFloor = 1e-6;

// floor at the positivity bound, then normalize the geometric mean to 1
// by centering in log space
void project_scales(std::span<const double> in, std::vector<double>& out,
                    std::vector<std::size_t>& clamped, std::size_t offset) {
    const std::size_t n = in.size();
    std::vector<double> logs(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = in[i];
        if (v < kPositivityFloor) {
            clamped.push_back(offset + i);
            v = kPositivityFloor;
        }
        logs[i] = std::log(v);
    }
    double mean = 0.0;
    for (double l : logs) mean += l;
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(logs[i] - mean);
}
} // namespace

ProjectionResult project_amplitude(std::span<const double> gamma) {
    if (gamma.size() % 2 != 0 || gamma.empty())
        throw shape_error("project_amplitude: expected (a_1..a_n, b_1..b_n)");
    const std::size_t n = gamma.size() / 2;
    ProjectionResult res;
    res.value.resize(2 * n);
    project_scales(gamma.subspan(0, n), res.value, res.clamped, 0);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += gamma[n + i];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) res.value[n + i] = gamma[n + i] - mean;
    return res;
}

ProjectionResult project_phase(std::span<const double> xi) {
    if (xi.size() % 2 != 0 || xi.empty())
        throw shape_error("project_phase: expected (k_1..k_n, z_1..z_n)");
    const std::size_t n = xi.size() / 2;
    ProjectionResult res;
    res.value.resize(2 * n);
    project_scales(xi.subspan(0, n), res.value, res.clamped, 0);

    // Euclidean projection of z onto {sum z = 0} within [-1/2, 1/2]^n:
    // z_i(mu) = clip(x_i - mu); the sum is non-increasing in mu, so bisect.
    const double lo_b = -0.5, hi_b = 0.5;
    auto sum_at = [&](double mu) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += std::min(std::max(xi[n + i] - mu, lo_b), hi_b);
        return s;
    };
    double mu_lo = 0.0, mu_hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mu_lo = std::min(mu_lo, xi[n + i] - hi_b - 1.0);
        mu_hi = std::max(mu_hi, xi[n + i] - lo_b + 1.0);
    }
    if (sum_at(mu_lo) < 0.0 || sum_at(mu_hi) > 0.0)
        throw numeric_error("project_phase: centered shift projection infeasible");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (mu_lo + mu_hi);
        if (sum_at(mid) >= 0.0)
            mu_lo = mid;
        else
            mu_hi = mid;
    }
    const double mu = 0.5 * (mu_lo + mu_hi);
    double resid = 0.0;
    std::size_t n_free = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = std::min(std::max(xi[n + i] - mu, lo_b), hi_b);
        res.value[n + i] = z;
        resid += z;
        if (z > lo_b && z < hi_b) ++n_free;
    }
    // spread the bisection remainder over interior coordinates so the sum
    // hits zero to machine precision
    if (n_free > 0 && resid != 0.0) {
        const double fix = resid / static_cast<double>(n_free);
        for (std::size_t i = 0; i < n; ++i) {
            double& z = res.value[n + i];
            if (z > lo_b && z < hi_b) z = std::min(std::max(z - fix, lo_b), hi_b);
        }
    }
    return res;
}

} // namespace fspc
