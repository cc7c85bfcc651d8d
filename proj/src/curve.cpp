#include "fspc/curve.hpp"

#include <cmath>
#include <string>

#include "fspc/errors.hpp"

namespace fspc {

TimeGrid::TimeGrid(std::size_t m) : m_(m) {
    if (m < 2) throw shape_error("TimeGrid: need at least 2 points, got " + std::to_string(m));
}

TimeGrid TimeGrid::from_points(const std::vector<double>& points) {
    TimeGrid g(points.size());
    const std::size_t m = points.size();
    if (points.front() != 0.0 || points.back() != 1.0)
        throw shape_error("TimeGrid: endpoints must be 0 and 1");
    const double h = 1.0 / static_cast<double>(m - 1);
    for (std::size_t i = 1; i < m; ++i) {
        double d = points[i] - points[i - 1];
        if (!(d > 0.0)) throw shape_error("TimeGrid: points must be strictly increasing");
        if (std::abs(d - h) > 1e-12 * h)
            throw shape_error("TimeGrid: spacing not uniform at index " + std::to_string(i));
    }
    return g;
}

std::vector<double> TimeGrid::points() const {
    std::vector<double> p(m_);
    for (std::size_t i = 0; i < m_; ++i) p[i] = point(i);
    return p;
}

SampledCurve::SampledCurve(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size())
        throw shape_error("SampledCurve: " + std::to_string(values.size()) + " values on a " +
                          std::to_string(grid.size()) + "-point grid");
    for (double x : values)
        if (!std::isfinite(x)) throw shape_error("SampledCurve: non-finite value");
}

SampledCurve curve_from_function(const TimeGrid& grid, const std::function<double(double)>& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid.point(i));
    return SampledCurve(grid, std::move(v));
}

double evaluate(const SampledCurve& c, double t) {
    if (!std::isfinite(t)) throw std::domain_error("evaluate: non-finite t");
    const std::size_t m = c.size();
    if (t <= 0.0) return c.values.front();
    if (t >= 1.0) return c.values.back();
    const double x = t * static_cast<double>(m - 1);
    // node hits must come back exact; t*(m-1) can land an ulp off an integer
    const double xr = std::nearbyint(x);
    if (std::abs(x - xr) < 1e-9 && xr >= 0.0) {
        const std::size_t i = static_cast<std::size_t>(xr);
        if (i < m) return c.values[i];
    }
    std::size_t i = static_cast<std::size_t>(x);
    if (i >= m - 1) i = m - 2;
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * c.values[i] + w * c.values[i + 1];
}

double warp_evaluate(const SampledCurve& c, double t, double kappa, double zeta) {
    if (!(kappa > 0.0)) throw std::domain_error("warp_evaluate: kappa must be positive");
    return evaluate(c, (t - zeta) / kappa);
}

void require_same_grid(const SampledCurve& f, const SampledCurve& g, const char* where) {
    if (f.grid != g.grid)
        throw shape_error(std::string(where) + ": grids differ (" + std::to_string(f.size()) +
                          " vs " + std::to_string(g.size()) + " points)");
}

double trapezoid_weight(const TimeGrid& grid, std::size_t i) {
    const double h = grid.spacing();
    return (i == 0 || i + 1 == grid.size()) ? 0.5 * h : h;
}

double l2_inner(const SampledCurve& f, const SampledCurve& g) {
    require_same_grid(f, g, "l2_inner");
    const std::size_t m = f.size();
    double acc = 0.5 * (f.values[0] * g.values[0] + f.values[m - 1] * g.values[m - 1]);
    for (std::size_t i = 1; i + 1 < m; ++i) acc += f.values[i] * g.values[i];
    return acc * f.grid.spacing();
}

double l2_distance_sq(const SampledCurve& f, const SampledCurve& g) {
    require_same_grid(f, g, "l2_distance");
    const std::size_t m = f.size();
    auto sq = [](double x) { return x * x; };
    double acc = 0.5 * (sq(f.values[0] - g.values[0]) + sq(f.values[m - 1] - g.values[m - 1]));
    for (std::size_t i = 1; i + 1 < m; ++i) acc += sq(f.values[i] - g.values[i]);
    return acc * f.grid.spacing();
}

double l2_distance(const SampledCurve& f, const SampledCurve& g) {
    return std::sqrt(l2_distance_sq(f, g));
}

double integral(const SampledCurve& c) {
    const std::size_t m = c.size();
    double acc = 0.5 * (c.values[0] + c.values[m - 1]);
    for (std::size_t i = 1; i + 1 < m; ++i) acc += c.values[i];
    return acc * c.grid.spacing();
}

SampledCurve resample(const SampledCurve& c, const TimeGrid& grid) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = evaluate(c, grid.point(i));
    return SampledCurve(grid, std::move(v));
}

} // namespace fspc
