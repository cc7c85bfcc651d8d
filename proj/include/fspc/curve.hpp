#ifndef FSPC_CURVE_HPP
#define FSPC_CURVE_HPP

#include <cstddef>
#include <functional>
#include <vector>

namespace fspc {

// Uniform grid on [0, 1]; t0 = 0, t_{m-1} = 1. The uniform layout is an
// invariant, so only the point count is stored.
class TimeGrid {
public:
    explicit TimeGrid(std::size_t m);
    // validates that raw points form a uniform [0,1] grid
    // (constant spacing to 1e-12 relative)
    static TimeGrid from_points(const std::vector<double>& points);

    std::size_t size() const { return m_; }
    double point(std::size_t i) const { return static_cast<double>(i) / static_cast<double>(m_ - 1); }
    double spacing() const { return 1.0 / static_cast<double>(m_ - 1); }
    std::vector<double> points() const;

    friend bool operator==(const TimeGrid& a, const TimeGrid& b) { return a.m_ == b.m_; }
    friend bool operator!=(const TimeGrid& a, const TimeGrid& b) { return a.m_ != b.m_; }

private:
    std::size_t m_;
};

// A real-valued function on [0,1] stored as samples on a TimeGrid.
struct SampledCurve {
    TimeGrid grid;
    std::vector<double> values;

    SampledCurve() : grid(2), values(2, 0.0) {} // empty placeholder curve
    SampledCurve(TimeGrid g, std::vector<double> v);
    std::size_t size() const { return values.size(); }
};

SampledCurve curve_from_function(const TimeGrid& grid, const std::function<double(double)>& f);

// Linear interpolation between bracketing nodes; constant extension
// outside [0,1]. Non-finite t is a domain error.
double evaluate(const SampledCurve& c, double t);

// evaluate(c, (t - zeta)/kappa); kappa must be positive.
double warp_evaluate(const SampledCurve& c, double t, double kappa, double zeta);

// Trapezoid-rule approximation of the integral of f*g over [0,1].
double l2_inner(const SampledCurve& f, const SampledCurve& g);
double l2_distance(const SampledCurve& f, const SampledCurve& g);
// squared distance without the sqrt; same quadrature
double l2_distance_sq(const SampledCurve& f, const SampledCurve& g);

SampledCurve resample(const SampledCurve& c, const TimeGrid& grid);

// Trapezoid quadrature weight of node i (h at interior nodes, h/2 at ends).
double trapezoid_weight(const TimeGrid& grid, std::size_t i);
// Trapezoid integral of the samples themselves.
double integral(const SampledCurve& c);

void require_same_grid(const SampledCurve& f, const SampledCurve& g, const char* where);

} // namespace fspc

#endif
