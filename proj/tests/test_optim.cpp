#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fspc/errors.hpp"
#include "fspc/optim.hpp"
#include "fspc/rng.hpp"

using namespace fspc;

namespace {

// normal-equations oracle: solve (A^T A) x = A^T b by Gaussian elimination
std::vector<double> normal_equations_oracle(const Matrix& a, const std::vector<double>& b) {
    const std::size_t k = a.cols;
    std::vector<std::vector<double>> m(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t r = 0; r < a.rows; ++r) m[i][j] += a(r, i) * a(r, j);
        for (std::size_t r = 0; r < a.rows; ++r) m[i][k] += a(r, i) * b[r];
    }
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (std::size_t c = col; c <= k; ++c) m[r][c] -= f * m[col][c];
        }
    }
    std::vector<double> x(k);
    for (std::size_t i = 0; i < k; ++i) x[i] = m[i][k] / m[i][i];
    return x;
}

// global minimum of (x^2-1)^2 + 0.3x on [-2,2] via bisection on the cubic
// derivative 4x^3 - 4x + 0.3 = 0 in the left basin
double double_well_argmin() {
    double lo = -1.2, hi = -0.9;
    auto d = [](double x) { return 4 * x * x * x - 4 * x + 0.3; };
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (d(lo) * d(mid) <= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

double double_well(std::span<const double> x) {
    const double a = x[0] * x[0] - 1.0;
    return a * a + 0.3 * x[0] + (x[1] - 0.3) * (x[1] - 0.3);
}

} // namespace

TEST_CASE("least_squares_solve: identity and exact line") {
    Matrix eye(3, 3);
    for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1.0;
    const auto x = least_squares_solve(eye, {3.0, -1.0, 2.0});
    CHECK(x[0] == 3.0);
    CHECK(x[1] == -1.0);
    CHECK(x[2] == 2.0);

    // overdetermined samples of y = 2t + 1
    const std::size_t n = 40;
    Matrix a(n, 2);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / (n - 1);
        a(i, 0) = t;
        a(i, 1) = 1.0;
        b[i] = 2.0 * t + 1.0;
    }
    const auto coef = least_squares_solve(a, b);
    CHECK(coef[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(coef[1] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("least_squares_solve agrees with the normal-equations oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t rows = 30, cols = 4;
        Matrix a(rows, cols);
        std::vector<double> b(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
            a(i, i % cols) += 2.0; // keep it well conditioned
            b[i] = rng.uniform(-1.0, 1.0);
        }
        const auto x = least_squares_solve(a, b);
        const auto y = normal_equations_oracle(a, b);
        for (std::size_t j = 0; j < cols; ++j) CHECK(x[j] == doctest::Approx(y[j]).epsilon(1e-8));

        // residual orthogonal to the column space
        std::vector<double> r(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            r[i] = b[i];
            for (std::size_t j = 0; j < cols; ++j) r[i] -= a(i, j) * x[j];
        }
        for (std::size_t j = 0; j < cols; ++j) {
            double dot = 0.0, scale = 0.0;
            for (std::size_t i = 0; i < rows; ++i) {
                dot += a(i, j) * r[i];
                scale += std::abs(a(i, j));
            }
            CHECK(std::abs(dot) <= 1e-8 * (scale + 1.0));
        }
    }
}

TEST_CASE("least_squares_solve rejects rank-deficient designs") {
    Matrix a(5, 2);
    for (std::size_t i = 0; i < 5; ++i) {
        a(i, 0) = static_cast<double>(i);
        a(i, 1) = 2.0 * static_cast<double>(i); // dependent column
    }
    CHECK_THROWS_AS(least_squares_solve(a, {0, 1, 2, 3, 4}), identifiability_error);
}

TEST_CASE("multistart_minimize: convex bowl") {
    const std::vector<double> c{0.4, -0.7, 1.2};
    Objective bowl = [&](std::span<const double> x) {
        double acc = 0.0;
        for (std::size_t i = 0; i < 3; ++i) acc += (x[i] - c[i]) * (x[i] - c[i]);
        return acc;
    };
    BoxSpec box{{-2, -2, -2}, {2, 2, 2}};
    const auto rep = multistart_minimize(bowl, box, 4, 9);
    for (std::size_t i = 0; i < 3; ++i) CHECK(rep.best_point[i] == doctest::Approx(c[i]).epsilon(1e-6));
    CHECK(rep.best_value <= 1e-10);
}

TEST_CASE("multistart_minimize: double well reaches the global basin") {
    BoxSpec box{{-2, -2}, {2, 2}};
    const double x_star = double_well_argmin();
    const double f_star = double_well(std::vector<double>{x_star, 0.3});
    const auto rep = multistart_minimize(double_well, box, 16, 3);
    CHECK(rep.best_value <= f_star + 1e-6);
    CHECK(rep.best_point[0] == doctest::Approx(x_star).epsilon(1e-4));

    MultistartOptions opts;
    opts.restarts = 16;
    opts.seed = 3;
    opts.engine = OptimEngine::simulated_annealing;
    const auto sa = multistart_minimize(double_well, box, opts);
    CHECK(sa.best.best_value <= f_star + 1e-6);
}

TEST_CASE("multistart_minimize: determinism and restart monotonicity") {
    BoxSpec box{{-2, -2}, {2, 2}};
    const auto a = multistart_minimize(double_well, box, 8, 77);
    const auto b = multistart_minimize(double_well, box, 8, 77);
    CHECK(a.best_point == b.best_point);
    CHECK(a.best_value == b.best_value);
    CHECK(a.evaluations == b.evaluations);

    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t r = 1; r <= 8; ++r) {
        const auto rep = multistart_minimize(double_well, box, r, 123);
        CHECK(rep.best_value <= prev + 1e-15);
        prev = rep.best_value;
    }
}

TEST_CASE("multistart_minimize: pinned coordinates and error paths") {
    BoxSpec box{{-1, 0.5}, {1, 0.5}}; // second coordinate pinned
    Objective f = [](std::span<const double> x) {
        return x[0] * x[0] + 10.0 * std::abs(x[1] - 0.5);
    };
    const auto rep = multistart_minimize(f, box, 3, 1);
    CHECK(rep.best_point[1] == 0.5);
    CHECK(std::abs(rep.best_point[0]) <= 1e-6);

    Objective bad = [](std::span<const double>) { return std::nan(""); };
    CHECK_THROWS_AS(multistart_minimize(bad, box, 2, 1), numeric_error);
    CHECK_THROWS_AS(multistart_minimize(f, box, 0, 1), configuration_error);
}

TEST_CASE("project_amplitude: worked examples") {
    // already feasible: unchanged
    const std::vector<double> feasible{2.0, 0.5, 1.0, -1.0};
    const auto kept = project_amplitude(feasible);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(kept.value[i] == doctest::Approx(feasible[i]).epsilon(1e-14));
    CHECK(kept.clamped.empty());

    // scales (2,2) and offsets (1,3)
    const auto r = project_amplitude(std::vector<double>{2.0, 2.0, 1.0, 3.0});
    CHECK(r.value[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.value[1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r.value[2] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(r.value[3] == doctest::Approx(1.0).epsilon(1e-14));

    // nonpositive scale flagged
    const auto f = project_amplitude(std::vector<double>{-1.0, 2.0, 0.0, 0.0});
    CHECK(f.clamped == std::vector<std::size_t>{0});
}

TEST_CASE("project_phase: worked examples and QP oracle") {
    const auto r = project_phase(std::vector<double>{4.0, 1.0, 0.2, 0.0});
    CHECK(r.value[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(r.value[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(r.value[2] == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(r.value[3] == doctest::Approx(-0.1).epsilon(1e-12));

    // shifts (0.6, 0.0): exhaustive search over the feasible pairs (z, -z)
    double best_z = 0.0, best_d = 1e300;
    for (int i = -50000; i <= 50000; ++i) {
        const double z = i * 1e-5;
        const double d = (z - 0.6) * (z - 0.6) + z * z;
        if (d < best_d) {
            best_d = d;
            best_z = z;
        }
    }
    const auto p = project_phase(std::vector<double>{1.0, 1.0, 0.6, 0.0});
    CHECK(p.value[2] == doctest::Approx(best_z).epsilon(1e-5));
    CHECK(p.value[3] == doctest::Approx(-best_z).epsilon(1e-5));

    // saturated case: shifts well outside the box
    const auto q = project_phase(std::vector<double>{1.0, 1.0, 1.4, -1.2});
    CHECK(q.value[2] + q.value[3] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(q.value[2] <= 0.5);
    CHECK(q.value[3] >= -0.5);
}

TEST_CASE("projections: constraints hold to 1e-12 and are idempotent") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.next_u64() % 7);
        std::vector<double> g(2 * n), x(2 * n);
        for (std::size_t j = 0; j < n; ++j) {
            g[j] = rng.uniform(0.01, 5.0);
            g[n + j] = rng.uniform(-3.0, 3.0);
            x[j] = rng.uniform(0.01, 5.0);
            x[n + j] = rng.uniform(-1.0, 1.0);
        }
        const auto pg = project_amplitude(g);
        const auto px = project_phase(x);

        CHECK(std::abs(geometric_mean(std::span(pg.value).subspan(0, n)) - 1.0) <= 1e-12);
        double sum_b = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum_b += pg.value[n + j];
        CHECK(std::abs(sum_b) <= 1e-12);

        CHECK(std::abs(geometric_mean(std::span(px.value).subspan(0, n)) - 1.0) <= 1e-12);
        double sum_z = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            sum_z += px.value[n + j];
            CHECK(px.value[n + j] >= -0.5);
            CHECK(px.value[n + j] <= 0.5);
        }
        CHECK(std::abs(sum_z) <= 1e-12);

        const auto pg2 = project_amplitude(pg.value);
        const auto px2 = project_phase(px.value);
        for (std::size_t i = 0; i < 2 * n; ++i) {
            CHECK(pg2.value[i] == doctest::Approx(pg.value[i]).epsilon(1e-13));
            CHECK(px2.value[i] == doctest::Approx(px.value[i]).epsilon(1e-13));
        }
    }
}

TEST_CASE("projections are nonexpansive toward feasible anchors") {
    // The scale half is a hyperplane projection in log coordinates, the
    // offset/shift half a Euclidean projection, so the distance to any
    // feasible anchor is measured in (log scale, linear offset) space.
    Rng rng(5150);
    auto dist = [](const std::vector<double>& a, const std::vector<double>& b, std::size_t n) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = std::log(a[j]) - std::log(b[j]);
            acc += d * d;
        }
        for (std::size_t j = n; j < a.size(); ++j) acc += (a[j] - b[j]) * (a[j] - b[j]);
        return std::sqrt(acc);
    };
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.next_u64() % 5);
        std::vector<double> x(2 * n), anchor_raw(2 * n);
        for (std::size_t j = 0; j < n; ++j) {
            x[j] = rng.uniform(0.05, 4.0);
            x[n + j] = rng.uniform(-1.0, 1.0);
            anchor_raw[j] = rng.uniform(0.05, 4.0);
            anchor_raw[n + j] = rng.uniform(-0.4, 0.4);
        }
        const auto anchor_a = project_amplitude(anchor_raw).value;
        const auto anchor_p = project_phase(anchor_raw).value;
        const auto pa = project_amplitude(x).value;
        const auto pp = project_phase(x).value;
        CHECK(dist(pa, anchor_a, n) <= dist(x, anchor_a, n) + 1e-9);
        CHECK(dist(pp, anchor_p, n) <= dist(x, anchor_p, n) + 1e-9);
    }
}
