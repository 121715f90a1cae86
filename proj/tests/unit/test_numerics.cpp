#include <cmath>
#include <vector>

#include "acbl/numerics.hpp"
#include "doctest.h"

using namespace acbl;

TEST_CASE("gauss legendre integrates polynomials exactly") {
    GaussRule r = gauss_legendre(8);
    double sum = 0, x6 = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        sum += r.weights[i];
        x6 += r.weights[i] * std::pow(r.nodes[i], 6);
    }
    CHECK(sum == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(x6 == doctest::Approx(2.0 / 7.0).epsilon(1e-14));
}

TEST_CASE("panel quadrature and adaptive simpson agree on a gaussian") {
    auto g = [](double x) { return std::exp(-x * x); };
    double exact = std::sqrt(kPi) * std::erf(3.0);
    CHECK(std::abs(integrate_panels(g, -3, 3) - exact) < 1e-14);
    CHECK(std::abs(adaptive_simpson(g, -3, 3, 1e-12) - exact) < 1e-11);
}

TEST_CASE("periodic spline reproduces a trigonometric function") {
    const int n = 256;
    const double P = 2 * kPi;
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = std::sin(P * i / n) + 0.3 * std::cos(2 * P * i / n);
    PeriodicSpline s(y, P);
    for (double t : {0.1, 1.7, 3.3, 6.2, -0.4, 7.0}) {
        double f = std::sin(t) + 0.3 * std::cos(2 * t);
        double df = std::cos(t) - 0.6 * std::sin(2 * t);
        CHECK(std::abs(s(t) - f) < 1e-7);
        CHECK(std::abs(s.eval(t, 1) - df) < 1e-5);
    }
}

TEST_CASE("pivoted tridiagonal solve handles a zero leading pivot") {
    std::vector<double> a{0, 1, 2, 1}, b{0, 3, 1, 4}, c{2, 1, 1, 0};
    std::vector<double> x{1, -2, 0.5, 3};
    std::vector<double> r(4);
    for (int i = 0; i < 4; ++i) {
        r[i] = b[i] * x[i];
        if (i > 0) r[i] += a[i] * x[i - 1];
        if (i < 3) r[i] += c[i] * x[i + 1];
    }
    TridiagonalLU lu(a, b, c);
    lu.solve_in_place(r);
    for (int i = 0; i < 4; ++i) CHECK(r[i] == doctest::Approx(x[i]).epsilon(1e-13));
}

TEST_CASE("cyclic tridiagonal solve") {
    const int n = 7;
    std::vector<double> a(n, -1.0), b(n, 2.5), c(n, -1.2), x(n), r(n);
    for (int i = 0; i < n; ++i) x[i] = std::cos(i * 0.9);
    for (int i = 0; i < n; ++i) r[i] = a[i] * x[(i + n - 1) % n] + b[i] * x[i] + c[i] * x[(i + 1) % n];
    auto s = solve_cyclic_tridiagonal(a, b, c, r);
    for (int i = 0; i < n; ++i) CHECK(s[i] == doctest::Approx(x[i]).epsilon(1e-13));
}

TEST_CASE("trigonometric interpolation is exact on band-limited data") {
    for (int n : {16, 15}) {
        const double P = 3.0;
        std::vector<double> t{0.37, 1.234, 2.9};
        auto W = trig_interp_matrix(n, P, t);
        for (std::size_t p = 0; p < t.size(); ++p) {
            double acc = 0;
            for (int m = 0; m < n; ++m) {
                double z = m * P / n;
                acc += W[p * n + m] * (1 + std::sin(2 * kPi * 3 * z / P) - std::cos(2 * kPi * 5 * z / P));
            }
            double exact = 1 + std::sin(2 * kPi * 3 * t[p] / P) - std::cos(2 * kPi * 5 * t[p] / P);
            CHECK(std::abs(acc - exact) < 1e-12);
        }
    }
}

TEST_CASE("line fit recovers slope") {
    std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    LineFit f = fit_line(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
}
