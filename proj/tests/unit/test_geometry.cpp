#include <cmath>
#include <memory>
#include <random>

#include "acbl/errors.hpp"
#include "acbl/geometry.hpp"
#include "doctest.h"

using namespace acbl;

TEST_CASE("circle curvature and frame") {
    auto c1 = BoundaryCurve::circle(1.0);
    auto c2 = BoundaryCurve::circle(2.0, {0.3, -0.1});
    CHECK(c1.length() == doctest::Approx(2 * kPi).epsilon(1e-12));
    for (double th : {0.0, 0.7, 3.0, 6.0}) {
        Frame f = c1.frame(th);
        CHECK(std::abs(f.k - 1.0) < 1e-9);
        CHECK(std::abs(f.tangent[0] * f.normal[0] + f.tangent[1] * f.normal[1]) < 1e-14);
        CHECK(std::hypot(f.normal[0], f.normal[1]) == doctest::Approx(1.0));
        // outward normal on the unit circle is the position vector
        Vec2 p = c1.point(th);
        CHECK(std::abs(f.normal[0] - p[0]) < 1e-8);
        CHECK(std::abs(f.normal[1] - p[1]) < 1e-8);
        CHECK(std::abs(c2.frame(2 * th).k - 0.5) < 1e-9);
    }
}

TEST_CASE("ellipse curvature matches tangent-angle differences and closed form") {
    auto e = BoundaryCurve::ellipse(2.0, 1.0);
    Vec2 p0 = e.point(0.0);
    CHECK(std::abs(p0[0] - 2.0) < 1e-12);
    CHECK(std::abs(p0[1]) < 1e-12);
    CHECK(std::abs(e.frame(0.0).k - 2.0) < 1e-8);
    CHECK(std::abs(*e.analytic_curvature(0.0) - 2.0) < 1e-10);
    auto angle = [&](double th) {
        Frame f = e.frame(th);
        return std::atan2(f.tangent[1], f.tangent[0]);
    };
    for (int node : {0, 800, 2000, 3100}) {
        const double h = e.length() / e.nodes(), th = e.node(node);
        auto d = [&](double a, double b) { return std::remainder(angle(a) - angle(b), 2 * kPi); };
        double da = (8.0 * d(th + h, th - h) - d(th + 2 * h, th - 2 * h)) / (12.0 * h);
        CHECK(std::abs(da - e.frame(th).k) < 1e-5);
        CHECK(std::abs(*e.analytic_curvature(th) - e.frame(th).k) < 1e-8);
    }
}

TEST_CASE("unit speed, closedness and winding") {
    std::vector<Vec2> blob;
    for (int i = 0; i < 200; ++i) {
        double t = 2 * kPi * i / 200;
        double r = 1.0 + 0.15 * std::cos(3 * t);
        blob.push_back({r * std::cos(t), r * std::sin(t)});
    }
    for (auto c : {BoundaryCurve::circle(1.0), BoundaryCurve::ellipse(1.2, 1.0), BoundaryCurve::ellipse(2.0, 1.0),
                   BoundaryCurve::sampled(blob)}) {
        CHECK(c.unit_speed_defect() < 1e-8);
        Vec2 a = c.point(0.0), b = c.point(c.length());
        CHECK(std::hypot(a[0] - b[0], a[1] - b[1]) < 1e-13);
        double total = 0;
        for (int i = 0; i < c.nodes(); ++i) total += c.frame(c.node(i)).k * c.length() / c.nodes();
        CHECK(std::abs(total - 2 * kPi) < 1e-6);
        // ν_θ = k γ_θ
        const double h = 1e-5, th = 0.37 * c.length();
        Frame f = c.frame(th), fp = c.frame(th + h), fm = c.frame(th - h);
        for (int d = 0; d < 2; ++d) CHECK(std::abs((fp.normal[d] - fm.normal[d]) / (2 * h) - f.k * f.tangent[d]) < 1e-5);
    }
}

TEST_CASE("reversed sampled polygon is reoriented") {
    std::vector<Vec2> cw;
    for (int i = 0; i < 100; ++i) {
        double t = -2 * kPi * i / 100;
        cw.push_back({std::cos(t), std::sin(t)});
    }
    auto c = BoundaryCurve::sampled(cw);
    CHECK(c.frame(0.5).k > 0.99);
}

TEST_CASE("fermi map examples and round trip") {
    auto circ = std::make_shared<BoundaryCurve>(BoundaryCurve::circle(1.0));
    FermiChart chart(circ, 0.1);
    auto r = chart.map(1.0, 0.0);
    CHECK(std::hypot(r.point[0], r.point[1]) == doctest::Approx(9.0).epsilon(1e-10));
    CHECK(r.detg == doctest::Approx(0.81).epsilon(1e-8));
    auto b = chart.map(0.0, 12.0);
    CHECK(b.detg == doctest::Approx(1.0));
    CHECK(std::hypot(b.point[0], b.point[1]) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK_THROWS_AS(chart.map(-1.0, 0.0), DomainError);
    CHECK_THROWS_AS(chart.map(chart.s_max() + 1.0, 0.0), DomainError);

    auto ell = std::make_shared<BoundaryCurve>(BoundaryCurve::ellipse(1.2, 1.0));
    FermiChart ce(ell, 0.05);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> us(0.0, ce.s_max() * 0.99), uz(0.0, ce.z_period());
    for (int k = 0; k < 50; ++k) {
        double s = us(rng), z = uz(rng);
        auto m = ce.map(s, z);
        auto [s2, z2] = ce.inverse(m.point);
        CHECK(std::abs(s2 - s) < 1e-10);
        CHECK(std::abs(std::remainder(z2 - z, ce.z_period())) < 1e-10);
        CHECK(m.detg > 0.0);
    }
}

TEST_CASE("chart rejects collar wider than the curvature radius") {
    auto circ = std::make_shared<BoundaryCurve>(BoundaryCurve::circle(1.0));
    CHECK_THROWS_AS(FermiChart(circ, 0.1, 1.2), DomainError);
    CHECK(FermiChart(circ, 0.1).delta0() == doctest::Approx(0.4));
}

TEST_CASE("potential traces") {
    auto circ = BoundaryCurve::circle(1.0);
    Traces t4 = potential_trace(PotentialField::constant(4.0), circ, 1.0);
    CHECK(t4.beta == 2.0);
    CHECK(t4.beta1 == 0.0);
    CHECK(t4.beta2 == 0.0);

    // V = 1 + t on the unit disk, t = 1 − r
    auto lin = PotentialField::radial_poly({0, 0}, {2.0, -1.0});
    for (double th : {0.0, 2.0, 5.0}) {
        Traces t = potential_trace(lin, circ, th);
        CHECK(std::abs(t.beta - 1.0) < 1e-12);
        CHECK(std::abs(t.beta1 - 1.0) < 1e-9);
        CHECK(std::abs(t.beta2) < 1e-5);
    }

    // quadratic profile: V = 1 + t + t², traces (1, 1, 2)
    auto quad = PotentialField::radial_poly({0, 0}, {3.0, -3.0, 1.0});
    Traces tq = potential_trace(quad, circ, 0.4);
    CHECK(std::abs(tq.beta1 - 1.0) < 1e-9);
    CHECK(std::abs(tq.beta2 - 2.0) < 1e-5);

    auto cptr = std::make_shared<BoundaryCurve>(circ);
    const int M = 64;
    std::vector<double> v0(M), vt(M, 0.0), vtt(M, 0.0);
    for (int i = 0; i < M; ++i) {
        double th = cptr->length() * i / M;
        v0[i] = std::pow(1.0 + 0.5 * std::sin(th), 2);
    }
    auto table = PotentialField::collar_table(cptr, v0, vt, vtt);
    for (int i = 0; i < M; i += 7) {
        double th = cptr->length() * i / M;
        CHECK(std::abs(potential_trace(table, circ, th).beta - (1.0 + 0.5 * std::sin(th))) < 1e-12);
    }
    CHECK_THROWS_AS(PotentialField::constant(-1.0), DomainError);
}

TEST_CASE("generalized mean curvature") {
    auto circ = BoundaryCurve::circle(1.0);
    auto ell = BoundaryCurve::ellipse(1.2, 1.0);
    auto one = PotentialField::constant(1.0);
    CHECK(generalized_mean_curvature(circ, one, 0.3).value == doctest::Approx(1.0).epsilon(1e-8));
    for (double th : {0.0, 1.0, 2.0})
        CHECK(generalized_mean_curvature(ell, one, th).value == doctest::Approx(ell.frame(th).k).epsilon(1e-14));
    auto ex = PotentialField::radial_exp({0, 0}, 1.0, 2.0, 1.0);
    MeanCurvature m = generalized_mean_curvature(circ, ex, 0.5);
    CHECK(std::abs(m.value) < 1e-7);
    CHECK_FALSE(m.positive);

    auto lin = PotentialField::radial_poly({0, 0}, {2.0, -1.0});
    auto lin3 = PotentialField::radial_poly({0, 0}, {6.0, -3.0});
    CHECK(std::abs(generalized_mean_curvature(circ, lin, 1.0).value - generalized_mean_curvature(circ, lin3, 1.0).value) <
          1e-10);
    CHECK(generalized_mean_curvature(circ, lin, 1.0).value == doctest::Approx(0.5).epsilon(1e-8));
}
