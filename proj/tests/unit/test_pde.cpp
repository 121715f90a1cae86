#include <cmath>
#include <sstream>

#include "acbl/errors.hpp"
#include "acbl/pde.hpp"
#include "doctest.h"

using namespace acbl;

namespace {

double Htanh(double x) { return std::tanh(x / std::sqrt(2.0)); }

std::shared_ptr<const BoundaryCurve> unit_circle() {
    static auto c = std::make_shared<const BoundaryCurve>(BoundaryCurve::circle(1.0));
    return c;
}

std::shared_ptr<const PotentialField> unit_potential() {
    static auto v = std::make_shared<const PotentialField>(PotentialField::constant(1.0));
    return v;
}

// flat-strip coefficients: u_ss + u_zz + F(u)
StripCoefficients flat_coefficients(const StripGrid& g) {
    StripCoefficients c;
    c.grid = g;
    c.cs = Eigen::MatrixXd::Zero(g.nz, g.ns);
    c.cz = Eigen::MatrixXd::Zero(g.nz, g.ns);
    c.czz = Eigen::MatrixXd::Ones(g.nz, g.ns);
    c.V = Eigen::MatrixXd::Ones(g.nz, g.ns);
    return c;
}

}  // namespace

TEST_CASE("u1 at the first layer is the reflected tail") {
    const double beta = 1.3, f = 2.2;
    U1Jet j = u1_jet(f, beta, {f});
    // H(0) − H(2βf) − 1 with the tanh form
    CHECK(j.u == doctest::Approx(Htanh(2.0 * beta * f) - 1.0).epsilon(1e-13));
    const double tail = -2.0 * std::exp(-2.0 * std::sqrt(2.0) * beta * f);
    CHECK(std::abs(j.u - tail) <= 2.0 * std::abs(tail) * std::exp(-2.0 * std::sqrt(2.0) * beta * f));
}

TEST_CASE("u1 satisfies the Neumann condition and saturates") {
    for (int N = 1; N <= 3; ++N) {
        std::vector<double> f{2.0, 5.5, 9.0};
        f.resize(N);
        CHECK(std::abs(u1_jet(0.0, 1.0, f).us) < 1e-8);
        U1Jet far = u1_jet(f.back() + 30.0, 1.0, f);
        CHECK(std::abs(far.u - (N % 2 == 0 ? 1.0 : -1.0)) < 1e-12);
        // derivative against a centred difference of the value
        const double s = 3.1, h = 1e-5;
        double fd = (u1_jet(s + h, 1.0, f).u - u1_jet(s - h, 1.0, f).u) / (2 * h);
        double fd2 = (u1_jet(s + h, 1.0, f).u - 2 * u1_jet(s, 1.0, f).u + u1_jet(s - h, 1.0, f).u) / (h * h);
        CHECK(u1_jet(s, 1.0, f).us == doctest::Approx(fd).epsilon(1e-8));
        CHECK(u1_jet(s, 1.0, f).uss == doctest::Approx(fd2).epsilon(1e-4));
    }
}

TEST_CASE("strip_u1 stays in the band and refuses truncated layers") {
    CollarData c = sample_collar(*unit_circle(), *unit_potential(), 32);
    LayerVector f = solve_barf(2, c, 0.01);
    StripGrid g = make_strip_grid(40.0, 0.1, 2 * kPi / 0.01, 32);
    Eigen::MatrixXd u = strip_u1(g, f, c.beta);
    CHECK(u.cwiseAbs().maxCoeff() <= 1.0 + 1e-6);
    StripGrid tight = make_strip_grid(8.0, 0.1, 2 * kPi / 0.01, 32);
    CHECK_THROWS_AS(strip_u1(tight, f, c.beta), DomainError);
}

TEST_CASE("flat strip residual of a single profile is second order in h_s") {
    // interior nodes only; the profile is an exact solution of u'' + F(u) = 0
    double err[2];
    for (int r = 0; r < 2; ++r) {
        const double hs = r == 0 ? 0.2 : 0.1;
        StripGrid g = make_strip_grid(20.0, hs, 16.0, 8);
        Eigen::MatrixXd u(g.nz, g.ns);
        for (int m = 0; m < g.nz; ++m)
            for (int i = 0; i < g.ns; ++i) u(m, i) = Htanh(g.s(i) - 10.0);
        Eigen::MatrixXd R = residual_strip(flat_coefficients(g), u);
        err[r] = R.block(0, 1, g.nz, g.ns - 2).cwiseAbs().maxCoeff();
    }
    CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("analytic strip Jacobian matches finite differences") {
    auto ell = std::make_shared<const BoundaryCurve>(BoundaryCurve::ellipse(1.2, 1.0));
    StripSetup st{ell, unit_potential(), 0.05, 0.0, false};
    StripGrid g = make_strip_grid(6.0, 0.5, ell->length() / 0.05, 12);
    StripCoefficients c = strip_coefficients(st, g);
    Eigen::MatrixXd u(g.nz, g.ns);
    for (int m = 0; m < g.nz; ++m)
        for (int i = 0; i < g.ns; ++i) u(m, i) = std::tanh(g.s(i) - 3.0 + 0.3 * std::sin(0.7 * m));
    Eigen::MatrixXd J = Eigen::MatrixXd(strip_jacobian(c, u));
    const int ni = g.ns - 1;
    Eigen::MatrixXd R0 = residual_strip(c, u);
    double worst = 0.0;
    const double h = 1e-6;
    for (int m = 0; m < g.nz; ++m)
        for (int i = 0; i < ni; ++i) {
            Eigen::MatrixXd up = u, dn = u;
            up(m, i) += h;
            dn(m, i) -= h;
            Eigen::MatrixXd col = (residual_strip(c, up) - residual_strip(c, dn)) / (2 * h);
            for (int mm = 0; mm < g.nz; ++mm)
                for (int ii = 0; ii < ni; ++ii)
                    worst = std::max(worst, std::abs(col(mm, ii) - J(mm * ni + ii, m * ni + i)));
        }
    CHECK(worst < 1e-6);
}

TEST_CASE("exact and truncated coefficients agree to first order") {
    StripSetup ex{unit_circle(), unit_potential(), 0.01, 0.0, false};
    StripSetup ty = ex;
    ty.taylor = true;
    StripGrid g = make_strip_grid(20.0, 0.5, 2 * kPi / 0.01, 8);
    StripCoefficients a = strip_coefficients(ex, g), b = strip_coefficients(ty, g);
    for (int i = 0; i < g.ns; ++i) {
        const double es = 0.01 * g.s(i);
        // −εk/(1−εks) against −(εk + ε²sk²): difference ε³s²k³/(1−εks)
        CHECK(std::abs(a.cs(0, i) - b.cs(0, i)) <= 1.01 * 0.01 * es * es / (1 - es));
        CHECK(a.czz(0, i) == doctest::Approx(1.0 / ((1 - es) * (1 - es))).epsilon(1e-9));  // sampled-curve curvature
        CHECK(a.cz(0, i) == doctest::Approx(0.0));
    }
}

TEST_CASE("zero crossings: exact profile, noise floor and resolution") {
    StripGrid g = make_strip_grid(10.0, 0.1, 8.0, 8);
    std::vector<double> s(g.ns), u(g.ns);
    for (int i = 0; i < g.ns; ++i) {
        s[i] = g.s(i);
        u[i] = Htanh(1.4 * (s[i] - 5.0 - 0.0371));
    }
    bool unres = true;
    auto z = zero_crossings(s, u, &unres);
    REQUIRE(z.size() == 1);
    CHECK(std::abs(z[0] - 5.0371) < g.hs * g.hs);
    CHECK_FALSE(unres);

    for (int i = 0; i < g.ns; ++i) u[i] = (s[i] - 5.02) * (s[i] - 5.13);
    z = zero_crossings(s, u, &unres);
    CHECK(z.size() == 2);
    CHECK(unres);

    for (int i = 0; i < g.ns; ++i) u[i] = 1e-12 * std::sin(3.0 * s[i]);
    CHECK(zero_crossings(s, u, nullptr).empty());
}

TEST_CASE("radial grid layout") {
    RadialGrid g = make_radial_grid(0.01, 20.0);
    CHECK(g.r.front() == 0.0);
    CHECK(g.r.back() == 1.0);
    for (int i = 1; i < g.size(); ++i) CHECK(g.r[i] > g.r[i - 1]);
    CHECK(g.r[g.size() - 1] - g.r[g.size() - 2] == doctest::Approx(0.05 * 0.01).epsilon(1e-9));
    double hmax = 0.0;
    for (int i = 1; i < g.size(); ++i) hmax = std::max(hmax, g.r[i] - g.r[i - 1]);
    CHECK(hmax <= 0.01 * 1.5 + 1e-15);
}

TEST_CASE("radial trivial branch stays put") {
    RadialOptions opt;
    RadialGrid g = make_radial_grid(0.01, 20.0);
    std::vector<double> minus(g.size(), -1.0);
    opt.grid = &g;
    opt.guess = &minus;
    RadialSolution s = solve_radial(0, 0.01, opt);
    CHECK(s.trace.iterations == 0);
    CHECK(s.layers.count() == 0);
    for (double v : s.u) CHECK(v == -1.0);
}

TEST_CASE("radial N=1 converges near the predicted depth") {
    RadialSolution s = solve_radial(1, 0.01, {});
    CHECK(s.trace.converged);
    CHECK(s.residual < 1e-10);
    REQUIRE(s.layers.count() == 1);
    double umax = 0.0;
    for (double v : s.u) umax = std::max(umax, std::abs(v));
    CHECK(umax <= 1.0 + 1e-6);
    // closed form 1.628174 + 1.001079 for ε = 0.01
    CHECK(s.predicted[0] == doctest::Approx(2.629253).epsilon(1e-6));
    CHECK(std::abs(s.layers.depth[0][0] - s.predicted[0]) / s.predicted[0] < 0.01);
}

TEST_CASE("radial N=3 gives three ordered depths") {
    RadialSolution s = solve_radial(3, 0.005, {});
    REQUIRE(s.layers.count() == 3);
    const auto& d = s.layers.depth[0];
    CHECK(d[0] < d[1]);
    CHECK(d[1] < d[2]);
    CHECK_FALSE(s.layers.unresolved);
}

TEST_CASE("radial refuses layers outside the collar") {
    try {
        solve_radial(3, 0.1, {});
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        REQUIRE(e.trace().size() == 2);
        const double fit = e.trace()[1];
        CHECK(fit < 0.1);
        CHECK_NOTHROW(solve_radial(3, 0.9 * fit, {}));
    }
}

TEST_CASE("radial branch is stable under perturbation") {
    RadialSolution s = solve_radial(2, 0.01, {});
    std::vector<double> pert = s.u;
    for (int i = 0; i < s.grid.size(); ++i) pert[i] += 0.01 * std::sin(37.0 * s.grid.r[i]);
    RadialOptions opt;
    opt.grid = &s.grid;
    opt.guess = &pert;
    RadialSolution t = solve_radial(2, 0.01, opt);
    REQUIRE(t.layers.count() == 2);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(t.layers.depth[0][j] - s.layers.depth[0][j]) < 1e-8);
}

TEST_CASE("strip solve on the circle is symmetric and matches the radial depth") {
    StripSetup st{unit_circle(), unit_potential(), 0.02, 0.0, false};
    StripOptions opt;
    opt.nz = 64;
    StripSolution s = solve_strip(1, st, opt);
    CHECK(s.residual < 1e-8);
    CHECK(s.max_abs_u <= 1.0 + 1e-6);
    REQUIRE(s.layers.count() == 1);
    double lo = 1e9, hi = -1e9;
    for (const auto& row : s.layers.depth) {
        lo = std::min(lo, row[0]);
        hi = std::max(hi, row[0]);
    }
    CHECK(hi - lo < 3.0 * s.grid.hs * s.grid.hs);
    // far-field slice
    CHECK(std::abs(s.u(0, s.grid.ns - 2) + 1.0) < 1e-4);
    RadialSolution r = solve_radial(1, 0.02, {});
    CHECK(std::abs(lo - r.layers.depth[0][0]) / r.layers.depth[0][0] < 0.02);
}

TEST_CASE("phi11 lowers the ansatz residual when the potential varies normally") {
    auto v = std::make_shared<const PotentialField>(
        PotentialField::collar_table(unit_circle(), {1, 1, 1, 1}, {1, 1, 1, 1}, {0, 0, 0, 0}));
    const double eps = 0.01;
    StripSetup st{unit_circle(), v, eps, 0.0, false};
    CollarData c = sample_collar(*unit_circle(), *v, 32);
    LayerVector f = solve_barf(1, c, eps);
    StripGrid g = make_strip_grid(0.4 / eps, 0.05, 2 * kPi / eps, 32);
    double plain = ansatz_residual(st, g, f, c, false).cwiseAbs().maxCoeff();
    double corr = ansatz_residual(st, g, f, c, true).cwiseAbs().maxCoeff();
    CHECK(corr < plain);
}

TEST_CASE("residual windows split at layer midpoints") {
    CollarData c = sample_collar(*unit_circle(), *unit_potential(), 16);
    LayerVector f = solve_barf(2, c, 0.01);
    StripGrid g = make_strip_grid(30.0, 0.1, 2 * kPi / 0.01, 16);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(g.nz, g.ns);
    const double mid = 0.5 * (f.f(1, 0) + f.f(2, 0));
    for (int i = 0; i < g.ns; ++i) r(3, i) = g.s(i) < mid ? 1.0 : 2.0;
    ResidualNorms n = residual_norms(g, r, &f);
    CHECK(n.sup == 2.0);
    REQUIRE(n.window_sup.size() == 2);
    CHECK(n.window_sup[0] == 1.0);
    CHECK(n.window_sup[1] == 2.0);
}

TEST_CASE("theory comparison plumbing") {
    LayerTrace tr;
    tr.eps = 0.01;
    tr.theta = {0.0, 1.0};
    tr.depth = {{2.0, 6.0}, {2.1, 6.2}};
    TheoryComparison same = compare_to_theory(tr, tr.depth);
    CHECK(same.max_abs_delta == 0.0);
    auto shifted = tr.depth;
    for (auto& row : shifted)
        for (auto& d : row) d -= 0.1;
    TheoryComparison sh = compare_to_theory(tr, shifted);
    for (const auto& row : sh.rows) CHECK(row.delta == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(sh.rows[1].spacing_measured == doctest::Approx(4.0));
    CHECK_THROWS_AS(compare_to_theory(tr, {{2.0}}), BranchError);

    std::ostringstream os;
    write_layers_csv(os, same);
    CHECK(os.str().rfind("theta,j,depth_measured,depth_predicted,delta\n", 0) == 0);
}

TEST_CASE("error decay fit recovers the exponent") {
    std::vector<double> e{0.02, 0.01, 0.005}, err;
    for (double x : e) err.push_back(3.0 * std::sqrt(x));
    CHECK(error_decay(e, err).slope == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("Newton trace JSON lines") {
    NewtonTrace t;
    t.residual = {1.0, 0.1};
    t.damping = {1.0};
    t.iterations = 1;
    t.converged = true;
    std::ostringstream os;
    t.write_jsonl(os, "radial");
    std::string s = os.str();
    CHECK(s.find("\"iteration\":1,\"residual\":0.10000000000000001,\"damping\":1") != std::string::npos);
    CHECK(s.find("\"converged\":true") != std::string::npos);
}
