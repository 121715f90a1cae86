#include <cmath>
#include <sstream>

#include "acbl/errors.hpp"
#include "acbl/placement.hpp"
#include "doctest.h"

using namespace acbl;

namespace {

// Damped Jacobi sweeps on the log-gaps Δ_j = f̄_j − f̄_{j−1} (Δ₁ = 2f̄₁),
// solving each equation for its own gap with the neighbour frozen.
std::vector<double> fixed_point_fbar(int N, double beta, double H, const std::vector<double>& g1,
                                     const std::vector<double>& g2) {
    std::vector<double> gap(N, 1.0);
    const double lhs = (2.0 * std::sqrt(2.0) / 3.0) * H / (6.0 * std::sqrt(2.0) * beta * beta);
    for (int sweep = 0; sweep < 20000; ++sweep) {
        std::vector<double> next(N);
        double change = 0;
        for (int j = 1; j <= N; ++j) {
            double couple = j < N ? (N - j) * g2[j - 1] * std::exp(-std::sqrt(2.0) * beta * gap[j]) : 0.0;
            double target = -std::log((lhs + couple) / ((N - j + 1) * g1[j - 1])) / (std::sqrt(2.0) * beta);
            next[j - 1] = 0.6 * gap[j - 1] + 0.4 * target;
            change = std::max(change, std::abs(next[j - 1] - gap[j - 1]));
        }
        gap = next;
        if (change < 1e-16) break;
    }
    std::vector<double> f(N);
    f[0] = 0.5 * gap[0];
    for (int j = 1; j < N; ++j) f[j] = f[j - 1] + gap[j];
    return f;
}

}  // namespace

TEST_CASE("leading terms") {
    CHECK(dot_f(1, 0.01, 1.0, 1) == doctest::Approx(std::log(100.0) / (2 * std::sqrt(2.0))).epsilon(1e-14));
    CHECK(dot_f(1, 0.01, 1.0, 1) == doctest::Approx(1.628174).epsilon(1e-6));
    CHECK(dot_f(2, 0.01, 1.0, 2) - dot_f(2, 0.01, 1.0, 1) == doctest::Approx(3.256349).epsilon(1e-6));
    for (int j = 1; j <= 4; ++j) CHECK(dot_f(4, 1e-3, 2.0, j) == doctest::Approx(0.5 * dot_f(4, 1e-3, 1.0, j)));
    for (int j = 2; j <= 4; ++j) CHECK(dot_f(4, 1e-3, 1.0, j) > dot_f(4, 1e-3, 1.0, j - 1));
    CHECK_THROWS_AS(dot_f(2, 0.5, 1.0, 1), DomainError);
}

TEST_CASE("formal ladder") {
    auto l = formal_spacings(1, 0.01, 1.0, 1.0);
    CHECK(l[0] == doctest::Approx(1.1785e-3).epsilon(1e-4));
    auto l4 = formal_spacings(4, 0.02, 1.3, 0.7), l4h = formal_spacings(4, 0.01, 1.3, 0.7);
    for (int j = 1; j < 4; ++j) CHECK(l4[j - 1] / l4[j] == doctest::Approx(double(4 + 1 - j) / (4 - j)));
    for (int j = 0; j < 4; ++j) CHECK(l4h[j] == doctest::Approx(0.5 * l4[j]));
    CHECK_THROWS_AS(formal_spacings(1, 0.01, 1.0, -0.1), HypothesisError);
}

TEST_CASE("offset system: single layer closed form") {
    BarfNode n = solve_barf_node(1, 1.0, 0.0, 1.0);
    double exact = std::log(9 * kGamma1) / (2 * std::sqrt(2.0));
    CHECK(std::abs(n.fbar[0] - exact) < 1e-10);
    CHECK(n.fbar[0] == doctest::Approx(1.00107).epsilon(1e-5));
    CHECK(n.residual < 1e-12);
    CHECK_THROWS_AS(solve_barf_node(1, 1.0, 3.0, 1.0), HypothesisError);
}

TEST_CASE("offset system: Newton vs fixed-point oracle") {
    struct Case {
        int N;
        double beta, beta1, k;
        std::vector<double> g1, g2;
    };
    std::vector<Case> cases{{2, 1.0, 0.0, 1.0, {}, {}},
                            {3, 1.0, 0.0, 1.0, {}, {}},
                            {3, 1.3, 0.4, 1.1, {}, {}},
                            {3, 0.9, -0.2, 0.8, {1.80, 1.85, 1.88}, {1.86, 1.79, 1.9}}};
    for (auto& c : cases) {
        auto g1 = c.g1.empty() ? std::vector<double>(c.N, kGamma1) : c.g1;
        auto g2 = c.g2.empty() ? std::vector<double>(c.N, kGamma1) : c.g2;
        BarfNode n = solve_barf_node(c.N, c.beta, c.beta1, c.k, g1, g2);
        double H = c.k - c.beta1 / (2 * c.beta * c.beta);
        auto oracle = fixed_point_fbar(c.N, c.beta, H, g1, g2);
        CHECK(n.residual < 1e-12);
        for (int j = 0; j < c.N; ++j) CHECK(std::abs(n.fbar[j] - oracle[j]) < 1e-9);
    }
}

TEST_CASE("offset system with equal weights gives the arithmetic ladder") {
    const int N = 4;
    BarfNode n = solve_barf_node(N, 1.2, 0.3, 1.0);
    double H = 1.0 - 0.3 / (2 * 1.44);
    for (int j = 0; j < N; ++j) CHECK(n.ladder[j] == doctest::Approx(H / (9 * 1.44 * kGamma1)).epsilon(1e-12));
    for (int j = 1; j < N; ++j) CHECK(n.fbar[j] - n.fbar[j - 1] == doctest::Approx(2 * n.fbar[0]).epsilon(1e-12));
}

TEST_CASE("interaction coefficients") {
    CollarData c = uniform_collar(2 * kPi, 8, 1.0, 0.0, 1.0);
    LayerVector f1 = solve_barf(1, c, 0.01);
    InteractionCoeffs ic = interaction_coeffs(f1, c);
    CHECK(ic.d[0][3] == doctest::Approx(0.058926).epsilon(1e-5));
    CHECK(ic.d[0][3] == doctest::Approx(1.0 / (9 * kGamma1)).epsilon(1e-12));
    CHECK(ic.d[1][3] == 0.0);
    CHECK(ic.a[0][3] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

    LayerVector f3 = solve_barf(3, c, 0.001);
    InteractionCoeffs ic3 = interaction_coeffs(f3, c);
    for (int n = 1; n <= 3; ++n) CHECK(ic3.a[n - 1][0] == doctest::Approx(4.0 / 3.0 * (3 - n + 1)).epsilon(1e-12));
    CHECK(ic3.d[3][0] == 0.0);
}

TEST_CASE("predicted positions") {
    auto p = predicted_positions(1, 0.01, 1.0, 1.0);
    CHECK(p.f1 == doctest::Approx(2.629253).epsilon(1e-6));
    CHECK(p.f1 == doctest::Approx(dot_f(1, 0.01, 1.0, 1) + solve_barf_node(1, 1.0, 0.0, 1.0).fbar[0]).epsilon(1e-12));

    for (int N : {1, 2, 3, 5}) {
        for (double eps : {0.01, 1e-3, 1e-5}) {
            for (auto [beta, beta1, k] : {std::tuple{1.0, 0.0, 1.0}, std::tuple{1.4, 0.5, 0.9}, std::tuple{0.8, -0.3, 2.0}}) {
                double H = k - beta1 / (2 * beta * beta);
                auto pp = predicted_positions(N, eps, beta, H);
                BarfNode b = solve_barf_node(N, beta, beta1, k);
                for (int j = 1; j <= N; ++j)
                    CHECK(std::abs(pp.depth[j - 1] - (dot_f(N, eps, beta, j) + b.fbar[j - 1])) < 1e-10);
                // spacing differences are log ratios
                for (int j = 2; j < N; ++j)
                    CHECK(pp.spacing[j - 1] - pp.spacing[j - 2] ==
                          doctest::Approx(std::log(double(N + 1 - j) / (N - j)) / (std::sqrt(2.0) * beta)).epsilon(1e-10));
                // ε → ε/2 shifts spacings by ln2/(√2β)
                auto ph = predicted_positions(N, eps / 2, beta, H);
                for (int j = 0; j + 1 < N; ++j)
                    CHECK(ph.spacing[j] - pp.spacing[j] == doctest::Approx(std::log(2.0) / (std::sqrt(2.0) * beta)).epsilon(1e-10));
                // shifting ln𝓗 by c moves spacings by −c/(√2β) and f₁ by −c/(2√2β)
                const double cshift = 0.37;
                auto ps = predicted_positions(N, eps, beta, H * std::exp(cshift));
                CHECK(ps.f1 - pp.f1 == doctest::Approx(-cshift / (2 * std::sqrt(2.0) * beta)).epsilon(1e-10));
                for (int j = 0; j + 1 < N; ++j)
                    CHECK(ps.spacing[j] - pp.spacing[j] == doctest::Approx(-cshift / (std::sqrt(2.0) * beta)).epsilon(1e-10));
            }
        }
    }
    auto p2 = predicted_positions(2, 0.01, 1.0, 1.0);
    CHECK(p2.spacing[0] == doctest::Approx((std::log(100.0) + std::log(9 * kGamma1)) / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("ordering threshold") {
    CollarData c = uniform_collar(2 * kPi, 8, 1.0, 0.0, 1.0);
    double eps_star = ordering_threshold(3, c);
    CHECK(eps_star == doctest::Approx(1.0 / 3.0));
    CollarData big = uniform_collar(2 * kPi, 8, 1.0, 0.0, 200.0);
    double e2 = ordering_threshold(2, big);
    CHECK(e2 == doctest::Approx(9 * kGamma1 / 400.0));
    auto below = predicted_positions(2, 0.9 * e2, 1.0, 200.0);
    CHECK(below.f1 > 0.0);
    auto above = predicted_positions(2, 1.1 * e2, 1.0, 200.0);
    CHECK(above.f1 < 0.0);
}

TEST_CASE("weighted gammas deviate like sqrt(eps)") {
    CollarData c = uniform_collar(2 * kPi, 4, 1.0, 0.0, 1.0);
    BarfOptions opt;
    opt.gamma_weighted = true;
    std::vector<double> C;
    for (double eps : {1e-3, 1e-5}) {
        LayerVector f = solve_barf(2, c, eps, opt);
        double dev = 0;
        for (int j = 0; j < 2; ++j) dev = std::max(dev, std::abs(f.gamma1[j][0] - kGamma1));
        C.push_back(dev / std::sqrt(eps));
        MESSAGE("eps=" << eps << " max|gamma_1j - gamma_1| = " << dev << "  C = " << C.back());
    }
    CHECK(C[1] / C[0] > 0.8);
    CHECK(C[1] / C[0] < 1.25);
}

TEST_CASE("placement csv") {
    CollarData c = uniform_collar(2 * kPi, 4, 1.0, 0.0, 1.0);
    LayerVector f = solve_barf(2, c, 0.01);
    std::ostringstream os;
    write_placement_csv(os, f, c);
    std::string s = os.str();
    CHECK(s.rfind("theta,H,fdot_1,fdot_2,fbar_1,fbar_2,f_1,f_2,spacing_1,spacing_2", 0) == 0);
    CHECK(f.f(2, 0) - f.f(1, 0) == doctest::Approx(5.258506).epsilon(1e-6));
}
