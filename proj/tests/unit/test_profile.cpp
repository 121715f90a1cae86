#include <cmath>

#include "acbl/errors.hpp"
#include "acbl/profile.hpp"
#include "doctest.h"

using namespace acbl;

TEST_CASE("heteroclinic values") {
    auto v0 = heteroclinic_eval(0.0);
    CHECK(v0.H == 0.0);
    CHECK(v0.Hx == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(heteroclinic_eval(1.0).H == doctest::Approx(0.60886).epsilon(1e-5));
    CHECK(std::abs(heteroclinic_eval(20.0).H - (1.0 - 2.0 * std::exp(-20.0 * std::sqrt(2.0)))) < 1e-10);
    for (double x = -30.0; x <= 30.0; x += 0.173) {
        auto v = heteroclinic_eval(x);
        CHECK(std::abs(v.residual) < 1e-12);
        CHECK(heteroclinic_eval(-x).H == -v.H);
        CHECK(std::abs(1.0 - v.H * v.H - std::sqrt(2.0) * v.Hx) < 1e-12);
        if (std::abs(x) > 10.0) {
            double asym = (x > 0 ? 1.0 : -1.0) * (1.0 - 2.0 * std::exp(-std::sqrt(2.0) * std::abs(x)));
            // next term of the expansion is 2e^{−2√2|x|}
            CHECK(std::abs(v.H - asym) <= 2.0 * std::exp(-2.0 * std::sqrt(2.0) * std::abs(x)) * (1 + 1e-9) + 4e-16);
        }
    }
}

TEST_CASE("jet derivatives agree with central differences") {
    const double h = 1e-4;
    for (double x : {-2.0, -0.3, 0.8, 3.1}) {
        auto j = heteroclinic_jet(x), jp = heteroclinic_jet(x + h), jm = heteroclinic_jet(x - h);
        CHECK(std::abs((jp.H - jm.H) / (2 * h) - j.d1) < 1e-8);
        CHECK(std::abs((jp.d1 - jm.d1) / (2 * h) - j.d2) < 1e-8);
        CHECK(std::abs((jp.d2 - jm.d2) / (2 * h) - j.d3) < 1e-8);
        CHECK(std::abs((jp.d3 - jm.d3) / (2 * h) - j.d4) < 1e-8);
    }
}

TEST_CASE("profile integrals") {
    ProfileConstants c = profile_integrals();
    CHECK(std::abs(c.gamma0 - 2.0 * std::sqrt(2.0) / 3.0) < 1e-10);
    CHECK(std::abs(c.gamma1 - 8.0 / (3.0 * std::sqrt(2.0))) < 1e-10);
    CHECK(std::abs(c.identity1 + 2.0 * std::sqrt(2.0) / 3.0) < 1e-10);
    CHECK(std::abs(c.identity2 - 8.0) < 1e-10);
    ProfileConstants wide = profile_integrals(50.0);
    CHECK(std::abs(wide.gamma0 - c.gamma0) < 1e-12);
    CHECK(std::abs(wide.gamma1 - c.gamma1) < 1e-12);
    CHECK_THROWS_AS(profile_integrals(10.0), DomainError);
}

TEST_CASE("corrector psi") {
    CHECK(psi_eval(0.0).psi == 0.0);
    CHECK(psi_eval(2.0).psi == doctest::Approx(heteroclinic_eval(2.0).Hx).epsilon(1e-15));
    CHECK(psi_eval(2.0).psi == doctest::Approx(0.149038).epsilon(1e-5));
    double worst = 0;
    for (double x = -20.0; x <= 20.0; x += 0.01) worst = std::max(worst, std::abs(psi_eval(x).residual));
    CHECK(worst < 1e-10);
    CHECK(psi_eval(-1.3).psi == -psi_eval(1.3).psi);
    CHECK(std::abs(psi_orthogonality()) < 1e-12);
    CHECK(std::abs(psi_eval(40.0).psi) < 1e-20);
}

TEST_CASE("cutoff family is a partition of unity") {
    CutoffFamily chi({3.0, 9.0, 16.0});
    for (double s = 0.0; s < 40.0; s += 0.05) {
        double sum = 0;
        for (int j = 1; j <= 3; ++j) {
            double c = chi.chi(j, s);
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
            sum += c;
        }
        CHECK(std::abs(sum - 1.0) < 1e-14);
    }
    CHECK(chi.chi(1, 3.0) == 1.0);
    CHECK(chi.chi(2, 9.0) == 1.0);
    CHECK(chi.chi(1, -2.0) == 0.0);
    CHECK_THROWS_AS(CutoffFamily({3.0, 4.0}), DomainError);
}

TEST_CASE("weighted gammas") {
    auto u = weighted_gammas(CutoffFamily::unit(), 1, 1.0);
    CHECK(std::abs(u.gamma0 - kGamma0) < 1e-12);
    CHECK(std::abs(u.gamma1 - kGamma1) < 1e-12);
    CHECK(std::abs(u.gamma2 - kGamma1) < 1e-12);

    CutoffFamily full({5.0, 16.0}), half({5.0, 16.0}, 2.0, 0.5);
    for (int j = 1; j <= 2; ++j) CHECK(weighted_gammas(half, j, 1.0).deviation > weighted_gammas(full, j, 1.0).deviation);
}
