#include "acbl/profile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "acbl/errors.hpp"

namespace acbl {

namespace {

// tanh and sech² of y without overflow
void tanh_sech2(double y, double& t, double& s) {
    double e = std::exp(-2.0 * std::abs(y));
    t = std::tanh(y);
    s = 4.0 * e / ((1.0 + e) * (1.0 + e));
}

}  // namespace

ProfileJet heteroclinic_jet(double x) {
    double t, S;
    tanh_sech2(x / kSqrt2, t, S);
    ProfileJet j;
    j.H = t;
    j.d1 = S / kSqrt2;
    j.d2 = -S * t;
    j.d3 = S * (2.0 * t * t - S) / kSqrt2;
    j.d4 = -2.0 * S * t * t * t + 4.0 * S * S * t;
    return j;
}

HeteroclinicValue heteroclinic_eval(double x) {
    ProfileJet j = heteroclinic_jet(x);
    return {j.H, j.d1, j.d2 + (1.0 - j.H * j.H) * j.H};
}

ProfileConstants profile_integrals(double window) {
    ProfileConstants c;
    c.window = window;
    // slowest tail: e^{∓√2x}-weighted integrands decay like 8e^{−√2|x|}
    c.tail_bound = 24.0 * std::exp(-kSqrt2 * window);
    if (c.tail_bound > 1e-10) {
        throw DomainError("profile", "quadrature window too small: tail bound " + std::to_string(c.tail_bound),
                          {window, c.tail_bound});
    }
    c.gamma0 = integrate_panels([](double x) { double d = heteroclinic_jet(x).d1; return d * d; }, -window, window);
    c.gamma1 = integrate_panels(
        [](double x) { double d = heteroclinic_jet(x).d1; return std::exp(-kSqrt2 * x) * d * d; }, -window, window);
    c.identity1 = integrate_panels(
        [](double x) { ProfileJet j = heteroclinic_jet(x); return 2.0 * x * j.d1 * j.d2; }, -window, window);
    c.identity2 = integrate_panels(
        [](double x) {
            ProfileJet j = heteroclinic_jet(x);
            return 3.0 * (1.0 - j.H * j.H) * std::exp(-kSqrt2 * x) * j.d1;
        },
        -window, window);
    return c;
}

PsiValue psi_eval(double x) {
    ProfileJet j = heteroclinic_jet(x);
    PsiValue p;
    p.psi = 0.5 * x * j.d1;
    p.dpsi = 0.5 * (j.d1 + x * j.d2);
    p.d2psi = 0.5 * (2.0 * j.d2 + x * j.d3);
    p.residual = p.d2psi + (1.0 - 3.0 * j.H * j.H) * p.psi + (j.H - j.H * j.H * j.H);
    return p;
}

double psi_orthogonality(double window) {
    return integrate_panels([](double x) { return psi_eval(x).psi * heteroclinic_jet(x).d1; }, -window, window);
}

double smoothstep5(double tau) {
    if (tau <= 0.0) return 0.0;
    if (tau >= 1.0) return 1.0;
    return tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
}

CutoffFamily::CutoffFamily(std::vector<double> depths, double delta_tilde, double window_scale)
    : f_(std::move(depths)), dt_(delta_tilde) {
    const int n = static_cast<int>(f_.size());
    if (n < 1) throw DomainError("profile", "cutoff family needs at least one layer");
    if (!(dt_ > 0.0) || !(window_scale > 0.0 && window_scale <= 1.0))
        throw DomainError("profile", "cutoff widths must be positive, window scale in (0, 1]");
    left_.resize(n);
    right_.resize(n);
    for (int j = 0; j < n; ++j) {
        if (j == 0) {
            left_[j] = f_[0] * (1.0 - window_scale);  // ramp sits on [left − δ̃, left]
        } else {
            double mid = 0.5 * (f_[j - 1] + f_[j]);
            left_[j] = f_[j] - window_scale * (f_[j] - mid);
        }
        if (j + 1 < n) {
            double mid = 0.5 * (f_[j] + f_[j + 1]);
            right_[j] = f_[j] + window_scale * (mid - f_[j]);
        } else {
            right_[j] = std::numeric_limits<double>::infinity();
        }
    }
    for (int j = 0; j < n; ++j) {
        double plateau_lo = j == 0 ? left_[j] : left_[j] + dt_;
        double plateau_hi = right_[j] - dt_;
        if (!(f_[j] > 0.0) || (j > 0 && !(f_[j] > f_[j - 1])) || !(plateau_lo < plateau_hi) ||
            !(plateau_lo <= f_[j] && f_[j] <= plateau_hi)) {
            throw DomainError("profile", "separation error: cutoff supports overlap for layer " + std::to_string(j + 1),
                              f_);
        }
    }
}

CutoffFamily CutoffFamily::unit() {
    CutoffFamily c;
    c.unit_ = true;
    c.f_ = {0.0};
    c.left_ = {-std::numeric_limits<double>::infinity()};
    c.right_ = {std::numeric_limits<double>::infinity()};
    return c;
}

double CutoffFamily::chi(int j, double s) const {
    if (unit_) return 1.0;
    const int i = j - 1;
    double left = i == 0 ? smoothstep5((s - (left_[0] - dt_)) / dt_)
                         : smoothstep5((s - (left_[i] - dt_)) / (2.0 * dt_));
    double right = std::isinf(right_[i]) ? 1.0 : 1.0 - smoothstep5((s - (right_[i] - dt_)) / (2.0 * dt_));
    return std::clamp(left * right, 0.0, 1.0);
}

std::pair<double, double> CutoffFamily::support(int j) const {
    const int i = j - 1;
    if (unit_) return {left_[0], right_[0]};
    double lo = left_[i] - dt_;
    double hi = std::isinf(right_[i]) ? right_[i] : right_[i] + dt_;
    return {lo, hi};
}

std::vector<double> CutoffFamily::breakpoints(int j) const {
    const int i = j - 1;
    std::vector<double> b;
    if (unit_) return b;
    b.push_back(left_[i] - dt_);
    b.push_back(i == 0 ? left_[i] : left_[i] + dt_);
    if (!std::isinf(right_[i])) {
        b.push_back(right_[i] - dt_);
        b.push_back(right_[i] + dt_);
    }
    return b;
}

WeightedGammas weighted_gammas(const CutoffFamily& chi, int j, double beta) {
    if (!(beta > 0.0)) throw DomainError("profile", "β must be positive");
    const double X = 25.0;
    double fj = chi.is_unit() ? 0.0 : chi.depth(j);
    if (!chi.is_unit()) {
        for (int i = 1; i < chi.layers(); ++i)
            if (chi.depth(i + 1) - chi.depth(i) < 4.0 / beta)
                throw DomainError("profile", "separation error: layers closer than 4 profile widths");
    }
    std::vector<double> cuts{-X, X};
    for (double s : chi.breakpoints(j)) {
        double x = beta * (s - fj);
        if (x > -X && x < X) cuts.push_back(x);
    }
    std::sort(cuts.begin(), cuts.end());
    auto weight = [&](double x) { return chi.chi(j, fj + x / beta); };
    auto integrate = [&](auto&& g) {
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) acc += integrate_panels(g, cuts[k], cuts[k + 1]);
        return acc;
    };
    WeightedGammas w;
    w.gamma0 = integrate([&](double x) { double d = heteroclinic_jet(x).d1; return weight(x) * d * d; });
    w.gamma1 = integrate([&](double x) {
        double d = heteroclinic_jet(x).d1;
        return weight(x) * std::exp(-kSqrt2 * x) * d * d;
    });
    w.gamma2 = integrate([&](double x) {
        double d = heteroclinic_jet(x).d1;
        return weight(x) * std::exp(kSqrt2 * x) * d * d;
    });
    w.deviation = std::max({std::abs(w.gamma0 - kGamma0), std::abs(w.gamma1 - kGamma1), std::abs(w.gamma2 - kGamma1)});
    return w;
}

}  // namespace acbl
