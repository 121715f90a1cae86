#include "acbl/numerics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "acbl/errors.hpp"

namespace acbl {

GaussRule gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(n); it != cache.end()) return it->second;

    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    cache[n] = rule;
    return rule;
}

double integrate_panels(const std::function<double(double)>& f, double a, double b,
                        double panel, int order) {
    if (b <= a) return 0.0;
    const GaussRule rule = gauss_legendre(order);
    int np = std::max(1, static_cast<int>(std::ceil((b - a) / panel - 1e-12)));
    double h = (b - a) / np;
    double total = 0.0;
    for (int p = 0; p < np; ++p) {
        double lo = a + p * h;
        double mid = lo + 0.5 * h;
        double acc = 0.0;
        for (int q = 0; q < order; ++q) acc += rule.weights[q] * f(mid + 0.5 * h * rule.nodes[q]);
        total += 0.5 * h * acc;
    }
    return total;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double b, double fa,
                    double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

PeriodicSpline::PeriodicSpline(std::vector<double> values, double period)
    : y_(std::move(values)), period_(period) {
    const int n = static_cast<int>(y_.size());
    if (n < 4) throw DomainError("numerics", "periodic spline needs at least 4 samples");
    h_ = period_ / n;
    // m_{i-1} + 4 m_i + m_{i+1} = 6 (y_{i+1} - 2 y_i + y_{i-1}) / h^2
    std::vector<double> a(n, 1.0), b(n, 4.0), c(n, 1.0), r(n);
    for (int i = 0; i < n; ++i) {
        double yp = y_[(i + 1) % n], ym = y_[(i + n - 1) % n];
        r[i] = 6.0 * (yp - 2.0 * y_[i] + ym) / (h_ * h_);
    }
    m_ = solve_cyclic_tridiagonal(a, b, c, r);
}

double PeriodicSpline::eval(double t, int order) const {
    const int n = static_cast<int>(y_.size());
    double u = std::fmod(t, period_);
    if (u < 0) u += period_;
    int i = static_cast<int>(std::floor(u / h_));
    if (i >= n) i = n - 1;
    double tau = u - i * h_;
    int j = (i + 1) % n;
    double A = (h_ - tau) / h_, B = tau / h_;
    double mi = m_[i], mj = m_[j];
    switch (order) {
        case 0:
            return A * y_[i] + B * y_[j] +
                   ((A * A * A - A) * mi + (B * B * B - B) * mj) * h_ * h_ / 6.0;
        case 1:
            return (y_[j] - y_[i]) / h_ - (3.0 * A * A - 1.0) / 6.0 * h_ * mi +
                   (3.0 * B * B - 1.0) / 6.0 * h_ * mj;
        case 2:
            return A * mi + B * mj;
        case 3:
            return (mj - mi) / h_;
        default:
            return 0.0;
    }
}

TridiagonalLU::TridiagonalLU(std::span<const double> a, std::span<const double> b,
                             std::span<const double> c) {
    const std::size_t n = b.size();
    d_.assign(b.begin(), b.end());
    l_.assign(n > 0 ? n - 1 : 0, 0.0);
    u1_.assign(n > 0 ? n - 1 : 0, 0.0);
    u2_.assign(n > 1 ? n - 2 : 0, 0.0);
    swapped_.assign(n > 0 ? n - 1 : 0, 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        l_[i] = a[i + 1];
        u1_[i] = c[i];
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (std::abs(d_[i]) >= std::abs(l_[i])) {
            if (d_[i] == 0.0) throw DomainError("numerics", "singular tridiagonal matrix");
            double fact = l_[i] / d_[i];
            l_[i] = fact;
            d_[i + 1] -= fact * u1_[i];
        } else {
            double fact = d_[i] / l_[i];
            d_[i] = l_[i];
            l_[i] = fact;
            double temp = u1_[i];
            u1_[i] = d_[i + 1];
            d_[i + 1] = temp - fact * d_[i + 1];
            if (i + 2 < n) {
                u2_[i] = u1_[i + 1];
                u1_[i + 1] = -fact * u1_[i + 1];
            }
            swapped_[i] = 1;
        }
    }
    if (n > 0 && d_[n - 1] == 0.0) throw DomainError("numerics", "singular tridiagonal matrix");
}

void TridiagonalLU::solve_in_place(std::span<double> x) const {
    const std::size_t n = d_.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!swapped_[i]) {
            x[i + 1] -= l_[i] * x[i];
        } else {
            double temp = x[i];
            x[i] = x[i + 1];
            x[i + 1] = temp - l_[i] * x[i];
        }
    }
    if (n == 0) return;
    x[n - 1] /= d_[n - 1];
    if (n > 1) x[n - 2] = (x[n - 2] - u1_[n - 2] * x[n - 1]) / d_[n - 2];
    for (std::size_t k = n - 2; k-- > 0;) {
        x[k] = (x[k] - u1_[k] * x[k + 1] - u2_[k] * x[k + 2]) / d_[k];
    }
}

std::vector<double> solve_cyclic_tridiagonal(std::vector<double> a, std::vector<double> b,
                                             std::vector<double> c, std::vector<double> rhs) {
    const std::size_t n = b.size();
    if (n < 3) throw DomainError("numerics", "cyclic tridiagonal system needs n >= 3");
    double top = a[0];       // row 0, column n-1
    double bottom = c[n - 1];  // row n-1, column 0
    double gamma = -b[0];
    b[0] -= gamma;
    b[n - 1] -= bottom * top / gamma;
    a[0] = 0.0;
    c[n - 1] = 0.0;
    TridiagonalLU lu(a, b, c);
    lu.solve_in_place(rhs);
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = bottom;
    lu.solve_in_place(u);
    double fact = (rhs[0] + top * rhs[n - 1] / gamma) / (1.0 + u[0] + top * u[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) rhs[i] -= fact * u[i];
    return rhs;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw DomainError("numerics", "line fit needs >= 2 points");
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit fit;
    if (sxx == 0.0) throw DomainError("numerics", "line fit with constant abscissa");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - fit.intercept - fit.slope * x[i];
        sse += r * r;
    }
    fit.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
    if (n > 2) {
        double s2 = sse / (n - 2);
        fit.slope_stderr = std::sqrt(s2 / sxx);
        fit.intercept_stderr = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
    }
    return fit;
}

double student_t95(int dof) {
    if (dof < 1) return std::numeric_limits<double>::infinity();
    return boost::math::quantile(boost::math::complement(boost::math::students_t(dof), 0.025));
}

std::vector<double> trig_interp_matrix(int n, double period, std::span<const double> targets) {
    std::vector<double> w(targets.size() * n);
    const bool even = n % 2 == 0;
    for (std::size_t p = 0; p < targets.size(); ++p) {
        for (int m = 0; m < n; ++m) {
            double phi = 2.0 * kPi * (targets[p] - m * period / n) / period;
            double s = std::sin(0.5 * phi);
            double val;
            if (std::abs(s) < 1e-14) {
                val = 1.0;  // target coincides with a sample (mod period)
            } else if (even) {
                val = std::sin(0.5 * n * phi) * std::cos(0.5 * phi) / (n * s);
            } else {
                val = std::sin(0.5 * n * phi) / (n * s);
            }
            w[p * n + m] = val;
        }
    }
    return w;
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

}  // namespace acbl
