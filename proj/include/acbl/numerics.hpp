#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace acbl {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2 = 1.41421356237309504880;

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussRule gauss_legendre(int n);

/// Composite Gauss-Legendre over [a, b] split in panels of width <= panel.
double integrate_panels(const std::function<double(double)>& f, double a, double b,
                        double panel = 0.5, int order = 12);

/// Adaptive Simpson with absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 48);

/// Periodic cubic spline through samples y_i at t_i = i*period/n.
class PeriodicSpline {
public:
    PeriodicSpline() = default;
    PeriodicSpline(std::vector<double> values, double period);

    double operator()(double t) const { return eval(t, 0); }
    /// derivative order 0..3
    double eval(double t, int order) const;
    double period() const { return period_; }
    std::size_t size() const { return y_.size(); }
    const std::vector<double>& values() const { return y_; }

private:
    std::vector<double> y_;
    std::vector<double> m_;  // second derivatives at knots
    double period_ = 1.0;
    double h_ = 1.0;
};

/// Solve a tridiagonal system with partial pivoting. a: sub (a[0] unused),
/// b: diag, c: super (c[n-1] unused). Overwrites nothing; returns x.
class TridiagonalLU {
public:
    TridiagonalLU() = default;
    TridiagonalLU(std::span<const double> a, std::span<const double> b, std::span<const double> c);
    void solve_in_place(std::span<double> rhs) const;
    std::size_t size() const { return d_.size(); }

private:
    // row-pivoted banded factors: U has up to two super diagonals
    std::vector<double> l_, d_, u1_, u2_;
    std::vector<unsigned char> swapped_;
};

/// Solve a cyclic (periodic) tridiagonal system by the Sherman-Morrison trick.
std::vector<double> solve_cyclic_tridiagonal(std::vector<double> a, std::vector<double> b,
                                             std::vector<double> c, std::vector<double> rhs);

/// Least squares line y = intercept + slope x with standard errors.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double intercept_stderr = 0.0;
    double r2 = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Two-sided Student t quantile for 95% intervals with dof degrees of freedom.
double student_t95(int dof);

/// Trigonometric interpolation matrix from n uniform periodic samples on
/// [0, period) to arbitrary target points. Row p holds the weights for target p.
std::vector<double> trig_interp_matrix(int n, double period, std::span<const double> targets);

/// Closed-form factorial ratio helpers in log space.
double log_factorial(int n);

}  // namespace acbl
