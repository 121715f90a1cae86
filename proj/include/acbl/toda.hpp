#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "acbl/placement.hpp"

namespace acbl {

/// Reduced periodic system for the layer corrections f̃_n(θ).
/// Coefficient tables are indexed [n−1][i] on the uniform θ grid.
struct TodaSystem {
    int N = 0;
    double eps = 0.0;
    double length = 0.0;
    double gamma0 = kGamma0;
    std::vector<double> theta, beta;
    std::vector<std::vector<double>> c;   ///< 𝔠_n = 12β²γ_{1,n}𝐤_n
    std::vector<std::vector<double>> d;   ///< 𝔡_n = 12β²γ_{2,n}𝐤_{n+1}, 𝔡_N = 0
    std::vector<std::vector<double>> a;   ///< 𝔞_{n−1} stored at a[n−1]
    std::vector<std::vector<double>> g1, g2;  ///< γ_{1,n}, γ_{2,n}
    std::vector<std::vector<double>> k;   ///< 𝐤_1..𝐤_{N+1}
    bool indefinite = false;              ///< some 𝔞 ≤ 0 (𝓗 ≤ 0 somewhere)

    int size() const { return static_cast<int>(theta.size()); }
    Eigen::MatrixXd B(int i) const;
    Eigen::MatrixXd A(int i) const;
    /// Change of variables y₁ = f₁, y_{n+1} = f_{n+1} − f_n, so A = Qᵀ diag(2𝔞₀, 𝔞₁, …) Q.
    Eigen::MatrixXd congruence(int /*i*/) const;
    Eigen::VectorXd A_eigenvalues(int i) const;  ///< ascending
    Eigen::VectorXd B_eigenvalues(int i) const;  ///< ascending, via symmetrization
};

TodaSystem assemble_system(const InteractionCoeffs& coeffs, const LayerVector& f, const CollarData& collar,
                           double eps);

/// Discrete v ↦ −εγ₀v″ − ρ(θ)v on the periodic grid.
class PeriodicOperator {
public:
    PeriodicOperator(double eps, double gamma0, double length, std::vector<double> rho, bool spectral = false);

    int size() const { return static_cast<int>(rho_.size()); }
    Eigen::MatrixXd dense() const;
    /// number of eigenvalues strictly below σ (finite-difference form only)
    int count_below(double sigma) const;
    /// smallest |λ|; FD form by inertia bisection, spectral form by a dense eigensolve
    double min_abs_eigenvalue() const;
    Eigen::VectorXd eigenvalues() const;
    bool spectral() const { return spectral_; }

    /// forced fallback path, exposed for tests
    double min_abs_eigenvalue_bisection() const;

private:
    double eps_, gamma0_, length_;
    std::vector<double> rho_;
    bool spectral_;
};

/// Second-order periodic Laplacian or Fourier differentiation matrix on n nodes.
Eigen::MatrixXd periodic_second_derivative(int n, double length, bool spectral);

using LayerFields = std::vector<std::vector<double>>;  ///< [n−1][i]

/// 𝒥_n(f̃), the super-linear remainder of the exponential interactions.
LayerFields jay(const TodaSystem& sys, const LayerFields& ft);
/// −εγ₀f̃″ − Bf̃ (second-order periodic differences)
LayerFields linear_part(const TodaSystem& sys, const LayerFields& ft);
/// −εγ₀f̃″ − Bf̃ − 𝒥(f̃)
LayerFields nonlinear_residual(const TodaSystem& sys, const LayerFields& ft);

struct ResonanceOptions {
    double threshold = 0.1;  ///< resonant when gap < threshold·ε
    bool spectral = false;
};

/// Nodewise eigenvalues ρᵉ_n(θ) of B, ascending in n.
LayerFields rho_e(const TodaSystem& sys);

double reduced_gap(const TodaSystem& sys, bool spectral = false);

struct ResonancePoint {
    double eps = 0.0;
    double gap = 0.0;
    bool resonant = false;
    double nearest_analytic = 0.0;  ///< NaN unless coefficients are constant
    int nearest_m = 0;
};

struct ResonanceScanResult {
    std::vector<ResonancePoint> points;
    std::vector<double> local_minima;   ///< ε at interior local minima of gap
    std::vector<double> analytic;       ///< closed-form resonances inside the scanned range (constant coefficients)
    std::vector<double> certified;      ///< non-resonant ε values (gap ≥ threshold·ε)
    bool constant_coefficients = false;
};

/// ε_res = ρℓ²/(4π²γ₀m²)
std::vector<double> analytic_resonances(double rho, double gamma0, double length, double eps_lo, double eps_hi);

ResonanceScanResult resonance_scan(const std::function<TodaSystem(double)>& family, const std::vector<double>& eps_grid,
                                   const ResonanceOptions& opt = {});

struct TodaSolveReport {
    LayerFields ft;
    double gap = 0.0;
    double residual = 0.0;
    double ft_sup = 0.0;
    double h_l2 = 0.0;
    double stability_constant = 0.0;  ///< ‖f̃‖∞·√ε/‖h‖_{L²}
    double ansatz_ratio = 0.0;        ///< ‖f̃‖∞/ε^{1/2}
    std::vector<double> residual_trace;
    std::vector<double> damping_trace;
    std::vector<double> quadratic_ratios;  ///< r_{k+1}/r_k²
    int iterations = 0;
};

struct TodaSolveOptions {
    double threshold = 0.1;
    double tol = 1e-11;
    int max_iter = 60;
    bool check_resonance = true;
};

TodaSolveReport solve_tilde_f(const TodaSystem& sys, const LayerFields& h, const TodaSolveOptions& opt = {});

/// L² norm over θ of one or more layer fields.
double l2_theta(const TodaSystem& sys, const LayerFields& v);

}  // namespace acbl
