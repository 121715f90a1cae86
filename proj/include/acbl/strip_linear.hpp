#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <vector>

#include "acbl/placement.hpp"

namespace acbl {

/// Samples φ(x_i, z_m) on a uniform x grid over [x_lo, x_hi] and a uniform
/// periodic z grid z_m = m·period/nz. values(m, i).
struct StripField {
    std::vector<double> x, z;
    double period = 0.0;
    Eigen::MatrixXd values;

    int nx() const { return static_cast<int>(x.size()); }
    int nz() const { return static_cast<int>(z.size()); }
    double hx() const { return x.size() > 1 ? x[1] - x[0] : 0.0; }
    double hz() const { return period / nz(); }
    double& operator()(int m, int i) { return values(m, i); }
    double operator()(int m, int i) const { return values(m, i); }
};

StripField make_strip(double x_lo, double x_hi, int nx, double period, int nz);
/// symmetric window [−X, X]
StripField make_strip(double X, int nx, double period, int nz);

/// β(θ) and β′(θ) on a boundary of length ℓ.
struct BetaProfile {
    std::function<double(double)> beta, dbeta;
    double length = 0.0;

    static BetaProfile constant(double b, double length);
    static BetaProfile from_samples(const std::vector<double>& values, double length);
    bool is_constant() const { return constant_; }
    bool constant_ = false;
};

struct StripSolveOptions {
    double max_input_defect = 1e-4;  ///< relative ∫ΦH_x before projection
    double fixed_point_tol = 1e-10;
    int max_sweeps = 25;
    int threads = 1;
};

struct StripSolveReport {
    StripField phi;
    double input_defect = 0.0;   ///< max_z |∫ΦH_x| / (max|Φ|∫|H_x|)
    double output_defect = 0.0;  ///< same for φ
    double residual = 0.0;       ///< projected discrete residual / max|Φ̃|
    int sweeps = 0;
    std::vector<double> sweep_trace;
    double stability_constant = 0.0;  ///< ‖φ‖_{L²}/‖Φ‖_{L²}
};

/// φ_zz + β(εz)²[φ_xx + (1 − 3H²)φ] = Φ, periodic in z, zero at x = ±X,
/// ∫φH_x dx = 0 for every z. Φ must live on a symmetric x window.
StripSolveReport solve_strip_linear(const StripField& rhs, const BetaProfile& beta, double eps,
                                    const StripSolveOptions& opt = {});

/// Discrete operator of the solver applied to φ (x: second differences, z: Fourier).
StripField apply_strip_operator(const StripField& phi, const BetaProfile& beta, double eps);

/// max_z |Σw_iφ_i H_x(x_i)| / (max|φ| Σw_i|H_x(x_i)|) with trapezoid weights.
double orthogonality_defect(const StripField& f);

/// ε(β₁/β²)Σ_j ḟ_j[ψ_j(β(s − f_j)) + ψ_j(−β(s + f_j))], ψ_j = (−1)^jψ, on s ∈ [0, s_max].
struct Phi11 {
    StripField field;         ///< x = s (stretched normal), z = θ/ε
    std::vector<double> ds0;  ///< ∂_s at s = 0 per z, from ψ′
    double eval(int m, double s) const;
    double ds(int m, double s) const;
    LayerVector layers;
    std::vector<double> beta, beta1;
};

Phi11 build_phi11(const LayerVector& f, const CollarData& collar, int ns = 401, double s_max = 0.0);

struct Xi3Options {
    double delta_tilde = 2.0;
    double X = 0.0;  ///< default f_N + 12
    int nx = 1025;
    double orth_tol = 1e-9;
};

/// −χ_jΞ_{3,j}(x_j, z) for every layer plus orthogonality diagnostics.
struct Xi3Rhs {
    std::vector<StripField> rhs;               ///< per layer, x = x_j
    std::vector<double> defect_before;         ///< max_z |∫χΞ₃H_x| without the γ-ratio subtraction
    std::vector<double> defect_after;          ///< with the subtraction
    /// continuous evaluation of χ_jΞ_{3,j} at (x_j, θ node i)
    std::function<double(int j, int i, double x, bool subtract)> eval;
};

Xi3Rhs build_xi3_rhs(const LayerVector& f, const CollarData& collar, const InteractionCoeffs& coeffs,
                     const Xi3Options& opt = {});

void write_strip_csv(std::ostream& os, const StripField& f);

}  // namespace acbl
