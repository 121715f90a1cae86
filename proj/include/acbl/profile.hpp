#pragma once

#include <vector>

#include "acbl/numerics.hpp"

namespace acbl {

/// ∫H_x² = 2√2/3
inline constexpr double kGamma0 = 2.0 * kSqrt2 / 3.0;
/// ∫e^{−√2x}H_x² = 8/(3√2)
inline constexpr double kGamma1 = 8.0 / (3.0 * kSqrt2);

struct HeteroclinicValue {
    double H = 0.0;
    double Hx = 0.0;
    double residual = 0.0;  ///< H'' + (1 − H²)H
};

/// H(x) = tanh(x/√2) and its first four derivatives.
struct ProfileJet {
    double H, d1, d2, d3, d4;
};

HeteroclinicValue heteroclinic_eval(double x);
ProfileJet heteroclinic_jet(double x);
inline double F(double u) { return u - u * u * u; }
inline double dF(double u) { return 1.0 - 3.0 * u * u; }

struct ProfileConstants {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double identity1 = 0.0;  ///< 2∫x H_x H_xx
    double identity2 = 0.0;  ///< 3∫(1 − H²)e^{−√2x}H_x
    double tail_bound = 0.0;
    double window = 0.0;
};

/// Gauss-Legendre panels of width 0.5 on [−window, window]. Throws when the
/// analytic tail bound exceeds 1e−10.
ProfileConstants profile_integrals(double window = 25.0);

struct PsiValue {
    double psi = 0.0;
    double dpsi = 0.0;
    double d2psi = 0.0;
    double residual = 0.0;  ///< ψ'' + (1 − 3H²)ψ + (H − H³)
};

/// ψ = ½xH_x, the bounded odd solution of ψ'' + (1 − 3H²)ψ = −(H − H³).
PsiValue psi_eval(double x);

/// ∫ψH_x over the quadrature window.
double psi_orthogonality(double window = 25.0);

/// Per-layer partition of unity on the stretched normal line s ≥ 0, built
/// from the layer depths at one θ. χ_j has a plateau around f_j and C²
/// quintic transitions of half-width δ̃ centred at the midpoints between
/// neighbouring layers. χ₁ ramps up on [−δ̃, 0], χ_N stays 1 to infinity.
class CutoffFamily {
public:
    /// window_scale < 1 pulls every transition towards its own layer.
    CutoffFamily(std::vector<double> depths, double delta_tilde = 2.0, double window_scale = 1.0);
    /// χ ≡ 1 (single unrestricted window)
    static CutoffFamily unit();

    int layers() const { return static_cast<int>(f_.size()); }
    double depth(int j) const { return f_[j - 1]; }
    /// j is 1-based
    double chi(int j, double s) const;
    /// support [lo, hi] of χ_j (hi may be +inf)
    std::pair<double, double> support(int j) const;
    /// transition breakpoints of χ_j in s
    std::vector<double> breakpoints(int j) const;
    bool is_unit() const { return unit_; }
    double delta_tilde() const { return dt_; }

private:
    CutoffFamily() = default;
    std::vector<double> f_;
    std::vector<double> left_, right_;  // transition centres
    double dt_ = 2.0;
    bool unit_ = false;
};

double smoothstep5(double tau);

struct WeightedGammas {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;
    double deviation = 0.0;  ///< max deviation from (γ₀, γ₁, γ₁)
};

/// γ_{i,j} = ∫χ_j H_x² {1, e^{−√2x}, e^{√2x}} dx_j with x_j = β(s − f_j).
WeightedGammas weighted_gammas(const CutoffFamily& chi, int j, double beta);

}  // namespace acbl
