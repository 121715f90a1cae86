#pragma once

#include <iosfwd>
#include <vector>

#include "acbl/geometry.hpp"
#include "acbl/profile.hpp"

namespace acbl {

/// Boundary data sampled on the uniform θ grid θ_i = iℓ/M.
struct CollarData {
    double length = 0.0;
    std::vector<double> theta, k, dk, beta, beta1, beta2, H;
    int size() const { return static_cast<int>(theta.size()); }
};

CollarData sample_collar(const BoundaryCurve& curve, const PotentialField& v, int M);
/// Constant data (β, β₁, β₂, k) replicated on M nodes of a curve of length ℓ.
CollarData uniform_collar(double length, int M, double beta, double beta1, double k, double beta2 = 0.0);

/// ḟ_j = (1/(2√2β))ln(1/(Nε)) + (1/(√2β))ln((N−j)!/((N−1)!ε^{j−1})) for j ≥ 2.
double dot_f(int N, double eps, double beta, int j);

/// Formal ladder e^{−√2β(f_j−f_{j−1})} ≈ (N+1−j)·ε·(√2/(12β))·𝓗, j = 1..N.
std::vector<double> formal_spacings(int N, double eps, double beta, double H);

struct BarfNode {
    std::vector<double> fbar;    ///< f̄_1..f̄_N
    std::vector<double> ladder;  ///< u_j = e^{−√2β(f̄_j − f̄_{j−1})}, f̄₀ = −f̄₁
    std::vector<double> gamma1, gamma2;  ///< weights used per layer
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> trace;
};

/// Residual of the offset system in ladder variables:
/// 6√2β²[(N−j+1)γ₁ⱼu_j − (N−j)γ₂ⱼu_{j+1}] − (2√2/3)𝓗.
std::vector<double> barf_residual(const std::vector<double>& fbar, double beta, double H,
                                  const std::vector<double>& g1, const std::vector<double>& g2);

/// Newton solve for one θ; γ weights default to γ₁.
BarfNode solve_barf_node(int N, double beta, double beta1, double k,
                         std::vector<double> g1 = {}, std::vector<double> g2 = {});

struct BarfOptions {
    bool gamma_weighted = false;
    double delta_tilde = 2.0;
    int max_outer = 60;
};

/// Per-θ layer data. Arrays are indexed [j−1][i].
struct LayerVector {
    int N = 0;
    double eps = 0.0;
    std::vector<double> theta;
    std::vector<std::vector<double>> fdot, fbar, ftilde;
    std::vector<std::vector<double>> gamma1, gamma2, gamma0;  ///< weights used by solve_barf
    std::vector<double> barf_residual;

    int size() const { return static_cast<int>(theta.size()); }
    double f(int j, int i) const;  ///< total depth; f(0,i) = −f(1,i)
    void check_ordering() const;
};

LayerVector solve_barf(int N, const CollarData& collar, double eps, const BarfOptions& opt = {});

struct InteractionCoeffs {
    int N = 0;
    std::vector<std::vector<double>> d;  ///< d[j−1][i], j = 1..N+1
    std::vector<std::vector<double>> k;  ///< equal to d (f̌ ≡ 0)
    std::vector<std::vector<double>> a;  ///< a[n][i] = 𝔞_n = 12β²γ₁𝐤_{n+1}, n = 0..N−1
};

InteractionCoeffs interaction_coeffs(const LayerVector& f, const CollarData& collar);

struct PredictedPositions {
    double f1 = 0.0;
    std::vector<double> depth;    ///< f_1..f_N
    std::vector<double> spacing;  ///< f_j − f_{j−1} for j = 2..N (index j−2)
};

/// Closed-form layer depths in stretched units at one θ.
PredictedPositions predicted_positions(int N, double eps, double beta, double H);

/// Largest ε for which the predicted depths are positive and ordered.
double ordering_threshold(int N, const CollarData& collar);

void write_placement_csv(std::ostream& os, const LayerVector& f, const CollarData& collar);

}  // namespace acbl
