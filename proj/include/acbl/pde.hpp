#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "acbl/geometry.hpp"
#include "acbl/placement.hpp"

namespace acbl {

struct NewtonTrace {
    std::vector<double> residual;  ///< ∞-norm before each step, last entry after the final step
    std::vector<double> damping;
    int iterations = 0;
    bool converged = false;
    std::vector<double> continuation;  ///< ε values used as warm starts, coarsest first

    void write_jsonl(std::ostream& os, const std::string& label) const;
};

/// Zero crossings of u along the stretched normal coordinate, one row per θ node.
struct LayerTrace {
    double eps = 0.0;
    std::vector<double> theta;
    std::vector<std::vector<double>> depth;  ///< depth[i] sorted ascending, stretched units s
    bool unresolved = false;                 ///< two crossings closer than 2h
    int count() const;                       ///< common count, −1 when rows disagree
    double t(int i, int j) const { return eps * depth[i][j]; }
};

/// Sign changes of u(s) on a (possibly nonuniform) increasing grid, refined on
/// the local cubic through the four surrounding nodes.
std::vector<double> zero_crossings(const std::vector<double>& s, const std::vector<double>& u,
                                   bool* unresolved = nullptr, double noise_floor = 1e-8);

// ---------------------------------------------------------------- radial

struct RadialGrid {
    double eps = 0.0;
    std::vector<double> r;  ///< increasing from 0 to 1
    int size() const { return static_cast<int>(r.size()); }
};

/// Fine spacing h_fine·ε for 1 − r ≤ ε·collar_depth, geometric growth (1.05) inward, step cap ε.
RadialGrid make_radial_grid(double eps, double collar_depth, double h_fine = 0.05);

struct RadialOptions {
    std::function<double(double)> V;  ///< V(r), default 1
    double tol = 1e-10;
    int max_iter = 80;
    double h_fine = 0.05;
    int max_continuation = 4;
    const std::vector<double>* guess = nullptr;  ///< on the grid below, replaces u₁
    const RadialGrid* grid = nullptr;
};

struct RadialSolution {
    int N = 0;
    RadialGrid grid;
    std::vector<double> u;
    NewtonTrace trace;
    LayerTrace layers;  ///< single row, depth measured in s = (1 − r)/ε
    double residual = 0.0;
    double predicted_f1 = 0.0;
    std::vector<double> predicted;  ///< closed-form depths f_1..f_N
};

/// Finite-volume residual of ε²(u″ + u′/r) + V u(1 − u²), divided by the cell area.
std::vector<double> radial_residual(const RadialGrid& g, const std::vector<double>& u, double eps,
                                    const std::function<double(double)>& V);

/// u₁ in t = 1 − r with the closed-form depths.
std::vector<double> radial_u1(const RadialGrid& g, int N, double eps, double beta, double H);

RadialSolution solve_radial(int N, double eps, const RadialOptions& opt = {});

/// Closed-form depths for the disk: β = V(1)^{1/2}, k = 1, β₁ = −V′(1).
PredictedPositions radial_prediction(int N, double eps, const std::function<double(double)>& V);
/// The grid solve_radial builds when none is supplied.
RadialGrid default_radial_grid(int N, double eps, const RadialOptions& opt = {});

// ---------------------------------------------------------------- strip

struct StripGrid {
    int ns = 0, nz = 0;  ///< s nodes 0..ns−1 (last node is the Dirichlet edge), periodic z nodes
    double hs = 0.0, hz = 0.0, s_max = 0.0, period = 0.0;
    double s(int i) const { return i * hs; }
    double z(int m) const { return m * hz; }
};

StripGrid make_strip_grid(double s_max, double hs_max, double period, int nz);

/// Boundary data of the Fermi strip: curve, potential and the chart parameters.
struct StripSetup {
    std::shared_ptr<const BoundaryCurve> curve;
    std::shared_ptr<const PotentialField> V;
    double eps = 0.0;
    double delta0 = 0.0;  ///< default 0.4/max|k|
    bool taylor = false;  ///< truncated metric and potential instead of exact coefficients
};

/// Per-node coefficients of
///   u_ss + cs·u_s + czz·u_zz + cz·u_z + V·F(u)
struct StripCoefficients {
    StripGrid grid;
    Eigen::MatrixXd cs, czz, cz, V;  ///< (nz, ns)
    std::vector<double> k, dk, theta;
};

StripCoefficients strip_coefficients(const StripSetup& setup, const StripGrid& grid);

/// Discrete 𝐒(u): second differences in s with the ghost u_{−1} = u_1, periodic in z.
/// The Dirichlet column is left at zero.
Eigen::MatrixXd residual_strip(const StripCoefficients& c, const Eigen::MatrixXd& u);

/// Analytic Jacobian of residual_strip over the non-Dirichlet nodes, index m·(ns−1) + i.
Eigen::SparseMatrix<double> strip_jacobian(const StripCoefficients& c, const Eigen::MatrixXd& u);

/// u₁ and its exact s-derivatives for one slice with depths f_1..f_N.
struct U1Jet {
    double u = 0.0, us = 0.0, uss = 0.0;
};
U1Jet u1_jet(double s, double beta, const std::vector<double>& depths);

struct ResidualNorms {
    double sup = 0.0;
    double l2 = 0.0;
    std::vector<double> window_sup;  ///< sup over the layer windows 𝔄_n, n = 1..N
};

ResidualNorms residual_norms(const StripGrid& g, const Eigen::MatrixXd& r, const LayerVector* layers = nullptr);

/// u₁ on the strip grid (layer depths from f at the matching θ nodes).
Eigen::MatrixXd strip_u1(const StripGrid& g, const LayerVector& f, const std::vector<double>& beta,
                         bool with_phi11 = false, const std::vector<double>& beta1 = {});

/// 𝐒 applied to u₁ (optionally + ε|lnε|φ₁₁) with exact s-derivatives and fourth-order
/// periodic differences in z. Returns the residual on the grid.
Eigen::MatrixXd ansatz_residual(const StripSetup& setup, const StripGrid& g, const LayerVector& f,
                                const CollarData& collar, bool with_phi11);

struct StripOptions {
    double hs_max = 0.15;
    int nz = 256;
    double tol = 1e-8;  ///< ‖R‖∞ / max V
    int max_iter = 60;
    bool use_phi11 = false;
    bool gamma_weighted = false;
    double resonance_threshold = 0.1;
    const Eigen::MatrixXd* guess = nullptr;
};

struct StripSolution {
    int N = 0;
    StripGrid grid;
    Eigen::MatrixXd u;
    NewtonTrace trace;
    LayerTrace layers;
    LayerVector predicted;
    CollarData collar;
    double residual = 0.0;
    double reduced_gap = 0.0;
    bool resonant = false;
    double max_abs_u = 0.0;
};

StripSolution solve_strip(int N, const StripSetup& setup, const StripOptions& opt = {});

/// Per z row zero crossings of a strip field.
LayerTrace extract_layers(const StripGrid& g, const Eigen::MatrixXd& u, double eps);

struct TheoryDelta {
    int j = 0;
    double theta = 0.0;
    double measured = 0.0, predicted = 0.0, delta = 0.0, relative = 0.0;
    double spacing_measured = 0.0, spacing_predicted = 0.0, spacing_delta = 0.0;  ///< f_j − f_{j−1}, f₀ = −f₁
};

struct TheoryComparison {
    std::vector<TheoryDelta> rows;
    double max_abs_delta = 0.0;
    double max_rel_delta = 0.0;
};

/// predicted[i][j−1]: depth of layer j at θ row i (a single row broadcasts).
TheoryComparison compare_to_theory(const LayerTrace& trace, const std::vector<std::vector<double>>& predicted);

/// Fit of log|error| against log ε; slope is the decay exponent.
LineFit error_decay(const std::vector<double>& eps, const std::vector<double>& err);

void write_layers_csv(std::ostream& os, const TheoryComparison& c);
void write_strip_solution_csv(std::ostream& os, const StripGrid& g, const Eigen::MatrixXd& u);
void write_radial_solution_csv(std::ostream& os, const RadialSolution& s);

}  // namespace acbl
