#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "acbl/numerics.hpp"

namespace acbl {

using Vec2 = std::array<double, 2>;

enum class CurveKind { circle, ellipse, sampled };

struct Frame {
    double k = 0.0;  ///< signed curvature, +1 on the unit circle
    Vec2 tangent{};  ///< unit tangent γ_θ
    Vec2 normal{};   ///< unit outward normal ν, ν_θ = k γ_θ
};

/// Closed, positively oriented planar curve stored at uniform arclength nodes
/// with periodic cubic interpolation.
class BoundaryCurve {
public:
    static constexpr int kDefaultNodes = 4096;

    static BoundaryCurve circle(double radius, Vec2 center = {0.0, 0.0}, int nodes = kDefaultNodes);
    static BoundaryCurve ellipse(double a, double b, Vec2 center = {0.0, 0.0},
                                 int nodes = kDefaultNodes);
    /// Closed polygon vertices (either orientation, no repeated endpoint).
    static BoundaryCurve sampled(const std::vector<Vec2>& points, int nodes = kDefaultNodes);

    CurveKind kind() const { return kind_; }
    std::string kind_name() const;
    double length() const { return length_; }
    int nodes() const { return static_cast<int>(x_.size()); }
    double node(int i) const { return length_ * i / nodes(); }

    Vec2 point(double theta) const;
    Vec2 velocity(double theta) const;  ///< spline derivative, unit up to interpolation error
    Frame frame(double theta) const;
    double curvature_derivative(double theta) const;

    /// Closed-form curvature for circle and ellipse kinds (test oracle).
    std::optional<double> analytic_curvature(double theta) const;

    double max_abs_curvature() const { return max_abs_k_; }
    double diameter() const { return diameter_; }
    Vec2 center() const { return center_; }
    /// circle: {R}, ellipse: {a, b}, sampled: {}
    const std::vector<double>& params() const { return params_; }

    /// max over nodes of ||γ_θ| − 1|
    double unit_speed_defect() const;

    /// Foot point parameter and signed depth t (positive inside) of a physical point.
    std::pair<double, double> project(Vec2 y) const;

private:
    BoundaryCurve() = default;
    void build(const std::function<Vec2(double)>& c, const std::function<Vec2(double)>& dc,
               double period, int nodes);

    CurveKind kind_ = CurveKind::sampled;
    std::vector<double> params_;
    Vec2 center_{0.0, 0.0};
    double length_ = 0.0;
    std::vector<double> x_, y_;
    PeriodicSpline sx_, sy_, sk_;
    std::vector<double> ellipse_phi_;  // ellipse parameter at the arclength nodes
    PeriodicSpline ellipse_phi_offset_;
    double max_abs_k_ = 0.0;
    double diameter_ = 0.0;
};

/// Potential V on the closed domain, optionally with closed-form collar traces.
class PotentialField {
public:
    struct Traces {
        double beta = 1.0;   ///< V(0,θ)^{1/2}
        double beta1 = 0.0;  ///< V_t(0,θ)
        double beta2 = 0.0;  ///< V_tt(0,θ)
    };

    static PotentialField constant(double value);
    /// V(y) = Σ c_k r^k with r = |y − center|.
    static PotentialField radial_poly(Vec2 center, std::vector<double> coeffs);
    /// V(y) = amp · exp(rate · (r0 − r)).
    static PotentialField radial_exp(Vec2 center, double amp, double rate, double r0);
    /// Collar table: V(t,θ) = v0 + vt t + ½ vtt t² with periodic spline interpolation in θ.
    static PotentialField collar_table(std::shared_ptr<const BoundaryCurve> curve,
                                       std::vector<double> v0, std::vector<double> vt,
                                       std::vector<double> vtt);
    static PotentialField from_function(std::function<double(Vec2)> f, std::string name = "function");

    double eval(Vec2 y) const;
    /// V at depth t below the boundary point γ(θ).
    double collar(const BoundaryCurve& curve, double t, double theta) const;
    bool has_analytic_traces() const { return static_cast<bool>(traces_); }
    const std::string& kind() const { return kind_; }
    std::optional<Traces> analytic_traces(double theta) const;
    /// radial kinds: V as a function of r
    std::optional<std::function<double(double)>> radial_profile() const;

private:
    std::string kind_;
    std::function<double(Vec2)> eval_;
    std::function<double(double, double)> collar_;  // (t, θ), optional fast path
    std::function<Traces(double)> traces_;
    std::function<double(double)> radial_;
};

using Traces = PotentialField::Traces;

/// Normal traces of V at γ(θ); analytic when the potential provides them,
/// otherwise 4th-order one-sided differences with step 1e−4·diam.
Traces potential_trace(const PotentialField& v, const BoundaryCurve& curve, double theta);

struct MeanCurvature {
    double value = 0.0;
    bool positive = true;
};

/// 𝓗 = k − β₁/(2β²).
MeanCurvature generalized_mean_curvature(const BoundaryCurve& curve, const PotentialField& v,
                                         double theta);

/// Stretched Fermi chart: (s, z) ↦ γ(εz)/ε − s ν(εz).
class FermiChart {
public:
    FermiChart(std::shared_ptr<const BoundaryCurve> curve, double eps,
               std::optional<double> delta0 = std::nullopt);

    struct MapResult {
        Vec2 point{};
        double detg = 1.0;
    };

    MapResult map(double s, double z) const;
    /// Inverse of map on stretched coordinates; throws when outside the collar.
    std::pair<double, double> inverse(Vec2 stretched_point) const;

    const BoundaryCurve& curve() const { return *curve_; }
    std::shared_ptr<const BoundaryCurve> curve_ptr() const { return curve_; }
    double eps() const { return eps_; }
    double delta0() const { return delta0_; }
    double s_max() const { return delta0_ / eps_; }
    double z_period() const { return curve_->length() / eps_; }

private:
    std::shared_ptr<const BoundaryCurve> curve_;
    double eps_;
    double delta0_;
};

double default_delta0(const BoundaryCurve& curve);

}  // namespace acbl
