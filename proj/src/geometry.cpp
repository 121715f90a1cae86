#include "acbl/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "acbl/errors.hpp"

namespace acbl {

namespace {

double norm(Vec2 v) { return std::hypot(v[0], v[1]); }

// arclength of c on [a, b] by a fixed 16-point Gauss rule (intervals are short)
double gauss_length(const std::function<Vec2(double)>& dc, double a, double b) {
    static const GaussRule rule = gauss_legendre(16);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a), acc = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) acc += rule.weights[q] * norm(dc(mid + half * rule.nodes[q]));
    return half * acc;
}

}  // namespace

void BoundaryCurve::build(const std::function<Vec2(double)>& c,
                          const std::function<Vec2(double)>& dc, double period, int nodes) {
    if (nodes < 16) throw DomainError("geometry", "curve needs at least 16 nodes");
    const int K = nodes;
    std::vector<double> phi(K + 1), S(K + 1, 0.0);
    for (int k = 0; k <= K; ++k) phi[k] = period * k / K;
    auto speed = [&](double p) { return norm(dc(p)); };
    for (int k = 0; k < K; ++k) {
        S[k + 1] = S[k] + adaptive_simpson(speed, phi[k], phi[k + 1], 1e-14, 30);
    }
    length_ = S[K];
    if (!(length_ > 0.0)) throw DomainError("geometry", "degenerate curve (zero length)");

    x_.resize(nodes);
    y_.resize(nodes);
    std::vector<double> node_phi(nodes);
    int k = 0;
    for (int i = 0; i < nodes; ++i) {
        double target = length_ * i / nodes;
        while (k + 1 < K && S[k + 1] <= target) ++k;
        double p = phi[k] + (target - S[k]) / std::max(speed(phi[k]), 1e-300);
        for (int it = 0; it < 20; ++it) {
            double g = S[k] + (p >= phi[k] ? gauss_length(dc, phi[k], p) : -gauss_length(dc, p, phi[k])) - target;
            double dp = g / speed(p);
            p -= dp;
            if (std::abs(dp) < 1e-15 * std::max(1.0, period)) break;
        }
        node_phi[i] = p;
        Vec2 q = c(p);
        x_[i] = q[0];
        y_[i] = q[1];
    }
    sx_ = PeriodicSpline(x_, length_);
    sy_ = PeriodicSpline(y_, length_);

    if (kind_ == CurveKind::ellipse) {
        ellipse_phi_ = node_phi;
        std::vector<double> off(nodes);
        for (int i = 0; i < nodes; ++i) off[i] = node_phi[i] - period * (length_ * i / nodes) / length_;
        ellipse_phi_offset_ = PeriodicSpline(off, length_);
    }

    // nodal curvature from 8th-order periodic differences of the exact node positions
    static const double c1[] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
    static const double c2[] = {8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
    const double h = length_ / nodes;
    std::vector<double> kv(nodes);
    max_abs_k_ = 0.0;
    for (int i = 0; i < nodes; ++i) {
        double dx = 0, dy = 0, ddx = -205.0 / 72.0 * x_[i], ddy = -205.0 / 72.0 * y_[i];
        for (int m = 1; m <= 4; ++m) {
            int ip = (i + m) % nodes, im = (i - m + nodes) % nodes;
            dx += c1[m - 1] * (x_[ip] - x_[im]);
            dy += c1[m - 1] * (y_[ip] - y_[im]);
            ddx += c2[m - 1] * (x_[ip] + x_[im]);
            ddy += c2[m - 1] * (y_[ip] + y_[im]);
        }
        dx /= h;
        dy /= h;
        ddx /= h * h;
        ddy /= h * h;
        kv[i] = (dx * ddy - dy * ddx) / std::pow(dx * dx + dy * dy, 1.5);
        max_abs_k_ = std::max(max_abs_k_, std::abs(kv[i]));
    }
    sk_ = PeriodicSpline(kv, length_);

    diameter_ = 0.0;
    const int stride = std::max(1, nodes / 1024);
    for (int i = 0; i < nodes; i += stride)
        for (int j = i + stride; j < nodes; j += stride)
            diameter_ = std::max(diameter_, std::hypot(x_[i] - x_[j], y_[i] - y_[j]));

    if (unit_speed_defect() > 1e-6) {
        throw DomainError("geometry", "reparameterization failed: curve is not unit speed");
    }
}

BoundaryCurve BoundaryCurve::circle(double radius, Vec2 center, int nodes) {
    if (!(radius > 0.0)) throw DomainError("geometry", "circle radius must be positive");
    BoundaryCurve cv;
    cv.kind_ = CurveKind::circle;
    cv.params_ = {radius};
    cv.center_ = center;
    cv.build([&](double p) { return Vec2{center[0] + radius * std::cos(p), center[1] + radius * std::sin(p)}; },
             [&](double p) { return Vec2{-radius * std::sin(p), radius * std::cos(p)}; }, 2.0 * kPi, nodes);
    return cv;
}

BoundaryCurve BoundaryCurve::ellipse(double a, double b, Vec2 center, int nodes) {
    if (!(a > 0.0 && b > 0.0)) throw DomainError("geometry", "ellipse semi-axes must be positive");
    BoundaryCurve cv;
    cv.kind_ = CurveKind::ellipse;
    cv.params_ = {a, b};
    cv.center_ = center;
    cv.build([&](double p) { return Vec2{center[0] + a * std::cos(p), center[1] + b * std::sin(p)}; },
             [&](double p) { return Vec2{-a * std::sin(p), b * std::cos(p)}; }, 2.0 * kPi, nodes);
    return cv;
}

BoundaryCurve BoundaryCurve::sampled(const std::vector<Vec2>& points_in, int nodes) {
    if (points_in.size() < 8) throw DomainError("geometry", "sampled curve needs at least 8 points");
    std::vector<Vec2> pts = points_in;
    double area = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec2& p = pts[i];
        const Vec2& q = pts[(i + 1) % pts.size()];
        area += p[0] * q[1] - q[0] * p[1];
    }
    if (area < 0.0) std::reverse(pts.begin(), pts.end());
    const double n = static_cast<double>(pts.size());
    std::vector<double> px(pts.size()), py(pts.size());
    Vec2 centroid{0.0, 0.0};
    for (std::size_t i = 0; i < pts.size(); ++i) {
        px[i] = pts[i][0];
        py[i] = pts[i][1];
        centroid[0] += px[i] / n;
        centroid[1] += py[i] / n;
    }
    PeriodicSpline sx(px, n), sy(py, n);
    BoundaryCurve cv;
    cv.kind_ = CurveKind::sampled;
    cv.center_ = centroid;
    cv.build([&](double p) { return Vec2{sx.eval(p, 0), sy.eval(p, 0)}; },
             [&](double p) { return Vec2{sx.eval(p, 1), sy.eval(p, 1)}; }, n, nodes);
    return cv;
}

std::string BoundaryCurve::kind_name() const {
    switch (kind_) {
        case CurveKind::circle: return "circle";
        case CurveKind::ellipse: return "ellipse";
        default: return "sampled";
    }
}

Vec2 BoundaryCurve::point(double theta) const { return {sx_.eval(theta, 0), sy_.eval(theta, 0)}; }

Vec2 BoundaryCurve::velocity(double theta) const { return {sx_.eval(theta, 1), sy_.eval(theta, 1)}; }

Frame BoundaryCurve::frame(double theta) const {
    Vec2 v = velocity(theta);
    Vec2 a{sx_.eval(theta, 2), sy_.eval(theta, 2)};
    double sp = norm(v);
    Frame f;
    f.tangent = {v[0] / sp, v[1] / sp};
    f.normal = {f.tangent[1], -f.tangent[0]};
    f.k = sk_.size() ? sk_(theta) : (v[0] * a[1] - v[1] * a[0]) / (sp * sp * sp);
    return f;
}

double BoundaryCurve::curvature_derivative(double theta) const { return sk_.eval(theta, 1); }

std::optional<double> BoundaryCurve::analytic_curvature(double theta) const {
    if (kind_ == CurveKind::circle) return 1.0 / params_[0];
    if (kind_ != CurveKind::ellipse) return std::nullopt;
    const double a = params_[0], b = params_[1];
    auto dc = [&](double p) { return Vec2{-a * std::sin(p), b * std::cos(p)}; };
    double u = std::fmod(theta, length_);
    if (u < 0) u += length_;
    int i = std::min(nodes() - 1, static_cast<int>(std::floor(u / length_ * nodes())));
    double theta_i = node(i);
    double p = ellipse_phi_offset_(u) + 2.0 * kPi * u / length_;
    for (int it = 0; it < 8; ++it) {
        double s = p >= ellipse_phi_[i] ? gauss_length(dc, ellipse_phi_[i], p)
                                        : -gauss_length(dc, p, ellipse_phi_[i]);
        double g = theta_i + s - u;
        p -= g / norm(dc(p));
    }
    double sn = std::sin(p), cs = std::cos(p);
    return a * b / std::pow(a * a * sn * sn + b * b * cs * cs, 1.5);
}

double BoundaryCurve::unit_speed_defect() const {
    double worst = 0.0;
    for (int i = 0; i < nodes(); ++i) worst = std::max(worst, std::abs(norm(velocity(node(i))) - 1.0));
    return worst;
}

std::pair<double, double> BoundaryCurve::project(Vec2 y) const {
    int best = 0;
    double bd = 1e300;
    for (int i = 0; i < nodes(); ++i) {
        double d = std::hypot(y[0] - x_[i], y[1] - y_[i]);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    double th = node(best);
    for (int it = 0; it < 30; ++it) {
        Vec2 p = point(th), v = velocity(th);
        Vec2 a{sx_.eval(th, 2), sy_.eval(th, 2)};
        Vec2 r{y[0] - p[0], y[1] - p[1]};
        double g = r[0] * v[0] + r[1] * v[1];
        double dg = -(v[0] * v[0] + v[1] * v[1]) + r[0] * a[0] + r[1] * a[1];
        double step = g / dg;
        th -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, length_)) break;
    }
    th = std::fmod(th, length_);
    if (th < 0) th += length_;
    Frame f = frame(th);
    Vec2 p = point(th);
    double t = -((y[0] - p[0]) * f.normal[0] + (y[1] - p[1]) * f.normal[1]);
    return {th, t};
}

// ---------------------------------------------------------------- potential

PotentialField PotentialField::constant(double value) {
    if (!(value > 0.0)) throw DomainError("geometry", "invalid potential: constant must be positive");
    PotentialField v;
    v.kind_ = "constant";
    v.eval_ = [value](Vec2) { return value; };
    v.collar_ = [value](double, double) { return value; };
    v.traces_ = [value](double) { return Traces{std::sqrt(value), 0.0, 0.0}; };
    v.radial_ = [value](double) { return value; };
    return v;
}

PotentialField PotentialField::radial_poly(Vec2 center, std::vector<double> coeffs) {
    if (coeffs.empty()) throw DomainError("geometry", "radial polynomial needs coefficients");
    PotentialField v;
    v.kind_ = "radial";
    auto prof = [coeffs](double r) {
        double acc = 0.0;
        for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * r + coeffs[k];
        return acc;
    };
    v.radial_ = prof;
    v.eval_ = [center, prof](Vec2 y) { return prof(std::hypot(y[0] - center[0], y[1] - center[1])); };
    return v;
}

PotentialField PotentialField::radial_exp(Vec2 center, double amp, double rate, double r0) {
    if (!(amp > 0.0)) throw DomainError("geometry", "invalid potential: amplitude must be positive");
    PotentialField v;
    v.kind_ = "radial";
    auto prof = [=](double r) { return amp * std::exp(rate * (r0 - r)); };
    v.radial_ = prof;
    v.eval_ = [center, prof](Vec2 y) { return prof(std::hypot(y[0] - center[0], y[1] - center[1])); };
    return v;
}

PotentialField PotentialField::collar_table(std::shared_ptr<const BoundaryCurve> curve,
                                            std::vector<double> v0, std::vector<double> vt,
                                            std::vector<double> vtt) {
    if (v0.size() < 4 || vt.size() != v0.size() || vtt.size() != v0.size())
        throw DomainError("geometry", "collar table needs equal-length columns of >= 4 rows");
    for (double x : v0)
        if (!(x > 0.0)) throw DomainError("geometry", "invalid potential: table trace must be positive");
    const double L = curve->length();
    auto s0 = std::make_shared<PeriodicSpline>(v0, L);
    auto s1 = std::make_shared<PeriodicSpline>(vt, L);
    auto s2 = std::make_shared<PeriodicSpline>(vtt, L);
    const double tmax = default_delta0(*curve);
    PotentialField v;
    v.kind_ = "expr-table";
    v.collar_ = [=](double t, double th) {
        double tc = std::clamp(t, 0.0, tmax);
        return (*s0)(th) + (*s1)(th) * tc + 0.5 * (*s2)(th) * tc * tc;
    };
    v.eval_ = [=, collar = v.collar_](Vec2 y) {
        auto [th, t] = curve->project(y);
        return collar(t, th);
    };
    v.traces_ = [=](double th) {
        double val = (*s0)(th);
        return Traces{std::sqrt(val), (*s1)(th), (*s2)(th)};
    };
    return v;
}

PotentialField PotentialField::from_function(std::function<double(Vec2)> f, std::string name) {
    PotentialField v;
    v.kind_ = std::move(name);
    v.eval_ = std::move(f);
    return v;
}

double PotentialField::eval(Vec2 y) const { return eval_(y); }

double PotentialField::collar(const BoundaryCurve& curve, double t, double theta) const {
    if (collar_) return collar_(t, theta);
    Frame f = curve.frame(theta);
    Vec2 p = curve.point(theta);
    return eval_({p[0] - t * f.normal[0], p[1] - t * f.normal[1]});
}

std::optional<Traces> PotentialField::analytic_traces(double theta) const {
    if (!traces_) return std::nullopt;
    return traces_(theta);
}

std::optional<std::function<double(double)>> PotentialField::radial_profile() const {
    if (!radial_) return std::nullopt;
    return radial_;
}

Traces potential_trace(const PotentialField& v, const BoundaryCurve& curve, double theta) {
    if (auto tr = v.analytic_traces(theta)) {
        if (!(tr->beta > 0.0)) throw DomainError("geometry", "invalid potential: V(0,θ) <= 0");
        return *tr;
    }
    const double h = 1e-4 * curve.diameter();
    double f[6];
    for (int k = 0; k < 6; ++k) f[k] = v.collar(curve, k * h, theta);
    if (!(f[0] > 0.0)) throw DomainError("geometry", "invalid potential: V(0,θ) <= 0");
    Traces tr;
    tr.beta = std::sqrt(f[0]);
    tr.beta1 = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
    tr.beta2 = (45.0 * f[0] - 154.0 * f[1] + 214.0 * f[2] - 156.0 * f[3] + 61.0 * f[4] - 10.0 * f[5]) /
               (12.0 * h * h);
    return tr;
}

MeanCurvature generalized_mean_curvature(const BoundaryCurve& curve, const PotentialField& v,
                                         double theta) {
    Traces tr = potential_trace(v, curve, theta);
    MeanCurvature m;
    double k = curve.frame(theta).k, w = tr.beta1 / (2.0 * tr.beta * tr.beta);
    m.value = k - w;
    // values within trace round-off of zero count as non-positive
    m.positive = m.value > 1e-8 * (std::abs(k) + std::abs(w));
    return m;
}

// ---------------------------------------------------------------- chart

double default_delta0(const BoundaryCurve& curve) { return 0.4 / curve.max_abs_curvature(); }

FermiChart::FermiChart(std::shared_ptr<const BoundaryCurve> curve, double eps,
                       std::optional<double> delta0)
    : curve_(std::move(curve)), eps_(eps) {
    if (!(eps_ > 0.0)) throw DomainError("geometry", "ε must be positive");
    delta0_ = delta0 ? *delta0 : default_delta0(*curve_);
    if (!(delta0_ > 0.0) || delta0_ * curve_->max_abs_curvature() >= 1.0)
        throw DomainError("geometry", "collar half-width violates δ₀·max|k| < 1");
}

FermiChart::MapResult FermiChart::map(double s, double z) const {
    if (s < -1e-12 || s > s_max() * (1.0 + 1e-12))
        throw DomainError("geometry", "out of chart: s outside [0, δ₀/ε]");
    double th = eps_ * z;
    Frame f = curve_->frame(th);
    Vec2 p = curve_->point(th);
    MapResult r;
    r.point = {p[0] / eps_ - s * f.normal[0], p[1] / eps_ - s * f.normal[1]};
    double g = 1.0 - eps_ * s * f.k;
    r.detg = g * g;
    return r;
}

std::pair<double, double> FermiChart::inverse(Vec2 q) const {
    auto [th, t] = curve_->project({eps_ * q[0], eps_ * q[1]});
    double s = t / eps_;
    if (s < -1e-9 || s > s_max() * (1.0 + 1e-12))
        throw DomainError("geometry", "out of chart: point outside the collar");
    return {s, th / eps_};
}

}  // namespace acbl
