#include "acbl/pde.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "acbl/errors.hpp"
#include "acbl/profile.hpp"
#include "acbl/toda.hpp"

namespace acbl {

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double sigma(int j) { return j % 2 == 0 ? 1.0 : -1.0; }

}  // namespace

void NewtonTrace::write_jsonl(std::ostream& os, const std::string& label) const {
    for (std::size_t k = 0; k < residual.size(); ++k) {
        os << "{\"solve\":\"" << label << "\",\"iteration\":" << k << ",\"residual\":" << fmt17(residual[k]);
        if (k > 0 && k - 1 < damping.size()) os << ",\"damping\":" << fmt17(damping[k - 1]);
        os << "}\n";
    }
    os << "{\"solve\":\"" << label << "\",\"converged\":" << (converged ? "true" : "false")
       << ",\"iterations\":" << iterations << ",\"continuation\":[";
    for (std::size_t k = 0; k < continuation.size(); ++k) os << (k ? "," : "") << fmt17(continuation[k]);
    os << "]}\n";
}

int LayerTrace::count() const {
    if (depth.empty()) return 0;
    int c = static_cast<int>(depth.front().size());
    for (const auto& row : depth)
        if (static_cast<int>(row.size()) != c) return -1;
    return c;
}

std::vector<double> zero_crossings(const std::vector<double>& s, const std::vector<double>& u, bool* unresolved,
                                   double noise_floor) {
    const int n = static_cast<int>(s.size());
    std::vector<double> roots;
    std::vector<double> spacing;
    for (int i = 0; i + 1 < n; ++i) {
        const bool a = u[i] >= 0.0, b = u[i + 1] >= 0.0;
        if (a == b) continue;
        const double h = s[i + 1] - s[i];
        if (std::abs(u[i + 1] - u[i]) / h < noise_floor) continue;
        // cubic through the four nearest nodes
        int lo = std::clamp(i - 1, 0, std::max(0, n - 4));
        const int m = std::min(4, n);
        auto p = [&](double x) {
            double acc = 0.0;
            for (int a1 = 0; a1 < m; ++a1) {
                double w = u[lo + a1];
                for (int b1 = 0; b1 < m; ++b1)
                    if (b1 != a1) w *= (x - s[lo + b1]) / (s[lo + a1] - s[lo + b1]);
                acc += w;
            }
            return acc;
        };
        double x0 = s[i], x1 = s[i + 1], f0 = p(x0), f1 = p(x1);
        double x = x0 - f0 * (x1 - x0) / (f1 - f0);  // linear interpolation
        // secant refinement, safeguarded by the bracket
        for (int it = 0; it < 60; ++it) {
            double fx = p(x);
            if (fx == 0.0) break;
            if ((fx > 0.0) == (f0 > 0.0)) {
                x0 = x;
                f0 = fx;
            } else {
                x1 = x;
                f1 = fx;
            }
            double nx = x0 - f0 * (x1 - x0) / (f1 - f0);
            if (std::abs(nx - x) < 1e-15 * std::max(1.0, std::abs(x))) {
                x = nx;
                break;
            }
            x = nx;
        }
        roots.push_back(x);
        spacing.push_back(h);
    }
    if (unresolved) {
        *unresolved = false;
        for (std::size_t k = 1; k < roots.size(); ++k)
            if (roots[k] - roots[k - 1] < 2.0 * std::max(spacing[k], spacing[k - 1])) *unresolved = true;
    }
    return roots;
}

// ---------------------------------------------------------------- radial

RadialGrid make_radial_grid(double eps, double collar_depth, double h_fine) {
    if (!(eps > 0.0) || !(h_fine > 0.0)) throw DomainError("pde", "bad radial grid parameters");
    std::vector<double> t{0.0};
    double h = h_fine * eps;
    const double fine_end = eps * collar_depth;
    while (t.back() < 1.0) {
        if (t.back() >= fine_end) h = std::min(h * 1.05, eps);
        t.push_back(t.back() + h);
    }
    // land exactly on r = 0 without a sliver cell
    if (t.size() > 2 && 1.0 - t[t.size() - 2] < 0.5 * h) t.erase(t.end() - 2);
    t.back() = 1.0;
    RadialGrid g;
    g.eps = eps;
    g.r.resize(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) g.r[t.size() - 1 - i] = 1.0 - t[i];
    g.r.front() = 0.0;
    return g;
}

namespace {

struct RadialFV {
    std::vector<double> area, wl, wr;  // cell area, face weights m/Δr on the left and right
};

RadialFV radial_fv(const RadialGrid& g) {
    const int n = g.size();
    RadialFV fv;
    fv.area.resize(n);
    fv.wl.assign(n, 0.0);
    fv.wr.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double ml = i == 0 ? 0.0 : 0.5 * (g.r[i - 1] + g.r[i]);
        double mr = i + 1 == n ? 1.0 : 0.5 * (g.r[i] + g.r[i + 1]);
        fv.area[i] = 0.5 * (mr * mr - ml * ml);
        if (i > 0) fv.wl[i] = ml / (g.r[i] - g.r[i - 1]);
        if (i + 1 < n) fv.wr[i] = mr / (g.r[i + 1] - g.r[i]);
    }
    return fv;
}

}  // namespace

std::vector<double> radial_residual(const RadialGrid& g, const std::vector<double>& u, double eps,
                                    const std::function<double(double)>& V) {
    const int n = g.size();
    RadialFV fv = radial_fv(g);
    std::vector<double> R(n);
    for (int i = 0; i < n; ++i) {
        double flux = 0.0;
        if (i + 1 < n) flux += fv.wr[i] * (u[i + 1] - u[i]);
        if (i > 0) flux -= fv.wl[i] * (u[i] - u[i - 1]);
        R[i] = eps * eps * flux / fv.area[i] + V(g.r[i]) * F(u[i]);
    }
    return R;
}

std::vector<double> radial_u1(const RadialGrid& g, int N, double eps, double beta, double H) {
    std::vector<double> u(g.size(), N % 2 == 0 ? 1.0 : -1.0);
    if (N == 0) return u;
    PredictedPositions p = predicted_positions(N, eps, beta, H);
    for (int i = 0; i < g.size(); ++i) {
        double s = (1.0 - g.r[i]) / eps;
        for (int j = 1; j <= N; ++j) {
            double f = p.depth[j - 1];
            u[i] += sigma(j) * (heteroclinic_eval(beta * (s - f)).H - heteroclinic_eval(beta * (s + f)).H);
        }
    }
    return u;
}

namespace {

struct RadialData {
    double beta, H;
};

RadialData radial_data(const std::function<double(double)>& V) {
    const double v1 = V(1.0), h = 1e-4;
    // V_t with t = 1 − r, second-order one-sided difference at r = 1
    const double vt = (3.0 * v1 - 4.0 * V(1.0 - h) + V(1.0 - 2.0 * h)) / (2.0 * h) * -1.0;
    const double beta = std::sqrt(v1);
    return {beta, 1.0 - vt / (2.0 * v1)};
}

double fn_depth(int N, double eps, const RadialData& d) {
    return N == 0 ? 0.0 : predicted_positions(N, eps, d.beta, d.H).depth.back();
}

// damped Newton from u; throws ConvergenceError
void radial_newton(const RadialGrid& g, std::vector<double>& u, double eps, const std::function<double(double)>& V,
                   const RadialOptions& opt, NewtonTrace& tr) {
    const int n = g.size();
    RadialFV fv = radial_fv(g);
    std::vector<double> Vn(n);
    for (int i = 0; i < n; ++i) Vn[i] = V(g.r[i]);
    auto resid = [&](const std::vector<double>& v) { return radial_residual(g, v, eps, V); };
    auto l2 = [](const std::vector<double>& r) {
        double a = 0.0;
        for (double x : r) a += x * x;
        return std::sqrt(a);
    };
    auto sup = [](const std::vector<double>& r) {
        double a = 0.0;
        for (double x : r) a = std::max(a, std::abs(x));
        return a;
    };
    std::vector<double> R = resid(u);
    double rs = sup(R), r2 = l2(R);
    tr.residual.push_back(rs);
    std::vector<double> a(n), b(n), c(n), step(n);
    for (int it = 0; it < opt.max_iter; ++it) {
        if (rs < opt.tol) {
            tr.converged = true;
            return;
        }
        for (int i = 0; i < n; ++i) {
            const double e2 = eps * eps / fv.area[i];
            a[i] = i > 0 ? e2 * fv.wl[i] : 0.0;
            c[i] = i + 1 < n ? e2 * fv.wr[i] : 0.0;
            b[i] = -e2 * (fv.wl[i] + fv.wr[i]) + Vn[i] * dF(u[i]);
            step[i] = R[i];
        }
        TridiagonalLU lu(a, b, c);
        lu.solve_in_place(step);
        double lam = 1.0;
        std::vector<double> trial(n), Rt;
        while (true) {
            for (int i = 0; i < n; ++i) trial[i] = u[i] - lam * step[i];
            Rt = resid(trial);
            double t2 = l2(Rt);
            if (std::isfinite(t2) && t2 <= (1.0 - 1e-4 * lam) * r2) {
                r2 = t2;
                break;
            }
            lam *= 0.5;
            if (lam < std::ldexp(1.0, -12)) {
                tr.damping.push_back(lam);
                throw ConvergenceError("pde", "radial Newton stalled at the damping floor", tr.residual);
            }
        }
        tr.damping.push_back(lam);
        u = trial;
        R = std::move(Rt);
        rs = sup(R);
        tr.residual.push_back(rs);
        tr.iterations = it + 1;
    }
    if (rs < opt.tol) {
        tr.converged = true;
        return;
    }
    throw ConvergenceError("pde", "radial Newton hit the iteration cap", tr.residual);
}

LayerTrace radial_layers(const RadialGrid& g, const std::vector<double>& u, double eps, bool& unresolved) {
    const int n = g.size();
    std::vector<double> s(n), v(n);
    for (int i = 0; i < n; ++i) {
        s[i] = (1.0 - g.r[n - 1 - i]) / eps;
        v[i] = u[n - 1 - i];
    }
    LayerTrace tr;
    tr.eps = eps;
    tr.theta = {0.0};
    tr.depth = {zero_crossings(s, v, &unresolved)};
    tr.unresolved = unresolved;
    return tr;
}

std::vector<double> interp_linear(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& xq) {
    std::vector<double> out(xq.size());
    for (std::size_t q = 0; q < xq.size(); ++q) {
        auto it = std::upper_bound(x.begin(), x.end(), xq[q]);
        if (it == x.begin()) {
            out[q] = y.front();
            continue;
        }
        if (it == x.end()) {
            out[q] = y.back();
            continue;
        }
        std::size_t k = it - x.begin();
        double w = (xq[q] - x[k - 1]) / (x[k] - x[k - 1]);
        out[q] = (1.0 - w) * y[k - 1] + w * y[k];
    }
    return out;
}

}  // namespace

PredictedPositions radial_prediction(int N, double eps, const std::function<double(double)>& V) {
    RadialData d = radial_data(V);
    return predicted_positions(N, eps, d.beta, d.H);
}

RadialGrid default_radial_grid(int N, double eps, const RadialOptions& opt) {
    const std::function<double(double)> V = opt.V ? opt.V : [](double) { return 1.0; };
    RadialData d = radial_data(V);
    return make_radial_grid(eps, fn_depth(N, eps, d) + 12.0 / d.beta, opt.h_fine);
}

RadialSolution solve_radial(int N, double eps, const RadialOptions& opt) {
    if (N < 0) throw DomainError("pde", "N must be non-negative");
    const std::function<double(double)> V = opt.V ? opt.V : [](double) { return 1.0; };
    RadialData d = radial_data(V);
    if (N > 0 && !(d.H > 0.0)) throw HypothesisError("pde", "generalized mean curvature is not positive", {d.H});
    const double fN = fn_depth(N, eps, d);
    if (N > 0 && !(fN * eps < 0.3)) {
        // largest ε with ε f_N(ε) < 0.3, by bisection
        double lo = 1e-8, hi = eps;
        for (int it = 0; it < 100; ++it) {
            double mid = std::sqrt(lo * hi);
            (mid * fn_depth(N, mid, d) < 0.3 ? lo : hi) = mid;
        }
        throw DomainError("pde", "predicted layers leave the collar; need ε < " + fmt17(lo), {eps * fN, lo});
    }
    RadialSolution sol;
    sol.N = N;
    sol.grid = opt.grid ? *opt.grid : default_radial_grid(N, eps, opt);
    if (N > 0) {
        PredictedPositions p = predicted_positions(N, eps, d.beta, d.H);
        sol.predicted = p.depth;
        sol.predicted_f1 = p.f1;
    }

    auto attempt = [&](std::vector<double> u, NewtonTrace& tr) {
        radial_newton(sol.grid, u, eps, V, opt, tr);
        bool unresolved = false;
        LayerTrace lt = radial_layers(sol.grid, u, eps, unresolved);
        if (lt.count() != N)
            throw BranchError("pde", "radial solve landed on " + std::to_string(lt.count()) + " layers instead of " +
                                         std::to_string(N),
                              {double(lt.count())});
        return std::make_pair(u, lt);
    };

    std::vector<double> u0 = opt.guess ? *opt.guess : radial_u1(sol.grid, N, eps, d.beta, d.H);
    if (static_cast<int>(u0.size()) != sol.grid.size()) throw DomainError("pde", "guess does not match the grid");
    try {
        auto [u, lt] = attempt(u0, sol.trace);
        sol.u = std::move(u);
        sol.layers = std::move(lt);
    } catch (const Error& first) {
        if (opt.guess || opt.max_continuation <= 0 || N == 0) throw;
        // warm start from 2ε with the layer block rescaled onto the new depths
        RadialOptions coarse = opt;
        coarse.max_continuation = opt.max_continuation - 1;
        coarse.grid = nullptr;
        RadialSolution prev = solve_radial(N, 2.0 * eps, coarse);
        const double scale = (2.0 * eps * fn_depth(N, 2.0 * eps, d)) / (eps * fN);
        std::vector<double> tp(prev.grid.size()), up(prev.grid.size()), tq(sol.grid.size());
        for (int i = 0; i < prev.grid.size(); ++i) {
            tp[i] = 1.0 - prev.grid.r[prev.grid.size() - 1 - i];
            up[i] = prev.u[prev.grid.size() - 1 - i];
        }
        for (int i = 0; i < sol.grid.size(); ++i) tq[i] = (1.0 - sol.grid.r[i]) * scale;
        std::vector<double> guess = interp_linear(tp, up, tq);
        NewtonTrace tr;
        tr.continuation = prev.trace.continuation;
        tr.continuation.push_back(2.0 * eps);
        auto [u, lt] = attempt(guess, tr);
        sol.u = std::move(u);
        sol.layers = std::move(lt);
        sol.trace = tr;
    }
    std::vector<double> R = radial_residual(sol.grid, sol.u, eps, V);
    for (double x : R) sol.residual = std::max(sol.residual, std::abs(x));
    return sol;
}

// ---------------------------------------------------------------- strip

StripGrid make_strip_grid(double s_max, double hs_max, double period, int nz) {
    if (!(s_max > 0.0) || !(hs_max > 0.0) || nz < 8) throw DomainError("pde", "bad strip grid parameters");
    StripGrid g;
    g.ns = static_cast<int>(std::ceil(s_max / hs_max)) + 1;
    g.hs = s_max / (g.ns - 1);
    g.s_max = s_max;
    g.nz = nz;
    g.period = period;
    g.hz = period / nz;
    return g;
}

StripCoefficients strip_coefficients(const StripSetup& setup, const StripGrid& g) {
    const BoundaryCurve& curve = *setup.curve;
    const double eps = setup.eps;
    StripCoefficients c;
    c.grid = g;
    c.cs.resize(g.nz, g.ns);
    c.czz.resize(g.nz, g.ns);
    c.cz.resize(g.nz, g.ns);
    c.V.resize(g.nz, g.ns);
    c.k.resize(g.nz);
    c.dk.resize(g.nz);
    c.theta.resize(g.nz);
    for (int m = 0; m < g.nz; ++m) {
        const double th = eps * g.z(m);
        const double k = curve.frame(th).k, dk = curve.curvature_derivative(th);
        c.theta[m] = th;
        c.k[m] = k;
        c.dk[m] = dk;
        Traces tr;
        if (setup.taylor) tr = potential_trace(*setup.V, curve, th);
        for (int i = 0; i < g.ns; ++i) {
            const double s = g.s(i);
            if (setup.taylor) {
                c.cs(m, i) = -(eps * k + eps * eps * s * k * k);
                c.czz(m, i) = 1.0;
                c.cz(m, i) = 0.0;
                c.V(m, i) = tr.beta * tr.beta + tr.beta1 * eps * s + 0.5 * tr.beta2 * eps * eps * s * s;
            } else {
                const double gm = 1.0 - eps * k * s;
                if (!(gm > 0.0)) throw DomainError("pde", "strip leaves the Fermi chart (1 − εks ≤ 0)");
                c.cs(m, i) = -eps * k / gm;
                c.czz(m, i) = 1.0 / (gm * gm);
                c.cz(m, i) = eps * eps * s * dk / (gm * gm * gm);
                c.V(m, i) = setup.V->collar(curve, eps * s, th);
            }
        }
    }
    return c;
}

Eigen::MatrixXd residual_strip(const StripCoefficients& c, const Eigen::MatrixXd& u) {
    const StripGrid& g = c.grid;
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(g.nz, g.ns);
    const double hs2 = g.hs * g.hs, hz2 = g.hz * g.hz;
    for (int m = 0; m < g.nz; ++m) {
        const int mp = (m + 1) % g.nz, mm = (m + g.nz - 1) % g.nz;
        for (int i = 0; i + 1 < g.ns; ++i) {
            const double uc = u(m, i);
            double uss, us;
            if (i == 0) {
                uss = 2.0 * (u(m, 1) - uc) / hs2;
                us = 0.0;
            } else {
                uss = (u(m, i + 1) - 2.0 * uc + u(m, i - 1)) / hs2;
                us = (u(m, i + 1) - u(m, i - 1)) / (2.0 * g.hs);
            }
            const double uzz = (u(mp, i) - 2.0 * uc + u(mm, i)) / hz2;
            const double uz = (u(mp, i) - u(mm, i)) / (2.0 * g.hz);
            R(m, i) = uss + c.cs(m, i) * us + c.czz(m, i) * uzz + c.cz(m, i) * uz + c.V(m, i) * F(uc);
        }
    }
    return R;
}

ResidualNorms residual_norms(const StripGrid& g, const Eigen::MatrixXd& r, const LayerVector* layers) {
    ResidualNorms n;
    n.sup = r.cwiseAbs().maxCoeff();
    n.l2 = std::sqrt(r.squaredNorm() * g.hs * g.hz);
    if (layers) {
        const int N = layers->N;
        n.window_sup.assign(N, 0.0);
        for (int m = 0; m < g.nz; ++m) {
            for (int j = 1; j <= N; ++j) {
                double lo = 0.5 * (layers->f(j - 1, m) + layers->f(j, m));
                double hi = j < N ? 0.5 * (layers->f(j, m) + layers->f(j + 1, m)) : g.s_max;
                lo = std::max(lo, 0.0);
                for (int i = 0; i < g.ns; ++i) {
                    double s = g.s(i);
                    if (s >= lo && s <= hi) n.window_sup[j - 1] = std::max(n.window_sup[j - 1], std::abs(r(m, i)));
                }
            }
        }
    }
    return n;
}

namespace {

using Jet = U1Jet;

Jet u1_jet_fn(int N, double s, double beta, const std::function<double(int)>& depth) {
    Jet out;
    out.u = N % 2 == 0 ? 1.0 : -1.0;
    for (int j = 1; j <= N; ++j) {
        const double f = depth(j), sg = sigma(j);
        ProfileJet a = heteroclinic_jet(beta * (s - f)), b = heteroclinic_jet(beta * (s + f));
        out.u += sg * (a.H - b.H);
        out.us += sg * beta * (a.d1 - b.d1);
        out.uss += sg * beta * beta * (a.d2 - b.d2);
    }
    return out;
}

Jet phi11_jet(const LayerVector& f, int i, double s, double beta, double beta1) {
    Jet out;
    const double pre = f.eps * beta1 / (beta * beta);
    if (pre == 0.0) return out;
    for (int j = 1; j <= f.N; ++j) {
        const double fj = f.f(j, i), c = pre * sigma(j) * f.fdot[j - 1][i];
        PsiValue a = psi_eval(beta * (s - fj)), b = psi_eval(-beta * (s + fj));
        out.u += c * (a.psi + b.psi);
        out.us += c * beta * (a.dpsi - b.dpsi);
        out.uss += c * beta * beta * (a.d2psi + b.d2psi);
    }
    return out;
}

}  // namespace

U1Jet u1_jet(double s, double beta, const std::vector<double>& depths) {
    return u1_jet_fn(static_cast<int>(depths.size()), s, beta, [&](int j) { return depths[j - 1]; });
}

Eigen::MatrixXd strip_u1(const StripGrid& g, const LayerVector& f, const std::vector<double>& beta, bool with_phi11,
                         const std::vector<double>& beta1) {
    if (f.size() != g.nz) throw DomainError("pde", "placement grid does not match the strip z grid");
    Eigen::MatrixXd u(g.nz, g.ns);
    for (int m = 0; m < g.nz; ++m) {
        const double fN = f.f(f.N, m);
        if (f.N > 0 && fN + 4.0 / beta[m] > g.s_max)
            throw DomainError("pde", "layers fall outside the strip (truncation)", {fN, g.s_max});
        for (int i = 0; i < g.ns; ++i) {
            const double s = g.s(i);
            u(m, i) = u1_jet_fn(f.N, s, beta[m], [&](int j) { return f.f(j, m); }).u;
            if (with_phi11) u(m, i) += phi11_jet(f, m, s, beta[m], beta1.at(m)).u;
        }
    }
    return u;
}

Eigen::MatrixXd ansatz_residual(const StripSetup& setup, const StripGrid& g, const LayerVector& f,
                                const CollarData& collar, bool with_phi11) {
    StripCoefficients c = strip_coefficients(setup, g);
    if (f.size() != g.nz || collar.size() != g.nz) throw DomainError("pde", "placement grid does not match the strip z grid");
    Eigen::MatrixXd U(g.nz, g.ns), Us(g.nz, g.ns), Uss(g.nz, g.ns);
    for (int m = 0; m < g.nz; ++m) {
        for (int i = 0; i < g.ns; ++i) {
            const double s = g.s(i);
            Jet j = u1_jet_fn(f.N, s, collar.beta[m], [&](int l) { return f.f(l, m); });
            if (with_phi11) {
                Jet p = phi11_jet(f, m, s, collar.beta[m], collar.beta1[m]);
                j.u += p.u;
                j.us += p.us;
                j.uss += p.uss;
            }
            U(m, i) = j.u;
            Us(m, i) = j.us;
            Uss(m, i) = j.uss;
        }
    }
    Eigen::MatrixXd S(g.nz, g.ns);
    const int M = g.nz;
    for (int m = 0; m < M; ++m) {
        const int p1 = (m + 1) % M, p2 = (m + 2) % M, q1 = (m + M - 1) % M, q2 = (m + M - 2) % M;
        for (int i = 0; i < g.ns; ++i) {
            const double uz = (-U(p2, i) + 8.0 * U(p1, i) - 8.0 * U(q1, i) + U(q2, i)) / (12.0 * g.hz);
            const double uzz = (-U(p2, i) + 16.0 * U(p1, i) - 30.0 * U(m, i) + 16.0 * U(q1, i) - U(q2, i)) / (12.0 * g.hz * g.hz);
            S(m, i) = Uss(m, i) + c.cs(m, i) * Us(m, i) + c.czz(m, i) * uzz + c.cz(m, i) * uz + c.V(m, i) * F(U(m, i));
        }
    }
    return S;
}

LayerTrace extract_layers(const StripGrid& g, const Eigen::MatrixXd& u, double eps) {
    LayerTrace tr;
    tr.eps = eps;
    std::vector<double> s(g.ns), v(g.ns);
    for (int i = 0; i < g.ns; ++i) s[i] = g.s(i);
    for (int m = 0; m < g.nz; ++m) {
        for (int i = 0; i < g.ns; ++i) v[i] = u(m, i);
        bool unres = false;
        tr.depth.push_back(zero_crossings(s, v, &unres));
        tr.theta.push_back(eps * g.z(m));
        tr.unresolved = tr.unresolved || unres;
    }
    return tr;
}

Eigen::SparseMatrix<double> strip_jacobian(const StripCoefficients& c, const Eigen::MatrixXd& u) {
    const StripGrid& g = c.grid;
    const int ni = g.ns - 1, n = g.nz * ni;
    const double hs2 = g.hs * g.hs, hz2 = g.hz * g.hz;
    auto idx = [ni](int m, int i) { return m * ni + i; };
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * 5);
    for (int m = 0; m < g.nz; ++m) {
        const int mp = (m + 1) % g.nz, mm = (m + g.nz - 1) % g.nz;
        for (int i = 0; i < ni; ++i) {
            const int row = idx(m, i);
            trip.emplace_back(row, idx(mp, i), c.czz(m, i) / hz2 + c.cz(m, i) / (2.0 * g.hz));
            trip.emplace_back(row, idx(mm, i), c.czz(m, i) / hz2 - c.cz(m, i) / (2.0 * g.hz));
            if (i == 0) {
                trip.emplace_back(row, idx(m, 1), 2.0 / hs2);
            } else {
                const double up = 1.0 / hs2 + c.cs(m, i) / (2.0 * g.hs), dn = 1.0 / hs2 - c.cs(m, i) / (2.0 * g.hs);
                if (i + 1 < ni) trip.emplace_back(row, idx(m, i + 1), up);
                trip.emplace_back(row, idx(m, i - 1), dn);
            }
            trip.emplace_back(row, row, -2.0 / hs2 - 2.0 * c.czz(m, i) / hz2 + c.V(m, i) * dF(u(m, i)));
        }
    }
    Eigen::SparseMatrix<double> J(n, n);
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    return J;
}

namespace {

void strip_newton(const StripCoefficients& c, Eigen::MatrixXd& u, const StripOptions& opt, NewtonTrace& tr) {
    const StripGrid& g = c.grid;
    const int ni = g.ns - 1, n = g.nz * ni;
    const double vmax = c.V.cwiseAbs().maxCoeff();
    auto idx = [ni](int m, int i) { return m * ni + i; };
    auto norms = [&](const Eigen::MatrixXd& R, double& sup, double& l2) {
        sup = R.cwiseAbs().maxCoeff() / vmax;
        l2 = R.norm();
    };
    Eigen::MatrixXd R = residual_strip(c, u);
    double rs, r2;
    norms(R, rs, r2);
    tr.residual.push_back(rs);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool analyzed = false;
    for (int it = 0; it < opt.max_iter; ++it) {
        if (rs < opt.tol) {
            tr.converged = true;
            return;
        }
        Eigen::SparseMatrix<double> J = strip_jacobian(c, u);
        if (!analyzed) {
            lu.analyzePattern(J);
            analyzed = true;
        }
        lu.factorize(J);
        if (lu.info() != Eigen::Success) throw ConvergenceError("pde", "singular strip Jacobian", tr.residual);
        Eigen::VectorXd rv(n);
        for (int m = 0; m < g.nz; ++m)
            for (int i = 0; i < ni; ++i) rv[idx(m, i)] = R(m, i);
        Eigen::VectorXd step = lu.solve(rv);
        double lam = 1.0;
        Eigen::MatrixXd trial = u, Rt;
        while (true) {
            for (int m = 0; m < g.nz; ++m)
                for (int i = 0; i < ni; ++i) trial(m, i) = u(m, i) - lam * step[idx(m, i)];
            Rt = residual_strip(c, trial);
            double ts, t2;
            norms(Rt, ts, t2);
            if (std::isfinite(t2) && t2 <= (1.0 - 1e-4 * lam) * r2) {
                rs = ts;
                r2 = t2;
                break;
            }
            lam *= 0.5;
            if (lam < std::ldexp(1.0, -12)) {
                tr.damping.push_back(lam);
                throw ConvergenceError("pde", "strip Newton stalled at the damping floor", tr.residual);
            }
        }
        tr.damping.push_back(lam);
        u = trial;
        R = std::move(Rt);
        tr.residual.push_back(rs);
        tr.iterations = it + 1;
    }
    if (rs < opt.tol) {
        tr.converged = true;
        return;
    }
    throw ConvergenceError("pde", "strip Newton hit the iteration cap", tr.residual);
}

}  // namespace

StripSolution solve_strip(int N, const StripSetup& setup_in, const StripOptions& opt) {
    if (N < 1) throw DomainError("pde", "strip solve needs N ≥ 1");
    StripSetup setup = setup_in;
    if (!setup.curve || !setup.V) throw DomainError("pde", "strip setup needs a curve and a potential");
    if (!(setup.delta0 > 0.0)) setup.delta0 = default_delta0(*setup.curve);
    const double eps = setup.eps;
    const double L = setup.curve->length();

    StripSolution sol;
    sol.N = N;
    sol.collar = sample_collar(*setup.curve, *setup.V, opt.nz);
    for (double h : sol.collar.H)
        if (!(h > 0.0)) throw HypothesisError("pde", "generalized mean curvature is not positive on the boundary", {h});
    BarfOptions bo;
    bo.gamma_weighted = opt.gamma_weighted;
    sol.predicted = solve_barf(N, sol.collar, eps, bo);
    double fN = 0.0;
    for (int m = 0; m < opt.nz; ++m) fN = std::max(fN, sol.predicted.f(N, m));
    sol.grid = make_strip_grid(setup.delta0 / eps, opt.hs_max, L / eps, opt.nz);
    if (fN + 12.0 > sol.grid.s_max) {
        throw DomainError("pde", "predicted layers do not fit inside δ₀/ε; reduce ε below " +
                                     fmt17(eps * sol.grid.s_max / (fN + 12.0)),
                          {fN, sol.grid.s_max});
    }
    {
        InteractionCoeffs co = interaction_coeffs(sol.predicted, sol.collar);
        TodaSystem sys = assemble_system(co, sol.predicted, sol.collar, eps);
        sol.reduced_gap = reduced_gap(sys);
        sol.resonant = sol.reduced_gap < opt.resonance_threshold * eps;
    }
    StripCoefficients c = strip_coefficients(setup, sol.grid);
    Eigen::MatrixXd u;
    if (opt.guess) {
        if (opt.guess->rows() != sol.grid.nz || opt.guess->cols() != sol.grid.ns)
            throw DomainError("pde", "guess does not match the strip grid");
        u = *opt.guess;
    } else {
        u = strip_u1(sol.grid, sol.predicted, sol.collar.beta, opt.use_phi11, sol.collar.beta1);
    }
    u.col(sol.grid.ns - 1).setConstant(N % 2 == 0 ? 1.0 : -1.0);
    strip_newton(c, u, opt, sol.trace);
    sol.u = std::move(u);
    sol.residual = sol.trace.residual.back();
    sol.max_abs_u = sol.u.cwiseAbs().maxCoeff();
    sol.layers = extract_layers(sol.grid, sol.u, eps);
    if (sol.layers.count() != N) {
        int worst = 0;
        for (const auto& row : sol.layers.depth) worst = std::max<int>(worst, row.size());
        throw BranchError("pde", "strip solve landed on a different layer count (max " + std::to_string(worst) +
                                     " crossings per slice, expected " + std::to_string(N) + ")",
                          {double(worst)});
    }
    return sol;
}

// ---------------------------------------------------------------- comparison

TheoryComparison compare_to_theory(const LayerTrace& trace, const std::vector<std::vector<double>>& predicted) {
    TheoryComparison out;
    if (predicted.empty()) throw DomainError("pde", "no predicted depths");
    for (std::size_t i = 0; i < trace.depth.size(); ++i) {
        const auto& meas = trace.depth[i];
        const auto& pred = predicted.size() == 1 ? predicted[0] : predicted.at(i);
        if (meas.size() != pred.size())
            throw BranchError("pde", "measured and predicted layer counts differ", {double(meas.size()), double(pred.size())});
        for (std::size_t j = 0; j < meas.size(); ++j) {
            TheoryDelta d;
            d.j = static_cast<int>(j) + 1;
            d.theta = i < trace.theta.size() ? trace.theta[i] : 0.0;
            d.measured = meas[j];
            d.predicted = pred[j];
            d.delta = meas[j] - pred[j];
            d.relative = d.delta / pred[j];
            d.spacing_measured = j == 0 ? 2.0 * meas[0] : meas[j] - meas[j - 1];
            d.spacing_predicted = j == 0 ? 2.0 * pred[0] : pred[j] - pred[j - 1];
            d.spacing_delta = d.spacing_measured - d.spacing_predicted;
            out.max_abs_delta = std::max(out.max_abs_delta, std::abs(d.delta));
            out.max_rel_delta = std::max(out.max_rel_delta, std::abs(d.relative));
            out.rows.push_back(d);
        }
    }
    return out;
}

LineFit error_decay(const std::vector<double>& eps, const std::vector<double>& err) {
    std::vector<double> x, y;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        x.push_back(std::log(eps[k]));
        y.push_back(std::log(std::abs(err[k])));
    }
    return fit_line(x, y);
}

void write_layers_csv(std::ostream& os, const TheoryComparison& c) {
    os << "theta,j,depth_measured,depth_predicted,delta\n";
    for (const auto& r : c.rows)
        os << fmt17(r.theta) << ',' << r.j << ',' << fmt17(r.measured) << ',' << fmt17(r.predicted) << ',' << fmt17(r.delta) << '\n';
}

void write_strip_solution_csv(std::ostream& os, const StripGrid& g, const Eigen::MatrixXd& u) {
    os << "s,z,u\n";
    for (int m = 0; m < g.nz; ++m)
        for (int i = 0; i < g.ns; ++i) os << fmt17(g.s(i)) << ',' << fmt17(g.z(m)) << ',' << fmt17(u(m, i)) << '\n';
}

void write_radial_solution_csv(std::ostream& os, const RadialSolution& s) {
    os << "r,u\n";
    for (int i = 0; i < s.grid.size(); ++i) os << fmt17(s.grid.r[i]) << ',' << fmt17(s.u[i]) << '\n';
}

}  // namespace acbl
