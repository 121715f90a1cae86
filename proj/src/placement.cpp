#include "acbl/placement.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "acbl/errors.hpp"

namespace acbl {

CollarData sample_collar(const BoundaryCurve& curve, const PotentialField& v, int M) {
    if (M < 4) throw DomainError("placement", "θ grid needs at least 4 nodes");
    CollarData c;
    c.length = curve.length();
    c.theta.resize(M);
    c.k.resize(M);
    c.dk.resize(M);
    c.beta.resize(M);
    c.beta1.resize(M);
    c.beta2.resize(M);
    c.H.resize(M);
    for (int i = 0; i < M; ++i) {
        double th = c.length * i / M;
        Traces tr = potential_trace(v, curve, th);
        c.theta[i] = th;
        c.k[i] = curve.frame(th).k;
        c.dk[i] = curve.curvature_derivative(th);
        c.beta[i] = tr.beta;
        c.beta1[i] = tr.beta1;
        c.beta2[i] = tr.beta2;
        c.H[i] = c.k[i] - tr.beta1 / (2.0 * tr.beta * tr.beta);
    }
    return c;
}

CollarData uniform_collar(double length, int M, double beta, double beta1, double k, double beta2) {
    CollarData c;
    c.length = length;
    for (int i = 0; i < M; ++i) {
        c.theta.push_back(length * i / M);
        c.k.push_back(k);
        c.dk.push_back(0.0);
        c.beta.push_back(beta);
        c.beta1.push_back(beta1);
        c.beta2.push_back(beta2);
        c.H.push_back(k - beta1 / (2.0 * beta * beta));
    }
    return c;
}

double dot_f(int N, double eps, double beta, int j) {
    if (N < 1 || j < 1 || j > N) throw DomainError("placement", "layer index out of range");
    if (!(eps > 0.0) || eps * N >= 1.0)
        throw DomainError("placement", "ε must satisfy 0 < ε < 1/N (negative leading term)");
    if (!(beta > 0.0)) throw DomainError("placement", "β must be positive");
    double f1 = std::log(1.0 / (N * eps)) / (2.0 * kSqrt2 * beta);
    if (j == 1) return f1;
    double lr = log_factorial(N - j) - log_factorial(N - 1) - (j - 1) * std::log(eps);
    return f1 + lr / (kSqrt2 * beta);
}

std::vector<double> formal_spacings(int N, double eps, double beta, double H) {
    if (!(H > 0.0)) throw HypothesisError("placement", "generalized mean curvature must be positive", {H});
    std::vector<double> out(N);
    for (int j = 1; j <= N; ++j) out[j - 1] = (N + 1 - j) * eps * (kSqrt2 / (12.0 * beta)) * H;
    return out;
}

namespace {

std::vector<double> ladder_from_fbar(const std::vector<double>& fbar, double beta) {
    const int N = static_cast<int>(fbar.size());
    std::vector<double> u(N);
    for (int j = 0; j < N; ++j) {
        double prev = j == 0 ? -fbar[0] : fbar[j - 1];
        u[j] = std::exp(-kSqrt2 * beta * (fbar[j] - prev));
    }
    return u;
}

std::vector<double> ladder_residual(const std::vector<double>& u, double beta, double H,
                                    const std::vector<double>& g1, const std::vector<double>& g2) {
    const int N = static_cast<int>(u.size());
    const double c = 6.0 * kSqrt2 * beta * beta;
    std::vector<double> r(N);
    for (int j = 1; j <= N; ++j) {
        double next = j < N ? (N - j) * g2[j - 1] * u[j] : 0.0;
        r[j - 1] = c * ((N - j + 1) * g1[j - 1] * u[j - 1] - next) - (2.0 * kSqrt2 / 3.0) * H;
    }
    return r;
}

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

std::vector<double> barf_residual(const std::vector<double>& fbar, double beta, double H,
                                  const std::vector<double>& g1, const std::vector<double>& g2) {
    return ladder_residual(ladder_from_fbar(fbar, beta), beta, H, g1, g2);
}

BarfNode solve_barf_node(int N, double beta, double beta1, double k, std::vector<double> g1,
                         std::vector<double> g2) {
    if (N < 1) throw DomainError("placement", "N must be >= 1");
    if (!(beta > 0.0)) throw DomainError("placement", "β must be positive");
    const double H = k - beta1 / (2.0 * beta * beta);
    if (!(H > 0.0)) throw HypothesisError("placement", "generalized mean curvature must be positive", {H});
    if (g1.empty()) g1.assign(N, kGamma1);
    if (g2.empty()) g2.assign(N, kGamma1);

    BarfNode out;
    // closed-form start: u_j = 𝓗/(9β²γ₁)
    std::vector<double> u(N, H / (9.0 * beta * beta * kGamma1));
    const double c = 6.0 * kSqrt2 * beta * beta;
    for (int it = 0; it < 50; ++it) {
        std::vector<double> r = ladder_residual(u, beta, H, g1, g2);
        double rn = inf_norm(r);
        out.trace.push_back(rn);
        if (rn < 1e-14 * std::max(1.0, H)) break;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, N);
        for (int j = 1; j <= N; ++j) {
            J(j - 1, j - 1) = c * (N - j + 1) * g1[j - 1];
            if (j < N) J(j - 1, j) = -c * (N - j) * g2[j - 1];
        }
        Eigen::VectorXd rv = Eigen::Map<Eigen::VectorXd>(r.data(), N);
        Eigen::VectorXd du = J.partialPivLu().solve(rv);
        for (int j = 0; j < N; ++j) u[j] -= du[j];
        out.iterations = it + 1;
    }
    for (double x : u)
        if (!(x > 0.0)) throw ConvergenceError("placement", "offset Newton left the positive cone", out.trace);

    out.fbar.resize(N);
    out.fbar[0] = -std::log(u[0]) / (2.0 * kSqrt2 * beta);
    for (int j = 1; j < N; ++j) out.fbar[j] = out.fbar[j - 1] - std::log(u[j]) / (kSqrt2 * beta);
    out.ladder = ladder_from_fbar(out.fbar, beta);
    out.residual = inf_norm(ladder_residual(out.ladder, beta, H, g1, g2));
    out.gamma1 = g1;
    out.gamma2 = g2;
    if (!(out.residual < 1e-12)) throw ConvergenceError("placement", "offset Newton stagnated", out.trace);
    return out;
}

double LayerVector::f(int j, int i) const {
    if (j == 0) return -f(1, i);
    return fdot[j - 1][i] + fbar[j - 1][i] + ftilde[j - 1][i];
}

void LayerVector::check_ordering() const {
    for (int i = 0; i < size(); ++i) {
        double prev = 0.0;
        for (int j = 1; j <= N; ++j) {
            double fj = f(j, i);
            if (!(fj > prev))
                throw DomainError("placement", "layer ordering 0 < f_1 < ... < f_N violated at θ = " +
                                                   std::to_string(theta[i]));
            prev = fj;
        }
    }
}

LayerVector solve_barf(int N, const CollarData& collar, double eps, const BarfOptions& opt) {
    const int M = collar.size();
    LayerVector lv;
    lv.N = N;
    lv.eps = eps;
    lv.theta = collar.theta;
    lv.fdot.assign(N, std::vector<double>(M));
    lv.fbar.assign(N, std::vector<double>(M));
    lv.ftilde.assign(N, std::vector<double>(M, 0.0));
    lv.gamma0.assign(N, std::vector<double>(M, kGamma0));
    lv.gamma1.assign(N, std::vector<double>(M, kGamma1));
    lv.gamma2.assign(N, std::vector<double>(M, kGamma1));
    lv.barf_residual.assign(M, 0.0);
    for (int i = 0; i < M; ++i) {
        const double b = collar.beta[i];
        for (int j = 1; j <= N; ++j) lv.fdot[j - 1][i] = dot_f(N, eps, b, j);
        BarfNode node = solve_barf_node(N, b, collar.beta1[i], collar.k[i]);
        if (opt.gamma_weighted) {
            std::vector<double> g0(N), g1(N), g2(N);
            for (int outer = 0; outer < opt.max_outer; ++outer) {
                std::vector<double> depth(N);
                for (int j = 0; j < N; ++j) depth[j] = lv.fdot[j][i] + node.fbar[j];
                CutoffFamily chi(depth, opt.delta_tilde);
                for (int j = 1; j <= N; ++j) {
                    WeightedGammas w = weighted_gammas(chi, j, b);
                    g0[j - 1] = w.gamma0;
                    g1[j - 1] = w.gamma1;
                    g2[j - 1] = w.gamma2;
                }
                BarfNode next = solve_barf_node(N, b, collar.beta1[i], collar.k[i], g1, g2);
                double change = 0.0;
                for (int j = 0; j < N; ++j) change = std::max(change, std::abs(next.fbar[j] - node.fbar[j]));
                node = next;
                if (change < 1e-13) break;
                if (outer + 1 == opt.max_outer)
                    throw ConvergenceError("placement", "weighted-γ outer iteration did not settle", {change});
            }
            for (int j = 0; j < N; ++j) lv.gamma0[j][i] = g0[j];
        }
        for (int j = 0; j < N; ++j) {
            lv.fbar[j][i] = node.fbar[j];
            lv.gamma1[j][i] = node.gamma1[j];
            lv.gamma2[j][i] = node.gamma2[j];
        }
        lv.barf_residual[i] = node.residual;
    }
    return lv;
}

InteractionCoeffs interaction_coeffs(const LayerVector& f, const CollarData& collar) {
    const int N = f.N, M = f.size();
    InteractionCoeffs ic;
    ic.N = N;
    ic.d.assign(N + 1, std::vector<double>(M, 0.0));
    ic.a.assign(N, std::vector<double>(M, 0.0));
    for (int i = 0; i < M; ++i) {
        const double b = collar.beta[i];
        for (int j = 1; j <= N; ++j) {
            double prev = j == 1 ? -f.fbar[0][i] : f.fbar[j - 2][i];
            ic.d[j - 1][i] = (N - j + 1) * std::exp(-kSqrt2 * b * (f.fbar[j - 1][i] - prev));
        }
        for (int n = 0; n < N; ++n) ic.a[n][i] = 12.0 * b * b * kGamma1 * ic.d[n][i];
    }
    ic.k = ic.d;
    return ic;
}

PredictedPositions predicted_positions(int N, double eps, double beta, double H) {
    if (!(H > 0.0)) throw HypothesisError("placement", "generalized mean curvature must be positive", {H});
    if (!(eps > 0.0) || !(beta > 0.0)) throw DomainError("placement", "ε and β must be positive");
    const double common = -std::log(H) + std::log(9.0 * kGamma1 * beta * beta);
    PredictedPositions p;
    p.f1 = (std::log(1.0 / (N * eps)) + common) / (2.0 * kSqrt2 * beta);
    p.depth.push_back(p.f1);
    for (int j = 2; j <= N; ++j) {
        double sp = (std::log(1.0 / ((N + 1 - j) * eps)) + common) / (kSqrt2 * beta);
        p.spacing.push_back(sp);
        p.depth.push_back(p.depth.back() + sp);
    }
    return p;
}

double ordering_threshold(int N, const CollarData& collar) {
    double eps_star = 1.0 / N;
    for (int i = 0; i < collar.size(); ++i) {
        if (!(collar.H[i] > 0.0)) return 0.0;
        double b2 = collar.beta[i] * collar.beta[i];
        eps_star = std::min(eps_star, 9.0 * kGamma1 * b2 / (N * collar.H[i]));
    }
    return eps_star;
}

void write_placement_csv(std::ostream& os, const LayerVector& f, const CollarData& collar) {
    const int N = f.N;
    os << "theta,H";
    for (const char* tag : {"fdot", "fbar", "f", "spacing"})
        for (int j = 1; j <= N; ++j) os << ',' << tag << '_' << j;
    os << '\n';
    char buf[64];
    auto put = [&](double x) {
        std::snprintf(buf, sizeof buf, ",%.17g", x);
        os << buf;
    };
    for (int i = 0; i < f.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", f.theta[i]);
        os << buf;
        put(collar.H[i]);
        for (int j = 1; j <= N; ++j) put(f.fdot[j - 1][i]);
        for (int j = 1; j <= N; ++j) put(f.fbar[j - 1][i]);
        for (int j = 1; j <= N; ++j) put(f.f(j, i));
        for (int j = 1; j <= N; ++j) put(f.f(j, i) - f.f(j - 1, i));
        os << '\n';
    }
}

}  // namespace acbl
