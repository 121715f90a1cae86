#include "acbl/strip_linear.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <thread>

#include "acbl/errors.hpp"

namespace acbl {

StripField make_strip(double x_lo, double x_hi, int nx, double period, int nz) {
    if (nx < 3 || nz < 1 || !(x_hi > x_lo) || !(period > 0.0)) throw DomainError("strip_linear", "bad strip grid");
    StripField f;
    f.period = period;
    f.x.resize(nx);
    f.z.resize(nz);
    for (int i = 0; i < nx; ++i) f.x[i] = x_lo + (x_hi - x_lo) * i / (nx - 1);
    for (int m = 0; m < nz; ++m) f.z[m] = period * m / nz;
    f.values = Eigen::MatrixXd::Zero(nz, nx);
    return f;
}

StripField make_strip(double X, int nx, double period, int nz) { return make_strip(-X, X, nx, period, nz); }

BetaProfile BetaProfile::constant(double b, double length) {
    if (!(b > 0.0)) throw DomainError("strip_linear", "β must be positive");
    BetaProfile p;
    p.beta = [b](double) { return b; };
    p.dbeta = [](double) { return 0.0; };
    p.length = length;
    p.constant_ = true;
    return p;
}

BetaProfile BetaProfile::from_samples(const std::vector<double>& values, double length) {
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (!(*lo > 0.0)) throw DomainError("strip_linear", "β must be positive");
    if (*hi - *lo <= 1e-14 * *hi) return constant(values.front(), length);
    auto spline = std::make_shared<PeriodicSpline>(values, length);
    BetaProfile p;
    p.beta = [spline](double t) { return spline->eval(t, 0); };
    p.dbeta = [spline](double t) { return spline->eval(t, 1); };
    p.length = length;
    return p;
}

namespace {

// Orthonormal real Fourier basis: columns 1, cos_k, sin_k, …, Nyquist.
struct RealFourier {
    Eigen::MatrixXd Q;
    std::vector<int> freq;
    std::vector<int> partner;  // column of the matching cos/sin, −1 for 0 and Nyquist
    std::vector<int> kind;     // 0 const, 1 cos, 2 sin, 3 Nyquist

    explicit RealFourier(int M) : Q(M, M), freq(M), partner(M, -1), kind(M) {
        Q.col(0).setConstant(1.0 / std::sqrt(double(M)));
        freq[0] = 0;
        kind[0] = 0;
        int col = 1;
        for (int k = 1; 2 * k < M; ++k) {
            for (int m = 0; m < M; ++m) {
                double a = 2.0 * kPi * k * m / M;
                Q(m, col) = std::sqrt(2.0 / M) * std::cos(a);
                Q(m, col + 1) = std::sqrt(2.0 / M) * std::sin(a);
            }
            freq[col] = freq[col + 1] = k;
            kind[col] = 1;
            kind[col + 1] = 2;
            partner[col] = col + 1;
            partner[col + 1] = col;
            col += 2;
        }
        if (M % 2 == 0) {
            for (int m = 0; m < M; ++m) Q(m, col) = (m % 2 ? -1.0 : 1.0) / std::sqrt(double(M));
            freq[col] = M / 2;
            kind[col] = 3;
        }
    }

    // coefficient-space d/dz on a period P
    Eigen::MatrixXd derivative(const Eigen::MatrixXd& c, double P) const {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(c.rows(), c.cols());
        for (int r = 0; r < c.rows(); ++r) {
            double w = 2.0 * kPi * freq[r] / P;
            if (kind[r] == 1) out.row(partner[r]) = -w * c.row(r);
            else if (kind[r] == 2) out.row(partner[r]) = w * c.row(r);
        }
        return out;
    }
};

Eigen::MatrixXd interp(int n, double period, const std::vector<double>& targets) {
    std::vector<double> w = trig_interp_matrix(n, period, targets);
    return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        w.data(), static_cast<Eigen::Index>(targets.size()), n);
}

void check_window(const StripField& f) {
    const int nx = f.nx();
    if (std::abs(f.x.front() + f.x.back()) > 1e-12 * std::abs(f.x.back()))
        throw DomainError("strip_linear", "x window must be symmetric about the layer");
    for (int i = 1; i < nx; ++i)
        if (std::abs(f.x[i] - f.x[i - 1] - f.hx()) > 1e-9 * f.hx()) throw DomainError("strip_linear", "x grid must be uniform");
}

std::vector<double> hx_nodes(const StripField& f) {
    std::vector<double> h(f.nx());
    for (int i = 0; i < f.nx(); ++i) h[i] = heteroclinic_eval(f.x[i]).Hx;
    return h;
}

// Lx = x_xx + (1 − 3H²)x on interior nodes, zero at both ends
Eigen::MatrixXd apply_x(const Eigen::MatrixXd& v, const std::vector<double>& x, double hx) {
    const int nx = static_cast<int>(x.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(v.rows(), v.cols());
    for (int i = 1; i + 1 < nx; ++i) {
        double p = dF(heteroclinic_eval(x[i]).H);
        out.col(i) = (v.col(i + 1) - 2.0 * v.col(i) + v.col(i - 1)) / (hx * hx) + p * v.col(i);
    }
    return out;
}

}  // namespace

double orthogonality_defect(const StripField& f) {
    std::vector<double> hx = hx_nodes(f);
    const double h = f.hx();
    double norm = 0.0;
    for (int i = 0; i < f.nx(); ++i) norm += (i == 0 || i + 1 == f.nx() ? 0.5 : 1.0) * h * std::abs(hx[i]);
    double vmax = f.values.cwiseAbs().maxCoeff();
    if (vmax == 0.0) return 0.0;
    double worst = 0.0;
    for (int m = 0; m < f.nz(); ++m) {
        double acc = 0.0;
        for (int i = 0; i < f.nx(); ++i) acc += (i == 0 || i + 1 == f.nx() ? 0.5 : 1.0) * h * hx[i] * f(m, i);
        worst = std::max(worst, std::abs(acc));
    }
    return worst / (vmax * norm);
}

StripField apply_strip_operator(const StripField& phi, const BetaProfile& beta, double eps) {
    const int M = phi.nz();
    RealFourier F(M);
    Eigen::MatrixXd c = F.Q.transpose() * phi.values;
    Eigen::MatrixXd czz = F.derivative(F.derivative(c, phi.period), phi.period);
    StripField out = phi;
    out.values = F.Q * czz;
    Eigen::MatrixXd lx = apply_x(phi.values, phi.x, phi.hx());
    for (int m = 0; m < M; ++m) {
        double b = beta.beta(eps * phi.z[m]);
        out.values.row(m) += b * b * lx.row(m);
    }
    out.values.col(0).setZero();
    out.values.col(phi.nx() - 1).setZero();
    return out;
}

StripSolveReport solve_strip_linear(const StripField& rhs, const BetaProfile& beta, double eps,
                                    const StripSolveOptions& opt) {
    check_window(rhs);
    const int M = rhs.nz(), nx = rhs.nx(), ni = nx - 2;
    const double hx = rhs.hx();
    if (!(eps > 0.0)) throw DomainError("strip_linear", "ε must be positive");
    if (std::abs(rhs.period * eps - beta.length) > 1e-9 * beta.length)
        throw DomainError("strip_linear", "z period must equal ℓ/ε");

    StripSolveReport rep;
    rep.input_defect = orthogonality_defect(rhs);
    if (rep.input_defect > opt.max_input_defect)
        throw DomainError("strip_linear",
                          "right-hand side is not orthogonal to H_x (relative defect " + std::to_string(rep.input_defect) + ")",
                          {rep.input_defect});

    // z̃ = ι(z); the z̃ grid is uniform with period ℓ̂/ε
    std::vector<double> zt_pos(M), beta_t(M), dbeta_t(M), iota_z(M);
    double Pt = 0.0;
    Eigen::MatrixXd to_t, from_t;
    const bool constant = beta.is_constant();
    if (constant) {
        double b = beta.beta(0.0);
        Pt = b * rhs.period;
        for (int m = 0; m < M; ++m) {
            zt_pos[m] = rhs.z[m];
            beta_t[m] = b;
            dbeta_t[m] = 0.0;
        }
    } else {
        auto B = [&](double th) { return integrate_panels(beta.beta, 0.0, th, 0.25, 12); };
        const double lhat = B(beta.length);
        Pt = lhat / eps;
        for (int m = 0; m < M; ++m) {
            double target = lhat * m / M, th = beta.length * m / M;
            for (int it = 0; it < 50; ++it) {
                double step = (B(th) - target) / beta.beta(th);
                th -= step;
                if (std::abs(step) < 1e-15 * beta.length) break;
            }
            zt_pos[m] = th / eps;
            beta_t[m] = beta.beta(th);
            dbeta_t[m] = beta.dbeta(th);
            iota_z[m] = B(eps * rhs.z[m]) / eps;
        }
        to_t = interp(M, rhs.period, zt_pos);
        from_t = interp(M, Pt, iota_z);
    }

    // Φ̃ on the interior x nodes
    Eigen::MatrixXd Phi = rhs.values.middleCols(1, ni);
    if (!constant) Phi = to_t * Phi;
    for (int m = 0; m < M; ++m) Phi.row(m) /= beta_t[m] * beta_t[m];

    RealFourier F(M);
    std::vector<double> Hx(ni), pot(ni);
    for (int i = 0; i < ni; ++i) {
        auto hv = heteroclinic_eval(rhs.x[i + 1]);
        Hx[i] = hv.Hx;
        pot[i] = dF(hv.H);
    }
    // one bordered factorization per frequency
    const int kmax = M / 2;
    std::vector<TridiagonalLU> lu(kmax + 1);
    std::vector<std::vector<double>> q(kmax + 1);
    std::vector<double> wq(kmax + 1);
    {
        std::vector<double> a(ni, 1.0 / (hx * hx)), c(ni, 1.0 / (hx * hx)), b(ni);
        for (int k = 0; k <= kmax; ++k) {
            double w = 2.0 * kPi * k / Pt;
            for (int i = 0; i < ni; ++i) b[i] = -2.0 / (hx * hx) + pot[i] - w * w;
            lu[k] = TridiagonalLU(a, b, c);
            q[k] = Hx;
            lu[k].solve_in_place(q[k]);
            wq[k] = 0.0;
            for (int i = 0; i < ni; ++i) wq[k] += hx * Hx[i] * q[k][i];
        }
    }
    auto solve_modes = [&](const Eigen::MatrixXd& rhs_t) {
        Eigen::MatrixXd coef = F.Q.transpose() * rhs_t;
        auto work = [&](int r0, int r1) {
            std::vector<double> y(ni);
            for (int r = r0; r < r1; ++r) {
                const int k = F.freq[r];
                for (int i = 0; i < ni; ++i) y[i] = coef(r, i);
                lu[k].solve_in_place(y);
                double mu = 0.0;
                for (int i = 0; i < ni; ++i) mu += hx * Hx[i] * y[i];
                mu /= wq[k];
                for (int i = 0; i < ni; ++i) coef(r, i) = y[i] - mu * q[k][i];
            }
        };
        int nt = std::max(1, std::min(opt.threads, M));
        if (nt == 1) {
            work(0, M);
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < nt; ++t) pool.emplace_back(work, t * M / nt, (t + 1) * M / nt);
            for (auto& th : pool) th.join();
        }
        return coef;
    };
    std::vector<double> drift(M);
    for (int m = 0; m < M; ++m) drift[m] = eps * dbeta_t[m] / (beta_t[m] * beta_t[m]);
    auto drift_term = [&](const Eigen::MatrixXd& coef) {
        Eigen::MatrixXd d = F.Q * F.derivative(coef, Pt);
        for (int m = 0; m < M; ++m) d.row(m) *= drift[m];
        return d;
    };

    Eigen::MatrixXd coef = solve_modes(Phi);
    rep.sweeps = 1;
    if (!constant) {
        double prev = std::numeric_limits<double>::infinity();
        for (int sweep = 1;; ++sweep) {
            Eigen::MatrixXd next = solve_modes(Phi - drift_term(coef));
            double scale = std::max(next.cwiseAbs().maxCoeff(), 1e-300);
            double change = (next - coef).cwiseAbs().maxCoeff() / scale;
            rep.sweep_trace.push_back(change);
            coef = std::move(next);
            rep.sweeps = sweep + 1;
            if (change < opt.fixed_point_tol) break;
            if (sweep >= 3 && change > prev)
                throw ConvergenceError("strip_linear", "drift fixed point is not contracting (ε too large)", rep.sweep_trace);
            if (sweep + 1 >= opt.max_sweeps)
                throw ConvergenceError("strip_linear", "drift fixed point did not converge in the sweep cap", rep.sweep_trace);
            prev = change;
        }
    }

    // projected residual on the z̃ grid
    Eigen::MatrixXd phit = F.Q * coef;
    {
        Eigen::MatrixXd full = Eigen::MatrixXd::Zero(M, nx);
        full.middleCols(1, ni) = phit;
        std::vector<double> xs(rhs.x);
        Eigen::MatrixXd lx = apply_x(full, xs, hx).middleCols(1, ni);
        Eigen::MatrixXd czz = F.derivative(F.derivative(coef, Pt), Pt);
        Eigen::MatrixXd R = F.Q * czz + lx + drift_term(coef) - Phi;
        double wh = 0.0;
        for (int i = 0; i < ni; ++i) wh += hx * Hx[i] * Hx[i];
        for (int m = 0; m < M; ++m) {
            double p = 0.0;
            for (int i = 0; i < ni; ++i) p += hx * Hx[i] * R(m, i);
            for (int i = 0; i < ni; ++i) R(m, i) -= p / wh * Hx[i];
        }
        double pmax = Phi.cwiseAbs().maxCoeff();
        rep.residual = pmax > 0.0 ? R.cwiseAbs().maxCoeff() / pmax : R.cwiseAbs().maxCoeff();
    }

    rep.phi = rhs;
    rep.phi.values.setZero();
    rep.phi.values.middleCols(1, ni) = constant ? phit : Eigen::MatrixXd(from_t * phit);
    rep.output_defect = orthogonality_defect(rep.phi);
    double rn = rhs.values.norm();
    rep.stability_constant = rn > 0.0 ? rep.phi.values.norm() / rn : 0.0;
    return rep;
}

// ---------------------------------------------------------------- φ₁₁

double Phi11::eval(int m, double s) const {
    const double b = beta[m], pre = layers.eps * beta1[m] / (b * b);
    double acc = 0.0;
    for (int j = 1; j <= layers.N; ++j) {
        double fj = layers.f(j, m), sign = (j % 2 == 0) ? 1.0 : -1.0;
        acc += sign * layers.fdot[j - 1][m] * (psi_eval(b * (s - fj)).psi + psi_eval(-b * (s + fj)).psi);
    }
    return pre * acc;
}

double Phi11::ds(int m, double s) const {
    const double b = beta[m], pre = layers.eps * beta1[m] / (b * b);
    double acc = 0.0;
    for (int j = 1; j <= layers.N; ++j) {
        double fj = layers.f(j, m), sign = (j % 2 == 0) ? 1.0 : -1.0;
        acc += sign * layers.fdot[j - 1][m] * b * (psi_eval(b * (s - fj)).dpsi - psi_eval(-b * (s + fj)).dpsi);
    }
    return pre * acc;
}

Phi11 build_phi11(const LayerVector& f, const CollarData& collar, int ns, double s_max) {
    const int M = f.size();
    if (collar.size() != M) throw DomainError("strip_linear", "placement and collar grids differ");
    Phi11 p;
    p.layers = f;
    p.beta = collar.beta;
    p.beta1 = collar.beta1;
    if (!(s_max > 0.0)) {
        for (int i = 0; i < M; ++i) s_max = std::max(s_max, f.f(f.N, i) + 12.0 / collar.beta[i]);
    }
    p.field = make_strip(0.0, s_max, ns, collar.length / f.eps, M);
    p.ds0.resize(M);
    for (int m = 0; m < M; ++m) {
        for (int i = 0; i < ns; ++i) p.field(m, i) = p.eval(m, p.field.x[i]);
        p.ds0[m] = p.ds(m, 0.0);
    }
    return p;
}

// ---------------------------------------------------------------- Ξ₃

Xi3Rhs build_xi3_rhs(const LayerVector& f, const CollarData& collar, const InteractionCoeffs& coeffs,
                     const Xi3Options& opt) {
    const int N = f.N, M = f.size();
    if (collar.size() != M) throw DomainError("strip_linear", "placement and collar grids differ");
    std::vector<CutoffFamily> chis;
    chis.reserve(M);
    double X = opt.X;
    double bmax = *std::max_element(collar.beta.begin(), collar.beta.end());
    for (int i = 0; i < M; ++i) {
        std::vector<double> depth(N);
        for (int j = 0; j < N; ++j) depth[j] = f.fdot[j][i] + f.fbar[j][i];
        chis.emplace_back(depth, opt.delta_tilde);
        if (!(opt.X > 0.0)) X = std::max(X, bmax * (f.f(N, i) + 12.0));
    }
    // the evaluator outlives this call, so it owns copies of its inputs
    struct Data {
        LayerVector f;
        std::vector<double> beta;
        std::vector<std::vector<double>> d;
        std::vector<CutoffFamily> chis;
    };
    auto data = std::make_shared<const Data>(Data{f, collar.beta, coeffs.d, chis});
    auto eval = [data](int j, int i, double x, bool subtract) {
        const Data& D = *data;
        const int N = D.f.N;
        const double b = D.beta[i];
        const double chi = D.chis[i].chi(j, D.chis[i].depth(j) + x / b);
        if (chi == 0.0) return 0.0;
        auto E = [&](int n) {  // e^{−√2β(f̃_n − f̃_{n−1})}, f̃₀ = −f̃₁
            double lo = n == 1 ? -D.f.ftilde[0][i] : D.f.ftilde[n - 2][i];
            return std::exp(-kSqrt2 * b * (D.f.ftilde[n - 1][i] - lo));
        };
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        const double hx = sign * heteroclinic_jet(x).d1;
        const double dj = D.d[j - 1][i] * E(j);
        const double dn = j < N ? D.d[j][i] * E(j + 1) : 0.0;
        double br = dj * std::exp(-kSqrt2 * x) - (dn != 0.0 ? dn * std::exp(kSqrt2 * x) : 0.0);
        if (subtract)
            br += -D.f.gamma1[j - 1][i] / D.f.gamma0[j - 1][i] * dj + D.f.gamma2[j - 1][i] / D.f.gamma0[j - 1][i] * dn;
        return chi * 6.0 * kSqrt2 * b * b * hx * br;
    };
    Xi3Rhs out;
    out.eval = eval;
    out.defect_before.assign(N, 0.0);
    out.defect_after.assign(N, 0.0);
    for (int j = 1; j <= N; ++j) {
        StripField r = make_strip(X, opt.nx, collar.length / f.eps, M);
        for (int i = 0; i < M; ++i) {
            for (int p = 0; p < opt.nx; ++p) r(i, p) = -eval(j, i, r.x[p], true);
            // same cuts and panels as the weighted-γ integrals
            const double b = collar.beta[i], fj = chis[i].depth(j);
            std::vector<double> cuts{-25.0, 25.0};
            for (double s : chis[i].breakpoints(j)) {
                double x = b * (s - fj);
                if (x > -25.0 && x < 25.0) cuts.push_back(x);
            }
            std::sort(cuts.begin(), cuts.end());
            for (bool sub : {false, true}) {
                double acc = 0.0;
                for (std::size_t c = 0; c + 1 < cuts.size(); ++c)
                    acc += integrate_panels([&](double x) { return eval(j, i, x, sub) * ((j % 2 == 0) ? 1.0 : -1.0) * heteroclinic_jet(x).d1; },
                                            cuts[c], cuts[c + 1]);
                double& slot = sub ? out.defect_after[j - 1] : out.defect_before[j - 1];
                slot = std::max(slot, std::abs(acc));
            }
        }
        if (out.defect_after[j - 1] > opt.orth_tol)
            throw DomainError("strip_linear",
                              "Ξ₃ is not orthogonal to H_x for layer " + std::to_string(j) +
                                  ": γ weights do not match the cutoffs (solve placement with weighted γ)",
                              {out.defect_before[j - 1], out.defect_after[j - 1]});
        out.rhs.push_back(std::move(r));
    }
    return out;
}

void write_strip_csv(std::ostream& os, const StripField& f) {
    os << "x,z,value\n";
    char buf[96];
    for (int m = 0; m < f.nz(); ++m)
        for (int i = 0; i < f.nx(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", f.x[i], f.z[m], f(m, i));
            os << buf;
        }
}

}  // namespace acbl
