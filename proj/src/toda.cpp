#include "acbl/toda.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "acbl/errors.hpp"

namespace acbl {

Eigen::MatrixXd TodaSystem::B(int i) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(N, N);
    for (int n = 0; n < N; ++n) {
        m(n, n) = c[n][i] + d[n][i];
        if (n == 0) m(n, n) += c[n][i];  // reflected neighbour f̃₀ = −f̃₁
        if (n > 0) m(n, n - 1) = -c[n][i];
        if (n + 1 < N) m(n, n + 1) = -d[n][i];
    }
    return m;
}

Eigen::MatrixXd TodaSystem::A(int i) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(N, N);
    // quadratic form 2𝔞₀ f₁² + Σ_{n≥1} 𝔞_n (f_{n+1} − f_n)²
    m(0, 0) += 2.0 * a[0][i];
    for (int n = 1; n < N; ++n) {
        m(n - 1, n - 1) += a[n][i];
        m(n, n) += a[n][i];
        m(n - 1, n) -= a[n][i];
        m(n, n - 1) -= a[n][i];
    }
    return m;
}

Eigen::MatrixXd TodaSystem::congruence(int) const {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(N, N);
    q(0, 0) = 1.0;
    for (int n = 1; n < N; ++n) {
        q(n, n) = 1.0;
        q(n, n - 1) = -1.0;
    }
    return q;
}

Eigen::VectorXd TodaSystem::A_eigenvalues(int i) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A(i), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

Eigen::VectorXd TodaSystem::B_eigenvalues(int i) const {
    // B is tridiagonal with positive off-diagonal products, hence similar to a symmetric matrix
    Eigen::MatrixXd b = B(i);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(N, N);
    for (int n = 0; n < N; ++n) {
        s(n, n) = b(n, n);
        if (n + 1 < N) {
            double prod = b(n, n + 1) * b(n + 1, n);
            if (prod < 0.0) throw DomainError("toda", "coupling matrix B is not symmetrizable");
            s(n, n + 1) = s(n + 1, n) = -std::sqrt(prod);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

TodaSystem assemble_system(const InteractionCoeffs& coeffs, const LayerVector& f, const CollarData& collar,
                           double eps) {
    const int M = collar.size();
    if (M < 64) throw DomainError("toda", "θ grid must have at least 64 nodes");
    if (f.size() != M || static_cast<int>(coeffs.d.front().size()) != M)
        throw DomainError("toda", "placement and collar grids differ");
    TodaSystem s;
    s.N = coeffs.N;
    s.eps = eps;
    s.length = collar.length;
    s.theta = collar.theta;
    s.beta = collar.beta;
    s.k = coeffs.k;
    s.g1 = f.gamma1;
    s.g2 = f.gamma2;
    s.c.assign(s.N, std::vector<double>(M));
    s.d.assign(s.N, std::vector<double>(M));
    s.a = coeffs.a;
    for (int i = 0; i < M; ++i) {
        const double b2 = collar.beta[i] * collar.beta[i];
        for (int n = 0; n < s.N; ++n) {
            s.c[n][i] = 12.0 * b2 * f.gamma1[n][i] * coeffs.k[n][i];
            s.d[n][i] = 12.0 * b2 * f.gamma2[n][i] * coeffs.k[n + 1][i];
            if (!(s.a[n][i] > 0.0)) s.indefinite = true;
        }
    }
    return s;
}

// ---------------------------------------------------------------- periodic operator

Eigen::MatrixXd periodic_second_derivative(int n, double length, bool spectral) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    if (!spectral) {
        const double h = length / n;
        for (int i = 0; i < n; ++i) {
            D(i, i) = -2.0 / (h * h);
            D(i, (i + 1) % n) += 1.0 / (h * h);
            D(i, (i + n - 1) % n) += 1.0 / (h * h);
        }
        return D;
    }
    if (n % 2 != 0) throw DomainError("toda", "spectral differentiation needs an even grid");
    const double h = 2.0 * kPi / n, scale = std::pow(2.0 * kPi / length, 2);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                D(i, j) = -kPi * kPi / (3.0 * h * h) - 1.0 / 6.0;
            } else {
                double sn = std::sin(0.5 * (i - j) * h);
                D(i, j) = -(((i - j) % 2 == 0) ? 1.0 : -1.0) / (2.0 * sn * sn);
            }
            D(i, j) *= scale;
        }
    }
    return D;
}

PeriodicOperator::PeriodicOperator(double eps, double gamma0, double length, std::vector<double> rho, bool spectral)
    : eps_(eps), gamma0_(gamma0), length_(length), rho_(std::move(rho)), spectral_(spectral) {
    if (rho_.size() < 3) throw DomainError("toda", "periodic operator needs at least 3 nodes");
}

Eigen::MatrixXd PeriodicOperator::dense() const {
    const int n = size();
    Eigen::MatrixXd L = -eps_ * gamma0_ * periodic_second_derivative(n, length_, spectral_);
    for (int i = 0; i < n; ++i) L(i, i) -= rho_[i];
    return L;
}

int PeriodicOperator::count_below(double sigma) const {
    if (spectral_) {
        Eigen::MatrixXd L = dense();
        L.diagonal().array() -= sigma;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(L);
        int neg = 0;
        for (int i = 0; i < L.rows(); ++i) neg += ldlt.vectorD()(i) < 0.0;
        return neg;
    }
    // symmetric LDLᵀ of the cyclic tridiagonal matrix; fill-in only in the last column
    const int n = size();
    const double h = length_ / n, cc = eps_ * gamma0_ / (h * h), off = -cc;
    const double tiny = std::numeric_limits<double>::min() * 1e10;
    auto diag = [&](int i) { return 2.0 * cc - rho_[i] - sigma; };
    double dcur = diag(0), e = off, last = diag(n - 1);
    int neg = 0;
    for (int i = 0; i + 2 < n; ++i) {
        if (dcur == 0.0) dcur = tiny;
        if (dcur < 0.0) ++neg;
        double dnext = diag(i + 1) - off * off / dcur;
        double enext = -off * e / dcur + (i + 1 == n - 2 ? off : 0.0);
        last -= e * e / dcur;
        dcur = dnext;
        e = enext;
    }
    if (dcur == 0.0) dcur = tiny;
    if (dcur < 0.0) ++neg;
    last -= e * e / dcur;
    if (last < 0.0) ++neg;
    return neg;
}

double PeriodicOperator::min_abs_eigenvalue_bisection() const {
    const int n = size();
    double radius = 0.0;
    if (spectral_) {
        Eigen::MatrixXd L = dense();
        for (int i = 0; i < n; ++i) radius = std::max(radius, L.row(i).cwiseAbs().sum());
    } else {
        const double h = length_ / n, cc = eps_ * gamma0_ / (h * h);
        for (double r : rho_) radius = std::max(radius, 4.0 * cc + std::abs(r));
    }
    radius *= 1.01;
    const int k = count_below(0.0);
    // λ_j = inf{σ : count(σ) ≥ j}
    auto kth = [&](int j, double lo, double hi) {
        for (int it = 0; it < 200 && hi - lo > 1e-15 * radius; ++it) {
            double mid = 0.5 * (lo + hi);
            if (count_below(mid) >= j) hi = mid;
            else lo = mid;
        }
        return 0.5 * (lo + hi);
    };
    double best = std::numeric_limits<double>::infinity();
    if (k > 0) best = std::min(best, -kth(k, -radius, 0.0));
    if (k < n) best = std::min(best, kth(k + 1, 0.0, radius));
    return best;
}

Eigen::VectorXd PeriodicOperator::eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw ConvergenceError("toda", "dense eigensolver failed");
    return es.eigenvalues();
}

double PeriodicOperator::min_abs_eigenvalue() const {
    if (!spectral_) return min_abs_eigenvalue_bisection();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) return min_abs_eigenvalue_bisection();
    return es.eigenvalues().cwiseAbs().minCoeff();
}

// ---------------------------------------------------------------- residuals

namespace {

double gap_of(const LayerFields& ft, int n, int i) {
    return n == 0 ? 2.0 * ft[0][i] : ft[n][i] - ft[n - 1][i];
}

}  // namespace

LayerFields jay(const TodaSystem& sys, const LayerFields& ft) {
    const int N = sys.N, M = sys.size();
    LayerFields out(N, std::vector<double>(M, 0.0));
    for (int i = 0; i < M; ++i) {
        const double b = sys.beta[i], sb = kSqrt2 * b;
        for (int n = 0; n < N; ++n) {
            double dn = gap_of(ft, n, i);
            double v = -6.0 * kSqrt2 * b * sys.g1[n][i] * sys.k[n][i] * std::expm1(-sb * dn) - 6.0 * kSqrt2 * b * sys.g1[n][i] * sys.k[n][i] * sb * dn;
            if (n + 1 < N) {
                double dn1 = gap_of(ft, n + 1, i);
                v += 6.0 * kSqrt2 * b * sys.g2[n][i] * sys.k[n + 1][i] * (std::expm1(-sb * dn1) + sb * dn1);
            }
            out[n][i] = v;
        }
    }
    return out;
}

LayerFields linear_part(const TodaSystem& sys, const LayerFields& ft) {
    const int N = sys.N, M = sys.size();
    const double h = sys.length / M, cc = sys.eps * sys.gamma0 / (h * h);
    LayerFields out(N, std::vector<double>(M, 0.0));
    for (int i = 0; i < M; ++i) {
        Eigen::MatrixXd B = sys.B(i);
        for (int n = 0; n < N; ++n) {
            double lap = ft[n][(i + 1) % M] - 2.0 * ft[n][i] + ft[n][(i + M - 1) % M];
            double v = -cc * lap;
            for (int m = 0; m < N; ++m) v -= B(n, m) * ft[m][i];
            out[n][i] = v;
        }
    }
    return out;
}

LayerFields nonlinear_residual(const TodaSystem& sys, const LayerFields& ft) {
    LayerFields lin = linear_part(sys, ft), J = jay(sys, ft);
    for (std::size_t n = 0; n < lin.size(); ++n)
        for (std::size_t i = 0; i < lin[n].size(); ++i) lin[n][i] -= J[n][i];
    return lin;
}

double l2_theta(const TodaSystem& sys, const LayerFields& v) {
    const double h = sys.length / sys.size();
    double acc = 0.0;
    for (const auto& row : v)
        for (double x : row) acc += x * x * h;
    return std::sqrt(acc);
}

// ---------------------------------------------------------------- resonance

LayerFields rho_e(const TodaSystem& sys) {
    LayerFields r(sys.N, std::vector<double>(sys.size()));
    for (int i = 0; i < sys.size(); ++i) {
        Eigen::VectorXd ev = sys.B_eigenvalues(i);
        for (int n = 0; n < sys.N; ++n) r[n][i] = ev(n);
    }
    return r;
}

double reduced_gap(const TodaSystem& sys, bool spectral) {
    LayerFields r = rho_e(sys);
    double gap = std::numeric_limits<double>::infinity();
    for (int n = 0; n < sys.N; ++n) gap = std::min(gap, PeriodicOperator(sys.eps, sys.gamma0, sys.length, r[n], spectral).min_abs_eigenvalue());
    return gap;
}

std::vector<double> analytic_resonances(double rho, double gamma0, double length, double eps_lo, double eps_hi) {
    std::vector<double> out;
    const double K = rho * length * length / (4.0 * kPi * kPi * gamma0);
    if (!(K > 0.0)) return out;
    int m_lo = std::max(1, static_cast<int>(std::floor(std::sqrt(K / eps_hi))));
    int m_hi = static_cast<int>(std::ceil(std::sqrt(K / eps_lo)));
    for (int m = m_hi; m >= m_lo; --m) {
        double e = K / (double(m) * m);
        if (e >= eps_lo && e <= eps_hi) out.push_back(e);
    }
    return out;
}

ResonanceScanResult resonance_scan(const std::function<TodaSystem(double)>& family, const std::vector<double>& eps_grid,
                                   const ResonanceOptions& opt) {
    std::vector<double> grid = eps_grid;
    std::sort(grid.begin(), grid.end());
    if (grid.empty() || !(grid.front() > 0.0)) throw DomainError("toda", "ε grid must be positive and non-empty");
    ResonanceScanResult res;
    std::vector<double> const_rho;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        TodaSystem sys = family(grid[p]);
        LayerFields r = rho_e(sys);
        if (p == 0) {
            res.constant_coefficients = true;
            for (int n = 0; n < sys.N; ++n) {
                auto [lo, hi] = std::minmax_element(r[n].begin(), r[n].end());
                if (*hi - *lo > 1e-8 * std::max(1.0, std::abs(*hi))) res.constant_coefficients = false;
                const_rho.push_back(r[n][0]);
            }
            if (res.constant_coefficients) {
                for (double rho : const_rho) {
                    auto a = analytic_resonances(rho, sys.gamma0, sys.length, grid.front(), grid.back());
                    res.analytic.insert(res.analytic.end(), a.begin(), a.end());
                }
                std::sort(res.analytic.begin(), res.analytic.end());
            }
        }
        ResonancePoint pt;
        pt.eps = grid[p];
        pt.gap = std::numeric_limits<double>::infinity();
        for (int n = 0; n < sys.N; ++n)
            pt.gap = std::min(pt.gap, PeriodicOperator(sys.eps, sys.gamma0, sys.length, r[n], opt.spectral).min_abs_eigenvalue());
        pt.resonant = pt.gap < opt.threshold * pt.eps;
        pt.nearest_analytic = std::numeric_limits<double>::quiet_NaN();
        if (res.constant_coefficients) {
            double best = std::numeric_limits<double>::infinity();
            for (double rho : const_rho) {
                double K = rho * sys.length * sys.length / (4.0 * kPi * kPi * sys.gamma0);
                double mc = std::sqrt(K / pt.eps);
                for (int m : {static_cast<int>(std::floor(mc)), static_cast<int>(std::ceil(mc))}) {
                    if (m < 1) continue;
                    double e = K / (double(m) * m);
                    if (std::abs(e - pt.eps) < best) {
                        best = std::abs(e - pt.eps);
                        pt.nearest_analytic = e;
                        pt.nearest_m = m;
                    }
                }
            }
        }
        if (!pt.resonant) res.certified.push_back(pt.eps);
        res.points.push_back(pt);
    }
    for (std::size_t p = 1; p + 1 < res.points.size(); ++p) {
        if (res.points[p].gap < res.points[p - 1].gap && res.points[p].gap <= res.points[p + 1].gap)
            res.local_minima.push_back(res.points[p].eps);
    }
    return res;
}

// ---------------------------------------------------------------- Newton

TodaSolveReport solve_tilde_f(const TodaSystem& sys, const LayerFields& h, const TodaSolveOptions& opt) {
    const int N = sys.N, M = sys.size(), n_unk = N * M;
    if (static_cast<int>(h.size()) != N) throw DomainError("toda", "forcing must have one row per layer");
    TodaSolveReport rep;
    rep.gap = reduced_gap(sys);
    if (opt.check_resonance && rep.gap < opt.threshold * sys.eps) {
        throw ResonanceError("toda", "ε = " + std::to_string(sys.eps) + " is resonant: gap " + std::to_string(rep.gap) +
                                         " < " + std::to_string(opt.threshold) + "·ε",
                             {sys.eps, rep.gap});
    }
    rep.ft.assign(N, std::vector<double>(M, 0.0));
    const double hstep = sys.length / M, cc = sys.eps * sys.gamma0 / (hstep * hstep);
    auto idx = [M](int n, int i) { return n * M + i; };

    auto residual = [&](const LayerFields& ft) {
        LayerFields r = nonlinear_residual(sys, ft);
        for (int n = 0; n < N; ++n)
            for (int i = 0; i < M; ++i) r[n][i] -= h[n][i];
        return r;
    };
    auto norms = [&](const LayerFields& r, double& sup, double& two) {
        sup = 0.0;
        two = 0.0;
        for (const auto& row : r)
            for (double x : row) {
                sup = std::max(sup, std::abs(x));
                two += x * x;
            }
        two = std::sqrt(two);
    };

    LayerFields r = residual(rep.ft);
    double rsup, r2;
    norms(r, rsup, r2);
    rep.residual_trace.push_back(rsup);
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool analyzed = false;
    for (int it = 0; it < opt.max_iter && rsup >= opt.tol; ++it) {
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(n_unk) * 6);
        for (int i = 0; i < M; ++i) {
            const double sb = kSqrt2 * sys.beta[i];
            for (int n = 0; n < N; ++n) {
                int row = idx(n, i);
                trip.emplace_back(row, row, 2.0 * cc);
                trip.emplace_back(row, idx(n, (i + 1) % M), -cc);
                trip.emplace_back(row, idx(n, (i + M - 1) % M), -cc);
                double t1 = sys.c[n][i] * std::exp(-sb * gap_of(rep.ft, n, i));
                if (n == 0) {
                    trip.emplace_back(row, row, -2.0 * t1);
                } else {
                    trip.emplace_back(row, row, -t1);
                    trip.emplace_back(row, idx(n - 1, i), t1);
                }
                if (n + 1 < N) {
                    double t2 = sys.d[n][i] * std::exp(-sb * gap_of(rep.ft, n + 1, i));
                    trip.emplace_back(row, idx(n + 1, i), t2);
                    trip.emplace_back(row, row, -t2);
                }
            }
        }
        Eigen::SparseMatrix<double> J(n_unk, n_unk);
        J.setFromTriplets(trip.begin(), trip.end());
        J.makeCompressed();
        if (!analyzed) {
            lu.analyzePattern(J);
            analyzed = true;
        }
        lu.factorize(J);
        if (lu.info() != Eigen::Success)
            throw ConvergenceError("toda", "singular reduced Jacobian", rep.residual_trace);
        Eigen::VectorXd rv(n_unk);
        for (int n = 0; n < N; ++n)
            for (int i = 0; i < M; ++i) rv[idx(n, i)] = r[n][i];
        Eigen::VectorXd step = lu.solve(rv);

        double lambda = 1.0, new_sup = 0.0, new_2 = 0.0;
        LayerFields trial;
        LayerFields rt;
        while (true) {
            trial = rep.ft;
            for (int n = 0; n < N; ++n)
                for (int i = 0; i < M; ++i) trial[n][i] -= lambda * step[idx(n, i)];
            rt = residual(trial);
            norms(rt, new_sup, new_2);
            if (std::isfinite(new_2) && new_2 <= (1.0 - 1e-4 * lambda) * r2) break;
            lambda *= 0.5;
            if (lambda < std::ldexp(1.0, -12)) {
                rep.damping_trace.push_back(lambda);
                throw ConvergenceError("toda", "Newton for f̃ diverged (damping floor reached)", rep.residual_trace);
            }
        }
        rep.damping_trace.push_back(lambda);
        if (rsup > 0.0) rep.quadratic_ratios.push_back(new_sup / (rsup * rsup));
        rep.ft = std::move(trial);
        r = std::move(rt);
        rsup = new_sup;
        r2 = new_2;
        rep.residual_trace.push_back(rsup);
        rep.iterations = it + 1;
    }
    if (!(rsup < opt.tol)) throw ConvergenceError("toda", "Newton for f̃ did not reach tolerance", rep.residual_trace);
    rep.residual = rsup;
    for (const auto& row : rep.ft)
        for (double x : row) rep.ft_sup = std::max(rep.ft_sup, std::abs(x));
    rep.h_l2 = l2_theta(sys, h);
    rep.stability_constant = rep.h_l2 > 0.0 ? rep.ft_sup * std::sqrt(sys.eps) / rep.h_l2 : 0.0;
    rep.ansatz_ratio = rep.ft_sup / std::sqrt(sys.eps);
    return rep;
}

}  // namespace acbl
