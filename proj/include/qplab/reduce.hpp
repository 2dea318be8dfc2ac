#pragma once

// Newton iteration in Fourier space for the diagonal-reducibility equation
//     B(theta + alpha)^{-1} A(theta) B(theta) = Lambda = diag(e^{2 pi i rho_j}).
//
// Each step conjugates the current residual field
//     R(theta) = B(theta + alpha)^{-1} A(theta) B(theta) - Lambda
// away to first order with B <- B (I + Y), where Y solves
//     Lambda Y(theta) - Y(theta + alpha) Lambda = -R(theta)
// mode by mode: y^{ij}_k = -r^{ij}_k / (lambda_i - lambda_j e^{2 pi i <k,alpha>}).
// Divisors at or below the floor are skipped and reported as resonant.
// Lambda absorbs the averaged diagonal of the residual each step. Exponents
// may come out complex; Im rho is recorded, never forced to zero.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qplab/cocycle.hpp"
#include "qplab/fourier.hpp"

namespace qplab {

struct NewtonOptions {
    int K = 64;                  // Fourier truncation of the returned B
    double tol = 1e-8;           // sup-norm residual target
    int max_iters = 30;
    double divisor_floor = 1e-6;
    int grid_size = 0;           // per-axis, power of two; 0 = automatic
    int band_margin = 16;        // extra working modes beyond K
    double correction_cap = 2.0; // defer modes whose update would exceed this
    std::vector<Complex> rho0;   // optional initial exponents
};

struct ResonantDivisor {
    int i, j;
    MultiIndex k;
    double magnitude;
};

struct ConjugacyData {
    FourierSeries<Eigen::MatrixXcd> B;
    std::vector<Complex> rho;  // Re in [0,1), sorted by (Re, Im)
    double residual = 0;       // sup over grid, Frobenius
    double condition = 0;      // sup over grid ||B||_2 ||B^{-1}||_2
    bool converged = false;
    int iterations = 0;
    std::string failure;       // empty on success
    std::vector<double> residual_history;
    std::vector<ResonantDivisor> resonant;  // floored modes at the last solve

    Eigen::MatrixXcd lambda() const {
        Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(rho.size(), rho.size());
        for (std::size_t j = 0; j < rho.size(); ++j)
            L((Eigen::Index)j, (Eigen::Index)j) = std::exp(Complex(0, 1) * kTwoPi * rho[j]);
        return L;
    }
};

inline Complex exponent_of(Complex lambda) {
    Complex rho = std::log(lambda) / Complex(0, kTwoPi);
    return Complex(wrap_unit(rho.real()), rho.imag());
}

namespace detail {

// B is carried in mode space, folded onto the working grid; only modes
// |k|_inf <= K are nonzero. Shifting theta -> theta + alpha is a phase
// multiplication per mode, exact for incommensurate alpha.
struct ModeField {
    const TorusGrid* grid;
    int m;
    int K;
    std::vector<Eigen::MatrixXcd> modes;  // grid-folded layout

    // phase, when given, is indexed by folded grid position
    void fill_grid(std::vector<Eigen::MatrixXcd>& out,
                   const std::vector<Complex>* phase) const {
        const long total = grid->total();
        std::vector<Complex> scratch(total);
        out.assign(total, Eigen::MatrixXcd::Zero(m, m));
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                std::fill(scratch.begin(), scratch.end(), Complex(0));
                for_each_in_box(grid->d, K, [&](const MultiIndex& k) {
                    long f = grid->fold(k);
                    scratch[f] = modes[f](r, c) * (phase ? (*phase)[f] : Complex(1));
                });
                grid->transform(scratch, /*inverse=*/true);
                for (long g = 0; g < total; ++g) out[g](r, c) = scratch[g];
            }
    }

    void from_grid(const std::vector<Eigen::MatrixXcd>& values) {
        const long total = grid->total();
        std::vector<Complex> scratch(total);
        const double scale = 1.0 / (double)total;
        modes.assign(total, Eigen::MatrixXcd::Zero(m, m));
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) {
                for (long g = 0; g < total; ++g) scratch[g] = values[g](r, c);
                grid->transform(scratch, /*inverse=*/false);
                for_each_in_box(grid->d, K, [&](const MultiIndex& k) {
                    long f = grid->fold(k);
                    modes[f](r, c) = scratch[f] * scale;
                });
            }
    }
};

inline int automatic_grid(int d, int K, int w_radius) {
    int need = std::max({64, 4 * K, 4 * w_radius});
    if (d >= 2) need = std::max(16, 4 * K);
    int g = 1;
    while (g < need) g <<= 1;
    return g;
}

}  // namespace detail

// Seed for continuation runs: reuse a previously computed conjugacy.
struct NewtonSeed {
    FourierSeries<Eigen::MatrixXcd> B;
    std::vector<Complex> rho;
};

inline ConjugacyData newton_reduce(const MatrixField& A, const Frequency& alpha,
                                   NewtonOptions opt, const NewtonSeed* seed = nullptr,
                                   int sampler_w_radius = 32) {
    const int m = A.size;
    const int d = A.d;
    if (alpha.dimension() != d) throw std::invalid_argument("newton_reduce: dimension mismatch");
    const int G = opt.grid_size > 0 ? opt.grid_size
                                    : detail::automatic_grid(d, opt.K, sampler_w_radius);
    TorusGrid grid(d, G);
    if (2 * opt.K + 1 > G) throw std::invalid_argument("newton_reduce: grid below truncation");
    const long total = grid.total();
    // the iteration runs on a wider band so residual just outside K is
    // corrected too; the returned series is truncated back to K
    const int Kw = std::min(opt.K + std::max(0, opt.band_margin), G / 2 - 1);

    ConjugacyData out;
    out.B = FourierSeries<Eigen::MatrixXcd>(d, opt.K);

    // samples of A and per-mode shift phases e^{2 pi i <k, alpha>}
    std::vector<Eigen::MatrixXcd> Agrid(total);
    for (long g = 0; g < total; ++g) Agrid[g] = A.sample(grid.point(g));
    std::vector<Complex> shift(total, Complex(1));  // by folded grid position
    std::vector<MultiIndex> kbox;
    for_each_in_box(d, Kw, [&](const MultiIndex& k) {
        kbox.push_back(k);
        shift[grid.fold(k)] = std::polar(1.0, kTwoPi * alpha.pairing(k));
    });

    // initial iterate
    detail::ModeField B{&grid, m, Kw, {}};
    Eigen::VectorXcd lambda(m);
    if (seed) {
        B.modes.assign(total, Eigen::MatrixXcd::Zero(m, m));
        for (const auto& [k, c] : seed->B.coeffs()) B.modes[grid.fold(k)] = c;
        for (int j = 0; j < m; ++j)
            lambda(j) = std::exp(Complex(0, 1) * kTwoPi * seed->rho[(std::size_t)j]);
    } else {
        Eigen::MatrixXcd Abar = Eigen::MatrixXcd::Zero(m, m);
        for (long g = 0; g < total; ++g) Abar += Agrid[g];
        Abar /= (double)total;
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(Abar);
        Eigen::MatrixXcd V = es.eigenvectors();
        Eigen::VectorXcd mu = es.eigenvalues();
        if (!V.allFinite() || std::abs(V.determinant()) < 1e-12) {
            // defective average: fall back to the sample at theta = 0
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es0(Agrid[0]);
            V = es0.eigenvectors();
            mu = es0.eigenvalues();
        }
        std::vector<int> order(m);
        for (int j = 0; j < m; ++j) order[j] = j;
        if (!opt.rho0.empty()) {
            if ((int)opt.rho0.size() != m)
                throw std::invalid_argument("newton_reduce: rho0 of wrong size");
            // the requested exponents are used literally; eigenbranches of the
            // averaged matrix only seed the columns of B
            std::vector<bool> used(m, false);
            for (int j = 0; j < m; ++j) {
                Complex target = std::exp(Complex(0, 1) * kTwoPi * opt.rho0[(std::size_t)j]);
                int best = -1;
                double bd = 1e300;
                for (int c = 0; c < m; ++c) {
                    if (used[c]) continue;
                    double dd = std::abs(mu(c) - target);
                    if (dd < bd) { bd = dd; best = c; }
                }
                used[best] = true;
                order[j] = best;
                mu(best) = target;
            }
        } else {
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                Complex ra = exponent_of(mu(a)), rb = exponent_of(mu(b));
                if (ra.real() != rb.real()) return ra.real() < rb.real();
                return ra.imag() < rb.imag();
            });
        }
        Eigen::MatrixXcd B0(m, m);
        for (int j = 0; j < m; ++j) {
            B0.col(j) = V.col(order[j]).normalized();
            lambda(j) = mu(order[j]);
        }
        B.modes.assign(total, Eigen::MatrixXcd::Zero(m, m));
        B.modes[grid.fold(MultiIndex(d, 0))] = B0;
    }

    std::vector<Eigen::MatrixXcd> Bgrid, Bshift, Rgrid(total), Ygrid;
    detail::ModeField R{&grid, m, Kw, {}};
    detail::ModeField Y{&grid, m, Kw, {}};
    int grew = 0;

    // residual field of a candidate iterate; returns false on singular B
    auto evaluate = [&](detail::ModeField& cand, const Eigen::VectorXcd& lam,
                        std::vector<Eigen::MatrixXcd>& field, double& res) {
        cand.fill_grid(Bgrid, nullptr);
        cand.fill_grid(Bshift, &shift);
        Eigen::MatrixXcd Lam = Eigen::MatrixXcd::Zero(m, m);
        for (int j = 0; j < m; ++j) Lam(j, j) = lam(j);
        res = 0;
        for (long g = 0; g < total; ++g) {
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Bshift[g]);
            if (std::abs(lu.determinant()) < 1e-300) return false;
            field[g] = lu.solve(Agrid[g] * Bgrid[g]) - Lam;
            res = std::max(res, field[g].norm());
        }
        return true;
    };

    detail::ModeField Bt{&grid, m, opt.K, {}};
    std::vector<Eigen::MatrixXcd> Tgrid(total);
    // residual of the K-truncated projection: the object actually returned
    auto truncated_residual = [&](double& res) {
        Bt.modes.assign(total, Eigen::MatrixXcd::Zero(m, m));
        for_each_in_box(d, opt.K, [&](const MultiIndex& k) {
            long f = grid.fold(k);
            Bt.modes[f] = B.modes[f];
        });
        return evaluate(Bt, lambda, Tgrid, res);
    };

    for (int iter = 0;; ++iter) {
        double res_work = 0;
        if (!evaluate(B, lambda, Rgrid, res_work)) {
            out.failure = "conjugacy became singular on the grid";
            break;
        }
        double res = res_work;
        if (Kw != opt.K && !truncated_residual(res)) {
            out.failure = "conjugacy became singular on the grid";
            break;
        }
        out.residual_history.push_back(res);
        out.residual = res;
        out.iterations = iter;

        if (res < opt.tol) {
            out.converged = true;
            break;
        }
        if (iter >= opt.max_iters) {
            out.failure = "iteration budget exhausted";
            break;
        }
        if (out.residual_history.size() >= 2 &&
            res > out.residual_history[out.residual_history.size() - 2]) {
            if (++grew >= 3) {
                out.failure = "diverging residual over three consecutive steps";
                break;
            }
        } else {
            grew = 0;
        }

        double sep = 1e300;
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) sep = std::min(sep, std::abs(lambda(i) - lambda(j)));
        if (sep <= opt.divisor_floor) {
            out.failure = "non-diagonalizable within tolerance: exponents coincide";
            break;
        }

        // linearized solve in mode space
        R.from_grid(Rgrid);
        // Lambda absorbs the averaged diagonal
        long zero_fold = grid.fold(MultiIndex(d, 0));
        for (int j = 0; j < m; ++j) {
            lambda(j) += R.modes[zero_fold](j, j);
            R.modes[zero_fold](j, j) = Complex(0);
        }
        out.resonant.clear();
        Y.modes.assign(total, Eigen::MatrixXcd::Zero(m, m));
        for (std::size_t ki = 0; ki < kbox.size(); ++ki) {
            long f = grid.fold(kbox[ki]);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    Complex r = R.modes[f](i, j);
                    Complex div = lambda(i) - lambda(j) * shift[f];
                    if (std::abs(div) <= opt.divisor_floor) {
                        if (!(i == j && is_zero(kbox[ki])))
                            out.resonant.push_back({i, j, kbox[ki], std::abs(div)});
                        continue;
                    }
                    // clip near-resonant corrections: full Newton once the
                    // local residual allows a moderate step
                    Complex y = -r / div;
                    double mag = std::abs(y);
                    if (mag > opt.correction_cap) y *= opt.correction_cap / mag;
                    Y.modes[f](i, j) = y;
                }
        }
        Y.fill_grid(Ygrid, nullptr);
        // damped update: halve the step while it makes the residual worse
        std::vector<Eigen::MatrixXcd> Bbase;
        B.fill_grid(Bbase, nullptr);
        detail::ModeField cand{&grid, m, Kw, {}};
        std::vector<Eigen::MatrixXcd> scratch(total);
        double step = 1.0;
        for (int half = 0; half < 4; ++half, step *= 0.5) {
            std::vector<Eigen::MatrixXcd> Bcand(total);
            for (long g = 0; g < total; ++g)
                Bcand[g] = Bbase[g] * (Eigen::MatrixXcd::Identity(m, m) + step * Ygrid[g]);
            cand.from_grid(Bcand);
            double cres = 0;
            if (evaluate(cand, lambda, scratch, cres) && (cres < res_work || half == 3)) break;
        }
        B.modes = cand.modes;
    }

    // final exponents sorted by (Re, Im); columns of B follow the permutation
    std::vector<Complex> rho(m);
    for (int j = 0; j < m; ++j) rho[(std::size_t)j] = exponent_of(lambda(j));
    std::vector<int> perm(m);
    for (int j = 0; j < m; ++j) perm[j] = j;
    std::sort(perm.begin(), perm.end(), [&](int a, int b) {
        if (rho[a].real() != rho[b].real()) return rho[a].real() < rho[b].real();
        return rho[a].imag() < rho[b].imag();
    });
    out.rho.resize(m);
    for (int j = 0; j < m; ++j) out.rho[(std::size_t)j] = rho[(std::size_t)perm[j]];

    detail::ModeField Btrunc{&grid, m, opt.K, {}};
    Btrunc.modes.assign(total, Eigen::MatrixXcd::Zero(m, m));
    for_each_in_box(d, opt.K, [&](const MultiIndex& k) {
        long f = grid.fold(k);
        Eigen::MatrixXcd c = B.modes[f];
        Eigen::MatrixXcd cp(m, m);
        for (int j = 0; j < m; ++j) cp.col(j) = c.col(perm[j]);
        out.B.set(k, cp);
        Btrunc.modes[f] = c;  // residual is permutation-invariant
    });

    // condition number over the grid
    Btrunc.fill_grid(Bgrid, nullptr);
    double cond = 0;
    for (long g = 0; g < total; ++g) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Bgrid[g]);
        double smin = svd.singularValues().minCoeff();
        double smax = svd.singularValues().maxCoeff();
        cond = std::max(cond, smin > 0 ? smax / smin : 1e300);
    }
    out.condition = cond;
    return out;
}

inline ConjugacyData newton_reduce(const CocycleSampler& c, NewtonOptions opt,
                                   const NewtonSeed* seed = nullptr) {
    return newton_reduce(matrix_field(c), c.alpha(), opt, seed, c.w().radius());
}

// Continuation in epsilon: solve at scaled couplings, reusing each conjugacy
// as the next seed. Helps when the theta-averaged matrix is a poor guess
// (energies beyond the constant-cocycle band).
inline ConjugacyData reduce_with_continuation(const CocycleSampler& c, NewtonOptions opt,
                                              int steps = 4) {
    ConjugacyData last;
    NewtonSeed seed;
    bool have_seed = false;
    for (int s = 1; s <= steps; ++s) {
        double scale = (double)s / steps;
        CocycleSampler cs = c.with_epsilon(c.epsilon() * scale);
        last = newton_reduce(cs, opt, have_seed ? &seed : nullptr);
        if (!last.converged) return last;
        seed = {last.B, last.rho};
        have_seed = true;
    }
    return last;
}

}  // namespace qplab
