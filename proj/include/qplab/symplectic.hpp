#pragma once

// Structure check A^* J A = J for the companion cocycle, with
// J = [[0, -I_l], [I_l, 0]].
//
// The companion matrix is not literally J-unitary, but the banded
// eigen-equation with real E conserves the boundary form
//     Phi_n(u, s) = sum_{k=1..l} sum_{r=0..k-1}
//                   v_k u_{n+r} conj(s_{n+r-k}) - conj(v_k) u_{n+r-k} conj(s_{n+r}),
// which in window coordinates is the constant skew-Hermitian matrix
// F = L - L^* with L_{q+k, q} = v_k (q = l-k .. l-1). Whenever iF has
// signature (l, l) it factors as F = S^* J S, and S A S^{-1} then lands in
// the Hermitian-symplectic group exactly. The factorization is computed
// here by congruence; both the conjugated defect and the raw defect of A
// itself are reported.

#include <Eigen/Dense>
#include <vector>

#include "qplab/cocycle.hpp"

namespace qplab {

inline Eigen::MatrixXcd symplectic_form(int l) {
    Eigen::MatrixXcd J = Eigen::MatrixXcd::Zero(2 * l, 2 * l);
    for (int i = 0; i < l; ++i) {
        J(i, l + i) = Complex(-1);
        J(l + i, i) = Complex(1);
    }
    return J;
}

// The conserved boundary form of the banded eigen-equation with hopping v.
inline Eigen::MatrixXcd conserved_form(const TrigPoly& v) {
    const int l = v.degree();
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Zero(2 * l, 2 * l);
    for (int k = 1; k <= l; ++k)
        for (int q = l - k; q <= l - 1; ++q) L(q + k, q) += v.coeff(k);
    return L - L.adjoint();
}

struct SymplecticBasis {
    bool found = false;
    Eigen::MatrixXcd S;        // F = S^* J S when found
    double signature_gap = 0;  // smallest |eigenvalue| of iF
};

// Factor F = S^* J S by congruence of the Hermitian matrix iF.
inline SymplecticBasis symplectic_basis(const TrigPoly& v) {
    const int l = v.degree();
    SymplecticBasis out;
    out.S = Eigen::MatrixXcd::Identity(2 * l, 2 * l);

    Eigen::MatrixXcd iF = Complex(0, 1) * conserved_form(v);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(iF);
    if (es.info() != Eigen::Success) return out;
    Eigen::VectorXd d = es.eigenvalues();  // ascending
    out.signature_gap = d.cwiseAbs().minCoeff();
    int negatives = 0;
    for (int i = 0; i < 2 * l; ++i) negatives += d(i) < 0 ? 1 : 0;
    if (negatives != l || out.signature_gap < 1e-12) return out;

    // reorder descending: first l positive, last l negative
    Eigen::MatrixXcd U(2 * l, 2 * l);
    Eigen::VectorXd dd(2 * l);
    for (int i = 0; i < 2 * l; ++i) {
        U.col(i) = es.eigenvectors().col(2 * l - 1 - i);
        dd(i) = d(2 * l - 1 - i);
    }
    // V diagonalizes iJ = V diag(I, -I) V^*
    Eigen::MatrixXcd V = Eigen::MatrixXcd::Zero(2 * l, 2 * l);
    const double r = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < l; ++j) {
        V(j, j) = r;
        V(l + j, j) = Complex(0, r);
        V(j, l + j) = r;
        V(l + j, l + j) = Complex(0, -r);
    }
    Eigen::VectorXd sq = dd.cwiseAbs().cwiseSqrt();
    out.S = V * sq.asDiagonal().toDenseMatrix().cast<Complex>() * U.adjoint();
    out.found = true;
    return out;
}

struct SymplecticDefect {
    double conjugated;  // max_theta ||(S A S^-1)^* J (S A S^-1) - J||
    double raw;         // max_theta ||A^* J A - J||
    bool basis_found;
    Eigen::MatrixXcd S;
};

inline SymplecticDefect symplectic_defect(const CocycleSampler& c,
                                          const std::vector<TorusPoint>& thetas) {
    const int l = c.block_degree();
    const Eigen::MatrixXcd J = symplectic_form(l);
    SymplecticBasis basis = symplectic_basis(c.v());
    Eigen::MatrixXcd Sinv;
    if (basis.found) Sinv = basis.S.inverse();

    SymplecticDefect out{0.0, 0.0, basis.found, basis.S};
    for (const auto& th : thetas) {
        Eigen::MatrixXcd A = c(th);
        out.raw = std::max(out.raw, (A.adjoint() * J * A - J).norm());
        if (basis.found) {
            Eigen::MatrixXcd At = basis.S * A * Sinv;
            out.conjugated = std::max(out.conjugated, (At.adjoint() * J * At - J).norm());
        }
    }
    if (!basis.found) out.conjugated = out.raw;
    return out;
}

}  // namespace qplab
