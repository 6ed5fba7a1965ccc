#pragma once

// Linear mapping between the half-length parameter stack V and the full
// separating stack W, plus the gradient pullback through it.
//
// A length-K/2 FIR filter observed in the K-point DFT domain has its
// even-indexed coefficients equal to the K/2-point DFT of its taps; the
// odd-indexed ones are a circular convolution of that spectrum with the
// DFT of exp(-i*2*pi*n/K). Collecting both cases gives a dense L x K
// matrix F (L = K/2) with identity columns at the even DFT indices and a
// circulant block (carrying a 1/L factor from the product-convolution
// identity) at the odd ones. Rows of the separating stack W are the
// conjugated transfer functions, hence W = V F^* at full resolution and,
// after truncation to the non-redundant bins of real filters,
//
//   W_t = V_t F1^* + conj(V_t) J F2^*
//
// with F1/F2 the row blocks 0..L/2 and L/2+1..L-1 of F restricted to
// columns 0..K/2, and J the anti-diagonal identity without its first and
// last column. The contrast gradient pulls back through the adjoint of
// that real-linear map:
//
//   grad_V = Omega1 F1^T + conj(Omega1) F2^H J^T.

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

#include "hive/fft.hpp"

namespace hive {

struct ManifoldMapping {
    int K = 0; // DFT length
    int L = 0; // K/2
    Eigen::VectorXcd upsilon;  // length L
    Eigen::MatrixXcd F;        // L x K
    Eigen::MatrixXcd F1;       // (L/2+1) x (K/2+1)
    Eigen::MatrixXcd F2;       // (L/2-1) x (K/2+1)
    Eigen::MatrixXd J;         // (L/2+1) x (L/2-1)

    // precomputed operators applied by expand / pullback_gradient
    Eigen::MatrixXcd F1_conj;  // conj(F1)
    Eigen::MatrixXcd JF2_conj; // J * conj(F2)
    Eigen::MatrixXcd F1_tr;    // F1^T
    Eigen::MatrixXcd F2h_Jt;   // F2^H * J^T

    int n_bins() const { return K / 2 + 1; }   // columns of W_t
    int n_params() const { return L / 2 + 1; } // columns of V_t
};

inline ManifoldMapping build_mapping(int K) {
    if (K < 4 || K % 4 != 0)
        throw std::invalid_argument("build_mapping: K must be a multiple of 4");

    ManifoldMapping m;
    m.K = K;
    m.L = K / 2;
    const int L = m.L;

    std::vector<cplx> seq(L);
    for (int n = 0; n < L; ++n) {
        const double ang = -2.0 * std::numbers::pi * n / K;
        seq[n] = cplx(std::cos(ang), std::sin(ang));
    }
    const std::vector<cplx> ups = dft_forward(seq);
    m.upsilon = Eigen::Map<const Eigen::VectorXcd>(ups.data(), L);

    m.F.setZero(L, K);
    for (int l = 0; l < L; ++l) {
        for (int c = 0; c < L; ++c) {
            m.F(l, 2 * c) = (l == c) ? 1.0 : 0.0;
            m.F(l, 2 * c + 1) = m.upsilon[((c - l) % L + L) % L] / static_cast<double>(L);
        }
    }

    const int rows1 = L / 2 + 1;
    const int rows2 = L / 2 - 1;
    const int nb = K / 2 + 1;
    m.F1 = m.F.topLeftCorner(rows1, nb);
    m.F2 = m.F.block(rows1, 0, rows2, nb);

    m.J.setZero(rows1, rows2);
    for (int r = 0; r < rows2; ++r) m.J(L / 2 - 1 - r, r) = 1.0;

    m.F1_conj = m.F1.conjugate();
    m.JF2_conj = m.J * m.F2.conjugate();
    m.F1_tr = m.F1.transpose();
    m.F2h_Jt = m.F2.adjoint() * m.J.transpose();
    return m;
}

// W_t = V_t F1^* + conj(V_t) J F2^*
inline Eigen::MatrixXcd expand(const Eigen::MatrixXcd& Vt, const ManifoldMapping& m) {
    if (Vt.cols() != m.n_params())
        throw std::invalid_argument("expand: V_t must have L/2+1 columns");
    return Vt * m.F1_conj + Vt.conjugate() * m.JF2_conj;
}

// grad_V = Omega1 F1^T + conj(Omega1) F2^H J^T (adjoint of expand under the
// real inner product Re tr(A^H B)).
inline Eigen::MatrixXcd pullback_gradient(const Eigen::MatrixXcd& omega1,
                                          const ManifoldMapping& m) {
    if (omega1.cols() != m.n_bins())
        throw std::invalid_argument("pullback_gradient: Omega1 must have K/2+1 columns");
    return omega1 * m.F1_tr + omega1.conjugate() * m.F2h_Jt;
}

// Encodes real length-K taps (second half must be negligible) as a
// manifold stack: V(i,l) = conj(DFT_L(taps_i)[l]) for l = 0..L/2.
inline Eigen::MatrixXcd project_to_manifold(const Eigen::MatrixXd& filters,
                                            const ManifoldMapping& m) {
    if (filters.cols() != m.K)
        throw std::invalid_argument("project_to_manifold: filters must have K taps");
    const double total = filters.squaredNorm();
    const double tail = filters.rightCols(m.K / 2).squaredNorm();
    if (total > 0.0 && tail > 1e-6 * total)
        throw std::invalid_argument(
            "project_to_manifold: filter has non-negligible energy beyond K/2 taps");

    const int L = m.L;
    Eigen::MatrixXcd Vt(filters.rows(), m.n_params());
    std::vector<cplx> taps(L);
    for (Eigen::Index i = 0; i < filters.rows(); ++i) {
        for (int n = 0; n < L; ++n) taps[n] = cplx(filters(i, n), 0.0);
        const std::vector<cplx> spec = dft_forward(taps);
        for (int l = 0; l <= L / 2; ++l) Vt(i, l) = std::conj(spec[l]);
    }
    return Vt;
}

// Conjugate-symmetric completion of V_t to the full d x L stack.
inline Eigen::MatrixXcd symmetric_extension(const Eigen::MatrixXcd& Vt, const ManifoldMapping& m) {
    if (Vt.cols() != m.n_params())
        throw std::invalid_argument("symmetric_extension: V_t must have L/2+1 columns");
    Eigen::MatrixXcd V(Vt.rows(), m.L);
    V.leftCols(m.n_params()) = Vt;
    for (int l = m.L / 2 + 1; l < m.L; ++l) V.col(l) = Vt.col(m.L - l).conjugate();
    return V;
}

// Time-domain filters implied by a separating stack: row i of W_t is the
// conjugated transfer function, mirrored to full resolution and inverted.
// Returns complex taps; valid stacks have negligible imaginary part.
inline Eigen::MatrixXcd implied_filters(const Eigen::MatrixXcd& Wt, int K) {
    if (Wt.cols() != K / 2 + 1)
        throw std::invalid_argument("implied_filters: W_t must have K/2+1 columns");
    Eigen::MatrixXcd taps(Wt.rows(), K);
    std::vector<cplx> full(K);
    for (Eigen::Index i = 0; i < Wt.rows(); ++i) {
        full[0] = std::conj(Wt(i, 0));
        full[K / 2] = std::conj(Wt(i, K / 2));
        for (int k = 1; k < K / 2; ++k) {
            full[k] = std::conj(Wt(i, k));
            full[K - k] = Wt(i, k);
        }
        const std::vector<cplx> t = dft_inverse(full);
        for (int n = 0; n < K; ++n) taps(i, n) = t[n];
    }
    return taps;
}

struct ManifoldMembership {
    double max_imag = 0.0;  // largest |Im| of implied taps, relative to tap norm
    double max_tail = 0.0;  // largest second-half magnitude, relative to tap norm
};

inline ManifoldMembership manifold_membership(const Eigen::MatrixXcd& Wt, int K) {
    const Eigen::MatrixXcd taps = implied_filters(Wt, K);
    ManifoldMembership r;
    for (Eigen::Index i = 0; i < taps.rows(); ++i) {
        const double norm = taps.row(i).norm();
        if (norm == 0.0) continue;
        const double im = taps.row(i).imag().cwiseAbs().maxCoeff();
        const double tail = taps.row(i).tail(K / 2).cwiseAbs().maxCoeff();
        r.max_imag = std::max(r.max_imag, im / norm);
        r.max_tail = std::max(r.max_tail, tail / norm);
    }
    return r;
}

} // namespace hive
