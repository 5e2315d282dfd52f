#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "cssm/errors.hpp"
#include "cssm/mat.hpp"

namespace cssm {

// ---------------------------------------------------------------------------
// HiPPO-N state matrix and its diagonalization (initialization-time, double).
// ---------------------------------------------------------------------------

// Normal HiPPO matrix: A = A_LegS + p p^T with
//   A_LegS(n,k) = -sqrt(2n+1)*sqrt(2k+1)  (n > k),  -(n+1)  (n == k),  0  (n < k)
//   p(n) = sqrt(n + 1/2)
// The result has -1/2 on the whole diagonal plus a skew-symmetric remainder,
// hence every eigenvalue has real part -1/2. Q must be even so that the
// spectrum decomposes into conjugate pairs.
Matrix<double> build_hippo_n(std::size_t Q);

struct DiagonalizedSSM {
  std::vector<std::complex<double>> lambda;   // eigenvalues, conjugate pairs adjacent
  Matrix<std::complex<double>> eigen_basis;   // V, columns are eigenvectors
  Matrix<std::complex<double>> eigen_basis_inv;  // V^{-1} (= V^H, V unitary here)
};

// Complex eigendecomposition of a normal real matrix. The matrix is mapped to
// an equivalent Hermitian problem (generic real combination of its symmetric
// and skew parts) and solved with cyclic Jacobi rotations, so the computation
// is deterministic and dependency-free. Eigen pairs are ordered by |Im|
// ascending with the negative-imaginary member first; the reconstruction
// V diag(lambda) V^{-1} = A is verified to 1e-8 relative Frobenius.
DiagonalizedSSM diagonalize(const Matrix<double>& A);

// Frobenius normality residual ||A A^T - A^T A||_F / ||A||_F.
double normality_residual(const Matrix<double>& A);

// ---------------------------------------------------------------------------
// Discretization and the scan (templated so single/double towers share code).
// ---------------------------------------------------------------------------

// Zero-order hold of the diagonal system: for each state q
//   lambda_bar = exp(lambda * delta)
//   b_bar(q,:) = ((lambda_bar - 1) / lambda) * b_tilde(q,:)
// with the series limit b_bar = delta * b_tilde on the guarded branch
// |lambda * delta| < 1e-8.
template <typename Real>
void zoh_discretize(const std::vector<std::complex<Real>>& lambda,
                    const Matrix<std::complex<Real>>& b_tilde,
                    const std::vector<Real>& delta,
                    std::vector<std::complex<Real>>& lambda_bar,
                    Matrix<std::complex<Real>>& b_bar) {
  const std::size_t Q = lambda.size();
  if (b_tilde.rows != Q || delta.size() != Q) throw ConfigError("zoh shape mismatch");
  lambda_bar.resize(Q);
  b_bar = Matrix<std::complex<Real>>(Q, b_tilde.cols);
  for (std::size_t q = 0; q < Q; ++q) {
    if (!(delta[q] > Real(0))) throw ConfigError("zoh requires delta > 0");
    std::complex<Real> ld = lambda[q] * delta[q];
    std::complex<Real> lb = std::exp(ld);
    lambda_bar[q] = lb;
    std::complex<Real> phi;
    if (std::abs(ld) < Real(1e-8)) {
      phi = std::complex<Real>(delta[q], Real(0));
    } else {
      phi = (lb - std::complex<Real>(Real(1), Real(0))) / lambda[q];
    }
    for (std::size_t p = 0; p < b_tilde.cols; ++p) {
      b_bar.at(q, p) = phi * b_tilde.at(q, p);
    }
  }
}

// Inclusive associative scan of the first-order recurrence
//   state_t = gain_t * state_{t-1} + offset_t,   state_0 = 0,
// over rows t = 0..T-1 of (gains, offsets), each row holding Q lanes. Combine:
//   (a2, b2) o (a1, b1) = (a2*a1, a2*b1 + b2).
// Balanced divide-and-conquer with the split fixed by T, so the combine tree
// (and the floating-point result) is identical for any execution schedule.
// On return offsets(t, :) holds state_t.
template <typename C>
void associative_scan(Matrix<C>& gains, Matrix<C>& offsets) {
  const std::size_t Q = gains.cols;
  struct Rec {
    Matrix<C>* g;
    Matrix<C>* o;
    std::size_t q;
    void run(std::size_t lo, std::size_t hi) {
      if (hi - lo <= 1) return;
      std::size_t mid = lo + (hi - lo) / 2;
      run(lo, mid);
      run(mid, hi);
      const C* ga = g->row(mid - 1);
      const C* ba = o->row(mid - 1);
      for (std::size_t t = mid; t < hi; ++t) {
        C* gt = g->row(t);
        C* bt = o->row(t);
        for (std::size_t k = 0; k < q; ++k) {
          bt[k] += gt[k] * ba[k];
          gt[k] *= ga[k];
        }
      }
    }
  };
  Rec rec{&gains, &offsets, Q};
  rec.run(0, gains.rows);
}

// Discrete diagonal MIMO system ready for application.
template <typename Real>
struct DiscreteS5 {
  std::vector<std::complex<Real>> lambda_bar;  // Q
  Matrix<std::complex<Real>> b_bar;            // Q x P
  Matrix<std::complex<Real>> c_bar;            // P x Q
  std::vector<Real> d_diag;                    // P
};

// Runs the recurrence h_t = diag(lambda_bar) h_{t-1} + b_bar u_t via the scan
// and returns y_t = Re(c_bar h_t) + d_diag .* u_t. u is T x P, output T x P.
// When state_out is non-null the complex state trajectory (T x Q) is stored
// there for use by the backward pass.
template <typename Real>
Matrix<Real> ssm_apply(const DiscreteS5<Real>& sys, const Matrix<Real>& u,
                       Matrix<std::complex<Real>>* state_out = nullptr) {
  using C = std::complex<Real>;
  const std::size_t T = u.rows;
  const std::size_t P = u.cols;
  const std::size_t Q = sys.lambda_bar.size();
  if (sys.b_bar.cols != P || sys.c_bar.rows != P || sys.d_diag.size() != P) {
    throw ConfigError("ssm_apply shape mismatch");
  }

  Matrix<C> gains(T, Q);
  Matrix<C> state(T, Q, C(Real(0), Real(0)));
  for (std::size_t t = 0; t < T; ++t) {
    C* g = gains.row(t);
    C* h = state.row(t);
    const Real* ut = u.row(t);
    for (std::size_t q = 0; q < Q; ++q) {
      g[q] = sys.lambda_bar[q];
      C acc(Real(0), Real(0));
      const C* brow = sys.b_bar.row(q);
      for (std::size_t p = 0; p < P; ++p) acc += brow[p] * ut[p];
      h[q] = acc;
    }
  }
  associative_scan(gains, state);

  Matrix<Real> y(T, P);
  for (std::size_t t = 0; t < T; ++t) {
    const C* h = state.row(t);
    const Real* ut = u.row(t);
    Real* yt = y.row(t);
    for (std::size_t p = 0; p < P; ++p) {
      const C* crow = sys.c_bar.row(p);
      C acc(Real(0), Real(0));
      for (std::size_t q = 0; q < Q; ++q) acc += crow[q] * h[q];
      yt[p] = acc.real() + sys.d_diag[p] * ut[p];
    }
  }
  if (state_out != nullptr) *state_out = std::move(state);
  return y;
}

// ---------------------------------------------------------------------------
// Trainable parameter set (owning container used for initialization/tests;
// the model keeps the same scalars in its flat parameter store).
// ---------------------------------------------------------------------------

template <typename Real>
struct S5Params {
  std::size_t state_dim{0};  // Q
  std::size_t io_dim{0};     // P
  std::vector<Real> lambda_re, lambda_im;  // Q (Re kept < 0 by the post-step clamp)
  Matrix<Real> b_re, b_im;                 // Q x P
  Matrix<Real> c_re, c_im;                 // P x Q
  std::vector<Real> d_diag;                // P
  std::vector<Real> log_delta;             // Q, delta = exp(log_delta)
};

// S5-style initialization: Lambda from the diagonalized HiPPO-N spectrum,
// B~ = V^H B0 and C~ = C0 V with B0, C0 seeded Gaussians scaled 1/sqrt(Q),
// D = 1, delta log-uniform over [1e-3, 1e-1].
S5Params<double> init_s5_params(std::size_t Q, std::size_t P, std::uint64_t seed);

}  // namespace cssm
