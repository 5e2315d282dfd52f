#include "cssm/s5.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cssm/rng.hpp"

namespace cssm {

namespace {

using cd = std::complex<double>;

double frob(const Matrix<double>& m) {
  double s = 0.0;
  for (double v : m.d) s += v * v;
  return std::sqrt(s);
}

double frob(const Matrix<cd>& m) {
  double s = 0.0;
  for (const cd& v : m.d) s += std::norm(v);
  return std::sqrt(s);
}

Matrix<double> matmul_t(const Matrix<double>& a, const Matrix<double>& b, bool bt) {
  // a * b or a * b^T
  std::size_t n = a.rows;
  Matrix<double> out(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        acc += a.at(i, k) * (bt ? b.at(j, k) : b.at(k, j));
      }
      out.at(i, j) = acc;
    }
  }
  return out;
}

// Cyclic Jacobi eigensolver for a complex Hermitian matrix. Returns the real
// eigenvalues on the diagonal of h and accumulates the unitary basis in v.
void jacobi_hermitian(Matrix<cd>& h, Matrix<cd>& v) {
  const std::size_t n = h.rows;
  v = Matrix<cd>(n, n, cd(0.0, 0.0));
  for (std::size_t i = 0; i < n; ++i) v.at(i, i) = cd(1.0, 0.0);

  double scale = 0.0;
  for (const cd& x : h.d) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) return;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += std::norm(h.at(p, q));
    }
    if (std::sqrt(off) <= 1e-15 * scale * static_cast<double>(n)) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        cd apq = h.at(p, q);
        double mag = std::abs(apq);
        if (mag <= 1e-300) continue;
        cd phase = apq / mag;
        double app = h.at(p, p).real();
        double aqq = h.at(q, q).real();
        double tau = (aqq - app) / (2.0 * mag);
        double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        cd s = t * c * phase;

        // columns: M <- M G with G(p,p)=c, G(p,q)=s, G(q,p)=-conj(s), G(q,q)=c
        for (std::size_t k = 0; k < n; ++k) {
          cd hkp = h.at(k, p);
          cd hkq = h.at(k, q);
          h.at(k, p) = c * hkp - std::conj(s) * hkq;
          h.at(k, q) = s * hkp + c * hkq;
        }
        // rows: M <- G^H M
        for (std::size_t k = 0; k < n; ++k) {
          cd hpk = h.at(p, k);
          cd hqk = h.at(q, k);
          h.at(p, k) = c * hpk - s * hqk;
          h.at(q, k) = std::conj(s) * hpk + c * hqk;
        }
        // Hermitian cleanup against rounding drift
        h.at(p, q) = cd(0.0, 0.0);
        h.at(q, p) = cd(0.0, 0.0);
        h.at(p, p) = cd(h.at(p, p).real(), 0.0);
        h.at(q, q) = cd(h.at(q, q).real(), 0.0);

        for (std::size_t k = 0; k < n; ++k) {
          cd vkp = v.at(k, p);
          cd vkq = v.at(k, q);
          v.at(k, p) = c * vkp - std::conj(s) * vkq;
          v.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace

Matrix<double> build_hippo_n(std::size_t Q) {
  if (Q < 2 || Q % 2 != 0) {
    throw ConfigError("HiPPO-N needs an even state dimension >= 2");
  }
  Matrix<double> a(Q, Q, 0.0);
  for (std::size_t n = 0; n < Q; ++n) {
    for (std::size_t k = 0; k < Q; ++k) {
      double legs = 0.0;
      if (n > k) {
        legs = -std::sqrt(2.0 * static_cast<double>(n) + 1.0) *
               std::sqrt(2.0 * static_cast<double>(k) + 1.0);
      } else if (n == k) {
        legs = -(static_cast<double>(n) + 1.0);
      }
      double rank1 = std::sqrt(static_cast<double>(n) + 0.5) *
                     std::sqrt(static_cast<double>(k) + 0.5);
      a.at(n, k) = legs + rank1;
    }
  }
  return a;
}

double normality_residual(const Matrix<double>& A) {
  Matrix<double> aat = matmul_t(A, A, true);
  Matrix<double> ata(A.rows, A.rows, 0.0);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < A.rows; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < A.rows; ++k) acc += A.at(k, i) * A.at(k, j);
      ata.at(i, j) = acc;
    }
  }
  Matrix<double> diff(A.rows, A.rows);
  for (std::size_t i = 0; i < diff.d.size(); ++i) diff.d[i] = aat.d[i] - ata.d[i];
  double na = frob(A);
  return na == 0.0 ? 0.0 : frob(diff) / na;
}

DiagonalizedSSM diagonalize(const Matrix<double>& A) {
  const std::size_t n = A.rows;
  if (n == 0 || A.cols != n) throw ConfigError("diagonalize needs a square matrix");
  if (normality_residual(A) > 1e-8) {
    throw ConfigError("diagonalize requires a normal matrix");
  }

  // Generic Hermitian combination of the symmetric and skew parts. For a
  // normal A both parts commute, so the eigenbasis of the combination
  // diagonalizes A itself.
  Matrix<cd> h(n, n);
  const double mix = std::numbers::sqrt2;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double sym = 0.5 * (A.at(i, j) + A.at(j, i));
      double skew = 0.5 * (A.at(i, j) - A.at(j, i));
      h.at(i, j) = cd(sym, -mix * skew);
    }
  }
  Matrix<cd> v;
  jacobi_hermitian(h, v);

  // lambda_j = (V^H A V)_jj
  std::vector<cd> lambda(n);
  Matrix<cd> av(n, n, cd(0.0, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cd acc(0.0, 0.0);
      for (std::size_t k = 0; k < n; ++k) acc += A.at(i, k) * v.at(k, j);
      av.at(i, j) = acc;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    cd acc(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) acc += std::conj(v.at(k, j)) * av.at(k, j);
    lambda[j] = acc;
  }

  // order conjugate pairs adjacent: ascending |Im|, negative member first
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
    double ia = std::abs(lambda[a].imag());
    double ib = std::abs(lambda[b].imag());
    if (ia != ib) return ia < ib;
    if (lambda[a].imag() != lambda[b].imag()) return lambda[a].imag() < lambda[b].imag();
    return a < b;
  });

  DiagonalizedSSM out;
  out.lambda.resize(n);
  out.eigen_basis = Matrix<cd>(n, n);
  out.eigen_basis_inv = Matrix<cd>(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t src = pool[j];
    out.lambda[j] = lambda[src];
    for (std::size_t i = 0; i < n; ++i) {
      out.eigen_basis.at(i, j) = v.at(i, src);
      out.eigen_basis_inv.at(j, i) = std::conj(v.at(i, src));  // V^{-1} = V^H
    }
  }

  // reconstruction check
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      cd acc(0.0, 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        acc += out.eigen_basis.at(i, k) * out.lambda[k] * out.eigen_basis_inv.at(k, j);
      }
      cd diff = acc - cd(A.at(i, j), 0.0);
      err += std::norm(diff);
    }
  }
  double rel = std::sqrt(err) / std::max(1e-300, frob(A));
  if (rel > 1e-8) {
    throw NumericError("eigendecomposition failed, reconstruction residual " +
                       std::to_string(rel));
  }
  return out;
}

S5Params<double> init_s5_params(std::size_t Q, std::size_t P, std::uint64_t seed) {
  DiagonalizedSSM diag = diagonalize(build_hippo_n(Q));
  Pcg32 rng(seed, /*stream=*/0x55);

  S5Params<double> p;
  p.state_dim = Q;
  p.io_dim = P;
  p.lambda_re.resize(Q);
  p.lambda_im.resize(Q);
  for (std::size_t q = 0; q < Q; ++q) {
    p.lambda_re[q] = diag.lambda[q].real();
    p.lambda_im[q] = diag.lambda[q].imag();
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(Q));
  Matrix<double> b0(Q, P);
  for (double& v : b0.d) v = rng.next_gaussian() * scale;
  Matrix<double> c0(P, Q);
  for (double& v : c0.d) v = rng.next_gaussian() * scale;

  p.b_re = Matrix<double>(Q, P);
  p.b_im = Matrix<double>(Q, P);
  for (std::size_t q = 0; q < Q; ++q) {
    for (std::size_t j = 0; j < P; ++j) {
      cd acc(0.0, 0.0);
      for (std::size_t k = 0; k < Q; ++k) acc += diag.eigen_basis_inv.at(q, k) * b0.at(k, j);
      p.b_re.at(q, j) = acc.real();
      p.b_im.at(q, j) = acc.imag();
    }
  }
  p.c_re = Matrix<double>(P, Q);
  p.c_im = Matrix<double>(P, Q);
  for (std::size_t i = 0; i < P; ++i) {
    for (std::size_t q = 0; q < Q; ++q) {
      cd acc(0.0, 0.0);
      for (std::size_t k = 0; k < Q; ++k) acc += c0.at(i, k) * diag.eigen_basis.at(k, q);
      p.c_re.at(i, q) = acc.real();
      p.c_im.at(i, q) = acc.imag();
    }
  }

  p.d_diag.assign(P, 1.0);
  p.log_delta.resize(Q);
  const double lo = std::log(1e-3);
  const double hi = std::log(1e-1);
  for (std::size_t q = 0; q < Q; ++q) {
    p.log_delta[q] = lo + rng.next_double() * (hi - lo);
  }
  return p;
}

}  // namespace cssm
