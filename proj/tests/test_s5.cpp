#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "cssm/rng.hpp"
#include "cssm/s5.hpp"

using namespace cssm;
using cd = std::complex<double>;

namespace {

// Plain for-loop recurrence, the independent reference for the scan.
Matrix<double> ssm_sequential(const DiscreteS5<double>& sys, const Matrix<double>& u) {
  const std::size_t T = u.rows;
  const std::size_t P = u.cols;
  const std::size_t Q = sys.lambda_bar.size();
  std::vector<cd> h(Q, cd(0.0, 0.0));
  Matrix<double> y(T, P);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t q = 0; q < Q; ++q) {
      cd acc = sys.lambda_bar[q] * h[q];
      for (std::size_t p = 0; p < P; ++p) acc += sys.b_bar.at(q, p) * u.at(t, p);
      h[q] = acc;
    }
    for (std::size_t p = 0; p < P; ++p) {
      cd acc(0.0, 0.0);
      for (std::size_t q = 0; q < Q; ++q) acc += sys.c_bar.at(p, q) * h[q];
      y.at(t, p) = acc.real() + sys.d_diag[p] * u.at(t, p);
    }
  }
  return y;
}

DiscreteS5<double> random_system(Pcg32& rng, std::size_t Q, std::size_t P) {
  DiscreteS5<double> sys;
  sys.lambda_bar.resize(Q);
  for (std::size_t q = 0; q < Q; ++q) {
    // stable: magnitude < 1
    double mag = 0.2 + 0.75 * rng.next_double();
    double ang = 2.0 * 3.14159265358979 * rng.next_double();
    sys.lambda_bar[q] = std::polar(mag, ang);
  }
  sys.b_bar = Matrix<cd>(Q, P);
  for (auto& v : sys.b_bar.d) v = cd(rng.next_gaussian(), rng.next_gaussian());
  sys.c_bar = Matrix<cd>(P, Q);
  for (auto& v : sys.c_bar.d) v = cd(rng.next_gaussian(), rng.next_gaussian());
  sys.d_diag.resize(P);
  for (auto& v : sys.d_diag) v = rng.next_gaussian();
  return sys;
}

}  // namespace

TEST_CASE("hippo-n Q=2 matches the closed form") {
  Matrix<double> a = build_hippo_n(2);
  CHECK(a.at(0, 0) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(a.at(1, 1) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(a.at(0, 1) == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-14));
  CHECK(a.at(1, 0) == doctest::Approx(-std::sqrt(3.0) / 2.0).epsilon(1e-14));
}

TEST_CASE("hippo-n is normal and has -1/2 symmetric part") {
  for (std::size_t Q : {2, 4, 8, 16, 64}) {
    Matrix<double> a = build_hippo_n(Q);
    CHECK(normality_residual(a) <= 1e-10);
    // A + A^T = -I pins every eigenvalue real part at -1/2
    for (std::size_t i = 0; i < Q; ++i) {
      for (std::size_t j = 0; j < Q; ++j) {
        double expect = (i == j) ? -1.0 : 0.0;
        CHECK(std::abs(a.at(i, j) + a.at(j, i) - expect) < 1e-12);
      }
    }
  }
}

TEST_CASE("hippo-n rejects odd dimensions") {
  CHECK_THROWS_AS(build_hippo_n(3), ConfigError);
  CHECK_THROWS_AS(build_hippo_n(1), ConfigError);
}

TEST_CASE("diagonalize reconstructs the matrix") {
  for (std::size_t Q : {2, 4, 8, 16}) {
    Matrix<double> a = build_hippo_n(Q);
    DiagonalizedSSM d = diagonalize(a);
    double err = 0.0, na = 0.0;
    for (std::size_t i = 0; i < Q; ++i) {
      for (std::size_t j = 0; j < Q; ++j) {
        cd acc(0.0, 0.0);
        for (std::size_t k = 0; k < Q; ++k) {
          acc += d.eigen_basis.at(i, k) * d.lambda[k] * d.eigen_basis_inv.at(k, j);
        }
        err += std::norm(acc - cd(a.at(i, j), 0.0));
        na += a.at(i, j) * a.at(i, j);
      }
    }
    CHECK(std::sqrt(err) <= 1e-8 * std::sqrt(na));
  }
}

TEST_CASE("diagonalize of the identity returns unit eigenvalues") {
  Matrix<double> eye(4, 4, 0.0);
  for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  DiagonalizedSSM d = diagonalize(eye);
  for (const cd& l : d.lambda) {
    CHECK(l.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(l.imag()) < 1e-12);
  }
}

TEST_CASE("hippo eigenvalues sit at Re = -1/2 in adjacent conjugate pairs") {
  DiagonalizedSSM d = diagonalize(build_hippo_n(4));
  REQUIRE(d.lambda.size() == 4);
  for (const cd& l : d.lambda) {
    CHECK(l.real() == doctest::Approx(-0.5).epsilon(1e-8));
  }
  CHECK(d.lambda[0].imag() == doctest::Approx(-d.lambda[1].imag()).epsilon(1e-9));
  CHECK(d.lambda[2].imag() == doctest::Approx(-d.lambda[3].imag()).epsilon(1e-9));
  CHECK(std::abs(d.lambda[0].imag()) <= std::abs(d.lambda[2].imag()));
}

TEST_CASE("zoh closed form at lambda=-1, delta=1") {
  std::vector<cd> lambda = {cd(-1.0, 0.0)};
  Matrix<cd> b_tilde(1, 1, cd(1.0, 0.0));
  std::vector<double> delta = {1.0};
  std::vector<cd> lb;
  Matrix<cd> bb;
  zoh_discretize(lambda, b_tilde, delta, lb, bb);
  CHECK(std::abs(lb[0] - cd(std::exp(-1.0), 0.0)) < 1e-12);
  CHECK(std::abs(bb.at(0, 0) - cd(1.0 - std::exp(-1.0), 0.0)) < 1e-12);
}

TEST_CASE("zoh guarded branch returns delta * b_tilde exactly") {
  std::vector<cd> lambda = {cd(-1e-12, 0.0)};
  Matrix<cd> b_tilde(1, 2);
  b_tilde.at(0, 0) = cd(2.0, -3.0);
  b_tilde.at(0, 1) = cd(0.5, 0.25);
  std::vector<double> delta = {0.01};
  std::vector<cd> lb;
  Matrix<cd> bb;
  zoh_discretize(lambda, b_tilde, delta, lb, bb);
  CHECK(bb.at(0, 0) == cd(0.02, -0.03));
  CHECK(bb.at(0, 1) == cd(0.005, 0.0025));
}

TEST_CASE("zoh of a stable spectrum stays inside the unit circle") {
  Pcg32 rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<cd> lambda = {cd(-std::abs(rng.next_gaussian()) - 1e-6,
                                 3.0 * rng.next_gaussian())};
    Matrix<cd> b_tilde(1, 1, cd(1.0, 0.0));
    std::vector<double> delta = {std::exp(rng.next_gaussian())};
    std::vector<cd> lb;
    Matrix<cd> bb;
    zoh_discretize(lambda, b_tilde, delta, lb, bb);
    CHECK(std::abs(lb[0]) < 1.0);
  }
}

TEST_CASE("single step: y1 = Re(C B u1) + D u1") {
  Pcg32 rng(43);
  DiscreteS5<double> sys = random_system(rng, 6, 3);
  Matrix<double> u(1, 3);
  for (auto& v : u.d) v = rng.next_gaussian();
  Matrix<double> y = ssm_apply(sys, u);
  for (std::size_t p = 0; p < 3; ++p) {
    cd acc(0.0, 0.0);
    for (std::size_t q = 0; q < 6; ++q) {
      cd h(0.0, 0.0);
      for (std::size_t j = 0; j < 3; ++j) h += sys.b_bar.at(q, j) * u.at(0, j);
      acc += sys.c_bar.at(p, q) * h;
    }
    double expect = acc.real() + sys.d_diag[p] * u.at(0, p);
    CHECK(y.at(0, p) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("parallel scan equals the sequential recurrence (randomized suite)") {
  Pcg32 rng(47);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t Q = 1 + rng.next_below(16);
    std::size_t P = 1 + rng.next_below(8);
    std::size_t T = 1 + rng.next_below(256);
    DiscreteS5<double> sys = random_system(rng, Q, P);
    Matrix<double> u(T, P);
    for (auto& v : u.d) v = rng.next_gaussian();
    Matrix<double> fast = ssm_apply(sys, u);
    Matrix<double> slow = ssm_sequential(sys, u);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < fast.d.size(); ++i) {
      num += (fast.d[i] - slow.d[i]) * (fast.d[i] - slow.d[i]);
      den += slow.d[i] * slow.d[i];
    }
    CHECK(std::sqrt(num) <= 1e-10 * std::max(1.0, std::sqrt(den)));
  }
}

TEST_CASE("ssm_apply is linear in the input") {
  Pcg32 rng(53);
  DiscreteS5<double> sys = random_system(rng, 8, 4);
  Matrix<double> u(64, 4), v(64, 4), mix(64, 4);
  for (std::size_t i = 0; i < u.d.size(); ++i) {
    u.d[i] = rng.next_gaussian();
    v.d[i] = rng.next_gaussian();
    mix.d[i] = 1.5 * u.d[i] - 0.75 * v.d[i];
  }
  Matrix<double> yu = ssm_apply(sys, u);
  Matrix<double> yv = ssm_apply(sys, v);
  Matrix<double> ym = ssm_apply(sys, mix);
  for (std::size_t i = 0; i < ym.d.size(); ++i) {
    double expect = 1.5 * yu.d[i] - 0.75 * yv.d[i];
    CHECK(std::abs(ym.d[i] - expect) <= 1e-10 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("s5 initialization: spectrum, timescales, determinism") {
  S5Params<double> p = init_s5_params(16, 8, 99);
  for (std::size_t q = 0; q < 16; ++q) {
    CHECK(p.lambda_re[q] == doctest::Approx(-0.5).epsilon(1e-8));
    double delta = std::exp(p.log_delta[q]);
    CHECK(delta >= 1e-3);
    CHECK(delta <= 1e-1);
  }
  S5Params<double> p2 = init_s5_params(16, 8, 99);
  CHECK(p.lambda_im == p2.lambda_im);
  CHECK(p.b_re.d == p2.b_re.d);
  CHECK(p.c_im.d == p2.c_im.d);
  CHECK(p.log_delta == p2.log_delta);

  // conjugate-symmetric init keeps the output imaginary residue tiny: checked
  // indirectly through Re(lambda) pairing
  for (std::size_t q = 0; q + 1 < 16; q += 2) {
    CHECK(p.lambda_im[q] == doctest::Approx(-p.lambda_im[q + 1]).epsilon(1e-9));
  }
}
