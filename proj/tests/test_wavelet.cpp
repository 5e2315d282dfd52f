#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "cssm/rng.hpp"
#include "cssm/wavelet.hpp"

using namespace cssm;

namespace {

std::vector<double> tone(double freq, double fs, std::size_t T, double amp = 1.0,
                         double phase = 0.0) {
  std::vector<double> x(T);
  for (std::size_t t = 0; t < T; ++t) {
    x[t] = amp * std::sin(2.0 * std::numbers::pi * freq * t / fs + phase);
  }
  return x;
}

std::size_t nearest_row(const MorletFilterbank& bank, double freq) {
  std::size_t best = 0;
  double best_d = 1e300;
  for (std::size_t r = 0; r < bank.n_rows(); ++r) {
    double d = std::abs(bank.freqs_hz[r] - freq);
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("morlet bank frequency grid and scales") {
  MorletFilterbank bank = build_morlet_filterbank(50, 1.0, 100.0, 250.0);
  REQUIRE(bank.n_rows() == 50);
  // f = f_min + alpha (f_max - f_min) / F, alpha = 1..F
  CHECK(bank.freqs_hz.front() == doctest::Approx(1.0 + 99.0 / 50.0));
  CHECK(bank.freqs_hz.back() == doctest::Approx(100.0));
  for (std::size_t r = 1; r < bank.n_rows(); ++r) {
    CHECK(bank.freqs_hz[r] > bank.freqs_hz[r - 1]);
  }
  // scale identity: f = w0 fs / (2 pi) => s = 1 (w0 = 2 keeps f below Nyquist)
  double f_unit = 2.0 * 250.0 / (2.0 * std::numbers::pi);
  MorletFilterbank one = build_morlet_filterbank(1, f_unit - 1e-9, f_unit, 250.0, 2.0);
  CHECK(one.scales[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("morlet rows peak at the center and are magnitude-symmetric") {
  MorletFilterbank bank = build_morlet_filterbank(8, 2.0, 40.0, 128.0);
  const std::size_t K = bank.kernel_len();
  const std::size_t c = K / 2;
  for (std::size_t r = 0; r < bank.n_rows(); ++r) {
    double peak = std::abs(bank.psi.at(r, c));
    for (std::size_t i = 0; i < K; ++i) {
      CHECK(std::abs(bank.psi.at(r, i)) <= peak + 1e-12);
      CHECK(std::abs(bank.psi.at(r, i)) ==
            doctest::Approx(std::abs(bank.psi.at(r, K - 1 - i))).epsilon(1e-9));
    }
  }
  // envelope decays below 1e-4 of peak at the ends for the widest row
  CHECK(std::abs(bank.psi.at(0, 0)) <= 1e-4 * std::abs(bank.psi.at(0, c)));
}

TEST_CASE("bank rejects bands beyond Nyquist") {
  CHECK_THROWS_AS(build_morlet_filterbank(10, 1.0, 200.0, 250.0), ConfigError);
}

TEST_CASE("cwt of zero input is zero") {
  MorletFilterbank bank = build_morlet_filterbank(12, 2.0, 40.0, 128.0);
  std::vector<double> x(256, 0.0);
  Matrix<double> y = cwt(x, bank);
  for (double v : y.d) CHECK(v == 0.0);
}

TEST_CASE("cwt localizes a 10 Hz tone to the right row") {
  MorletFilterbank bank = build_morlet_filterbank(50, 1.0, 100.0, 250.0);
  std::vector<double> x = tone(10.0, 250.0, 1000);
  Matrix<double> y = cwt(x, bank);
  std::size_t expect = nearest_row(bank, 10.0);
  for (std::size_t t = 250; t < 750; ++t) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t r = 0; r < y.rows; ++r) {
      if (y.at(r, t) > best) {
        best = y.at(r, t);
        arg = r;
      }
    }
    CHECK(std::llabs(static_cast<long long>(arg) - static_cast<long long>(expect)) <= 1);
  }
}

TEST_CASE("cwt magnitude is absolutely homogeneous") {
  MorletFilterbank bank = build_morlet_filterbank(10, 2.0, 40.0, 128.0);
  Pcg32 rng(3);
  std::vector<double> x(300);
  for (double& v : x) v = rng.next_gaussian();
  std::vector<double> xs(x.size());
  const double a = -2.5;
  for (std::size_t i = 0; i < x.size(); ++i) xs[i] = a * x[i];
  Matrix<double> y = cwt(x, bank);
  Matrix<double> ys = cwt(xs, bank);
  for (std::size_t i = 0; i < y.d.size(); ++i) {
    CHECK(ys.d[i] == doctest::Approx(std::abs(a) * y.d[i]).epsilon(1e-9));
  }
}

TEST_CASE("cwt direct and fft paths agree") {
  MorletFilterbank bank = build_morlet_filterbank(16, 2.0, 60.0, 128.0);
  Pcg32 rng(17);
  std::vector<double> x(400);
  for (double& v : x) v = rng.next_gaussian();
  Matrix<double> yd = cwt(x, bank, CwtPath::kDirect);
  Matrix<double> yf = cwt(x, bank, CwtPath::kFft);
  double max_abs = 0.0;
  for (std::size_t i = 0; i < yd.d.size(); ++i) {
    max_abs = std::max(max_abs, std::abs(yd.d[i] - yf.d[i]));
  }
  CHECK(max_abs < 1e-8);
}

TEST_CASE("stft of zero is zero and localizes a 20 Hz tone") {
  std::vector<double> zero(600, 0.0);
  Matrix<double> yz = stft_branch(zero, 50, 1.0, 100.0, 250.0);
  for (double v : yz.d) CHECK(v == 0.0);

  std::vector<double> x = tone(20.0, 250.0, 600);
  Matrix<double> y = stft_branch(x, 50, 1.0, 100.0, 250.0);
  // bin grid matches the wavelet convention
  std::size_t expect = 0;
  double best_d = 1e300;
  for (std::size_t b = 0; b < 50; ++b) {
    double f = 1.0 + (b + 1) * 99.0 / 50.0;
    if (std::abs(f - 20.0) < best_d) {
      best_d = std::abs(f - 20.0);
      expect = b;
    }
  }
  for (std::size_t t = 150; t < 450; ++t) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t b = 0; b < y.rows; ++b) {
      if (y.at(b, t) > best) {
        best = y.at(b, t);
        arg = b;
      }
    }
    CHECK(std::llabs(static_cast<long long>(arg) - static_cast<long long>(expect)) <= 1);
  }
}

TEST_CASE("stft is shift equivariant away from the edges") {
  Pcg32 rng(23);
  std::vector<double> x(500, 0.0);
  for (std::size_t i = 100; i < 400; ++i) x[i] = rng.next_gaussian();
  const std::size_t shift = 7;
  std::vector<double> xs(500, 0.0);
  for (std::size_t i = 0; i + shift < 500; ++i) xs[i + shift] = x[i];
  Matrix<double> y = stft_branch(x, 12, 2.0, 40.0, 100.0);
  Matrix<double> ys = stft_branch(xs, 12, 2.0, 40.0, 100.0);
  for (std::size_t b = 0; b < y.rows; ++b) {
    for (std::size_t t = 150; t < 350; ++t) {
      CHECK(ys.at(b, t + shift) == doctest::Approx(y.at(b, t)).epsilon(1e-9));
    }
  }
}

TEST_CASE("conv1d with a centered delta kernel is the identity") {
  Pcg32 rng(5);
  std::vector<double> x(64);
  for (double& v : x) v = rng.next_gaussian();
  Matrix<double> kernels(3, 9, 0.0);
  for (std::size_t f = 0; f < 3; ++f) kernels.at(f, 4) = 1.0;
  Matrix<double> y = conv1d_same(x.data(), x.size(), kernels);
  for (std::size_t f = 0; f < 3; ++f) {
    for (std::size_t t = 0; t < x.size(); ++t) {
      CHECK(y.at(f, t) == doctest::Approx(x[t]).epsilon(1e-15));
    }
  }
}

TEST_CASE("conv1d matches the brute-force loop oracle") {
  Pcg32 rng(11);
  const std::size_t T = 97, F = 4, K = 13;
  std::vector<double> x(T);
  for (double& v : x) v = rng.next_gaussian();
  Matrix<double> kernels(F, K);
  for (double& v : kernels.d) v = rng.next_gaussian();
  Matrix<double> y = conv1d_same(x.data(), T, kernels);

  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t t = 0; t < T; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + k) -
                             static_cast<std::ptrdiff_t>(K / 2);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
        acc += kernels.at(f, k) * x[static_cast<std::size_t>(src)];
      }
      CHECK(std::abs(y.at(f, t) - acc) < 1e-12);
    }
  }
}

TEST_CASE("conv1d is linear") {
  Pcg32 rng(13);
  const std::size_t T = 80;
  std::vector<double> x(T), y(T), mix(T);
  for (std::size_t i = 0; i < T; ++i) {
    x[i] = rng.next_gaussian();
    y[i] = rng.next_gaussian();
    mix[i] = 2.0 * x[i] - 3.0 * y[i];
  }
  Matrix<double> kernels(2, 11);
  for (double& v : kernels.d) v = rng.next_gaussian();
  Matrix<double> cx = conv1d_same(x.data(), T, kernels);
  Matrix<double> cy = conv1d_same(y.data(), T, kernels);
  Matrix<double> cm = conv1d_same(mix.data(), T, kernels);
  for (std::size_t i = 0; i < cm.d.size(); ++i) {
    CHECK(cm.d[i] == doctest::Approx(2.0 * cx.d[i] - 3.0 * cy.d[i]).epsilon(1e-10));
  }
}

TEST_CASE("temporal layernorm standardizes rows") {
  Pcg32 rng(29);
  Matrix<double> z(5, 200);
  for (double& v : z.d) v = 3.0 + 2.0 * rng.next_gaussian();
  std::vector<double> gamma(5, 1.0), beta(5, 0.0);
  Matrix<double> y = z;
  temporal_layernorm(y, gamma.data(), beta.data(), 1e-6);
  for (std::size_t f = 0; f < 5; ++f) {
    double mean = 0.0, var = 0.0;
    for (std::size_t t = 0; t < 200; ++t) mean += y.at(f, t);
    mean /= 200.0;
    for (std::size_t t = 0; t < 200; ++t) {
      var += (y.at(f, t) - mean) * (y.at(f, t) - mean);
    }
    var /= 200.0;
    CHECK(std::abs(mean) < 1e-6);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("temporal layernorm maps constant rows to beta") {
  Matrix<double> z(2, 50, 7.5);
  std::vector<double> gamma = {2.0, 3.0};
  std::vector<double> beta = {-1.0, 0.25};
  temporal_layernorm(z, gamma.data(), beta.data(), 1e-6);
  for (std::size_t t = 0; t < 50; ++t) {
    CHECK(z.at(0, t) == doctest::Approx(-1.0));
    CHECK(z.at(1, t) == doctest::Approx(0.25));
  }
}

TEST_CASE("temporal layernorm is invariant to positive affine input maps") {
  Pcg32 rng(31);
  Matrix<double> z(3, 128);
  for (double& v : z.d) v = rng.next_gaussian();
  Matrix<double> za = z;
  for (double& v : za.d) v = 4.0 * v + 11.0;
  std::vector<double> gamma(3, 1.0), beta(3, 0.0);
  Matrix<double> y = z, ya = za;
  temporal_layernorm(y, gamma.data(), beta.data(), 1e-10);
  temporal_layernorm(ya, gamma.data(), beta.data(), 1e-10);
  for (std::size_t i = 0; i < y.d.size(); ++i) {
    CHECK(std::abs(y.d[i] - ya.d[i]) < 1e-6);
  }
}
