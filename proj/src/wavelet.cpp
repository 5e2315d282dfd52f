#include "cssm/wavelet.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "cssm/fft.hpp"

namespace cssm {

MorletFilterbank build_morlet_filterbank(std::size_t F, double f_min, double f_max,
                                         double fs, double omega0) {
  if (F < 1) throw ConfigError("filter bank needs F >= 1");
  if (!(f_min > 0.0) || !(f_max > f_min)) throw ConfigError("need 0 < f_min < f_max");
  if (f_max > fs / 2.0) throw ConfigError("f_max exceeds the Nyquist frequency");
  if (!(omega0 > 0.0)) throw ConfigError("omega0 must be positive");

  MorletFilterbank bank;
  bank.omega0 = omega0;
  bank.fs = fs;
  bank.freqs_hz.resize(F);
  bank.scales.resize(F);
  for (std::size_t r = 0; r < F; ++r) {
    double f = f_min + static_cast<double>(r + 1) * (f_max - f_min) / static_cast<double>(F);
    bank.freqs_hz[r] = f;
    bank.scales[r] = omega0 * fs / (2.0 * std::numbers::pi * f);
  }

  // envelope exp(-t^2 / (2 s^2)) < 1e-4 at |t| = s * sqrt(2 ln 1e4)
  const double decay = std::sqrt(2.0 * std::log(1e4));
  const std::size_t half = static_cast<std::size_t>(std::ceil(bank.scales.front() * decay));
  const std::size_t len = 2 * half + 1;

  bank.psi = Matrix<std::complex<double>>(F, len);
  const double pi_quarter = std::pow(std::numbers::pi, -0.25);
  for (std::size_t r = 0; r < F; ++r) {
    const double s = bank.scales[r];
    const double norm = std::sqrt(1.0 / s) * pi_quarter;
    for (std::size_t i = 0; i < len; ++i) {
      double t = static_cast<double>(i) - static_cast<double>(half);
      double u = t / s;
      double envelope = std::exp(-0.5 * u * u);
      bank.psi.at(r, i) = norm * envelope *
                          std::complex<double>(std::cos(omega0 * u), std::sin(omega0 * u));
    }
  }
  return bank;
}

namespace {

Matrix<std::complex<double>> cwt_direct(const std::vector<double>& x,
                                        const MorletFilterbank& bank) {
  const std::size_t T = x.size();
  const std::size_t K = bank.kernel_len();
  const std::ptrdiff_t H = static_cast<std::ptrdiff_t>(K / 2);
  Matrix<std::complex<double>> out(bank.n_rows(), T);
  for (std::size_t r = 0; r < bank.n_rows(); ++r) {
    const std::complex<double>* p = bank.psi.row(r);
    for (std::size_t t = 0; t < T; ++t) {
      std::complex<double> acc(0.0, 0.0);
      for (std::size_t i = 0; i < K; ++i) {
        std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(i) - H;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
        acc += x[static_cast<std::size_t>(src)] * std::conj(p[i]);
      }
      out.at(r, t) = acc;
    }
  }
  return out;
}

Matrix<std::complex<double>> cwt_fft(const std::vector<double>& x,
                                     const MorletFilterbank& bank) {
  const std::size_t T = x.size();
  const std::size_t K = bank.kernel_len();
  const std::size_t H = K / 2;
  const std::size_t L = next_pow2(T + K - 1);

  std::vector<cd> xs(L, cd(0.0, 0.0));
  for (std::size_t t = 0; t < T; ++t) xs[t] = cd(x[t], 0.0);
  fft_pow2(xs, false);

  Matrix<std::complex<double>> out(bank.n_rows(), T);
  std::vector<cd> ker(L);
  for (std::size_t r = 0; r < bank.n_rows(); ++r) {
    // correlation == convolution with the reversed conjugate kernel
    std::fill(ker.begin(), ker.end(), cd(0.0, 0.0));
    const std::complex<double>* p = bank.psi.row(r);
    for (std::size_t i = 0; i < K; ++i) ker[i] = std::conj(p[K - 1 - i]);
    fft_pow2(ker, false);
    for (std::size_t i = 0; i < L; ++i) ker[i] *= xs[i];
    fft_pow2(ker, true);
    for (std::size_t t = 0; t < T; ++t) out.at(r, t) = ker[t + H];
  }
  return out;
}

}  // namespace

Matrix<std::complex<double>> cwt_complex(const std::vector<double>& x,
                                         const MorletFilterbank& bank, CwtPath path) {
  if (x.size() < 2) throw ConfigError("cwt input too short");
  if (path == CwtPath::kAuto) {
    double direct_cost = static_cast<double>(bank.n_rows()) * x.size() * bank.kernel_len();
    path = direct_cost < 4e6 ? CwtPath::kDirect : CwtPath::kFft;
  }
  return path == CwtPath::kDirect ? cwt_direct(x, bank) : cwt_fft(x, bank);
}

Matrix<double> cwt(const std::vector<double>& x, const MorletFilterbank& bank,
                   CwtPath path) {
  Matrix<std::complex<double>> z = cwt_complex(x, bank, path);
  Matrix<double> out(z.rows, z.cols);
  for (std::size_t i = 0; i < z.d.size(); ++i) out.d[i] = std::abs(z.d[i]);
  return out;
}

Matrix<double> stft_branch(const std::vector<double>& x, std::size_t F, double f_min,
                           double f_max, double fs) {
  if (F < 1) throw ConfigError("stft needs F >= 1");
  if (!(f_min > 0.0) || !(f_max > f_min) || f_max > fs / 2.0) {
    throw ConfigError("stft band must satisfy 0 < f_min < f_max <= fs/2");
  }
  const std::size_t T = x.size();
  const std::size_t W = static_cast<std::size_t>(std::llround(fs / 2.0));
  if (W < 2) throw ConfigError("stft window degenerate, fs too low");
  const std::ptrdiff_t C = static_cast<std::ptrdiff_t>(W / 2);

  // per-bin windowed phasor rows: hann(tau) * exp(-i 2 pi f (tau - W/2) / fs)
  Matrix<std::complex<double>> basis(F, W);
  for (std::size_t b = 0; b < F; ++b) {
    double f = f_min + static_cast<double>(b + 1) * (f_max - f_min) / static_cast<double>(F);
    for (std::size_t tau = 0; tau < W; ++tau) {
      double hann =
          0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(tau) /
                                static_cast<double>(W - 1)));
      double ang = -2.0 * std::numbers::pi * f *
                   (static_cast<double>(tau) - static_cast<double>(C)) / fs;
      basis.at(b, tau) = hann * std::complex<double>(std::cos(ang), std::sin(ang));
    }
  }

  Matrix<double> out(F, T, 0.0);
  for (std::size_t b = 0; b < F; ++b) {
    const std::complex<double>* e = basis.row(b);
    for (std::size_t t = 0; t < T; ++t) {
      std::complex<double> acc(0.0, 0.0);
      const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(t) - C;
      for (std::size_t tau = 0; tau < W; ++tau) {
        std::ptrdiff_t src = base + static_cast<std::ptrdiff_t>(tau);
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(T)) continue;
        acc += x[static_cast<std::size_t>(src)] * e[tau];
      }
      out.at(b, t) = std::abs(acc);
    }
  }
  return out;
}

void dump_filterbank_csv(const MorletFilterbank& bank, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path);
  std::fprintf(f, "freq_hz,scale_s,kernel_len\n");
  for (std::size_t r = 0; r < bank.n_rows(); ++r) {
    std::fprintf(f, "%.10g,%.10g,%zu\n", bank.freqs_hz[r], bank.scales[r],
                 bank.kernel_len());
  }
  std::fclose(f);
}

}  // namespace cssm
