#pragma once

#include <complex>
#include <string>
#include <vector>

#include "cssm/errors.hpp"
#include "cssm/mat.hpp"

namespace cssm {

// Complex Morlet filter bank. Row r analyzes frequency
//   f_r = f_min + (r+1) * (f_max - f_min) / F,   r = 0..F-1,
// with kernel psi(t) = sqrt(1/s) * pi^(-1/4) * exp(i*w0*t/s) * exp(-t^2/(2 s^2))
// and scale s = w0 * fs / (2*pi*f). All rows share one kernel length, chosen so
// the widest (lowest-frequency) Gaussian envelope decays below 1e-4 of its peak.
struct MorletFilterbank {
  Matrix<std::complex<double>> psi;  // F x T_kernel, kernel center at T_kernel/2
  std::vector<double> freqs_hz;      // strictly increasing
  std::vector<double> scales;
  double omega0{6.0};
  double fs{0.0};

  std::size_t n_rows() const { return psi.rows; }
  std::size_t kernel_len() const { return psi.cols; }
};

MorletFilterbank build_morlet_filterbank(std::size_t F, double f_min, double f_max,
                                         double fs, double omega0 = 6.0);

enum class CwtPath { kAuto, kDirect, kFft };

// Magnitude scalogram: complex cross-correlation of x with every bank row at
// unit stride ("same" alignment, zero-padded boundaries), then |.|.
// The direct and FFT evaluation paths agree to ~1e-10 and are selected by
// operation count under kAuto.
Matrix<double> cwt(const std::vector<double>& x, const MorletFilterbank& bank,
                   CwtPath path = CwtPath::kAuto);

// Complex correlation without the magnitude reduction (real part consumers).
Matrix<std::complex<double>> cwt_complex(const std::vector<double>& x,
                                         const MorletFilterbank& bank,
                                         CwtPath path = CwtPath::kAuto);

// Hann-windowed sliding DFT magnitude at hop 1, window length round(fs/2),
// F bins at the same frequency grid as the Morlet bank, "same" alignment.
Matrix<double> stft_branch(const std::vector<double>& x, std::size_t F, double f_min,
                           double f_max, double fs);

// Cross-correlation of x with each kernel row, stride 1, zero padding, no bias.
template <typename Real>
Matrix<Real> conv1d_same(const Real* x, std::size_t T, const Matrix<Real>& kernels) {
  const std::size_t F = kernels.rows;
  const std::size_t K = kernels.cols;
  if (K > T) throw ConfigError("conv1d kernel longer than the signal");
  const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(K / 2);
  Matrix<Real> out(F, T, Real(0));
  for (std::size_t f = 0; f < F; ++f) {
    const Real* w = kernels.row(f);
    Real* y = out.row(f);
    for (std::size_t t = 0; t < T; ++t) {
      Real acc = Real(0);
      const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(t) - c;
      std::size_t k_lo = base < 0 ? static_cast<std::size_t>(-base) : 0;
      std::size_t k_hi = std::min(K, static_cast<std::size_t>(
                                          static_cast<std::ptrdiff_t>(T) - base));
      for (std::size_t k = k_lo; k < k_hi; ++k) {
        acc += w[k] * x[base + static_cast<std::ptrdiff_t>(k)];
      }
      y[t] = acc;
    }
  }
  return out;
}

// Standardizes every row over time, then applies the row's affine pair:
//   y = gamma[f] * (z - mean_f) / sqrt(var_f + eps) + beta[f].
template <typename Real>
void temporal_layernorm(Matrix<Real>& z, const Real* gamma, const Real* beta, Real eps) {
  for (std::size_t f = 0; f < z.rows; ++f) {
    Real* row = z.row(f);
    const std::size_t T = z.cols;
    Real mean = Real(0);
    for (std::size_t t = 0; t < T; ++t) mean += row[t];
    mean /= static_cast<Real>(T);
    Real var = Real(0);
    for (std::size_t t = 0; t < T; ++t) {
      Real d = row[t] - mean;
      var += d * d;
    }
    var /= static_cast<Real>(T);
    Real inv = Real(1) / std::sqrt(var + eps);
    for (std::size_t t = 0; t < T; ++t) {
      row[t] = gamma[f] * (row[t] - mean) * inv + beta[f];
    }
  }
}

// Inspection dump: freq_hz, scale_s, kernel_len.
void dump_filterbank_csv(const MorletFilterbank& bank, const std::string& path);

}  // namespace cssm
