#include "cssm/preprocess.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "cssm/fft.hpp"
#include "cssm/rng.hpp"

namespace cssm {

SignalTensor downsample(const SignalTensor& x, double target_fs) {
  x.validate();
  if (!(target_fs > 0.0)) throw ConfigError("target rate must be positive");
  double ratio = x.fs / target_fs;
  double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 || rounded < 1.0) {
    throw ConfigError("downsample requires an integer decimation ratio, got fs=" +
                      std::to_string(x.fs) + " -> " + std::to_string(target_fs));
  }
  const std::size_t R = static_cast<std::size_t>(rounded);
  const std::size_t T = x.n_samples();
  const std::size_t M = x.n_electrodes();
  const std::size_t T_out = T / R;

  SignalTensor out;
  out.fs = target_fs;
  out.electrode_labels = x.electrode_labels;
  out.data = Matrix<double>(M, T_out);

  if (R == 1) {
    out.data = x.data;
    return out;
  }

  // Hamming windowed sinc, cutoff at 0.9 * (target Nyquist).
  const std::size_t H = 8 * R;
  const double fc = 0.45 / static_cast<double>(R);  // normalized to input rate
  std::vector<double> h(2 * H + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    double k = static_cast<double>(i) - static_cast<double>(H);
    double ideal = (k == 0.0) ? 2.0 * fc
                              : std::sin(2.0 * std::numbers::pi * fc * k) /
                                    (std::numbers::pi * k);
    double w = 0.54 + 0.46 * std::cos(std::numbers::pi * k / static_cast<double>(H));
    h[i] = ideal * w;
    sum += h[i];
  }
  for (double& v : h) v /= sum;  // unity DC gain

  for (std::size_t m = 0; m < M; ++m) {
    const double* src = x.data.row(m);
    double* dst = out.data.row(m);
    for (std::size_t o = 0; o < T_out; ++o) {
      const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(o * R);
      double acc = 0.0;
      double wsum = 0.0;
      for (std::size_t i = 0; i < h.size(); ++i) {
        std::ptrdiff_t t = center + static_cast<std::ptrdiff_t>(i) -
                           static_cast<std::ptrdiff_t>(H);
        if (t < 0 || t >= static_cast<std::ptrdiff_t>(T)) continue;
        acc += h[i] * src[t];
        wsum += h[i];
      }
      dst[o] = acc / wsum;
    }
  }
  return out;
}

BandPowers band_powers(const SignalTensor& x, double lo_hz, double hi_hz) {
  if (!(lo_hz > 0.0) || !(hi_hz > lo_hz) || hi_hz > x.fs / 2.0) {
    throw ConfigError("band must lie within (0, fs/2]");
  }
  const std::size_t T = x.n_samples();
  BandPowers bp;
  for (std::size_t m = 0; m < x.n_electrodes(); ++m) {
    std::vector<cd> buf(T);
    const double* src = x.data.row(m);
    for (std::size_t t = 0; t < T; ++t) buf[t] = cd(src[t], 0.0);
    std::vector<cd> spec = dft(buf, false);
    for (std::size_t k = 0; k <= T / 2; ++k) {
      double f = static_cast<double>(k) * x.fs / static_cast<double>(T);
      double p = std::norm(spec[k]);
      if (f >= lo_hz && f <= hi_hz) {
        bp.in_band += p;
      } else {
        bp.out_band += p;
      }
    }
  }
  return bp;
}

double compute_snr(const SignalTensor& x, double lo_hz, double hi_hz) {
  BandPowers bp = band_powers(x, lo_hz, hi_hz);
  if (bp.out_band == 0.0) return std::numeric_limits<double>::infinity();
  if (bp.in_band == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(bp.in_band / bp.out_band);
}

DegradeResult degrade_snr(const SignalTensor& x, double target_db, std::uint64_t seed,
                          double lo_hz, double hi_hz) {
  x.validate();
  const std::size_t M = x.n_electrodes();
  const std::size_t T = x.n_samples();

  // spectra of the signal
  std::vector<std::vector<cd>> xs(M);
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<cd> buf(T);
    for (std::size_t t = 0; t < T; ++t) buf[t] = cd(x.data.at(m, t), 0.0);
    xs[m] = dft(buf, false);
  }

  auto accumulate = [&](const std::vector<std::vector<cd>>& a,
                        const std::vector<std::vector<cd>>& b, double& in_acc,
                        double& out_acc) {
    in_acc = 0.0;
    out_acc = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t k = 0; k <= T / 2; ++k) {
        double f = static_cast<double>(k) * x.fs / static_cast<double>(T);
        double v = (a[m][k] * std::conj(b[m][k])).real();
        if (f >= lo_hz && f <= hi_hz) {
          in_acc += v;
        } else {
          out_acc += v;
        }
      }
    }
  };

  double S = 0.0, O = 0.0;
  accumulate(xs, xs, S, O);
  DegradeResult res;
  res.signal = x;
  double current = (O == 0.0) ? std::numeric_limits<double>::infinity()
                              : 10.0 * std::log10(S / O);
  if (!(target_db < current - 1e-9)) {
    res.applied = false;
    res.achieved_db = current;
    return res;
  }

  // noise realization and its spectra
  Pcg32 rng(seed, /*stream=*/0x5eed);
  Matrix<double> noise(M, T);
  for (double& v : noise.d) v = rng.next_gaussian();
  std::vector<std::vector<cd>> ns(M);
  for (std::size_t m = 0; m < M; ++m) {
    std::vector<cd> buf(T);
    for (std::size_t t = 0; t < T; ++t) buf[t] = cd(noise.at(m, t), 0.0);
    ns[m] = dft(buf, false);
  }
  double Ns = 0.0, No = 0.0, Xs = 0.0, Xo = 0.0;
  accumulate(ns, ns, Ns, No);
  accumulate(xs, ns, Xs, Xo);

  // band power of x + a*n: (S + 2a*Xs + a^2*Ns) / (O + 2a*Xo + a^2*No) = r
  const double r = std::pow(10.0, target_db / 10.0);
  const double c2 = Ns - r * No;
  const double c1 = 2.0 * (Xs - r * Xo);
  const double c0 = S - r * O;
  double a = -1.0;
  if (c2 == 0.0) {
    if (c1 < 0.0) a = -c0 / c1;
  } else {
    double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc >= 0.0) {
      double sq = std::sqrt(disc);
      double r1 = (-c1 + sq) / (2.0 * c2);
      double r2 = (-c1 - sq) / (2.0 * c2);
      if (r1 > 0.0 && r2 > 0.0) {
        a = std::min(r1, r2);
      } else {
        a = std::max(r1, r2);
      }
    }
  }
  if (!(a > 0.0)) {
    throw ConfigError(
        "target SNR is below the white-noise floor of the band split and cannot "
        "be reached by adding broadband noise");
  }

  for (std::size_t i = 0; i < res.signal.data.d.size(); ++i) {
    res.signal.data.d[i] = x.data.d[i] + a * noise.d[i];
  }
  res.applied = true;
  res.achieved_db = compute_snr(res.signal, lo_hz, hi_hz);
  return res;
}

}  // namespace cssm
