#include "cssm/synth.hpp"

#include <cmath>
#include <numbers>

#include "cssm/rng.hpp"

namespace cssm {

LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t M = spec.electrodes;
  const std::size_t T = spec.samples_per_trial;
  const double ratio = std::pow(10.0, spec.snr_db / 10.0);

  // Hann burst over the central half of the window.
  std::vector<double> env(T, 0.0);
  const std::size_t b0 = T / 4;
  const std::size_t b1 = b0 + T / 2;
  for (std::size_t t = b0; t < b1; ++t) {
    double u = static_cast<double>(t - b0) / static_cast<double>(T / 2);
    double s = std::sin(std::numbers::pi * u);
    env[t] = s * s;
  }

  LabeledDataset ds;
  ds.n_classes = spec.n_classes;
  ds.samples.reserve(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const std::uint32_t cls = static_cast<std::uint32_t>(i % spec.n_classes);
    Pcg32 rng(spec.seed, /*stream=*/i);

    SignalTensor x;
    x.fs = spec.fs;
    x.data = Matrix<double>(M, T);
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t t = 0; t < T; ++t) x.data.at(m, t) = rng.next_gaussian();
    }
    for (std::size_t e : spec.informative[cls]) {
      double fc = spec.band_lo_hz + rng.next_double() * (spec.band_hi_hz - spec.band_lo_hz);
      double phase = rng.next_double() * 2.0 * std::numbers::pi;
      // unit-amplitude burst, then scale so its mean power hits the target
      std::vector<double> burst(T);
      double ms = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        burst[t] = env[t] * std::sin(2.0 * std::numbers::pi * fc * static_cast<double>(t) /
                                         spec.fs +
                                     phase);
        ms += burst[t] * burst[t];
      }
      ms /= static_cast<double>(T);
      if (ms <= 0.0) continue;
      double amp = spec.modulation_depth * std::sqrt(ratio / ms);
      for (std::size_t t = 0; t < T; ++t) x.data.at(e, t) += amp * burst[t];
    }
    // quantize to single precision (matches the storage format)
    for (double& v : x.data.d) v = static_cast<double>(static_cast<float>(v));

    ds.samples.push_back(std::move(x));
    ds.labels.push_back(cls);
    ds.group_ids.push_back(static_cast<std::uint32_t>(i));
  }
  ds.validate();
  return ds;
}

}  // namespace cssm
