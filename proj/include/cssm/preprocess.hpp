#pragma once

#include "cssm/signal_types.hpp"

namespace cssm {

// Anti-aliased integer decimation to target_fs. The low-pass is a Hamming
// windowed sinc with cutoff 0.9 * (target_fs / 2) and 16R+1 taps for
// decimation factor R; edge taps are renormalized so constants pass through
// unchanged. Output length is floor(T * target_fs / fs). Non-integer rate
// ratios are rejected.
SignalTensor downsample(const SignalTensor& x, double target_fs);

struct BandPowers {
  double in_band{0.0};
  double out_band{0.0};
};

// Periodogram power inside [lo_hz, hi_hz] vs outside ([0, lo) and (hi, fs/2]),
// summed over electrodes.
BandPowers band_powers(const SignalTensor& x, double lo_hz, double hi_hz);

// 10*log10(in-band power / out-of-band power) over the one-sided periodogram.
// Returns +infinity when the out-of-band power is exactly zero and -infinity
// when the in-band power is zero.
double compute_snr(const SignalTensor& x, double lo_hz, double hi_hz);

struct DegradeResult {
  SignalTensor signal;
  bool applied{false};       // false => target was not below the current SNR
  double achieved_db{0.0};   // SNR measured after the operation
};

// Adds seeded broadband Gaussian noise scaled so that compute_snr of the
// result equals target_db. The scale solves the exact quadratic in the noise
// amplitude obtained from the periodograms of signal and noise realization,
// so the achieved SNR matches the target to floating-point accuracy. If the
// target is not below the current SNR the signal is returned unchanged with
// applied=false. Targets below the white-noise floor of the band split
// (unreachable by adding white noise) raise ConfigError.
DegradeResult degrade_snr(const SignalTensor& x, double target_db, std::uint64_t seed,
                          double lo_hz = 1.0, double hi_hz = 100.0);

}  // namespace cssm
