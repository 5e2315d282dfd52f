#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cssm/errors.hpp"
#include "cssm/mat.hpp"

namespace cssm {

// One multichannel recording: data[m][t] for M electrodes over T samples.
struct SignalTensor {
  Matrix<double> data;  // M x T
  double fs{0.0};       // sampling rate in Hz
  std::vector<std::string> electrode_labels;  // optional, size M when present

  std::size_t n_electrodes() const { return data.rows; }
  std::size_t n_samples() const { return data.cols; }

  void validate() const {
    if (data.rows < 1 || data.cols < 2) throw ConfigError("signal needs M >= 1, T >= 2");
    if (!(fs > 0.0)) throw ConfigError("sampling rate must be positive");
    for (double v : data.d) {
      if (!std::isfinite(v)) throw ConfigError("signal contains non-finite values");
    }
    if (!electrode_labels.empty() && electrode_labels.size() != data.rows) {
      throw ConfigError("electrode label count does not match electrode count");
    }
  }
};

struct LabeledDataset {
  std::vector<SignalTensor> samples;     // uniform M, T, fs
  std::vector<std::uint32_t> labels;     // class indices in [0, n_classes)
  std::vector<std::uint32_t> group_ids;  // subject or session identifier per sample
  std::uint32_t n_classes{0};

  std::size_t size() const { return samples.size(); }

  void validate() const {
    if (samples.size() != labels.size() || samples.size() != group_ids.size()) {
      throw ConfigError("dataset sample/label/group counts differ");
    }
    if (n_classes == 0) throw ConfigError("dataset needs n_classes >= 1");
    for (std::uint32_t y : labels) {
      if (y >= n_classes) throw ConfigError("label out of range");
    }
    if (!samples.empty()) {
      const auto& first = samples.front();
      for (const auto& s : samples) {
        if (s.data.rows != first.data.rows || s.data.cols != first.data.cols ||
            s.fs != first.fs) {
          throw ConfigError("dataset samples have inconsistent dimensions");
        }
      }
    }
  }

  // Sorted distinct group ids.
  std::vector<std::uint32_t> distinct_groups() const;
};

// One fold of a grouped k-fold split. Membership is at the group level.
struct FoldSplit {
  std::size_t fold_index{0};
  std::vector<std::uint32_t> train_groups;
  std::vector<std::uint32_t> val_groups;
  std::vector<std::uint32_t> test_groups;

  std::vector<std::size_t> sample_indices(const LabeledDataset& ds,
                                          const std::vector<std::uint32_t>& groups) const;
};

// Parameters of the synthetic motor-imagery style generator: class-specific
// electrodes carry a band-limited burst against broadband Gaussian noise.
struct SyntheticSpec {
  std::size_t electrodes{8};             // M
  std::size_t samples_per_trial{1000};   // T
  double fs{250.0};
  std::uint32_t n_classes{2};
  std::vector<std::vector<std::size_t>> informative;  // per class, electrode indices
  double band_lo_hz{8.0};
  double band_hi_hz{12.0};
  double modulation_depth{1.0};
  double snr_db{5.0};       // burst power relative to noise power (on informative rows)
  std::size_t n_samples{100};
  std::uint64_t seed{0};

  void validate() const {
    if (electrodes < 1 || samples_per_trial < 2) throw ConfigError("invalid synthetic dims");
    if (n_classes < 1) throw ConfigError("need at least one class");
    if (informative.size() != n_classes) {
      throw ConfigError("informative electrode lists must match n_classes");
    }
    for (const auto& cls : informative) {
      for (std::size_t e : cls) {
        if (e >= electrodes) throw ConfigError("informative electrode index out of range");
      }
    }
    if (!(band_lo_hz > 0.0) || !(band_hi_hz > band_lo_hz) || band_hi_hz >= fs / 2.0) {
      throw ConfigError("carrier band must lie within (0, fs/2)");
    }
    if (modulation_depth < 0.0) throw ConfigError("modulation depth must be >= 0");
    if (n_samples < 1) throw ConfigError("need n_samples >= 1");
  }
};

}  // namespace cssm
