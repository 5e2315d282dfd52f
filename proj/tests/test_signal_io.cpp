#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "cssm/dataset_io.hpp"
#include "cssm/fft.hpp"
#include "cssm/kfold.hpp"
#include "cssm/preprocess.hpp"
#include "cssm/rng.hpp"
#include "cssm/synth.hpp"

using namespace cssm;

namespace {

// Test-side Welch PSD oracle (Hann segments, 50% overlap), independent of the
// periodogram path used by compute_snr.
double welch_band_power(const double* x, std::size_t T, double fs, double lo, double hi) {
  const std::size_t seg = std::min<std::size_t>(256, T);
  const std::size_t hop = seg / 2;
  std::vector<double> win(seg);
  for (std::size_t i = 0; i < seg; ++i) {
    win[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (seg - 1)));
  }
  double acc = 0.0;
  std::size_t n_seg = 0;
  for (std::size_t start = 0; start + seg <= T; start += hop) {
    std::vector<cd> buf(seg);
    for (std::size_t i = 0; i < seg; ++i) buf[i] = cd(x[start + i] * win[i], 0.0);
    std::vector<cd> spec = dft(buf, false);
    for (std::size_t k = 0; k <= seg / 2; ++k) {
      double f = k * fs / static_cast<double>(seg);
      if (f >= lo && f <= hi) acc += std::norm(spec[k]);
    }
    ++n_seg;
  }
  return acc / std::max<std::size_t>(1, n_seg);
}

SyntheticSpec base_spec() {
  SyntheticSpec s;
  s.electrodes = 6;
  s.samples_per_trial = 500;
  s.fs = 250.0;
  s.n_classes = 2;
  s.informative = {{0, 1}, {2, 3}};
  s.band_lo_hz = 8.0;
  s.band_hi_hz = 12.0;
  s.modulation_depth = 1.0;
  s.snr_db = 5.0;
  s.n_samples = 80;
  s.seed = 42;
  return s;
}

std::filesystem::path fresh_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("cssm_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

SignalTensor make_tone(double freq, double fs, std::size_t T, double amp = 1.0) {
  SignalTensor x;
  x.fs = fs;
  x.data = Matrix<double>(1, T);
  for (std::size_t t = 0; t < T; ++t) {
    x.data.at(0, t) = amp * std::sin(2.0 * std::numbers::pi * freq * t / fs);
  }
  return x;
}

}  // namespace

TEST_CASE("synthetic generator is deterministic given the seed") {
  LabeledDataset a = generate_synthetic(base_spec());
  LabeledDataset b = generate_synthetic(base_spec());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.labels[i] == b.labels[i]);
    CHECK(a.samples[i].data.d == b.samples[i].data.d);
  }
}

TEST_CASE("synthetic class counts are balanced") {
  SyntheticSpec s = base_spec();
  s.n_samples = 81;  // odd on purpose
  LabeledDataset ds = generate_synthetic(s);
  std::size_t c0 = 0, c1 = 0;
  for (auto y : ds.labels) (y == 0 ? c0 : c1)++;
  CHECK(std::llabs(static_cast<long long>(c0) - static_cast<long long>(c1)) <= 1);
}

TEST_CASE("synthetic informative electrodes carry the band power (Welch oracle)") {
  SyntheticSpec spec = base_spec();
  LabeledDataset ds = generate_synthetic(spec);
  double info = 0.0, rest = 0.0;
  std::size_t n_info = 0, n_rest = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& x = ds.samples[i];
    const auto& inf = spec.informative[ds.labels[i]];
    for (std::size_t m = 0; m < x.n_electrodes(); ++m) {
      double p = welch_band_power(x.data.row(m), x.n_samples(), x.fs, 8.0, 12.0);
      bool is_info = std::find(inf.begin(), inf.end(), m) != inf.end();
      if (is_info) {
        info += p;
        ++n_info;
      } else {
        rest += p;
        ++n_rest;
      }
    }
  }
  info /= n_info;
  rest /= n_rest;
  CHECK(info >= 2.0 * rest);
}

TEST_CASE("synthetic depth 0 equalizes class band power") {
  SyntheticSpec s = base_spec();
  s.modulation_depth = 0.0;
  s.n_samples = 100;
  LabeledDataset ds = generate_synthetic(s);
  double p0 = 0.0, p1 = 0.0;
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& x = ds.samples[i];
    for (std::size_t m = 0; m < x.n_electrodes(); ++m) {
      double p = welch_band_power(x.data.row(m), x.n_samples(), x.fs, 8.0, 12.0);
      if (ds.labels[i] == 0) {
        p0 += p;
        ++n0;
      } else {
        p1 += p;
        ++n1;
      }
    }
  }
  double ratio = (p0 / n0) / (p1 / n1);
  CHECK(ratio == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("synthetic rejects bad configuration") {
  SyntheticSpec s = base_spec();
  s.informative = {{0}, {99}};
  CHECK_THROWS_AS(generate_synthetic(s), ConfigError);
  s = base_spec();
  s.band_hi_hz = 200.0;  // beyond Nyquist at fs=250
  CHECK_THROWS_AS(generate_synthetic(s), ConfigError);
}

TEST_CASE("downsample length arithmetic and DC preservation") {
  SignalTensor x;
  x.fs = 1000.0;
  x.data = Matrix<double>(2, 4000, 3.25);
  SignalTensor y = downsample(x, 250.0);
  CHECK(y.fs == 250.0);
  CHECK(y.n_samples() == 1000);
  for (double v : y.data.d) CHECK(v == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("downsample keeps a 10 Hz tone at unit amplitude") {
  SignalTensor x = make_tone(10.0, 1000.0, 4000);
  SignalTensor y = downsample(x, 250.0);
  // least-squares fit against sin/cos at 10 Hz over the central region
  double ss = 0.0, sc = 0.0, cc = 0.0, ys = 0.0, yc = 0.0;
  for (std::size_t t = 200; t < 800; ++t) {
    double ph = 2.0 * std::numbers::pi * 10.0 * t / 250.0;
    double s = std::sin(ph), c = std::cos(ph);
    double v = y.data.at(0, t);
    ss += s * s;
    cc += c * c;
    sc += s * c;
    ys += v * s;
    yc += v * c;
  }
  double det = ss * cc - sc * sc;
  double a = (ys * cc - yc * sc) / det;
  double b = (yc * ss - ys * sc) / det;
  double amp = std::hypot(a, b);
  CHECK(amp == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("downsample is linear") {
  Pcg32 rng(7);
  SignalTensor x = make_tone(17.0, 1000.0, 1200);
  SignalTensor y = make_tone(3.0, 1000.0, 1200, 0.5);
  for (std::size_t t = 0; t < 1200; ++t) {
    x.data.at(0, t) += 0.1 * rng.next_gaussian();
    y.data.at(0, t) += 0.1 * rng.next_gaussian();
  }
  const double a = 1.7, b = -0.6;
  SignalTensor mix = x;
  for (std::size_t t = 0; t < 1200; ++t) {
    mix.data.at(0, t) = a * x.data.at(0, t) + b * y.data.at(0, t);
  }
  SignalTensor dx = downsample(x, 250.0);
  SignalTensor dy = downsample(y, 250.0);
  SignalTensor dmix = downsample(mix, 250.0);
  double max_rel = 0.0;
  for (std::size_t t = 0; t < dmix.n_samples(); ++t) {
    double expect = a * dx.data.at(0, t) + b * dy.data.at(0, t);
    double got = dmix.data.at(0, t);
    max_rel = std::max(max_rel, std::abs(got - expect) /
                                    std::max(1.0, std::abs(expect)));
  }
  CHECK(max_rel < 1e-10);
}

TEST_CASE("downsample rejects non-integer ratios") {
  SignalTensor x = make_tone(5.0, 1000.0, 1000);
  CHECK_THROWS_AS(downsample(x, 300.0), ConfigError);
}

TEST_CASE("k-fold reproduces the 54-group protocol with explicit shares") {
  LabeledDataset ds;
  ds.n_classes = 2;
  for (std::uint32_t g = 0; g < 54; ++g) {
    SignalTensor x;
    x.fs = 100.0;
    x.data = Matrix<double>(1, 4, static_cast<double>(g));
    ds.samples.push_back(x);
    ds.labels.push_back(g % 2);
    ds.group_ids.push_back(g);
  }
  auto folds = kfold_split(ds, 8, 11, /*test_share=*/5, /*val_share=*/5);
  REQUIRE(folds.size() == 8);
  for (const auto& f : folds) {
    CHECK(f.train_groups.size() == 44);
    CHECK(f.val_groups.size() == 5);
    CHECK(f.test_groups.size() == 5);
  }
}

TEST_CASE("k-fold default mode: 8 groups, k=8 gives 6/1/1") {
  LabeledDataset ds;
  ds.n_classes = 2;
  for (std::uint32_t g = 0; g < 8; ++g) {
    SignalTensor x;
    x.fs = 100.0;
    x.data = Matrix<double>(1, 4, 0.0);
    ds.samples.push_back(x);
    ds.labels.push_back(g % 2);
    ds.group_ids.push_back(g);
  }
  auto folds = kfold_split(ds, 8, 3);
  std::multiset<std::uint32_t> test_union;
  for (const auto& f : folds) {
    CHECK(f.train_groups.size() == 6);
    CHECK(f.val_groups.size() == 1);
    CHECK(f.test_groups.size() == 1);
    for (auto g : f.test_groups) test_union.insert(g);
    // group-level disjointness
    for (auto g : f.test_groups) {
      CHECK(std::find(f.train_groups.begin(), f.train_groups.end(), g) ==
            f.train_groups.end());
      CHECK(std::find(f.val_groups.begin(), f.val_groups.end(), g) == f.val_groups.end());
    }
    for (auto g : f.val_groups) {
      CHECK(std::find(f.train_groups.begin(), f.train_groups.end(), g) ==
            f.train_groups.end());
    }
  }
  // with k == group count every group is tested exactly once
  CHECK(test_union.size() == 8);
  for (std::uint32_t g = 0; g < 8; ++g) CHECK(test_union.count(g) == 1);
}

TEST_CASE("k-fold rejects k beyond the group count") {
  LabeledDataset ds;
  ds.n_classes = 2;
  for (std::uint32_t g = 0; g < 4; ++g) {
    SignalTensor x;
    x.fs = 100.0;
    x.data = Matrix<double>(1, 4, 0.0);
    ds.samples.push_back(x);
    ds.labels.push_back(g % 2);
    ds.group_ids.push_back(g);
  }
  CHECK_THROWS_AS(kfold_split(ds, 5, 0), ConfigError);
}

TEST_CASE("snr of pure tones lands in the expected band") {
  SignalTensor tone10 = make_tone(10.0, 250.0, 1000);
  CHECK(compute_snr(tone10, 1.0, 100.0) >= 40.0);
  SignalTensor tone120 = make_tone(120.0, 250.0, 1000);
  CHECK(compute_snr(tone120, 1.0, 100.0) <= -20.0);
}

TEST_CASE("snr of white noise matches the bandwidth ratio") {
  Pcg32 rng(5);
  SignalTensor x;
  x.fs = 250.0;
  x.data = Matrix<double>(4, 8192);
  for (double& v : x.data.d) v = rng.next_gaussian();
  double expected = 10.0 * std::log10(99.0 / 26.0);
  CHECK(compute_snr(x, 1.0, 100.0) == doctest::Approx(expected).epsilon(0.1));
}

TEST_CASE("degrade_snr hits the target and is deterministic") {
  // fs=1000 so that the 1-100 Hz band split admits low targets
  Pcg32 rng(9);
  SignalTensor x = make_tone(20.0, 1000.0, 4096, 5.0);
  for (std::size_t t = 0; t < x.n_samples(); ++t) x.data.at(0, t) += 0.05 * rng.next_gaussian();
  double before = compute_snr(x, 1.0, 100.0);
  REQUIRE(before > 10.0);

  DegradeResult r0 = degrade_snr(x, 0.0, 123);
  CHECK(r0.applied);
  double measured = compute_snr(r0.signal, 1.0, 100.0);
  CHECK(measured >= -0.5);
  CHECK(measured <= 0.5);

  DegradeResult r1 = degrade_snr(x, 0.0, 123);
  CHECK(r0.signal.data.d == r1.signal.data.d);

  for (double target : {8.0, 4.0, 1.0}) {
    DegradeResult r = degrade_snr(x, target, 77);
    CHECK(compute_snr(r.signal, 1.0, 100.0) == doctest::Approx(target).epsilon(0.05));
  }
}

TEST_CASE("degrade_snr to the same target twice is a near no-op") {
  SignalTensor x = make_tone(20.0, 1000.0, 4096, 5.0);
  DegradeResult first = degrade_snr(x, 5.0, 11);
  REQUIRE(first.applied);
  DegradeResult second = degrade_snr(first.signal, 5.0, 12);
  CHECK_FALSE(second.applied);
  double d0 = compute_snr(first.signal, 1.0, 100.0);
  double d1 = compute_snr(second.signal, 1.0, 100.0);
  CHECK(std::abs(d1 - d0) <= 0.5);
}

TEST_CASE("dataset binary round trip is bit identical") {
  auto dir = fresh_dir("io_roundtrip");
  LabeledDataset ds = generate_synthetic(base_spec());
  std::string path = (dir / "ds.bin").string();
  save_dataset(ds, path);
  LabeledDataset back = load_dataset(path);
  REQUIRE(back.size() == ds.size());
  CHECK(back.n_classes == ds.n_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.labels[i] == ds.labels[i]);
    CHECK(back.group_ids[i] == ds.group_ids[i]);
    CHECK(back.samples[i].fs == ds.samples[i].fs);
    CHECK(back.samples[i].data.d == ds.samples[i].data.d);
  }
}

TEST_CASE("truncated dataset raises a format error with context") {
  auto dir = fresh_dir("io_truncated");
  SyntheticSpec s = base_spec();
  s.n_samples = 4;
  LabeledDataset ds = generate_synthetic(s);
  std::string path = (dir / "ds.bin").string();
  save_dataset(ds, path);
  auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full - 100);
  CHECK_THROWS_AS(load_dataset(path), FormatError);
}

TEST_CASE("bad magic raises a format error") {
  auto dir = fresh_dir("io_magic");
  std::string path = (dir / "junk.bin").string();
  std::ofstream(path) << "definitely not a dataset";
  CHECK_THROWS_AS(load_dataset(path), FormatError);
}

TEST_CASE("csv import equals the binary path") {
  auto dir = fresh_dir("io_csv");
  SyntheticSpec s = base_spec();
  s.n_samples = 6;
  s.electrodes = 3;
  s.informative = {{0}, {1}};
  s.samples_per_trial = 40;
  LabeledDataset ds = generate_synthetic(s);

  std::string manifest = (dir / "manifest.json").string();
  std::ofstream mf(manifest);
  mf << "{\"fs\": " << ds.samples[0].fs << ", \"n_classes\": " << ds.n_classes
     << ", \"samples\": [";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::string name = "s" + std::to_string(i) + ".csv";
    export_sample_csv(ds.samples[i], (dir / name).string());
    mf << (i ? "," : "") << "{\"path\": \"" << name << "\", \"label\": " << ds.labels[i]
       << ", \"group\": " << ds.group_ids[i] << "}";
  }
  mf << "]}";
  mf.close();

  std::string bin = (dir / "ds.bin").string();
  save_dataset(ds, bin);
  LabeledDataset from_bin = load_dataset(bin);
  LabeledDataset from_csv = import_dataset_csv(manifest);
  REQUIRE(from_csv.size() == from_bin.size());
  for (std::size_t i = 0; i < from_bin.size(); ++i) {
    CHECK(from_csv.labels[i] == from_bin.labels[i]);
    CHECK(from_csv.samples[i].data.d == from_bin.samples[i].data.d);
  }
}
