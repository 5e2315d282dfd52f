#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "cssm/config_json.hpp"
#include "cssm/train.hpp"

namespace cssm {

// Split provenance carried inside checkpoints so evaluation can rebuild the
// exact fold the model was trained on.
struct SplitInfo {
  std::uint32_t k{0};
  std::uint32_t fold{0};
  std::uint64_t seed{0};
  std::uint32_t test_share{0};
  std::uint32_t val_share{0};
};

template <typename Real>
struct Checkpoint {
  ModelConfig config;
  TrainConfig train;
  SplitInfo split;
  std::vector<Real> params;
  bool has_optim{false};
  OptimState<Real> optim;
  std::uint64_t next_epoch{0};
  double best_val_acc{-1.0};
  std::uint64_t best_epoch{0};
  std::vector<Real> best_params;
};

namespace ckpt_detail {

constexpr char kMagic[8] = {'C', 'S', 'S', 'M', 'C', 'K', '0', '1'};

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, std::size_t& off, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    throw FormatError(std::string("truncated checkpoint while reading ") + what, off);
  }
  off += sizeof(T);
  return v;
}

template <typename Real>
void put_vec(std::ofstream& os, const std::vector<Real>& v) {
  put<std::uint64_t>(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(Real)));
}

template <typename Real>
std::vector<Real> get_vec(std::ifstream& is, std::size_t& off, const char* what) {
  std::uint64_t n = get<std::uint64_t>(is, off, what);
  if (n > (1ull << 33)) throw FormatError("implausible array length in checkpoint", off);
  std::vector<Real> v(n);
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(Real)));
  if (is.gcount() != static_cast<std::streamsize>(n * sizeof(Real))) {
    throw FormatError(std::string("truncated checkpoint while reading ") + what, off);
  }
  off += n * sizeof(Real);
  return v;
}

}  // namespace ckpt_detail

// Peeks the stored scalar width (4 or 8 bytes) so callers can pick the
// matching instantiation.
inline int checkpoint_precision(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  is.read(magic, 8);
  if (is.gcount() != 8 || std::memcmp(magic, ckpt_detail::kMagic, 8) != 0) {
    throw FormatError("bad magic, not a CSSMCK01 checkpoint", 0);
  }
  std::size_t off = 8;
  std::uint32_t version = ckpt_detail::get<std::uint32_t>(is, off, "version");
  if (version != 1) throw FormatError("unsupported checkpoint version", off - 4);
  std::uint8_t width = ckpt_detail::get<std::uint8_t>(is, off, "real width");
  return static_cast<int>(width);
}

template <typename Real>
void save_checkpoint(const Checkpoint<Real>& ck, const std::string& path) {
  using namespace ckpt_detail;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(kMagic, 8);
  put<std::uint32_t>(os, 1u);
  put<std::uint8_t>(os, static_cast<std::uint8_t>(sizeof(Real)));

  nlohmann::json meta;
  meta["model"] = model_config_to_json(ck.config);
  meta["train"] = {{"batch_size", ck.train.batch_size},
                   {"epochs", ck.train.epochs},
                   {"seed", ck.train.seed},
                   {"lr", ck.train.adamw.lr},
                   {"beta1", ck.train.adamw.beta1},
                   {"beta2", ck.train.adamw.beta2},
                   {"eps", ck.train.adamw.eps},
                   {"weight_decay", ck.train.adamw.weight_decay}};
  meta["split"] = {{"k", ck.split.k},
                   {"fold", ck.split.fold},
                   {"seed", ck.split.seed},
                   {"test_share", ck.split.test_share},
                   {"val_share", ck.split.val_share}};
  meta["progress"] = {{"next_epoch", ck.next_epoch},
                      {"best_val_acc", ck.best_val_acc},
                      {"best_epoch", ck.best_epoch}};
  const std::string text = meta.dump();
  put<std::uint32_t>(os, static_cast<std::uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));

  put_vec(os, ck.params);
  put<std::uint8_t>(os, ck.has_optim ? 1 : 0);
  if (ck.has_optim) {
    put_vec(os, ck.optim.m);
    put_vec(os, ck.optim.v);
    put<std::uint64_t>(os, ck.optim.step);
  }
  put<std::uint8_t>(os, ck.best_params.empty() ? 0 : 1);
  if (!ck.best_params.empty()) put_vec(os, ck.best_params);
  if (!os) throw IoError("write failed: " + path);
}

template <typename Real>
Checkpoint<Real> load_checkpoint(const std::string& path) {
  using namespace ckpt_detail;
  int width = checkpoint_precision(path);
  if (width != static_cast<int>(sizeof(Real))) {
    throw ConfigError("checkpoint precision (" + std::to_string(width * 8) +
                      " bit) does not match the requested instantiation");
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path);
  std::size_t off = 0;
  is.seekg(13);  // magic + version + width already validated
  off = 13;

  std::uint32_t json_len = get<std::uint32_t>(is, off, "metadata length");
  std::string text(json_len, '\0');
  is.read(text.data(), json_len);
  if (is.gcount() != static_cast<std::streamsize>(json_len)) {
    throw FormatError("truncated checkpoint while reading metadata", off);
  }
  off += json_len;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint metadata is not valid JSON: ") + e.what(),
                      off);
  }

  Checkpoint<Real> ck;
  ck.config = model_config_from_json(meta.at("model"));
  const auto& tr = meta.at("train");
  ck.train.batch_size = tr.at("batch_size").get<std::size_t>();
  ck.train.epochs = tr.at("epochs").get<std::size_t>();
  ck.train.seed = tr.at("seed").get<std::uint64_t>();
  ck.train.adamw.lr = tr.at("lr").get<double>();
  ck.train.adamw.beta1 = tr.at("beta1").get<double>();
  ck.train.adamw.beta2 = tr.at("beta2").get<double>();
  ck.train.adamw.eps = tr.at("eps").get<double>();
  ck.train.adamw.weight_decay = tr.at("weight_decay").get<double>();
  const auto& sp = meta.at("split");
  ck.split.k = sp.at("k").get<std::uint32_t>();
  ck.split.fold = sp.at("fold").get<std::uint32_t>();
  ck.split.seed = sp.at("seed").get<std::uint64_t>();
  ck.split.test_share = sp.at("test_share").get<std::uint32_t>();
  ck.split.val_share = sp.at("val_share").get<std::uint32_t>();
  const auto& pr = meta.at("progress");
  ck.next_epoch = pr.at("next_epoch").get<std::uint64_t>();
  ck.best_val_acc = pr.at("best_val_acc").get<double>();
  ck.best_epoch = pr.at("best_epoch").get<std::uint64_t>();

  ck.params = get_vec<Real>(is, off, "params");
  std::uint8_t has_optim = get<std::uint8_t>(is, off, "optim flag");
  ck.has_optim = has_optim != 0;
  if (ck.has_optim) {
    ck.optim.hyper = ck.train.adamw;
    ck.optim.m = get_vec<Real>(is, off, "optim.m");
    ck.optim.v = get_vec<Real>(is, off, "optim.v");
    ck.optim.step = get<std::uint64_t>(is, off, "optim.step");
  }
  std::uint8_t has_best = get<std::uint8_t>(is, off, "best flag");
  if (has_best != 0) ck.best_params = get_vec<Real>(is, off, "best params");
  return ck;
}

}  // namespace cssm
