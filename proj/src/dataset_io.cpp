#include "cssm/dataset_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace cssm {

static_assert(std::endian::native == std::endian::little,
              "dataset container assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'S', 'S', 'M', 'D', 'S', '0', '1'};

template <typename T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is, std::size_t& offset, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (is.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    throw FormatError(std::string("truncated file while reading ") + what, offset);
  }
  offset += sizeof(T);
  return v;
}

}  // namespace

void save_dataset(const LabeledDataset& ds, const std::string& path) {
  ds.validate();
  if (ds.samples.empty()) throw ConfigError("refusing to save an empty dataset");
  const std::uint32_t M = static_cast<std::uint32_t>(ds.samples.front().n_electrodes());
  const std::uint32_t T = static_cast<std::uint32_t>(ds.samples.front().n_samples());

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, 1u);
  put<std::uint32_t>(os, M);
  put<std::uint32_t>(os, T);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(ds.samples.size()));
  put<std::uint32_t>(os, ds.n_classes);
  put<double>(os, ds.samples.front().fs);

  std::vector<float> buf(static_cast<std::size_t>(M) * T);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    put<std::uint32_t>(os, ds.labels[i]);
    put<std::uint32_t>(os, ds.group_ids[i]);
    const auto& d = ds.samples[i].data.d;
    for (std::size_t j = 0; j < buf.size(); ++j) buf[j] = static_cast<float>(d[j]);
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!os) throw IoError("write failed: " + path);
}

LabeledDataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  std::size_t offset = 0;

  char magic[8];
  is.read(magic, sizeof(magic));
  if (is.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("bad magic, not a CSSMDS01 dataset", 0);
  }
  offset += sizeof(magic);

  const std::uint32_t version = get<std::uint32_t>(is, offset, "version");
  if (version != 1) throw FormatError("unsupported dataset version", offset - 4);
  const std::uint32_t M = get<std::uint32_t>(is, offset, "M");
  const std::uint32_t T = get<std::uint32_t>(is, offset, "T");
  const std::uint32_t n_samples = get<std::uint32_t>(is, offset, "n_samples");
  const std::uint32_t n_classes = get<std::uint32_t>(is, offset, "n_classes");
  const double fs = get<double>(is, offset, "fs");
  if (M < 1 || T < 2 || n_samples < 1 || n_classes < 1 || !(fs > 0.0)) {
    throw FormatError("invalid dataset header fields", offset);
  }
  const std::uint64_t plane = static_cast<std::uint64_t>(M) * T;
  if (plane > (1ull << 31)) throw FormatError("implausible sample size in header", offset);

  LabeledDataset ds;
  ds.n_classes = n_classes;
  ds.samples.reserve(n_samples);
  std::vector<float> buf(plane);
  for (std::uint32_t i = 0; i < n_samples; ++i) {
    std::uint32_t label = get<std::uint32_t>(is, offset, "label");
    std::uint32_t group = get<std::uint32_t>(is, offset, "group_id");
    if (label >= n_classes) throw FormatError("label out of range", offset - 8);
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (is.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float))) {
      throw FormatError("truncated sample payload", offset);
    }
    offset += buf.size() * sizeof(float);

    SignalTensor x;
    x.fs = fs;
    x.data = Matrix<double>(M, T);
    for (std::size_t j = 0; j < buf.size(); ++j) x.data.d[j] = static_cast<double>(buf[j]);
    ds.samples.push_back(std::move(x));
    ds.labels.push_back(label);
    ds.group_ids.push_back(group);
  }
  ds.validate();
  return ds;
}

void export_sample_csv(const SignalTensor& x, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path);
  for (std::size_t m = 0; m < x.n_electrodes(); ++m) {
    const double* row = x.data.row(m);
    for (std::size_t t = 0; t < x.n_samples(); ++t) {
      std::fprintf(f, t + 1 == x.n_samples() ? "%.9g\n" : "%.9g,", row[t]);
    }
  }
  std::fclose(f);
}

LabeledDataset import_dataset_csv(const std::string& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) throw IoError("cannot open manifest: " + manifest_path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest is not valid JSON: ") + e.what(), 0);
  }
  for (const char* key : {"fs", "n_classes", "samples"}) {
    if (!j.contains(key)) throw ConfigError(std::string("manifest missing key: ") + key);
  }

  const auto base = std::filesystem::path(manifest_path).parent_path();
  LabeledDataset ds;
  ds.n_classes = j.at("n_classes").get<std::uint32_t>();
  const double fs = j.at("fs").get<double>();

  for (const auto& entry : j.at("samples")) {
    const std::string rel = entry.at("path").get<std::string>();
    const std::string csv = (base / rel).string();
    std::ifstream cs(csv);
    if (!cs) throw IoError("cannot open sample csv: " + csv);

    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(cs, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      std::size_t pos = 0;
      while (pos <= line.size()) {
        std::size_t comma = line.find(',', pos);
        std::string tok = line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                      : comma - pos);
        try {
          // quantize to the container precision
          row.push_back(static_cast<double>(static_cast<float>(std::stod(tok))));
        } catch (const std::exception&) {
          throw FormatError("unparseable value in " + csv, pos);
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      if (!rows.empty() && row.size() != rows.front().size()) {
        throw FormatError("ragged rows in " + csv, 0);
      }
      rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().size() < 2) {
      throw FormatError("sample csv must contain M rows x T columns: " + csv, 0);
    }

    SignalTensor x;
    x.fs = fs;
    x.data = Matrix<double>(rows.size(), rows.front().size());
    for (std::size_t m = 0; m < rows.size(); ++m) {
      for (std::size_t t = 0; t < rows[m].size(); ++t) x.data.at(m, t) = rows[m][t];
    }
    ds.samples.push_back(std::move(x));
    ds.labels.push_back(entry.at("label").get<std::uint32_t>());
    ds.group_ids.push_back(entry.at("group").get<std::uint32_t>());
  }
  ds.validate();
  return ds;
}

}  // namespace cssm
