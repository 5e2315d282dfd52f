#include "cssm/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace cssm {

Matrix<double> gradcam_assemble_channel(const Cube<double>& feat, const Cube<double>& dfeat) {
  const std::size_t M = feat.d0, F = feat.d1, T = feat.d2;
  if (dfeat.d0 != M || dfeat.d1 != F || dfeat.d2 != T) {
    throw ConfigError("gradcam: feature/gradient shape mismatch");
  }
  Matrix<double> z(M, T, 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    double* row = z.row(m);
    for (std::size_t f = 0; f < F; ++f) {
      const double* g = dfeat.row(m, f);
      double alpha = 0.0;
      for (std::size_t t = 0; t < T; ++t) alpha += g[t];
      alpha /= static_cast<double>(T);
      const double* v = feat.row(m, f);
      for (std::size_t t = 0; t < T; ++t) row[t] += alpha * v[t];
    }
    for (std::size_t t = 0; t < T; ++t) row[t] = std::max(0.0, row[t]);
  }
  return z;
}

Matrix<double> gradcam_assemble_freq(const Cube<double>& feat, const Cube<double>& dfeat) {
  const std::size_t M = feat.d0, F = feat.d1, T = feat.d2;
  if (dfeat.d0 != M || dfeat.d1 != F || dfeat.d2 != T) {
    throw ConfigError("gradcam: feature/gradient shape mismatch");
  }
  Matrix<double> z(F, T, 0.0);
  for (std::size_t f = 0; f < F; ++f) {
    double* row = z.row(f);
    for (std::size_t m = 0; m < M; ++m) {
      const double* g = dfeat.row(m, f);
      double alpha = 0.0;
      for (std::size_t t = 0; t < T; ++t) alpha += g[t];
      alpha /= static_cast<double>(T);
      const double* u = feat.row(m, f);
      for (std::size_t t = 0; t < T; ++t) row[t] += alpha * u[t];
    }
    for (std::size_t t = 0; t < T; ++t) row[t] = std::max(0.0, row[t]);
  }
  return z;
}

bool classwise_average(const std::vector<ExplanationMap>& maps,
                       const std::vector<std::uint32_t>& predictions,
                       const std::vector<std::uint32_t>& labels, std::uint32_t n,
                       ExplanationMap& out) {
  if (maps.size() != predictions.size() || maps.size() != labels.size()) {
    throw ConfigError("classwise_average: length mismatch");
  }
  out = ExplanationMap{};
  out.class_index = n;
  std::size_t count = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (labels[i] != n || predictions[i] != n) continue;
    const ExplanationMap& m = maps[i];
    if (count == 0) {
      out.z_ch = m.z_ch;
      out.z_freq = m.z_freq;
    } else {
      for (std::size_t k = 0; k < m.z_ch.d.size(); ++k) out.z_ch.d[k] += m.z_ch.d[k];
      for (std::size_t k = 0; k < m.z_freq.d.size(); ++k) out.z_freq.d[k] += m.z_freq.d[k];
    }
    ++count;
  }
  if (count == 0) return false;
  for (double& v : out.z_ch.d) v /= static_cast<double>(count);
  for (double& v : out.z_freq.d) v /= static_cast<double>(count);
  return true;
}

void export_map_csv(const Matrix<double>& map, const std::vector<std::string>& row_labels,
                    const std::string& header, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path);
  std::fprintf(f, "%s", header.c_str());
  for (std::size_t t = 0; t < map.cols; ++t) std::fprintf(f, ",t%zu", t);
  std::fprintf(f, "\n");
  for (std::size_t r = 0; r < map.rows; ++r) {
    std::string label = r < row_labels.size() ? row_labels[r] : std::to_string(r);
    std::fprintf(f, "%s", label.c_str());
    const double* row = map.row(r);
    for (std::size_t t = 0; t < map.cols; ++t) std::fprintf(f, ",%.9g", row[t]);
    std::fprintf(f, "\n");
  }
  std::fclose(f);
}

void export_map_binary(const Matrix<double>& map, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  std::uint32_t rows = static_cast<std::uint32_t>(map.rows);
  std::uint32_t cols = static_cast<std::uint32_t>(map.cols);
  os.write(reinterpret_cast<const char*>(&rows), 4);
  os.write(reinterpret_cast<const char*>(&cols), 4);
  os.write(reinterpret_cast<const char*>(map.d.data()),
           static_cast<std::streamsize>(map.d.size() * sizeof(double)));
}

Matrix<double> import_map_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(is, line)) throw FormatError("empty map csv", 0);
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = line.find(',');  // skip the label column
    if (pos == std::string::npos) throw FormatError("map csv row lacks values", 0);
    ++pos;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      std::string tok = line.substr(
          pos, comma == std::string::npos ? std::string::npos : comma - pos);
      row.push_back(std::stod(tok));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("map csv has no data rows", 0);
  Matrix<double> out(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != out.cols) throw FormatError("ragged map csv", 0);
    for (std::size_t c = 0; c < out.cols; ++c) out.at(r, c) = rows[r][c];
  }
  return out;
}

void export_topo_csv(const Matrix<double>& z_ch,
                     const std::vector<std::string>& electrode_labels,
                     const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open for writing: " + path);
  std::fprintf(f, "electrode_label,score\n");
  for (std::size_t m = 0; m < z_ch.rows; ++m) {
    double mean = 0.0;
    for (std::size_t t = 0; t < z_ch.cols; ++t) mean += z_ch.at(m, t);
    mean /= static_cast<double>(z_ch.cols);
    std::string label =
        m < electrode_labels.size() ? electrode_labels[m] : ("e" + std::to_string(m));
    std::fprintf(f, "%s,%.9g\n", label.c_str(), mean);
  }
  std::fclose(f);
}

void export_heatmap_ppm(const Matrix<double>& map, const std::string& path) {
  double lo = map.d.empty() ? 0.0 : map.d[0];
  double hi = lo;
  for (double v : map.d) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo;
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << "P6\n" << map.cols << " " << map.rows << "\n255\n";
  auto channel = [](double t) {
    return static_cast<unsigned char>(std::clamp(t, 0.0, 1.0) * 255.0 + 0.5);
  };
  for (std::size_t r = 0; r < map.rows; ++r) {
    for (std::size_t c = 0; c < map.cols; ++c) {
      double t = span > 0.0 ? (map.at(r, c) - lo) / span : 0.0;
      unsigned char rgb[3] = {channel(3.0 * t), channel(3.0 * t - 1.0),
                              channel(3.0 * t - 2.0)};
      os.write(reinterpret_cast<const char*>(rgb), 3);
    }
  }
}

}  // namespace cssm
