#include "cssm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cssm {

void PredictionSet::validate() const {
  if (scores.rows != labels.size() || scores.rows == 0) {
    throw ConfigError("prediction set: score/label count mismatch");
  }
  if (scores.cols < 2) throw ConfigError("prediction set needs at least two classes");
  for (std::size_t i = 0; i < scores.rows; ++i) {
    if (labels[i] >= scores.cols) throw ConfigError("prediction set: label out of range");
    double sum = 0.0;
    for (std::size_t c = 0; c < scores.cols; ++c) {
      double v = scores.at(i, c);
      if (!(v >= -1e-9)) throw ConfigError("prediction set: negative score");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ConfigError("prediction set: scores do not lie on the simplex");
    }
  }
}

Matrix<double> confusion_matrix(const PredictionSet& preds) {
  preds.validate();
  const std::size_t N = preds.n_classes();
  Matrix<double> cm(N, N, 0.0);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < N; ++c) {
      if (preds.scores.at(i, c) > preds.scores.at(i, arg)) arg = c;
    }
    cm.at(preds.labels[i], arg) += 1.0;
  }
  return cm;
}

std::vector<double> per_class_f1(const Matrix<double>& cm,
                                 std::vector<std::string>* warnings) {
  const std::size_t N = cm.rows;
  std::vector<double> f1(N, 0.0);
  for (std::size_t c = 0; c < N; ++c) {
    double tp = cm.at(c, c);
    double fn = 0.0, fp = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      if (j != c) {
        fn += cm.at(c, j);
        fp += cm.at(j, c);
      }
    }
    double denom = 2.0 * tp + fp + fn;
    if (denom == 0.0) {
      f1[c] = 0.0;
      if (warnings != nullptr) {
        warnings->push_back("class " + std::to_string(c) + " has zero support; F1 set to 0");
      }
    } else {
      f1[c] = 100.0 * (2.0 * tp) / denom;
    }
  }
  return f1;
}

double cohens_kappa(const Matrix<double>& cm) {
  const std::size_t N = cm.rows;
  double total = 0.0, diag = 0.0;
  std::vector<double> row(N, 0.0), col(N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) {
      double v = cm.at(i, j);
      total += v;
      row[i] += v;
      col[j] += v;
      if (i == j) diag += v;
    }
  }
  if (total <= 0.0) throw ConfigError("kappa: empty confusion matrix");
  double po = diag / total;
  double pe = 0.0;
  for (std::size_t i = 0; i < N; ++i) pe += (row[i] / total) * (col[i] / total);
  if (std::abs(1.0 - pe) < 1e-15) return 0.0;  // degenerate single-cell case
  return (po - pe) / (1.0 - pe);
}

namespace {

// Midranks of v (ties share the average rank), 1-based.
std::vector<double> midranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

// Binary AUROC from scores/positives via the Mann-Whitney statistic.
double binary_auroc(const std::vector<double>& scores, const std::vector<bool>& pos) {
  std::size_t n_pos = 0;
  for (bool b : pos) n_pos += b ? 1 : 0;
  std::size_t n_neg = pos.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return -1.0;
  std::vector<double> ranks = midranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (pos[i]) rank_sum += ranks[i];
  }
  double u = rank_sum - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Average precision with tied scores handled as one block.
double binary_average_precision(const std::vector<double>& scores,
                                const std::vector<bool>& pos) {
  std::size_t n_pos = 0;
  for (bool b : pos) n_pos += b ? 1 : 0;
  if (n_pos == 0) return -1.0;
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double tp = 0.0, fp = 0.0, ap = 0.0, prev_recall = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    double tp_block = 0.0, fp_block = 0.0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      if (pos[idx[j]]) {
        tp_block += 1.0;
      } else {
        fp_block += 1.0;
      }
      ++j;
    }
    tp += tp_block;
    fp += fp_block;
    double recall = tp / static_cast<double>(n_pos);
    double precision = tp / (tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

}  // namespace

double auroc_macro(const PredictionSet& preds, std::vector<std::string>* warnings) {
  preds.validate();
  const std::size_t N = preds.n_classes();
  const std::size_t n = preds.size();

  auto column = [&](std::size_t c) {
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = preds.scores.at(i, c);
    return s;
  };
  auto positives = [&](std::size_t c) {
    std::vector<bool> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = preds.labels[i] == c;
    return p;
  };

  if (N == 2) {
    double auc = binary_auroc(column(1), positives(1));
    if (auc < 0.0) throw ConfigError("auroc: a class is absent from the labels");
    return 100.0 * auc;
  }
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < N; ++c) {
    double auc = binary_auroc(column(c), positives(c));
    if (auc < 0.0) {
      if (warnings != nullptr) {
        warnings->push_back("class " + std::to_string(c) +
                            " absent from labels; skipped in macro AUROC");
      }
      continue;
    }
    acc += auc;
    ++used;
  }
  if (used == 0) throw ConfigError("auroc: no class has both positives and negatives");
  return 100.0 * acc / static_cast<double>(used);
}

double auprc_macro(const PredictionSet& preds, std::vector<std::string>* warnings) {
  preds.validate();
  const std::size_t N = preds.n_classes();
  const std::size_t n = preds.size();
  double acc = 0.0;
  std::size_t used = 0;
  for (std::size_t c = 0; c < N; ++c) {
    std::vector<double> s(n);
    std::vector<bool> p(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = preds.scores.at(i, c);
      p[i] = preds.labels[i] == c;
    }
    double ap = binary_average_precision(s, p);
    if (ap < 0.0) {
      if (warnings != nullptr) {
        warnings->push_back("class " + std::to_string(c) +
                            " absent from labels; skipped in macro AUPRC");
      }
      continue;
    }
    acc += ap;
    ++used;
  }
  if (used == 0) throw ConfigError("auprc: no positive class present");
  return 100.0 * acc / static_cast<double>(used);
}

MetricsReport compute_metrics(const PredictionSet& preds) {
  MetricsReport r;
  r.confusion = confusion_matrix(preds);
  double total = 0.0, diag = 0.0;
  for (std::size_t i = 0; i < r.confusion.rows; ++i) {
    for (std::size_t j = 0; j < r.confusion.cols; ++j) {
      total += r.confusion.at(i, j);
      if (i == j) diag += r.confusion.at(i, j);
    }
  }
  r.accuracy = 100.0 * diag / total;
  r.per_class_f1 = per_class_f1(r.confusion, &r.warnings);
  r.macro_f1 = 0.0;
  for (double f : r.per_class_f1) r.macro_f1 += f;
  r.macro_f1 /= static_cast<double>(r.per_class_f1.size());
  r.auroc = auroc_macro(preds, &r.warnings);
  r.auprc = auprc_macro(preds, &r.warnings);
  r.kappa = cohens_kappa(r.confusion);
  return r;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw ConfigError("wilcoxon: paired vectors of equal nonzero length required");
  }
  std::vector<double> abs_d;
  std::vector<int> sign;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (d != 0.0) {
      abs_d.push_back(std::abs(d));
      sign.push_back(d > 0.0 ? 1 : -1);
    }
  }
  WilcoxonResult res;
  res.n_effective = abs_d.size();
  if (abs_d.empty()) {
    res.degenerate = true;
    res.p_value = 1.0;
    return res;
  }

  std::vector<double> ranks = midranks(abs_d);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (sign[i] > 0) w_plus += ranks[i];
  }
  res.statistic = w_plus;
  const std::size_t n = abs_d.size();

  if (n <= 12) {
    // exact null: enumerate all sign assignments
    res.exact = true;
    const std::uint64_t total = 1ull << n;
    std::uint64_t le = 0, ge = 0;
    const double eps = 1e-12;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double w = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (1ull << i)) w += ranks[i];
      }
      if (w <= w_plus + eps) ++le;
      if (w >= w_plus - eps) ++ge;
    }
    double p_le = static_cast<double>(le) / static_cast<double>(total);
    double p_ge = static_cast<double>(ge) / static_cast<double>(total);
    res.p_value = std::min(1.0, 2.0 * std::min(p_le, p_ge));
    return res;
  }

  // normal approximation with tie correction and continuity correction
  double mean = static_cast<double>(n) * (n + 1) / 4.0;
  double var = static_cast<double>(n) * (n + 1) * (2.0 * n + 1.0) / 24.0;
  // ties: subtract sum(t^3 - t)/48 over tie groups
  {
    std::vector<double> sorted = abs_d;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      double t = static_cast<double>(j - i + 1);
      if (t > 1.0) var -= (t * t * t - t) / 48.0;
      i = j + 1;
    }
  }
  if (var <= 0.0) {
    res.degenerate = true;
    res.p_value = 1.0;
    return res;
  }
  double num = std::abs(w_plus - mean) - 0.5;
  if (num < 0.0) num = 0.0;
  double z = num / std::sqrt(var);
  res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

std::string metrics_to_json(const MetricsReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "{\"accuracy\": " << r.accuracy << ", \"macro_f1\": " << r.macro_f1
     << ", \"auroc\": " << r.auroc << ", \"auprc\": " << r.auprc
     << ", \"kappa\": " << r.kappa << ", \"per_class_f1\": [";
  for (std::size_t i = 0; i < r.per_class_f1.size(); ++i) {
    os << (i ? ", " : "") << r.per_class_f1[i];
  }
  os << "], \"confusion\": [";
  for (std::size_t i = 0; i < r.confusion.rows; ++i) {
    os << (i ? ", [" : "[");
    for (std::size_t j = 0; j < r.confusion.cols; ++j) {
      os << (j ? ", " : "") << r.confusion.at(i, j);
    }
    os << "]";
  }
  os << "], \"warnings\": [";
  for (std::size_t i = 0; i < r.warnings.size(); ++i) {
    os << (i ? ", \"" : "\"") << r.warnings[i] << "\"";
  }
  os << "]}";
  return os.str();
}

std::string metrics_csv_header() { return "fold,accuracy,macro_f1,auroc,auprc,kappa"; }

std::string metrics_csv_row(std::size_t fold, const MetricsReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << fold << "," << r.accuracy << "," << r.macro_f1 << "," << r.auroc << "," << r.auprc
     << "," << r.kappa;
  return os.str();
}

}  // namespace cssm
