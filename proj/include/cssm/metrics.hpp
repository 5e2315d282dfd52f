#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cssm/errors.hpp"
#include "cssm/mat.hpp"

namespace cssm {

// Scored predictions: one probability row per sample.
struct PredictionSet {
  Matrix<double> scores;             // n_samples x N, rows on the simplex
  std::vector<std::uint32_t> labels;  // class indices

  std::size_t n_classes() const { return scores.cols; }
  std::size_t size() const { return scores.rows; }
  void validate() const;
};

struct MetricsReport {
  double accuracy{0.0};   // percent
  double macro_f1{0.0};   // percent
  double auroc{0.0};      // percent (binary AUROC when N == 2, macro otherwise)
  double auprc{0.0};      // percent, macro one-vs-rest average precision
  double kappa{0.0};      // [-1, 1]
  std::vector<double> per_class_f1;  // percent
  Matrix<double> confusion;          // N x N counts, [true][predicted]
  std::vector<std::string> warnings;
};

// Argmax decision rule; F1_c = 2TP/(2TP+FP+FN), zero-support classes score 0
// with a warning.
Matrix<double> confusion_matrix(const PredictionSet& preds);
std::vector<double> per_class_f1(const Matrix<double>& confusion,
                                 std::vector<std::string>* warnings = nullptr);

// kappa = (p_o - p_e) / (1 - p_e) with marginal-product expected agreement;
// the degenerate p_e == 1 case is defined as 0.
double cohens_kappa(const Matrix<double>& confusion);

// Rank-statistic AUROC (Mann-Whitney with midrank ties) in percent.
// One-vs-rest per class, macro-averaged; the single binary AUROC when N == 2.
// Classes absent from the labels are skipped with a warning.
double auroc_macro(const PredictionSet& preds, std::vector<std::string>* warnings = nullptr);

// Step-integrated average precision (no interpolation), tied scores processed
// as one block; one-vs-rest macro average, in percent.
double auprc_macro(const PredictionSet& preds, std::vector<std::string>* warnings = nullptr);

MetricsReport compute_metrics(const PredictionSet& preds);

struct WilcoxonResult {
  double statistic{0.0};  // W+ = sum of ranks of positive differences
  double p_value{1.0};    // two-sided
  std::size_t n_effective{0};  // pairs after dropping zero differences
  bool exact{false};      // exact enumeration (n <= 12) vs normal approximation
  bool degenerate{false};  // all differences were zero
};

// Paired two-sided Wilcoxon signed-rank test. Zero differences are dropped
// (classical convention), ties get average ranks. Exact null enumeration over
// the 2^n sign assignments for n <= 12, normal approximation with tie
// correction and continuity correction above.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                    const std::vector<double>& b);

// Serialization mirroring the reported table layout.
std::string metrics_to_json(const MetricsReport& r);
std::string metrics_csv_header();
std::string metrics_csv_row(std::size_t fold, const MetricsReport& r);

}  // namespace cssm
