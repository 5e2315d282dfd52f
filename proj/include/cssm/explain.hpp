#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cssm/model.hpp"

namespace cssm {

// Non-negative saliency maps for one sample and one output class.
// z_ch: per-electrode spatio-temporal map [M x T] from the Channel-SSM
// feature V^(L); z_freq: per-frequency temporal map [F x T] from the
// Frequency-SSM feature U^(L). A map is empty (0 x 0) when its source branch
// is disabled in the model configuration.
struct ExplanationMap {
  Matrix<double> z_ch;
  Matrix<double> z_freq;
  std::uint32_t class_index{0};
  std::size_t sample_id{0};
};

enum class LogitMode { kPreSoftmax, kPostSoftmax };

// Map assembly from a feature cube and the gradient of the class score with
// respect to it:
//   alpha[f][m] = (1/T) sum_t dfeat[m][f][t]
//   channel map row m = ReLU(sum_f alpha[f][m] * feat[m][f][:])
//   frequency map row f = ReLU(sum_m alpha[f][m] * feat[m][f][:])
// Exposed separately so tests can drive it with externally computed
// gradients.
Matrix<double> gradcam_assemble_channel(const Cube<double>& feat, const Cube<double>& dfeat);
Matrix<double> gradcam_assemble_freq(const Cube<double>& feat, const Cube<double>& dfeat);

namespace explain_detail {

template <typename Real>
Cube<double> to_double(const Cube<Real>& c) {
  Cube<double> out(c.d0, c.d1, c.d2);
  for (std::size_t i = 0; i < c.d.size(); ++i) out.d[i] = static_cast<double>(c.d[i]);
  return out;
}

}  // namespace explain_detail

// Runs a recorded forward pass and one backward pass seeded at class n,
// then assembles both maps. The class score is the pre-softmax logit by
// default (post-softmax probability selectable).
template <typename Real>
ExplanationMap gradcam(const CorticalModel<Real>& model, const Matrix<Real>& x,
                       std::uint32_t n, LogitMode mode = LogitMode::kPreSoftmax,
                       const Cube<Real>* e_cache = nullptr) {
  const ModelConfig& cfg = model.config();
  if (n >= cfg.n_classes) throw ConfigError("gradcam: class index out of range");

  ForwardCtx<Real> ctx;
  std::vector<Real> probs = model.forward(x, ctx, e_cache);

  std::vector<Real> dlogits(cfg.n_classes, Real(0));
  if (mode == LogitMode::kPreSoftmax) {
    dlogits[n] = Real(1);
  } else {
    // d p_n / d z_j = p_n (delta_nj - p_j)
    for (std::size_t j = 0; j < cfg.n_classes; ++j) {
      dlogits[j] = probs[n] * ((j == n ? Real(1) : Real(0)) - probs[j]);
    }
  }

  std::vector<Real> grads(model.n_params(), Real(0));
  BranchFeatureGrads<Real> fg;
  model.backward(dlogits, ctx, grads, &fg);

  ExplanationMap map;
  map.class_index = n;
  if (cfg.enable_channel_ssm) {
    map.z_ch = gradcam_assemble_channel(explain_detail::to_double(ctx.v_stages.back()),
                                        explain_detail::to_double(fg.d_v_last));
  }
  if (cfg.enable_frequency_ssm) {
    map.z_freq = gradcam_assemble_freq(explain_detail::to_double(ctx.u_stages.back()),
                                       explain_detail::to_double(fg.d_u_last));
  }
  return map;
}

// Arithmetic mean over the maps of samples classified correctly as class n
// ("successful cases"). Returns false when no such sample exists.
bool classwise_average(const std::vector<ExplanationMap>& maps,
                       const std::vector<std::uint32_t>& predictions,
                       const std::vector<std::uint32_t>& labels, std::uint32_t n,
                       ExplanationMap& out);

// CSV schemas: z_ch rows carry an electrode-label column, z_freq rows a
// frequency-Hz column. The binary dump is M/F x T doubles after two u32 dims.
void export_map_csv(const Matrix<double>& map, const std::vector<std::string>& row_labels,
                    const std::string& header, const std::string& path);
void export_map_binary(const Matrix<double>& map, const std::string& path);
Matrix<double> import_map_csv(const std::string& path);

// Per-electrode aggregate (temporal mean of each z_ch row) for external
// topographic plotting: electrode_label,score rows.
void export_topo_csv(const Matrix<double>& z_ch,
                     const std::vector<std::string>& electrode_labels,
                     const std::string& path);

// Min-max normalized PPM heatmap using the classic "hot" colormap
// (r = 3t, g = 3t-1, b = 3t-2, clamped to [0,1]).
void export_heatmap_ppm(const Matrix<double>& map, const std::string& path);

}  // namespace cssm
