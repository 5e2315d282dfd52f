#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "cssm/model.hpp"
#include "cssm/parallel.hpp"
#include "cssm/rng.hpp"
#include "cssm/signal_types.hpp"

namespace cssm {

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

// -log p[y] from a probability vector (public metric surface).
template <typename Real>
Real cross_entropy(const std::vector<Real>& probs, std::uint32_t y) {
  if (y >= probs.size()) throw ConfigError("cross_entropy: label out of range");
  Real p = std::max(probs[y], std::numeric_limits<Real>::min());
  return -std::log(p);
}

// Stable log-softmax route used in training; also yields d(loss)/d(logits).
template <typename Real>
struct LossGrad {
  Real loss{0};
  std::vector<Real> dlogits;
};

template <typename Real>
LossGrad<Real> cross_entropy_with_grad(const std::vector<Real>& logits, std::uint32_t y) {
  if (y >= logits.size()) throw ConfigError("cross_entropy: label out of range");
  Real mx = logits[0];
  for (Real v : logits) mx = std::max(mx, v);
  Real sum = Real(0);
  for (Real v : logits) sum += std::exp(v - mx);
  Real log_z = mx + std::log(sum);
  LossGrad<Real> out;
  out.loss = log_z - logits[y];
  out.dlogits.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.dlogits[i] = std::exp(logits[i] - log_z);
  }
  out.dlogits[y] -= Real(1);
  return out;
}

// Mean loss over a batch of probability rows.
template <typename Real>
Real cross_entropy_mean(const std::vector<std::vector<Real>>& probs,
                        const std::vector<std::uint32_t>& labels) {
  if (probs.size() != labels.size() || probs.empty()) {
    throw ConfigError("cross_entropy_mean: size mismatch");
  }
  Real acc = Real(0);
  for (std::size_t i = 0; i < probs.size(); ++i) acc += cross_entropy(probs[i], labels[i]);
  return acc / static_cast<Real>(probs.size());
}

// ---------------------------------------------------------------------------
// AdamW
// ---------------------------------------------------------------------------

struct AdamWConfig {
  double lr{1e-4};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
  double weight_decay{0.01};
};

template <typename Real>
struct OptimState {
  AdamWConfig hyper;
  std::vector<Real> m;  // first moment
  std::vector<Real> v;  // second moment
  std::uint64_t step{0};

  void reset(std::size_t n, const AdamWConfig& h) {
    hyper = h;
    m.assign(n, Real(0));
    v.assign(n, Real(0));
    step = 0;
  }
};

// Decoupled weight decay applied before the bias-corrected adaptive update.
template <typename Real>
void adamw_step(std::vector<Real>& params, const std::vector<Real>& grads,
                OptimState<Real>& st) {
  if (params.size() != grads.size() || params.size() != st.m.size()) {
    throw ConfigError("adamw_step: size mismatch");
  }
  const Real lr = Real(st.hyper.lr);
  const Real b1 = Real(st.hyper.beta1);
  const Real b2 = Real(st.hyper.beta2);
  const Real eps = Real(st.hyper.eps);
  const Real wd = Real(st.hyper.weight_decay);
  st.step += 1;
  const Real bc1 = Real(1) - std::pow(b1, Real(static_cast<double>(st.step)));
  const Real bc2 = Real(1) - std::pow(b2, Real(static_cast<double>(st.step)));
  for (std::size_t i = 0; i < params.size(); ++i) {
    params[i] -= lr * wd * params[i];
    const Real g = grads[i];
    st.m[i] = b1 * st.m[i] + (Real(1) - b1) * g;
    st.v[i] = b2 * st.v[i] + (Real(1) - b2) * g * g;
    const Real mhat = st.m[i] / bc1;
    const Real vhat = st.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainConfig {
  std::size_t batch_size{8};
  std::size_t epochs{100};
  AdamWConfig adamw;
  std::uint64_t seed{0};
};

struct EpochStats {
  std::size_t epoch{0};
  double train_loss{0.0};
  double val_acc{0.0};
};

template <typename Real>
struct TrainResult {
  std::vector<EpochStats> history;
  std::vector<Real> best_params;
  std::size_t best_epoch{0};
  double best_val_acc{-1.0};
};

// Scans parameter gradients and names the first segment holding a non-finite
// value.
template <typename Real>
void check_finite_grads(const CorticalModel<Real>& model, const std::vector<Real>& grads) {
  for (const auto& [name, seg] : model.params().segments) {
    for (std::size_t i = 0; i < seg.n; ++i) {
      if (!std::isfinite(grads[seg.off + i])) {
        throw NumericError("non-finite gradient in parameter group '" + name + "'");
      }
    }
  }
}

template <typename Real>
class Trainer {
 public:
  Trainer(CorticalModel<Real>& model, const LabeledDataset& ds, const FoldSplit& split,
          const TrainConfig& tc)
      : model_(model), ds_(ds), tc_(tc) {
    train_idx_ = split.sample_indices(ds, split.train_groups);
    val_idx_ = split.sample_indices(ds, split.val_groups);
    if (train_idx_.empty()) throw ConfigError("training split is empty");
    if (val_idx_.empty()) throw ConfigError("validation split is empty");
    const bool needs_e = model_.config().enable_wavelet_conv &&
                         model_.config().e_branch != EBranch::kNone;
    if (needs_e) {
      e_cache_.resize(ds.size());
      std::vector<std::size_t> all = train_idx_;
      all.insert(all.end(), val_idx_.begin(), val_idx_.end());
      parallel_for(all.size(), [&](std::size_t i) {
        std::size_t idx = all[i];
        e_cache_[idx] = model_.compute_e_branch(to_real(ds_.samples[idx].data));
      });
    }
  }

  // Trains in place starting from the model's current parameters. Pass a
  // populated optimizer state and start_epoch to resume a run; shuffles are
  // derived from (seed, epoch), so resumption reproduces the remaining
  // history bit-exactly.
  TrainResult<Real> run(OptimState<Real>* resume_optim = nullptr,
                        std::size_t start_epoch = 0,
                        double resume_best_acc = -1.0, std::size_t resume_best_epoch = 0,
                        std::vector<Real> resume_best_params = {}) {
    OptimState<Real> local;
    OptimState<Real>& opt = resume_optim != nullptr ? *resume_optim : local;
    if (opt.m.size() != model_.n_params()) {
      opt.reset(model_.n_params(), tc_.adamw);
    }

    TrainResult<Real> result;
    result.best_val_acc = resume_best_acc;
    result.best_epoch = resume_best_epoch;
    result.best_params = std::move(resume_best_params);

    const std::size_t B = tc_.batch_size;
    std::vector<Real> grads(model_.n_params(), Real(0));
    std::vector<std::vector<Real>> sample_grads;

    for (std::size_t epoch = start_epoch; epoch < tc_.epochs; ++epoch) {
      std::vector<std::size_t> order = train_idx_;
      Pcg32 shuffle_rng(tc_.seed, 0xE70000ull + epoch);
      seeded_shuffle(order, shuffle_rng);

      double loss_sum = 0.0;
      for (std::size_t start = 0; start < order.size(); start += B) {
        const std::size_t nb = std::min(B, order.size() - start);
        sample_grads.assign(nb, std::vector<Real>(model_.n_params(), Real(0)));
        std::vector<double> losses(nb, 0.0);
        parallel_for(nb, [&](std::size_t i) {
          const std::size_t idx = order[start + i];
          ForwardCtx<Real> ctx;
          Matrix<Real> x = to_real(ds_.samples[idx].data);
          const Cube<Real>* cache = e_cache_.empty() ? nullptr : &e_cache_[idx];
          model_.forward(x, ctx, cache);
          LossGrad<Real> lg = cross_entropy_with_grad(ctx.logits, ds_.labels[idx]);
          losses[i] = static_cast<double>(lg.loss);
          for (Real& g : lg.dlogits) g /= static_cast<Real>(nb);
          model_.backward(lg.dlogits, ctx, sample_grads[i]);
        });
        std::fill(grads.begin(), grads.end(), Real(0));
        for (std::size_t i = 0; i < nb; ++i) {
          const auto& sg = sample_grads[i];
          for (std::size_t k = 0; k < grads.size(); ++k) grads[k] += sg[k];
          loss_sum += losses[i];
        }
        check_finite_grads(model_, grads);
        adamw_step(model_.params().values, grads, opt);
        model_.clamp_stability(model_.params().values);
      }

      const double val_acc = evaluate_accuracy(val_idx_);
      EpochStats st;
      st.epoch = epoch;
      st.train_loss = loss_sum / static_cast<double>(order.size());
      st.val_acc = val_acc;
      result.history.push_back(st);

      if (val_acc > result.best_val_acc) {
        result.best_val_acc = val_acc;
        result.best_epoch = epoch;
        result.best_params = model_.params().values;
      }
    }
    if (result.best_params.empty()) result.best_params = model_.params().values;
    return result;
  }

  double evaluate_accuracy(const std::vector<std::size_t>& idx) const {
    if (idx.empty()) return 0.0;
    std::vector<int> correct(idx.size(), 0);
    parallel_for(idx.size(), [&](std::size_t i) {
      const std::size_t s = idx[i];
      Matrix<Real> x = to_real(ds_.samples[s].data);
      const Cube<Real>* cache =
          (!e_cache_.empty() && e_cache_[s].numel() > 0) ? &e_cache_[s] : nullptr;
      std::vector<Real> p = model_.predict(x, cache);
      std::size_t arg = 0;
      for (std::size_t c = 1; c < p.size(); ++c) {
        if (p[c] > p[arg]) arg = c;
      }
      correct[i] = (arg == ds_.labels[s]) ? 1 : 0;
    });
    double acc = 0.0;
    for (int c : correct) acc += c;
    return acc / static_cast<double>(idx.size());
  }

  static Matrix<Real> to_real(const Matrix<double>& m) {
    Matrix<Real> out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.d.size(); ++i) out.d[i] = static_cast<Real>(m.d[i]);
    return out;
  }

 private:
  CorticalModel<Real>& model_;
  const LabeledDataset& ds_;
  TrainConfig tc_;
  std::vector<std::size_t> train_idx_, val_idx_;
  std::vector<Cube<Real>> e_cache_;
};

}  // namespace cssm
