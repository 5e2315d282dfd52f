#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cssm/model.hpp"
#include "cssm/train.hpp"

namespace cssm_test {

struct GradCheckResult {
  double max_rel{0.0};
  std::string worst_group;
  double analytic{0.0};
  double numeric{0.0};
};

// Central-difference check of d(loss)/d(theta) for every trainable scalar.
// The E-branch features are parameter-free, so a precomputed cache keeps the
// finite-difference loop honest and fast.
inline GradCheckResult grad_check_all(cssm::CorticalModel<double>& model,
                                      const cssm::Matrix<double>& x, std::uint32_t label,
                                      double step = 1e-5) {
  using namespace cssm;
  Cube<double> e_cache;
  const Cube<double>* cache = nullptr;
  if (model.config().enable_wavelet_conv && model.config().e_branch != EBranch::kNone) {
    e_cache = model.compute_e_branch(x);
    cache = &e_cache;
  }

  ForwardCtx<double> ctx;
  model.forward(x, ctx, cache);
  LossGrad<double> lg = cross_entropy_with_grad(ctx.logits, label);
  std::vector<double> analytic(model.n_params(), 0.0);
  model.backward(lg.dlogits, ctx, analytic);

  auto loss_at = [&]() {
    ForwardCtx<double> c;
    model.forward(x, c, cache);
    return cross_entropy_with_grad(c.logits, label).loss;
  };

  GradCheckResult res;
  auto& vals = model.params().values;
  for (const auto& [name, seg] : model.params().segments) {
    for (std::size_t i = 0; i < seg.n; ++i) {
      double& p = vals[seg.off + i];
      const double orig = p;
      p = orig + step;
      const double lp = loss_at();
      p = orig - step;
      const double lm = loss_at();
      p = orig;
      const double fd = (lp - lm) / (2.0 * step);
      const double an = analytic[seg.off + i];
      const double denom = std::max({1e-6, std::abs(fd), std::abs(an)});
      const double rel = std::abs(fd - an) / denom;
      if (rel > res.max_rel) {
        res.max_rel = rel;
        res.worst_group = name;
        res.analytic = an;
        res.numeric = fd;
      }
    }
  }
  return res;
}

}  // namespace cssm_test
