#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "cssm/errors.hpp"
#include "cssm/mat.hpp"
#include "cssm/rng.hpp"
#include "cssm/s5.hpp"
#include "cssm/wavelet.hpp"

namespace cssm {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class EBranch { kCwt, kStft, kNone };
enum class ABranch { kConv, kNone };
enum class CwtFeature { kMagnitude, kReal };

struct ModelConfig {
  std::size_t electrodes{0};  // M (filled from the dataset)
  std::size_t time_steps{0};  // nominal T; forward accepts any compatible length
  double fs{250.0};
  std::size_t n_classes{2};  // N
  std::size_t freq_bins{50};  // F
  double f_min{1.0};
  double f_max{100.0};
  double omega0{6.0};
  EBranch e_branch{EBranch::kCwt};
  ABranch a_branch{ABranch::kConv};
  CwtFeature cwt_feature{CwtFeature::kMagnitude};
  bool enable_wavelet_conv{true};
  bool enable_frequency_ssm{true};
  bool enable_channel_ssm{true};
  std::size_t blocks{2};      // L per branch
  std::size_t state_dim{64};  // Q
  std::size_t ffn_expansion{2};
  std::size_t head_hidden{256};
  double ln_eps{1e-5};

  std::size_t conv_kernel_len() const {
    return static_cast<std::size_t>(std::llround(fs / 2.0));
  }
  std::size_t head_input_dim() const {
    std::size_t branches = (enable_frequency_ssm ? 1u : 0u) + (enable_channel_ssm ? 1u : 0u);
    return branches * electrodes * freq_bins;
  }

  void validate() const {
    if (electrodes < 1) throw ConfigError("model config: electrodes must be >= 1");
    if (n_classes < 2) throw ConfigError("model config: need at least two classes");
    if (freq_bins < 1) throw ConfigError("model config: freq_bins must be >= 1");
    if (!(fs > 0.0)) throw ConfigError("model config: fs must be positive");
    if (!enable_frequency_ssm && !enable_channel_ssm) {
      throw ConfigError("model config: at least one SSM branch must stay enabled");
    }
    if (enable_wavelet_conv) {
      if (e_branch == EBranch::kNone && a_branch == ABranch::kNone) {
        throw ConfigError("model config: wavelet-conv enabled but both branches are none");
      }
      if (e_branch != EBranch::kNone) {
        if (!(f_min > 0.0) || !(f_max > f_min) || f_max > fs / 2.0) {
          throw ConfigError("model config: need 0 < f_min < f_max <= fs/2");
        }
      }
    }
    if (blocks < 1) throw ConfigError("model config: blocks must be >= 1");
    if (state_dim < 2 || state_dim % 2 != 0) {
      throw ConfigError("model config: state_dim must be even and >= 2");
    }
    if (ffn_expansion < 1) throw ConfigError("model config: ffn_expansion must be >= 1");
    if (head_hidden < 1) throw ConfigError("model config: head_hidden must be >= 1");
    if (!(ln_eps > 0.0)) throw ConfigError("model config: ln_eps must be positive");
  }
};

// ---------------------------------------------------------------------------
// Flat parameter store with named segments
// ---------------------------------------------------------------------------

struct Seg {
  std::size_t off{0};
  std::size_t n{0};
};

template <typename Real>
struct ParamStore {
  std::vector<Real> values;
  std::vector<std::pair<std::string, Seg>> segments;

  Seg add(const std::string& name, std::size_t n) {
    Seg s{values.size(), n};
    values.resize(values.size() + n, Real(0));
    segments.emplace_back(name, s);
    return s;
  }
  const Seg* find(const std::string& name) const {
    for (const auto& [k, s] : segments) {
      if (k == name) return &s;
    }
    return nullptr;
  }
  std::size_t size() const { return values.size(); }
};

// ---------------------------------------------------------------------------
// Numerics shared by FFN/head
// ---------------------------------------------------------------------------

template <typename Real>
inline Real gelu(Real x) {
  const Real inv_sqrt2 = Real(0.7071067811865475);
  return Real(0.5) * x * (Real(1) + std::erf(x * inv_sqrt2));
}

template <typename Real>
inline Real gelu_grad(Real x) {
  const Real inv_sqrt2 = Real(0.7071067811865475);
  const Real inv_sqrt2pi = Real(0.3989422804014327);
  Real phi_big = Real(0.5) * (Real(1) + std::erf(x * inv_sqrt2));
  Real phi_small = inv_sqrt2pi * std::exp(Real(-0.5) * x * x);
  return phi_big + x * phi_small;
}

template <typename Real>
std::vector<Real> softmax(const std::vector<Real>& logits) {
  Real mx = logits[0];
  for (Real v : logits) mx = std::max(mx, v);
  std::vector<Real> p(logits.size());
  Real sum = Real(0);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (Real& v : p) v /= sum;
  return p;
}

// ---------------------------------------------------------------------------
// Per-sample activation record
// ---------------------------------------------------------------------------

template <typename Real>
struct SliceCtx {
  Matrix<Real> xhat;              // rows x T, LN-normalized input
  std::vector<Real> inv_std;      // rows
  Matrix<Real> ln_out;            // rows x T
  Matrix<std::complex<Real>> state;  // T x Q
  Matrix<Real> ssm_out;           // rows x T
  Matrix<Real> ffn_z1;            // hidden x T
  Matrix<Real> ffn_a1;            // hidden x T
};

template <typename Real>
struct BlockCtx {
  std::vector<SliceCtx<Real>> slices;
  std::vector<std::complex<Real>> lambda_bar;  // Q
  Matrix<std::complex<Real>> b_bar;            // Q x P
  std::vector<std::complex<Real>> phi;         // Q, b_bar = phi .* b_tilde
};

template <typename Real>
struct ForwardCtx {
  std::size_t T{0};
  Matrix<Real> input;  // M x T
  // front end caches
  Cube<Real> e_hat;              // M x F x T (normalized E features, pre-affine)
  Cube<Real> a_hat;              // M x F x T
  Matrix<Real> a_inv_std;        // M x F
  Cube<Real> xt;                 // fused front-end output X~
  // branch stages: stage[0] = X~, stage[l+1] = block l output
  std::vector<Cube<Real>> u_stages;
  std::vector<BlockCtx<Real>> u_blocks;
  std::vector<Cube<Real>> v_stages;
  std::vector<BlockCtx<Real>> v_blocks;
  // head caches
  std::vector<Real> head_in;
  std::vector<Real> head_z1;
  std::vector<Real> head_a1;
  std::vector<Real> logits;
};

// Gradients of the class logit w.r.t. the final branch features, exposed for
// the explanation maps.
template <typename Real>
struct BranchFeatureGrads {
  Cube<Real> d_u_last;
  Cube<Real> d_v_last;
};

// ---------------------------------------------------------------------------
// The model
// ---------------------------------------------------------------------------

template <typename Real>
class CorticalModel {
 public:
  explicit CorticalModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    build_layout();
    if (cfg_.enable_wavelet_conv && cfg_.e_branch == EBranch::kCwt) {
      bank_ = build_morlet_filterbank(cfg_.freq_bins, cfg_.f_min, cfg_.f_max, cfg_.fs,
                                      cfg_.omega0);
    }
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<Real>& params() { return store_; }
  const ParamStore<Real>& params() const { return store_; }
  std::size_t n_params() const { return store_.size(); }
  const MorletFilterbank& filterbank() const { return bank_; }

  void init_params(std::uint64_t seed);

  // Deterministic E-branch features for one sample; cacheable across epochs.
  Cube<Real> compute_e_branch(const Matrix<Real>& x) const;

  std::vector<Real> forward(const Matrix<Real>& x, ForwardCtx<Real>& ctx,
                            const Cube<Real>* e_cache = nullptr) const;

  std::vector<Real> predict(const Matrix<Real>& x, const Cube<Real>* e_cache = nullptr) const {
    ForwardCtx<Real> ctx;
    return forward(x, ctx, e_cache);
  }

  // Staged operation surfaces (also used by the composition oracles).
  Cube<Real> apply_front_end(const Matrix<Real>& x) const {
    ForwardCtx<Real> ctx;
    ctx.T = x.cols;
    ctx.input = x;
    front_forward(x, ctx, nullptr);
    return std::move(ctx.xt);
  }
  Cube<Real> apply_freq_block(std::size_t l, const Cube<Real>& in) const {
    if (l >= freq_blocks_.size()) throw ConfigError("frequency block index out of range");
    BlockCtx<Real> bc;
    Cube<Real> out;
    block_forward(in, freq_blocks_[l], /*slice_axis=*/1, bc, out);
    return out;
  }
  Cube<Real> apply_chan_block(std::size_t l, const Cube<Real>& in) const {
    if (l >= chan_blocks_.size()) throw ConfigError("channel block index out of range");
    BlockCtx<Real> bc;
    Cube<Real> out;
    block_forward(in, chan_blocks_[l], /*slice_axis=*/0, bc, out);
    return out;
  }
  // Temporal mean pooling of the enabled branch outputs, concat, head FFN,
  // softmax. Pass nullptr for a disabled branch.
  std::vector<Real> fusion_head(const Cube<Real>* u_last, const Cube<Real>* v_last) const {
    if (cfg_.enable_frequency_ssm != (u_last != nullptr) ||
        cfg_.enable_channel_ssm != (v_last != nullptr)) {
      throw ConfigError("fusion_head: branch outputs do not match the configuration");
    }
    std::vector<Real> head_in(head_.in, Real(0));
    std::size_t offset = 0;
    auto pool_into = [&](const Cube<Real>& cube) {
      for (std::size_t m = 0; m < cube.d0; ++m) {
        for (std::size_t f = 0; f < cube.d1; ++f) {
          const Real* src = cube.row(m, f);
          Real acc = Real(0);
          for (std::size_t t = 0; t < cube.d2; ++t) acc += src[t];
          head_in[offset++] = acc / static_cast<Real>(cube.d2);
        }
      }
    };
    if (u_last != nullptr) pool_into(*u_last);
    if (v_last != nullptr) pool_into(*v_last);
    std::vector<Real> z1(head_.hidden), a1(head_.hidden), logits(cfg_.n_classes);
    const Real* w1 = w(head_.w1);
    const Real* b1 = w(head_.b1);
    const Real* w2 = w(head_.w2);
    const Real* b2 = w(head_.b2);
    for (std::size_t h = 0; h < head_.hidden; ++h) {
      Real acc = b1[h];
      const Real* wr = w1 + h * head_.in;
      for (std::size_t i = 0; i < head_.in; ++i) acc += wr[i] * head_in[i];
      z1[h] = acc;
      a1[h] = gelu(acc);
    }
    for (std::size_t n = 0; n < cfg_.n_classes; ++n) {
      Real acc = b2[n];
      const Real* wr = w2 + n * head_.hidden;
      for (std::size_t h = 0; h < head_.hidden; ++h) acc += wr[h] * a1[h];
      logits[n] = acc;
    }
    return softmax(logits);
  }

  // Accumulates d(loss)/d(params) into grads (size n_params()) given
  // d(loss)/d(logits). When feature_grads is non-null the gradients w.r.t.
  // the final branch features U^(L), V^(L) are stored there.
  void backward(const std::vector<Real>& dlogits, const ForwardCtx<Real>& ctx,
                std::vector<Real>& grads,
                BranchFeatureGrads<Real>* feature_grads = nullptr) const;

  // Re(lambda) stability clamp, applied after every optimizer step.
  void clamp_stability(std::vector<Real>& values) const;

 private:
  struct LnSeg {
    Seg gamma, beta;
  };
  struct FfnSeg {
    Seg w1, b1, w2, b2;
    std::size_t in{0}, hidden{0};
  };
  struct SsmSeg {
    Seg lambda_re, lambda_im, b_re, b_im, c_re, c_im, d, log_delta;
    std::size_t q{0}, p{0};
  };
  struct BlockSeg {
    LnSeg ln;
    SsmSeg ssm;
    FfnSeg ffn;
  };

  ModelConfig cfg_;
  ParamStore<Real> store_;
  MorletFilterbank bank_;

  Seg conv_kernels_;            // F x K (A-branch)
  LnSeg ln_e_, ln_a_;           // per frequency row
  Seg lift_scale_, lift_shift_; // F (front-end ablation)
  std::vector<BlockSeg> freq_blocks_;
  std::vector<BlockSeg> chan_blocks_;
  FfnSeg head_;

  void build_layout();

  const Real* w(const Seg& s) const { return store_.values.data() + s.off; }

  // ---- layer kernels -------------------------------------------------------

  // LN over time for every row of `rows x T`, affine per row.
  void ln_forward(const Matrix<Real>& in, const LnSeg& ln, Matrix<Real>& xhat,
                  std::vector<Real>& inv_std, Matrix<Real>& out) const {
    const std::size_t R = in.rows, T = in.cols;
    xhat = Matrix<Real>(R, T);
    out = Matrix<Real>(R, T);
    inv_std.assign(R, Real(0));
    const Real* gamma = w(ln.gamma);
    const Real* beta = w(ln.beta);
    for (std::size_t r = 0; r < R; ++r) {
      const Real* src = in.row(r);
      Real mean = Real(0);
      for (std::size_t t = 0; t < T; ++t) mean += src[t];
      mean /= static_cast<Real>(T);
      Real var = Real(0);
      for (std::size_t t = 0; t < T; ++t) {
        Real d = src[t] - mean;
        var += d * d;
      }
      var /= static_cast<Real>(T);
      Real inv = Real(1) / std::sqrt(var + Real(cfg_.ln_eps));
      inv_std[r] = inv;
      Real* xh = xhat.row(r);
      Real* o = out.row(r);
      for (std::size_t t = 0; t < T; ++t) {
        xh[t] = (src[t] - mean) * inv;
        o[t] = gamma[r] * xh[t] + beta[r];
      }
    }
  }

  // Backward of ln_forward. dout is consumed; din may alias nothing.
  void ln_backward(const Matrix<Real>& dout, const Matrix<Real>& xhat,
                   const std::vector<Real>& inv_std, const LnSeg& ln,
                   std::vector<Real>& grads, Matrix<Real>& din) const {
    const std::size_t R = dout.rows, T = dout.cols;
    din = Matrix<Real>(R, T);
    const Real* gamma = w(ln.gamma);
    Real* dgamma = grads.data() + ln.gamma.off;
    Real* dbeta = grads.data() + ln.beta.off;
    for (std::size_t r = 0; r < R; ++r) {
      const Real* g = dout.row(r);
      const Real* xh = xhat.row(r);
      Real sum_g = Real(0), sum_gx = Real(0);
      for (std::size_t t = 0; t < T; ++t) {
        sum_g += g[t];
        sum_gx += g[t] * xh[t];
      }
      dgamma[r] += sum_gx;
      dbeta[r] += sum_g;
      const Real mean_g = sum_g / static_cast<Real>(T);
      const Real mean_gx = sum_gx / static_cast<Real>(T);
      const Real coef = gamma[r] * inv_std[r];
      Real* di = din.row(r);
      for (std::size_t t = 0; t < T; ++t) {
        di[t] = coef * (g[t] - mean_g - xh[t] * mean_gx);
      }
    }
  }

  // Pointwise-in-time two-layer FFN over the row axis of `in` (rows = width).
  void ffn_forward(const Matrix<Real>& in, const FfnSeg& f, Matrix<Real>& z1,
                   Matrix<Real>& a1, Matrix<Real>& out) const {
    const std::size_t P = f.in, H = f.hidden, T = in.cols;
    const Real* w1 = w(f.w1);
    const Real* b1 = w(f.b1);
    const Real* w2 = w(f.w2);
    const Real* b2 = w(f.b2);
    z1 = Matrix<Real>(H, T);
    a1 = Matrix<Real>(H, T);
    out = Matrix<Real>(P, T);
    for (std::size_t h = 0; h < H; ++h) {
      Real* zr = z1.row(h);
      for (std::size_t t = 0; t < T; ++t) zr[t] = b1[h];
      const Real* wr = w1 + h * P;
      for (std::size_t p = 0; p < P; ++p) {
        const Real wv = wr[p];
        const Real* ir = in.row(p);
        for (std::size_t t = 0; t < T; ++t) zr[t] += wv * ir[t];
      }
      Real* ar = a1.row(h);
      for (std::size_t t = 0; t < T; ++t) ar[t] = gelu(zr[t]);
    }
    for (std::size_t p = 0; p < P; ++p) {
      Real* orow = out.row(p);
      for (std::size_t t = 0; t < T; ++t) orow[t] = b2[p];
      const Real* wr = w2 + p * H;
      for (std::size_t h = 0; h < H; ++h) {
        const Real wv = wr[h];
        const Real* ar = a1.row(h);
        for (std::size_t t = 0; t < T; ++t) orow[t] += wv * ar[t];
      }
    }
  }

  void ffn_backward(const Matrix<Real>& dout, const Matrix<Real>& in,
                    const Matrix<Real>& z1, const Matrix<Real>& a1, const FfnSeg& f,
                    std::vector<Real>& grads, Matrix<Real>& din) const {
    const std::size_t P = f.in, H = f.hidden, T = dout.cols;
    const Real* w1 = w(f.w1);
    const Real* w2 = w(f.w2);
    Real* gw1 = grads.data() + f.w1.off;
    Real* gb1 = grads.data() + f.b1.off;
    Real* gw2 = grads.data() + f.w2.off;
    Real* gb2 = grads.data() + f.b2.off;

    Matrix<Real> dz1(H, T, Real(0));
    for (std::size_t p = 0; p < P; ++p) {
      const Real* dorow = dout.row(p);
      Real acc_b = Real(0);
      for (std::size_t t = 0; t < T; ++t) acc_b += dorow[t];
      gb2[p] += acc_b;
      const Real* wr = w2 + p * H;
      Real* gwr = gw2 + p * H;
      for (std::size_t h = 0; h < H; ++h) {
        const Real* ar = a1.row(h);
        Real* dzr = dz1.row(h);
        const Real wv = wr[h];
        Real acc_w = Real(0);
        for (std::size_t t = 0; t < T; ++t) {
          acc_w += dorow[t] * ar[t];
          dzr[t] += wv * dorow[t];
        }
        gwr[h] += acc_w;
      }
    }
    din = Matrix<Real>(P, T, Real(0));
    for (std::size_t h = 0; h < H; ++h) {
      Real* dzr = dz1.row(h);
      const Real* zr = z1.row(h);
      Real acc_b = Real(0);
      for (std::size_t t = 0; t < T; ++t) {
        dzr[t] *= gelu_grad(zr[t]);
        acc_b += dzr[t];
      }
      gb1[h] += acc_b;
      const Real* wr = w1 + h * P;
      Real* gwr = gw1 + h * P;
      for (std::size_t p = 0; p < P; ++p) {
        const Real* ir = in.row(p);
        Real* dir = din.row(p);
        const Real wv = wr[p];
        Real acc_w = Real(0);
        for (std::size_t t = 0; t < T; ++t) {
          acc_w += dzr[t] * ir[t];
          dir[t] += wv * dzr[t];
        }
        gwr[p] += acc_w;
      }
    }
  }

  void discretize_block(const BlockSeg& b, BlockCtx<Real>& bc) const {
    using C = std::complex<Real>;
    const std::size_t Q = b.ssm.q, P = b.ssm.p;
    const Real* lre = w(b.ssm.lambda_re);
    const Real* lim = w(b.ssm.lambda_im);
    const Real* bre = w(b.ssm.b_re);
    const Real* bim = w(b.ssm.b_im);
    const Real* ld = w(b.ssm.log_delta);
    bc.lambda_bar.resize(Q);
    bc.phi.resize(Q);
    bc.b_bar = Matrix<C>(Q, P);
    for (std::size_t q = 0; q < Q; ++q) {
      C lambda(lre[q], lim[q]);
      Real delta = std::exp(ld[q]);
      C lam_d = lambda * delta;
      C lbar = std::exp(lam_d);
      bc.lambda_bar[q] = lbar;
      C phi = (std::abs(lam_d) < Real(1e-8)) ? C(delta, Real(0))
                                             : (lbar - C(Real(1), Real(0))) / lambda;
      bc.phi[q] = phi;
      for (std::size_t p = 0; p < P; ++p) {
        bc.b_bar.at(q, p) = phi * C(bre[q * P + p], bim[q * P + p]);
      }
    }
  }

  // SSM forward on one slice (rows = P variables, cols = T).
  void ssm_slice_forward(const Matrix<Real>& in, const BlockSeg& b, const BlockCtx<Real>& bc,
                         SliceCtx<Real>& sc) const {
    using C = std::complex<Real>;
    const std::size_t P = b.ssm.p, Q = b.ssm.q, T = in.cols;
    Matrix<C> gains(T, Q);
    Matrix<C> state(T, Q, C(Real(0), Real(0)));
    for (std::size_t t = 0; t < T; ++t) {
      C* g = gains.row(t);
      for (std::size_t q = 0; q < Q; ++q) g[q] = bc.lambda_bar[q];
    }
    for (std::size_t q = 0; q < Q; ++q) {
      const C* brow = bc.b_bar.row(q);
      for (std::size_t p = 0; p < P; ++p) {
        const Real* ir = in.row(p);
        const C bqp = brow[p];
        for (std::size_t t = 0; t < T; ++t) state.row(t)[q] += bqp * ir[t];
      }
    }
    associative_scan(gains, state);

    const Real* cre = w(b.ssm.c_re);
    const Real* cim = w(b.ssm.c_im);
    const Real* dd = w(b.ssm.d);
    sc.ssm_out = Matrix<Real>(P, T);
    for (std::size_t p = 0; p < P; ++p) {
      Real* orow = sc.ssm_out.row(p);
      const Real* ir = in.row(p);
      for (std::size_t t = 0; t < T; ++t) {
        const C* h = state.row(t);
        Real acc = Real(0);
        const Real* crer = cre + p * Q;
        const Real* cimr = cim + p * Q;
        for (std::size_t q = 0; q < Q; ++q) {
          // Re(c * h)
          acc += crer[q] * h[q].real() - cimr[q] * h[q].imag();
        }
        orow[t] = acc + dd[p] * ir[t];
      }
    }
    sc.state = std::move(state);
  }

  // Backward of one SSM slice. Accumulates shared-parameter gradients for
  // C and D directly into grads; Lambda_bar/B_bar gradients are collected in
  // complex accumulators and chained through the discretization once per
  // block (see ssm_chain_backward).
  void ssm_slice_backward(const Matrix<Real>& dout, const Matrix<Real>& in,
                          const BlockSeg& b, const BlockCtx<Real>& bc,
                          const SliceCtx<Real>& sc, std::vector<Real>& grads,
                          std::vector<std::complex<Real>>& g_lambda_bar,
                          Matrix<std::complex<Real>>& g_b_bar, Matrix<Real>& din) const {
    using C = std::complex<Real>;
    const std::size_t P = b.ssm.p, Q = b.ssm.q, T = dout.cols;
    const Real* cre = w(b.ssm.c_re);
    const Real* cim = w(b.ssm.c_im);
    const Real* dd = w(b.ssm.d);
    Real* gcre = grads.data() + b.ssm.c_re.off;
    Real* gcim = grads.data() + b.ssm.c_im.off;
    Real* gd = grads.data() + b.ssm.d.off;

    din = Matrix<Real>(P, T, Real(0));

    // D path and direct state seed d_t = C^H dy_t (packed conjugate rule)
    Matrix<C> seed(T, Q, C(Real(0), Real(0)));
    for (std::size_t p = 0; p < P; ++p) {
      const Real* dorow = dout.row(p);
      const Real* ir = in.row(p);
      Real* dir = din.row(p);
      Real acc_d = Real(0);
      for (std::size_t t = 0; t < T; ++t) {
        acc_d += dorow[t] * ir[t];
        dir[t] += dd[p] * dorow[t];
      }
      gd[p] += acc_d;
      const Real* crer = cre + p * Q;
      const Real* cimr = cim + p * Q;
      Real* gcrer = gcre + p * Q;
      Real* gcimr = gcim + p * Q;
      for (std::size_t t = 0; t < T; ++t) {
        const Real g = dorow[t];
        if (g == Real(0)) continue;
        C* srow = seed.row(t);
        const C* h = sc.state.row(t);
        for (std::size_t q = 0; q < Q; ++q) {
          // seed += g * conj(c); grad_c += g * conj(h)  [packed re/im parts]
          srow[q] += C(g * crer[q], -g * cimr[q]);
          gcrer[q] += g * h[q].real();
          gcimr[q] -= g * h[q].imag();
        }
      }
    }

    // adjoint recurrence gh_t = seed_t + conj(lambda_bar) gh_{t+1}, evaluated
    // as a forward scan over reversed time
    Matrix<C> gains(T, Q);
    Matrix<C> adj(T, Q);
    for (std::size_t s = 0; s < T; ++s) {
      C* g = gains.row(s);
      C* a = adj.row(s);
      const C* src = seed.row(T - 1 - s);
      for (std::size_t q = 0; q < Q; ++q) {
        g[q] = std::conj(bc.lambda_bar[q]);
        a[q] = src[q];
      }
    }
    associative_scan(gains, adj);
    // gh(t) = adj(T-1-t)

    for (std::size_t t = 0; t < T; ++t) {
      const C* gh = adj.row(T - 1 - t);
      if (t >= 1) {
        const C* hprev = sc.state.row(t - 1);
        for (std::size_t q = 0; q < Q; ++q) {
          g_lambda_bar[q] += gh[q] * std::conj(hprev[q]);
        }
      }
    }
    for (std::size_t p = 0; p < P; ++p) {
      const Real* ir = in.row(p);
      Real* dir = din.row(p);
      for (std::size_t q = 0; q < Q; ++q) {
        const C bqp = bc.b_bar.at(q, p);
        C acc_b(Real(0), Real(0));
        Real br = bqp.real(), bi = bqp.imag();
        for (std::size_t t = 0; t < T; ++t) {
          const C gh = adj.row(T - 1 - t)[q];
          acc_b += gh * ir[t];
          // Re(gh * conj(b))
          dir[t] += gh.real() * br + gh.imag() * bi;
        }
        g_b_bar.at(q, p) += acc_b;
      }
    }
  }

  // Chains accumulated Lambda_bar/B_bar adjoints through the ZOH
  // discretization into the trainable lambda/b_tilde/log_delta gradients.
  void ssm_chain_backward(const BlockSeg& b, const BlockCtx<Real>& bc,
                          const std::vector<std::complex<Real>>& g_lambda_bar,
                          const Matrix<std::complex<Real>>& g_b_bar,
                          std::vector<Real>& grads) const {
    using C = std::complex<Real>;
    const std::size_t Q = b.ssm.q, P = b.ssm.p;
    const Real* lre = w(b.ssm.lambda_re);
    const Real* lim = w(b.ssm.lambda_im);
    const Real* bre = w(b.ssm.b_re);
    const Real* bim = w(b.ssm.b_im);
    const Real* ld = w(b.ssm.log_delta);
    Real* glre = grads.data() + b.ssm.lambda_re.off;
    Real* glim = grads.data() + b.ssm.lambda_im.off;
    Real* gbre = grads.data() + b.ssm.b_re.off;
    Real* gbim = grads.data() + b.ssm.b_im.off;
    Real* gld = grads.data() + b.ssm.log_delta.off;

    for (std::size_t q = 0; q < Q; ++q) {
      const C lambda(lre[q], lim[q]);
      const Real delta = std::exp(ld[q]);
      const C lbar = bc.lambda_bar[q];
      const C phi = bc.phi[q];
      const C lam_d = lambda * delta;

      // b_bar = phi * b_tilde
      C g_phi(Real(0), Real(0));
      for (std::size_t p = 0; p < P; ++p) {
        const C gb = g_b_bar.at(q, p);
        const C bt(bre[q * P + p], bim[q * P + p]);
        // packed rules: g_btilde += gb * conj(phi); g_phi += gb * conj(btilde)
        C gbt = gb * std::conj(phi);
        gbre[q * P + p] += gbt.real();
        gbim[q * P + p] += gbt.imag();
        g_phi += gb * std::conj(bt);
      }

      // lambda_bar = exp(lambda * delta)
      C g_lam_d = g_lambda_bar[q] * std::conj(lbar);

      C dphi_dlambda;
      C dphi_ddelta;
      if (std::abs(lam_d) < Real(1e-8)) {
        dphi_dlambda = C(delta * delta / Real(2), Real(0));
        dphi_ddelta = lbar;
      } else {
        dphi_dlambda = (C(delta, Real(0)) * lbar * lambda - (lbar - C(Real(1), Real(0)))) /
                       (lambda * lambda);
        dphi_ddelta = lbar;
      }

      C g_lambda = g_lam_d * delta + g_phi * std::conj(dphi_dlambda);
      Real g_delta = (g_lam_d * std::conj(lambda)).real() +
                     (g_phi * std::conj(dphi_ddelta)).real();
      glre[q] += g_lambda.real();
      glim[q] += g_lambda.imag();
      gld[q] += g_delta * delta;  // delta = exp(log_delta)
    }
  }

  // One branch block applied to a cube: slices along `slice_axis` (1 = per
  // frequency, 0 = per electrode) are processed independently with shared
  // parameters.
  void block_forward(const Cube<Real>& in, const BlockSeg& b, int slice_axis,
                     BlockCtx<Real>& bc, Cube<Real>& out) const {
    const std::size_t M = in.d0, F = in.d1, T = in.d2;
    const std::size_t n_slices = slice_axis == 1 ? F : M;
    const std::size_t rows = slice_axis == 1 ? M : F;
    out = Cube<Real>(M, F, T);
    discretize_block(b, bc);
    bc.slices.resize(n_slices);
    for (std::size_t s = 0; s < n_slices; ++s) {
      SliceCtx<Real>& sc = bc.slices[s];
      Matrix<Real> slice(rows, T);
      for (std::size_t r = 0; r < rows; ++r) {
        const Real* src = slice_axis == 1 ? in.row(r, s) : in.row(s, r);
        std::copy(src, src + T, slice.row(r));
      }
      Matrix<Real> ln_out;
      ln_forward(slice, b.ln, sc.xhat, sc.inv_std, ln_out);
      sc.ln_out = std::move(ln_out);
      ssm_slice_forward(sc.ln_out, b, bc, sc);
      Matrix<Real> ffn_out;
      ffn_forward(sc.ssm_out, b.ffn, sc.ffn_z1, sc.ffn_a1, ffn_out);
      for (std::size_t r = 0; r < rows; ++r) {
        Real* dst = slice_axis == 1 ? out.row(r, s) : out.row(s, r);
        const Real* f = ffn_out.row(r);
        const Real* u = sc.ln_out.row(r);
        for (std::size_t t = 0; t < T; ++t) dst[t] = f[t] + u[t];
      }
    }
  }

  void block_backward(const Cube<Real>& dout, const BlockSeg& b, int slice_axis,
                      const BlockCtx<Real>& bc, std::vector<Real>& grads,
                      Cube<Real>& din) const {
    using C = std::complex<Real>;
    const std::size_t M = dout.d0, F = dout.d1, T = dout.d2;
    const std::size_t n_slices = slice_axis == 1 ? F : M;
    const std::size_t rows = slice_axis == 1 ? M : F;
    din = Cube<Real>(M, F, T);
    std::vector<C> g_lambda_bar(b.ssm.q, C(Real(0), Real(0)));
    Matrix<C> g_b_bar(b.ssm.q, b.ssm.p, C(Real(0), Real(0)));

    for (std::size_t s = 0; s < n_slices; ++s) {
      const SliceCtx<Real>& sc = bc.slices[s];
      Matrix<Real> g(rows, T);
      for (std::size_t r = 0; r < rows; ++r) {
        const Real* src = slice_axis == 1 ? dout.row(r, s) : dout.row(s, r);
        std::copy(src, src + T, g.row(r));
      }
      // out = FFN(SSM(u~)) + u~
      Matrix<Real> d_ssm_out;
      ffn_backward(g, sc.ssm_out, sc.ffn_z1, sc.ffn_a1, b.ffn, grads, d_ssm_out);
      Matrix<Real> d_ln_from_ssm;
      ssm_slice_backward(d_ssm_out, sc.ln_out, b, bc, sc, grads, g_lambda_bar, g_b_bar,
                         d_ln_from_ssm);
      for (std::size_t i = 0; i < g.d.size(); ++i) g.d[i] += d_ln_from_ssm.d[i];
      Matrix<Real> d_slice;
      ln_backward(g, sc.xhat, sc.inv_std, b.ln, grads, d_slice);
      for (std::size_t r = 0; r < rows; ++r) {
        Real* dst = slice_axis == 1 ? din.row(r, s) : din.row(s, r);
        std::copy(d_slice.row(r), d_slice.row(r) + T, dst);
      }
    }
    ssm_chain_backward(b, bc, g_lambda_bar, g_b_bar, grads);
  }

  // ---- front end -----------------------------------------------------------

  void front_forward(const Matrix<Real>& x, ForwardCtx<Real>& ctx,
                     const Cube<Real>* e_cache) const;
  void front_backward(const Cube<Real>& dxt, const ForwardCtx<Real>& ctx,
                      std::vector<Real>& grads) const;
};

// count_parameters contract: every trainable scalar, complex pairs as two.
template <typename Real>
std::size_t count_parameters(const CorticalModel<Real>& m) {
  return m.n_params();
}

// ---------------------------------------------------------------------------
// implementation: layout / init / front end / forward / backward
// ---------------------------------------------------------------------------

template <typename Real>
void CorticalModel<Real>::build_layout() {
  const std::size_t M = cfg_.electrodes;
  const std::size_t F = cfg_.freq_bins;
  if (cfg_.enable_wavelet_conv) {
    if (cfg_.a_branch == ABranch::kConv) {
      conv_kernels_ = store_.add("front.conv", F * cfg_.conv_kernel_len());
      ln_a_.gamma = store_.add("front.ln_a.gamma", F);
      ln_a_.beta = store_.add("front.ln_a.beta", F);
    }
    if (cfg_.e_branch != EBranch::kNone) {
      ln_e_.gamma = store_.add("front.ln_e.gamma", F);
      ln_e_.beta = store_.add("front.ln_e.beta", F);
    }
  } else {
    lift_scale_ = store_.add("front.lift.scale", F);
    lift_shift_ = store_.add("front.lift.shift", F);
  }

  auto add_block = [&](const std::string& prefix, std::size_t p) {
    BlockSeg b;
    b.ln.gamma = store_.add(prefix + ".ln.gamma", p);
    b.ln.beta = store_.add(prefix + ".ln.beta", p);
    b.ssm.q = cfg_.state_dim;
    b.ssm.p = p;
    b.ssm.lambda_re = store_.add(prefix + ".ssm.lambda_re", cfg_.state_dim);
    b.ssm.lambda_im = store_.add(prefix + ".ssm.lambda_im", cfg_.state_dim);
    b.ssm.b_re = store_.add(prefix + ".ssm.b_re", cfg_.state_dim * p);
    b.ssm.b_im = store_.add(prefix + ".ssm.b_im", cfg_.state_dim * p);
    b.ssm.c_re = store_.add(prefix + ".ssm.c_re", p * cfg_.state_dim);
    b.ssm.c_im = store_.add(prefix + ".ssm.c_im", p * cfg_.state_dim);
    b.ssm.d = store_.add(prefix + ".ssm.d", p);
    b.ssm.log_delta = store_.add(prefix + ".ssm.log_delta", cfg_.state_dim);
    b.ffn.in = p;
    b.ffn.hidden = cfg_.ffn_expansion * p;
    b.ffn.w1 = store_.add(prefix + ".ffn.w1", b.ffn.hidden * p);
    b.ffn.b1 = store_.add(prefix + ".ffn.b1", b.ffn.hidden);
    b.ffn.w2 = store_.add(prefix + ".ffn.w2", p * b.ffn.hidden);
    b.ffn.b2 = store_.add(prefix + ".ffn.b2", p);
    return b;
  };

  if (cfg_.enable_frequency_ssm) {
    for (std::size_t l = 0; l < cfg_.blocks; ++l) {
      freq_blocks_.push_back(add_block("freq" + std::to_string(l), M));
    }
  }
  if (cfg_.enable_channel_ssm) {
    for (std::size_t l = 0; l < cfg_.blocks; ++l) {
      chan_blocks_.push_back(add_block("chan" + std::to_string(l), F));
    }
  }

  head_.in = cfg_.head_input_dim();
  head_.hidden = cfg_.head_hidden;
  head_.w1 = store_.add("head.w1", head_.hidden * head_.in);
  head_.b1 = store_.add("head.b1", head_.hidden);
  head_.w2 = store_.add("head.w2", cfg_.n_classes * head_.hidden);
  head_.b2 = store_.add("head.b2", cfg_.n_classes);
}

template <typename Real>
void CorticalModel<Real>::init_params(std::uint64_t seed) {
  std::vector<Real>& v = store_.values;

  auto gauss_fill = [&](const Seg& s, double scale, std::uint64_t stream) {
    Pcg32 rng(seed, stream);
    for (std::size_t i = 0; i < s.n; ++i) {
      v[s.off + i] = static_cast<Real>(rng.next_gaussian() * scale);
    }
  };
  auto const_fill = [&](const Seg& s, Real c) {
    for (std::size_t i = 0; i < s.n; ++i) v[s.off + i] = c;
  };

  std::uint64_t stream = 1;
  if (cfg_.enable_wavelet_conv) {
    if (cfg_.a_branch == ABranch::kConv) {
      gauss_fill(conv_kernels_, 1.0 / std::sqrt(double(cfg_.conv_kernel_len())), stream++);
      const_fill(ln_a_.gamma, Real(1));
      const_fill(ln_a_.beta, Real(0));
    }
    if (cfg_.e_branch != EBranch::kNone) {
      const_fill(ln_e_.gamma, Real(1));
      const_fill(ln_e_.beta, Real(0));
    }
  } else {
    // per-row jitter so identical replicated rows can differentiate
    Pcg32 rng(seed, stream++);
    for (std::size_t i = 0; i < lift_scale_.n; ++i) {
      v[lift_scale_.off + i] = Real(1) + Real(0.02) * static_cast<Real>(rng.next_gaussian());
    }
    const_fill(lift_shift_, Real(0));
  }

  auto init_block = [&](const BlockSeg& b) {
    const_fill(b.ln.gamma, Real(1));
    const_fill(b.ln.beta, Real(0));
    S5Params<double> s5 = init_s5_params(b.ssm.q, b.ssm.p, seed + stream);
    ++stream;
    for (std::size_t q = 0; q < b.ssm.q; ++q) {
      v[b.ssm.lambda_re.off + q] = static_cast<Real>(s5.lambda_re[q]);
      v[b.ssm.lambda_im.off + q] = static_cast<Real>(s5.lambda_im[q]);
      v[b.ssm.log_delta.off + q] = static_cast<Real>(s5.log_delta[q]);
    }
    for (std::size_t i = 0; i < b.ssm.b_re.n; ++i) {
      v[b.ssm.b_re.off + i] = static_cast<Real>(s5.b_re.d[i]);
      v[b.ssm.b_im.off + i] = static_cast<Real>(s5.b_im.d[i]);
    }
    for (std::size_t i = 0; i < b.ssm.c_re.n; ++i) {
      v[b.ssm.c_re.off + i] = static_cast<Real>(s5.c_re.d[i]);
      v[b.ssm.c_im.off + i] = static_cast<Real>(s5.c_im.d[i]);
    }
    const_fill(b.ssm.d, Real(1));
    gauss_fill(b.ffn.w1, 1.0 / std::sqrt(double(b.ffn.in)), stream++);
    const_fill(b.ffn.b1, Real(0));
    gauss_fill(b.ffn.w2, 1.0 / std::sqrt(double(b.ffn.hidden)), stream++);
    const_fill(b.ffn.b2, Real(0));
  };
  for (const auto& b : freq_blocks_) init_block(b);
  for (const auto& b : chan_blocks_) init_block(b);

  gauss_fill(head_.w1, 1.0 / std::sqrt(double(head_.in)), stream++);
  const_fill(head_.b1, Real(0));
  gauss_fill(head_.w2, 1.0 / std::sqrt(double(head_.hidden)), stream++);
  const_fill(head_.b2, Real(0));
}

template <typename Real>
void CorticalModel<Real>::clamp_stability(std::vector<Real>& values) const {
  auto clamp_block = [&](const BlockSeg& b) {
    for (std::size_t q = 0; q < b.ssm.q; ++q) {
      Real& re = values[b.ssm.lambda_re.off + q];
      if (!(re < Real(-1e-4))) re = Real(-1e-4);
    }
  };
  for (const auto& b : freq_blocks_) clamp_block(b);
  for (const auto& b : chan_blocks_) clamp_block(b);
}

template <typename Real>
Cube<Real> CorticalModel<Real>::compute_e_branch(const Matrix<Real>& x) const {
  if (!cfg_.enable_wavelet_conv || cfg_.e_branch == EBranch::kNone) {
    throw ConfigError("E-branch is disabled in this configuration");
  }
  const std::size_t M = x.rows, T = x.cols, F = cfg_.freq_bins;
  Cube<Real> out(M, F, T);
  std::vector<double> xd(T);
  for (std::size_t m = 0; m < M; ++m) {
    for (std::size_t t = 0; t < T; ++t) xd[t] = static_cast<double>(x.at(m, t));
    Matrix<double> feat;
    if (cfg_.e_branch == EBranch::kCwt) {
      if (cfg_.cwt_feature == CwtFeature::kMagnitude) {
        feat = cwt(xd, bank_);
      } else {
        Matrix<std::complex<double>> z = cwt_complex(xd, bank_);
        feat = Matrix<double>(z.rows, z.cols);
        for (std::size_t i = 0; i < z.d.size(); ++i) feat.d[i] = z.d[i].real();
      }
    } else {
      feat = stft_branch(xd, F, cfg_.f_min, cfg_.f_max, cfg_.fs);
    }
    for (std::size_t f = 0; f < F; ++f) {
      Real* dst = out.row(m, f);
      for (std::size_t t = 0; t < T; ++t) dst[t] = static_cast<Real>(feat.at(f, t));
    }
  }
  return out;
}

template <typename Real>
void CorticalModel<Real>::front_forward(const Matrix<Real>& x, ForwardCtx<Real>& ctx,
                                        const Cube<Real>* e_cache) const {
  const std::size_t M = x.rows, T = x.cols, F = cfg_.freq_bins;
  ctx.xt = Cube<Real>(M, F, T);

  if (!cfg_.enable_wavelet_conv) {
    const Real* scale = w(lift_scale_);
    const Real* shift = w(lift_shift_);
    for (std::size_t m = 0; m < M; ++m) {
      const Real* src = x.row(m);
      for (std::size_t f = 0; f < F; ++f) {
        Real* dst = ctx.xt.row(m, f);
        for (std::size_t t = 0; t < T; ++t) dst[t] = scale[f] * src[t] + shift[f];
      }
    }
    return;
  }

  const bool has_e = cfg_.e_branch != EBranch::kNone;
  const bool has_a = cfg_.a_branch == ABranch::kConv;
  const Real weight = (has_e && has_a) ? Real(0.5) : Real(1);

  if (has_e) {
    Cube<Real> e_feat = (e_cache != nullptr) ? *e_cache : compute_e_branch(x);
    if (e_feat.d0 != M || e_feat.d1 != F || e_feat.d2 != T) {
      throw ConfigError("E-branch cache dimensions do not match the input");
    }
    ctx.e_hat = Cube<Real>(M, F, T);
    const Real* gamma = w(ln_e_.gamma);
    const Real* beta = w(ln_e_.beta);
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t f = 0; f < F; ++f) {
        const Real* src = e_feat.row(m, f);
        Real mean = Real(0);
        for (std::size_t t = 0; t < T; ++t) mean += src[t];
        mean /= static_cast<Real>(T);
        Real var = Real(0);
        for (std::size_t t = 0; t < T; ++t) {
          Real d = src[t] - mean;
          var += d * d;
        }
        var /= static_cast<Real>(T);
        Real inv = Real(1) / std::sqrt(var + Real(cfg_.ln_eps));
        Real* hat = ctx.e_hat.row(m, f);
        Real* dst = ctx.xt.row(m, f);
        for (std::size_t t = 0; t < T; ++t) {
          hat[t] = (src[t] - mean) * inv;
          dst[t] = weight * (gamma[f] * hat[t] + beta[f]);
        }
      }
    }
  }

  if (has_a) {
    const std::size_t K = cfg_.conv_kernel_len();
    if (K > T) throw ConfigError("input shorter than the conv kernel length");
    Matrix<Real> kernels(F, K);
    std::copy(w(conv_kernels_), w(conv_kernels_) + F * K, kernels.d.begin());
    ctx.a_hat = Cube<Real>(M, F, T);
    ctx.a_inv_std = Matrix<Real>(M, F);
    const Real* gamma = w(ln_a_.gamma);
    const Real* beta = w(ln_a_.beta);
    for (std::size_t m = 0; m < M; ++m) {
      Matrix<Real> conv = conv1d_same(x.row(m), T, kernels);
      for (std::size_t f = 0; f < F; ++f) {
        const Real* src = conv.row(f);
        Real mean = Real(0);
        for (std::size_t t = 0; t < T; ++t) mean += src[t];
        mean /= static_cast<Real>(T);
        Real var = Real(0);
        for (std::size_t t = 0; t < T; ++t) {
          Real d = src[t] - mean;
          var += d * d;
        }
        var /= static_cast<Real>(T);
        Real inv = Real(1) / std::sqrt(var + Real(cfg_.ln_eps));
        ctx.a_inv_std.at(m, f) = inv;
        Real* hat = ctx.a_hat.row(m, f);
        Real* dst = ctx.xt.row(m, f);
        for (std::size_t t = 0; t < T; ++t) {
          hat[t] = (src[t] - mean) * inv;
          Real val = weight * (gamma[f] * hat[t] + beta[f]);
          dst[t] = has_e ? dst[t] + val : val;
        }
      }
    }
  }
}

template <typename Real>
void CorticalModel<Real>::front_backward(const Cube<Real>& dxt, const ForwardCtx<Real>& ctx,
                                         std::vector<Real>& grads) const {
  const std::size_t M = dxt.d0, F = dxt.d1, T = dxt.d2;

  if (!cfg_.enable_wavelet_conv) {
    Real* gscale = grads.data() + lift_scale_.off;
    Real* gshift = grads.data() + lift_shift_.off;
    for (std::size_t m = 0; m < M; ++m) {
      const Real* src = ctx.input.row(m);
      for (std::size_t f = 0; f < F; ++f) {
        const Real* g = dxt.row(m, f);
        Real acc_s = Real(0), acc_b = Real(0);
        for (std::size_t t = 0; t < T; ++t) {
          acc_s += g[t] * src[t];
          acc_b += g[t];
        }
        gscale[f] += acc_s;
        gshift[f] += acc_b;
      }
    }
    return;
  }

  const bool has_e = cfg_.e_branch != EBranch::kNone;
  const bool has_a = cfg_.a_branch == ABranch::kConv;
  const Real weight = (has_e && has_a) ? Real(0.5) : Real(1);

  if (has_e) {
    // E features are parameter-free; only the affine pair trains
    Real* dgamma = grads.data() + ln_e_.gamma.off;
    Real* dbeta = grads.data() + ln_e_.beta.off;
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t f = 0; f < F; ++f) {
        const Real* g = dxt.row(m, f);
        const Real* hat = ctx.e_hat.row(m, f);
        Real acc_g = Real(0), acc_b = Real(0);
        for (std::size_t t = 0; t < T; ++t) {
          acc_g += g[t] * hat[t];
          acc_b += g[t];
        }
        dgamma[f] += weight * acc_g;
        dbeta[f] += weight * acc_b;
      }
    }
  }

  if (has_a) {
    const std::size_t K = cfg_.conv_kernel_len();
    const Real* gamma = w(ln_a_.gamma);
    Real* dgamma = grads.data() + ln_a_.gamma.off;
    Real* dbeta = grads.data() + ln_a_.beta.off;
    Real* gkern = grads.data() + conv_kernels_.off;
    const std::ptrdiff_t c = static_cast<std::ptrdiff_t>(K / 2);
    std::vector<Real> dconv(T);
    for (std::size_t m = 0; m < M; ++m) {
      const Real* xrow = ctx.input.row(m);
      for (std::size_t f = 0; f < F; ++f) {
        const Real* g = dxt.row(m, f);
        const Real* hat = ctx.a_hat.row(m, f);
        Real sum_g = Real(0), sum_gx = Real(0);
        for (std::size_t t = 0; t < T; ++t) {
          sum_g += g[t];
          sum_gx += g[t] * hat[t];
        }
        dgamma[f] += weight * sum_gx;
        dbeta[f] += weight * sum_g;
        const Real mean_g = sum_g / static_cast<Real>(T);
        const Real mean_gx = sum_gx / static_cast<Real>(T);
        const Real coef = weight * gamma[f] * ctx.a_inv_std.at(m, f);
        for (std::size_t t = 0; t < T; ++t) {
          dconv[t] = coef * (g[t] - mean_g - hat[t] * mean_gx);
        }
        Real* gk = gkern + f * K;
        for (std::size_t k = 0; k < K; ++k) {
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - c;
          std::size_t t_lo = shift < 0 ? static_cast<std::size_t>(-shift) : 0;
          std::size_t t_hi = std::min(T, static_cast<std::size_t>(
                                             static_cast<std::ptrdiff_t>(T) - shift));
          Real acc = Real(0);
          for (std::size_t t = t_lo; t < t_hi; ++t) {
            acc += dconv[t] * xrow[t + shift];
          }
          gk[k] += acc;
        }
      }
    }
  }
}

template <typename Real>
std::vector<Real> CorticalModel<Real>::forward(const Matrix<Real>& x, ForwardCtx<Real>& ctx,
                                               const Cube<Real>* e_cache) const {
  if (x.rows != cfg_.electrodes) {
    throw ConfigError("input electrode count does not match the model");
  }
  if (x.cols < 2) throw ConfigError("input too short");
  ctx = ForwardCtx<Real>{};
  ctx.T = x.cols;
  ctx.input = x;

  front_forward(x, ctx, e_cache);

  const std::size_t M = cfg_.electrodes, F = cfg_.freq_bins, T = ctx.T;

  if (cfg_.enable_frequency_ssm) {
    ctx.u_stages.clear();
    ctx.u_stages.push_back(ctx.xt);
    ctx.u_blocks.resize(freq_blocks_.size());
    for (std::size_t l = 0; l < freq_blocks_.size(); ++l) {
      Cube<Real> out;
      block_forward(ctx.u_stages.back(), freq_blocks_[l], /*slice_axis=*/1,
                    ctx.u_blocks[l], out);
      ctx.u_stages.push_back(std::move(out));
    }
  }
  if (cfg_.enable_channel_ssm) {
    ctx.v_stages.clear();
    ctx.v_stages.push_back(ctx.xt);
    ctx.v_blocks.resize(chan_blocks_.size());
    for (std::size_t l = 0; l < chan_blocks_.size(); ++l) {
      Cube<Real> out;
      block_forward(ctx.v_stages.back(), chan_blocks_[l], /*slice_axis=*/0,
                    ctx.v_blocks[l], out);
      ctx.v_stages.push_back(std::move(out));
    }
  }

  // temporal mean pooling, then [pool(U); pool(V)]
  ctx.head_in.assign(head_.in, Real(0));
  std::size_t offset = 0;
  auto pool_into = [&](const Cube<Real>& cube) {
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t f = 0; f < F; ++f) {
        const Real* src = cube.row(m, f);
        Real acc = Real(0);
        for (std::size_t t = 0; t < T; ++t) acc += src[t];
        ctx.head_in[offset++] = acc / static_cast<Real>(T);
      }
    }
  };
  if (cfg_.enable_frequency_ssm) pool_into(ctx.u_stages.back());
  if (cfg_.enable_channel_ssm) pool_into(ctx.v_stages.back());

  // head FFN -> logits
  const std::size_t H = head_.hidden, N = cfg_.n_classes;
  const Real* w1 = w(head_.w1);
  const Real* b1 = w(head_.b1);
  const Real* w2 = w(head_.w2);
  const Real* b2 = w(head_.b2);
  ctx.head_z1.assign(H, Real(0));
  ctx.head_a1.assign(H, Real(0));
  for (std::size_t h = 0; h < H; ++h) {
    Real acc = b1[h];
    const Real* wr = w1 + h * head_.in;
    for (std::size_t i = 0; i < head_.in; ++i) acc += wr[i] * ctx.head_in[i];
    ctx.head_z1[h] = acc;
    ctx.head_a1[h] = gelu(acc);
  }
  ctx.logits.assign(N, Real(0));
  for (std::size_t n = 0; n < N; ++n) {
    Real acc = b2[n];
    const Real* wr = w2 + n * H;
    for (std::size_t h = 0; h < H; ++h) acc += wr[h] * ctx.head_a1[h];
    ctx.logits[n] = acc;
  }
  return softmax(ctx.logits);
}

template <typename Real>
void CorticalModel<Real>::backward(const std::vector<Real>& dlogits,
                                   const ForwardCtx<Real>& ctx, std::vector<Real>& grads,
                                   BranchFeatureGrads<Real>* feature_grads) const {
  if (grads.size() != store_.size()) throw ConfigError("gradient buffer size mismatch");
  if (dlogits.size() != cfg_.n_classes) throw ConfigError("dlogits size mismatch");
  for (Real v : dlogits) {
    if (!std::isfinite(v)) throw NumericError("non-finite gradient seed at the logits");
  }

  const std::size_t M = cfg_.electrodes, F = cfg_.freq_bins, T = ctx.T;
  const std::size_t H = head_.hidden, N = cfg_.n_classes;

  // head
  const Real* w1 = w(head_.w1);
  const Real* w2 = w(head_.w2);
  Real* gw1 = grads.data() + head_.w1.off;
  Real* gb1 = grads.data() + head_.b1.off;
  Real* gw2 = grads.data() + head_.w2.off;
  Real* gb2 = grads.data() + head_.b2.off;

  std::vector<Real> da1(H, Real(0));
  for (std::size_t n = 0; n < N; ++n) {
    const Real g = dlogits[n];
    gb2[n] += g;
    const Real* wr = w2 + n * H;
    Real* gwr = gw2 + n * H;
    for (std::size_t h = 0; h < H; ++h) {
      gwr[h] += g * ctx.head_a1[h];
      da1[h] += g * wr[h];
    }
  }
  std::vector<Real> dhead_in(head_.in, Real(0));
  for (std::size_t h = 0; h < H; ++h) {
    const Real dz = da1[h] * gelu_grad(ctx.head_z1[h]);
    gb1[h] += dz;
    const Real* wr = w1 + h * head_.in;
    Real* gwr = gw1 + h * head_.in;
    for (std::size_t i = 0; i < head_.in; ++i) {
      gwr[i] += dz * ctx.head_in[i];
      dhead_in[i] += dz * wr[i];
    }
  }

  // un-pool to the branch feature cubes
  Cube<Real> dxt(M, F, T, Real(0));
  std::size_t offset = 0;
  const Real inv_t = Real(1) / static_cast<Real>(T);
  auto unpool = [&](Cube<Real>& dcube) {
    dcube = Cube<Real>(M, F, T);
    for (std::size_t m = 0; m < M; ++m) {
      for (std::size_t f = 0; f < F; ++f) {
        const Real g = dhead_in[offset++] * inv_t;
        Real* dst = dcube.row(m, f);
        for (std::size_t t = 0; t < T; ++t) dst[t] = g;
      }
    }
  };

  if (cfg_.enable_frequency_ssm) {
    Cube<Real> d_u;
    unpool(d_u);
    if (feature_grads != nullptr) feature_grads->d_u_last = d_u;
    for (std::size_t l = freq_blocks_.size(); l-- > 0;) {
      Cube<Real> din;
      block_backward(d_u, freq_blocks_[l], /*slice_axis=*/1, ctx.u_blocks[l], grads, din);
      d_u = std::move(din);
    }
    for (std::size_t i = 0; i < dxt.d.size(); ++i) dxt.d[i] += d_u.d[i];
  }
  if (cfg_.enable_channel_ssm) {
    Cube<Real> d_v;
    unpool(d_v);
    if (feature_grads != nullptr) feature_grads->d_v_last = d_v;
    for (std::size_t l = chan_blocks_.size(); l-- > 0;) {
      Cube<Real> din;
      block_backward(d_v, chan_blocks_[l], /*slice_axis=*/0, ctx.v_blocks[l], grads, din);
      d_v = std::move(din);
    }
    for (std::size_t i = 0; i < dxt.d.size(); ++i) dxt.d[i] += d_v.d[i];
  }

  front_backward(dxt, ctx, grads);
}

}  // namespace cssm
