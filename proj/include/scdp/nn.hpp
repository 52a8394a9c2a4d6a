#pragma once

// Small transformer building blocks with explicit forward/backward passes.
// Parameters and their gradients live in one flat ParamStore so checkpoints,
// the optimizer, and finite-difference checks all see a single vector.
//
// Layers cache activations from the last forward(); call backward()
// immediately after the matching forward() (one example at a time).

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "scdp/mat.hpp"
#include "scdp/rng.hpp"

namespace scdp::nn {

struct ParamRef {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

class ParamStore {
 public:
  ParamRef add(const std::string& name, std::size_t rows, std::size_t cols);

  double* values(const ParamRef& r) { return values_.data() + r.offset; }
  const double* values(const ParamRef& r) const {
    return values_.data() + r.offset;
  }
  double* grads(const ParamRef& r) { return grads_.data() + r.offset; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& grads() { return grads_; }
  const std::map<std::string, ParamRef>& names() const { return names_; }
  std::size_t size() const { return values_.size(); }

  void zero_grads() { std::fill(grads_.begin(), grads_.end(), 0.0); }

  // Gaussian init, std 1/sqrt(fan_in) per matrix; biases zero.
  void init(Rng& rng);

 private:
  std::vector<double> values_;
  std::vector<double> grads_;
  std::map<std::string, ParamRef> names_;
};

inline double gelu(double x) {
  return 0.5 * x * (1.0 + std::erf(x * 0.70710678118654752440));
}
inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * 0.70710678118654752440));
  const double pdf = 0.39894228040143267794 * std::exp(-0.5 * x * x);
  return cdf + x * pdf;
}

// y = x W^T + b
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, std::size_t in,
         std::size_t out);

  std::size_t in() const { return w_.cols; }
  std::size_t out() const { return w_.rows; }

  Mat forward(const Mat& x);
  // Returns dx; accumulates dW, db into the store.
  Mat backward(const Mat& dy);

 private:
  ParamStore* store_ = nullptr;
  ParamRef w_, b_;
  Mat x_cache_;
};

// 1- or 2-layer MLP encoder; hidden width = out width, GELU between.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParamStore& store, const std::string& name, std::size_t in,
      std::size_t out, std::size_t layers);

  std::size_t in() const { return in_; }

  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);

 private:
  std::size_t in_ = 0;
  std::size_t layers_ = 1;
  Linear l1_, l2_;
  Mat pre_act_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, std::size_t dim);

  Mat forward(const Mat& x);
  Mat backward(const Mat& dy);

 private:
  ParamStore* store_ = nullptr;
  ParamRef gain_, bias_;
  Mat xhat_;
  std::vector<double> inv_std_;
  static constexpr double kEps = 1e-5;
};

// Multi-head self-attention with an additive mask bias (0 / -inf), given as
// an L x L matrix shared by all heads.
class MultiheadSelfAttention {
 public:
  MultiheadSelfAttention() = default;
  MultiheadSelfAttention(ParamStore& store, const std::string& name,
                         std::size_t d_model, std::size_t heads);

  Mat forward(const Mat& x, const Mat& mask_bias);
  Mat backward(const Mat& dy);

 private:
  std::size_t d_ = 0, heads_ = 0, dh_ = 0;
  Linear wq_, wk_, wv_, wo_;
  Mat q_, k_, v_, probs_, concat_;
};

// Pre-LN encoder layer: x + MHA(LN1(x)), then h + FF(LN2(h)).
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(ParamStore& store, const std::string& name,
                   std::size_t d_model, std::size_t heads, std::size_t d_ff);

  Mat forward(const Mat& x, const Mat& mask_bias);
  Mat backward(const Mat& dy);

 private:
  LayerNorm ln1_, ln2_;
  MultiheadSelfAttention attn_;
  Linear ff1_, ff2_;
  Mat ff_pre_act_;
};

// Fixed sinusoidal encoding of an integer position, written into out[0..d).
void sinusoidal_embedding(std::size_t pos, std::size_t d, double* out);

}  // namespace scdp::nn
