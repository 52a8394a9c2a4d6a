#include "scdp/nn.hpp"

#include <stdexcept>

namespace scdp::nn {

ParamRef ParamStore::add(const std::string& name, std::size_t rows,
                         std::size_t cols) {
  if (names_.count(name)) {
    throw std::invalid_argument("duplicate parameter name: " + name);
  }
  ParamRef r{values_.size(), rows, cols};
  values_.resize(values_.size() + r.size(), 0.0);
  grads_.resize(values_.size(), 0.0);
  names_[name] = r;
  return r;
}

void ParamStore::init(Rng& rng) {
  auto ends_with = [](const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() &&
           s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  for (const auto& [name, r] : names_) {
    double* p = values_.data() + r.offset;
    if (ends_with(name, ".b") || ends_with(name, ".ln_bias")) {
      continue;  // zero
    }
    if (ends_with(name, ".ln_gain")) {
      for (std::size_t i = 0; i < r.size(); ++i) p[i] = 1.0;
      continue;
    }
    const double s = 1.0 / std::sqrt(static_cast<double>(r.cols));
    for (std::size_t i = 0; i < r.size(); ++i) p[i] = s * rng.normal();
  }
}

Linear::Linear(ParamStore& store, const std::string& name, std::size_t in,
               std::size_t out)
    : store_(&store) {
  w_ = store.add(name + ".w", out, in);
  b_ = store.add(name + ".b", out, 1);
}

Mat Linear::forward(const Mat& x) {
  if (x.cols() != w_.cols) throw std::invalid_argument("linear: width mismatch");
  x_cache_ = x;
  Mat y(x.rows(), w_.rows);
  const double* b = store_->values(b_);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) = b[j];
  }
  kernels::gemm_bt(y.data(), x.data(), store_->values(w_), x.rows(), x.cols(),
                   w_.rows);
  return y;
}

Mat Linear::backward(const Mat& dy) {
  // dx = dy W
  Mat dx(dy.rows(), w_.cols);
  kernels::gemm(dx.data(), dy.data(), store_->values(w_), dy.rows(), dy.cols(),
                w_.cols);
  // dW += dy^T x
  kernels::gemm_at(store_->grads(w_), dy.data(), x_cache_.data(), dy.cols(),
                   dy.rows(), x_cache_.cols());
  // db += column sums of dy
  double* db = store_->grads(b_);
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    const double* r = dy.row(i);
    for (std::size_t j = 0; j < dy.cols(); ++j) db[j] += r[j];
  }
  return dx;
}

Mlp::Mlp(ParamStore& store, const std::string& name, std::size_t in,
         std::size_t out, std::size_t layers)
    : in_(in), layers_(layers) {
  if (layers == 1) {
    l1_ = Linear(store, name + ".l1", in, out);
  } else if (layers == 2) {
    l1_ = Linear(store, name + ".l1", in, out);
    l2_ = Linear(store, name + ".l2", out, out);
  } else {
    throw std::invalid_argument("mlp: 1 or 2 layers only");
  }
}

Mat Mlp::forward(const Mat& x) {
  Mat h = l1_.forward(x);
  if (layers_ == 1) return h;
  pre_act_ = h;
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] = gelu(h.data()[i]);
  return l2_.forward(h);
}

Mat Mlp::backward(const Mat& dy) {
  if (layers_ == 1) return l1_.backward(dy);
  Mat dh = l2_.backward(dy);
  for (std::size_t i = 0; i < dh.size(); ++i) {
    dh.data()[i] *= gelu_grad(pre_act_.data()[i]);
  }
  return l1_.backward(dh);
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name,
                     std::size_t dim)
    : store_(&store) {
  gain_ = store.add(name + ".ln_gain", dim, 1);
  bias_ = store.add(name + ".ln_bias", dim, 1);
}

Mat LayerNorm::forward(const Mat& x) {
  const std::size_t n = x.cols();
  xhat_ = Mat(x.rows(), n);
  inv_std_.assign(x.rows(), 0.0);
  Mat y(x.rows(), n);
  const double* g = store_->values(gain_);
  const double* b = store_->values(bias_);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xr = x.row(i);
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += xr[j];
    mean /= double(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = xr[j] - mean;
      var += d * d;
    }
    var /= double(n);
    const double inv = 1.0 / std::sqrt(var + kEps);
    inv_std_[i] = inv;
    kernels::normalize(xr, mean, inv, xhat_.row(i), n);
    double* yr = y.row(i);
    const double* xh = xhat_.row(i);
    for (std::size_t j = 0; j < n; ++j) yr[j] = g[j] * xh[j] + b[j];
  }
  return y;
}

Mat LayerNorm::backward(const Mat& dy) {
  const std::size_t n = dy.cols();
  Mat dx(dy.rows(), n);
  const double* g = store_->values(gain_);
  double* dg = store_->grads(gain_);
  double* db = store_->grads(bias_);
  for (std::size_t i = 0; i < dy.rows(); ++i) {
    const double* dyr = dy.row(i);
    const double* xh = xhat_.row(i);
    double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double dxh = dyr[j] * g[j];
      mean_dxhat += dxh;
      mean_dxhat_xhat += dxh * xh[j];
      dg[j] += dyr[j] * xh[j];
      db[j] += dyr[j];
    }
    mean_dxhat /= double(n);
    mean_dxhat_xhat /= double(n);
    double* dxr = dx.row(i);
    const double inv = inv_std_[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double dxh = dyr[j] * g[j];
      dxr[j] = inv * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
    }
  }
  return dx;
}

MultiheadSelfAttention::MultiheadSelfAttention(ParamStore& store,
                                               const std::string& name,
                                               std::size_t d_model,
                                               std::size_t heads)
    : d_(d_model), heads_(heads), dh_(d_model / heads) {
  if (d_model % heads != 0) {
    throw std::invalid_argument("attention: d_model % heads != 0");
  }
  wq_ = Linear(store, name + ".wq", d_model, d_model);
  wk_ = Linear(store, name + ".wk", d_model, d_model);
  wv_ = Linear(store, name + ".wv", d_model, d_model);
  wo_ = Linear(store, name + ".wo", d_model, d_model);
}

Mat MultiheadSelfAttention::forward(const Mat& x, const Mat& mask_bias) {
  const std::size_t L = x.rows();
  q_ = wq_.forward(x);
  k_ = wk_.forward(x);
  v_ = wv_.forward(x);
  probs_ = Mat(heads_ * L, L);
  concat_ = Mat(L, d_);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh_));
  for (std::size_t h = 0; h < heads_; ++h) {
    const std::size_t c0 = h * dh_;
    for (std::size_t i = 0; i < L; ++i) {
      double* srow = probs_.row(h * L + i);
      const double* qi = q_.row(i) + c0;
      for (std::size_t j = 0; j < L; ++j) {
        srow[j] = scale * kernels::dot(qi, k_.row(j) + c0, dh_);
      }
      kernels::softmax_masked(srow, mask_bias.row(i), L);
      double* oi = concat_.row(i) + c0;
      std::fill(oi, oi + dh_, 0.0);
      for (std::size_t j = 0; j < L; ++j) {
        kernels::axpy(srow[j], v_.row(j) + c0, oi, dh_);
      }
    }
  }
  return wo_.forward(concat_);
}

Mat MultiheadSelfAttention::backward(const Mat& dy) {
  const std::size_t L = dy.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh_));
  Mat dconcat = wo_.backward(dy);
  Mat dq(L, d_), dk(L, d_), dv(L, d_);
  std::vector<double> ds(L);
  for (std::size_t h = 0; h < heads_; ++h) {
    const std::size_t c0 = h * dh_;
    for (std::size_t i = 0; i < L; ++i) {
      const double* doi = dconcat.row(i) + c0;
      const double* p = probs_.row(h * L + i);
      // dP_ij = dO_i . V_j ; softmax backward to dS
      double dot_dp_p = 0.0;
      for (std::size_t j = 0; j < L; ++j) {
        ds[j] = kernels::dot(doi, v_.row(j) + c0, dh_);
        dot_dp_p += ds[j] * p[j];
      }
      for (std::size_t j = 0; j < L; ++j) {
        ds[j] = p[j] * (ds[j] - dot_dp_p);
        // dV_j += P_ij dO_i
        kernels::axpy(p[j], doi, dv.row(j) + c0, dh_);
      }
      // dQ_i += scale * sum_j dS_ij K_j ; dK_j += scale * dS_ij Q_i
      double* dqi = dq.row(i) + c0;
      const double* qi = q_.row(i) + c0;
      for (std::size_t j = 0; j < L; ++j) {
        if (ds[j] == 0.0) continue;
        kernels::axpy(scale * ds[j], k_.row(j) + c0, dqi, dh_);
        kernels::axpy(scale * ds[j], qi, dk.row(j) + c0, dh_);
      }
    }
  }
  Mat dx = wq_.backward(dq);
  Mat dxk = wk_.backward(dk);
  Mat dxv = wv_.backward(dv);
  for (std::size_t i = 0; i < dx.size(); ++i) {
    dx.data()[i] += dxk.data()[i] + dxv.data()[i];
  }
  return dx;
}

TransformerLayer::TransformerLayer(ParamStore& store, const std::string& name,
                                   std::size_t d_model, std::size_t heads,
                                   std::size_t d_ff) {
  ln1_ = LayerNorm(store, name + ".ln1", d_model);
  ln2_ = LayerNorm(store, name + ".ln2", d_model);
  attn_ = MultiheadSelfAttention(store, name + ".attn", d_model, heads);
  ff1_ = Linear(store, name + ".ff1", d_model, d_ff);
  ff2_ = Linear(store, name + ".ff2", d_ff, d_model);
}

Mat TransformerLayer::forward(const Mat& x, const Mat& mask_bias) {
  Mat h = attn_.forward(ln1_.forward(x), mask_bias);
  for (std::size_t i = 0; i < h.size(); ++i) h.data()[i] += x.data()[i];
  Mat f = ff1_.forward(ln2_.forward(h));
  ff_pre_act_ = f;
  for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = gelu(f.data()[i]);
  Mat out = ff2_.forward(f);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += h.data()[i];
  return out;
}

Mat TransformerLayer::backward(const Mat& dy) {
  Mat df = ff2_.backward(dy);
  for (std::size_t i = 0; i < df.size(); ++i) {
    df.data()[i] *= gelu_grad(ff_pre_act_.data()[i]);
  }
  Mat dh = ln2_.backward(ff1_.backward(df));
  for (std::size_t i = 0; i < dh.size(); ++i) dh.data()[i] += dy.data()[i];
  Mat dx = ln1_.backward(attn_.backward(dh));
  for (std::size_t i = 0; i < dx.size(); ++i) dx.data()[i] += dh.data()[i];
  return dx;
}

void sinusoidal_embedding(std::size_t pos, std::size_t d, double* out) {
  for (std::size_t i = 0; i < d / 2; ++i) {
    const double freq =
        std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(d));
    out[2 * i] = std::sin(static_cast<double>(pos) * freq);
    out[2 * i + 1] = std::cos(static_cast<double>(pos) * freq);
  }
  if (d % 2) out[d - 1] = 0.0;
}

}  // namespace scdp::nn
