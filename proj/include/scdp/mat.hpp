#pragma once

// Minimal row-major dense matrix over double, backed by the dispatched
// kernels. Only what the network code needs; no expression templates.

#include <cassert>
#include <cstddef>
#include <vector>

#include "scdp/kernels.hpp"

namespace scdp {

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }

  bool operator==(const Mat& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// c += a * b
inline void addmm(Mat& c, const Mat& a, const Mat& b) {
  assert(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols());
  kernels::gemm(c.data(), a.data(), b.data(), a.rows(), a.cols(), b.cols());
}

// c += a * b^T
inline void addmm_bt(Mat& c, const Mat& a, const Mat& b) {
  assert(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows());
  kernels::gemm_bt(c.data(), a.data(), b.data(), a.rows(), a.cols(), b.rows());
}

// c += a^T * b
inline void addmm_at(Mat& c, const Mat& a, const Mat& b) {
  assert(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols());
  kernels::gemm_at(c.data(), a.data(), b.data(), a.cols(), a.rows(), b.cols());
}

}  // namespace scdp
