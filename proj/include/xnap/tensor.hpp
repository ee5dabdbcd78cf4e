#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace xnap {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Third-order tensor laid out as `depth` consecutive rows x cols matrices.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t depth, std::size_t rows, std::size_t cols)
      : depth_(depth), rows_(rows), cols_(cols), data_(depth * rows * cols, 0.0) {}

  std::size_t depth() const noexcept { return depth_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t d, std::size_t r, std::size_t c) {
    return data_[(d * rows_ + r) * cols_ + c];
  }
  double operator()(std::size_t d, std::size_t r, std::size_t c) const {
    return data_[(d * rows_ + r) * cols_ + c];
  }

  /// The rows x cols slab for index d.
  std::span<const double> slice(std::size_t d) const {
    return {data_.data() + d * rows_ * cols_, rows_ * cols_};
  }
  std::span<double> slice(std::size_t d) { return {data_.data() + d * rows_ * cols_, rows_ * cols_}; }

  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t depth_ = 0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// All kernels throw Error(ShapeMismatch) on inconsistent dimensions.

Vector matvec(const Matrix& w, std::span<const double> x);
Vector affine(const Matrix& w, std::span<const double> x, std::span<const double> b);

/// y += W x
void matvec_add(const Matrix& w, std::span<const double> x, std::span<double> y);
/// y += W^T x
void matvec_transposed_add(const Matrix& w, std::span<const double> x, std::span<double> y);
/// W += a b^T
void outer_add(Matrix& w, std::span<const double> a, std::span<const double> b);

double sigmoid(double x);
double tanh_(double x);

/// Max-subtracted softmax. Throws NonFiniteInput on NaN/inf entries.
Vector softmax(std::span<const double> logits);

/// -ln(max(p[label], 1e-12)).
double cross_entropy(std::span<const double> probabilities, std::size_t label);

inline constexpr double kLossClip = 1e-12;

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace xnap
