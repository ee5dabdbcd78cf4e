#include "xnap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "xnap/error.hpp"

namespace xnap {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

}  // namespace

Vector matvec(const Matrix& w, std::span<const double> x) {
  Vector y(w.rows(), 0.0);
  matvec_add(w, x, y);
  return y;
}

Vector affine(const Matrix& w, std::span<const double> x, std::span<const double> b) {
  require(b.size() == w.rows(), "affine: bias length differs from row count");
  Vector y(b.begin(), b.end());
  matvec_add(w, x, y);
  return y;
}

void matvec_add(const Matrix& w, std::span<const double> x, std::span<double> y) {
  require(x.size() == w.cols() && y.size() == w.rows(), "matvec: shape mismatch");
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

void matvec_transposed_add(const Matrix& w, std::span<const double> x, std::span<double> y) {
  require(x.size() == w.rows() && y.size() == w.cols(), "matvec^T: shape mismatch");
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const auto row = w.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) y[c] += row[c] * xr;
  }
}

void outer_add(Matrix& w, std::span<const double> a, std::span<const double> b) {
  require(a.size() == w.rows() && b.size() == w.cols(), "outer: shape mismatch");
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    auto row = w.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += ar * b[c];
  }
}

double sigmoid(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "sigmoid");
  // Branch keeps exp() from overflowing for large |x|.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double tanh_(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "tanh");
  return std::tanh(x);
}

Vector softmax(std::span<const double> logits) {
  require(!logits.empty(), "softmax: empty input");
  for (double v : logits) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "softmax");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

double cross_entropy(std::span<const double> probabilities, std::size_t label) {
  require(label < probabilities.size(), "cross_entropy: label out of range");
  return -std::log(std::max(probabilities[label], kLossClip));
}

std::size_t argmax(std::span<const double> values) {
  require(!values.empty(), "argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace xnap
