#pragma once

// Reference implementations used only by tests. They deliberately avoid the
// library's kernels and data layout.

#include <cmath>
#include <vector>

#include "xnap/bilstm.hpp"

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Grid to_grid(const xnap::Matrix& m) {
  Grid g(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

// Final hidden state of one direction over `inputs` (already in reading order).
inline std::vector<double> run_lstm(const xnap::LstmDirectionParams& p, const Grid& inputs) {
  const std::size_t hidden = p.u[0].rows();
  const std::size_t width = p.w[0].cols();
  Grid w[4], u[4];
  for (int g = 0; g < 4; ++g) {
    w[g] = to_grid(p.w[g]);
    u[g] = to_grid(p.u[g]);
  }
  std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
  for (const auto& x : inputs) {
    std::vector<double> nh(hidden), nc(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
      double z[4];
      for (int g = 0; g < 4; ++g) {
        double s = p.b[g][k];
        for (std::size_t j = 0; j < width; ++j) s += w[g][k][j] * x[j];
        for (std::size_t j = 0; j < hidden; ++j) s += u[g][k][j] * h[j];
        z[g] = s;
      }
      const double i = logistic(z[0]);
      const double f = logistic(z[1]);
      const double o = logistic(z[2]);
      const double cand = std::tanh(z[3]);
      nc[k] = f * c[k] + i * cand;
      nh[k] = o * std::tanh(nc[k]);
    }
    h = nh;
    c = nc;
  }
  return h;
}

// Softmax output of the bidirectional model on the given event vectors (oldest first).
inline std::vector<double> run_bilstm(const xnap::BiLstmModel& m, const Grid& events) {
  const auto hf = run_lstm(m.params.forward, events);
  const Grid reversed(events.rbegin(), events.rend());
  const auto hb = run_lstm(m.params.backward, reversed);
  std::vector<double> joined = hf;
  joined.insert(joined.end(), hb.begin(), hb.end());
  const std::size_t classes = m.params.w_out.rows();
  std::vector<double> z(classes);
  double top = -1e300;
  for (std::size_t r = 0; r < classes; ++r) {
    double s = m.params.b_out[r];
    for (std::size_t j = 0; j < joined.size(); ++j) s += m.params.w_out(r, j) * joined[j];
    z[r] = s;
    top = std::max(top, s);
  }
  double total = 0.0;
  for (double& v : z) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : z) v /= total;
  return z;
}

// Epsilon-rule with every message R_{i<-j} materialized.
inline std::vector<double> explicit_messages(const std::vector<double>& z_lower, const xnap::Matrix& w,
                                             const std::vector<double>& b, const std::vector<double>& r_upper,
                                             double eps, double delta) {
  const std::size_t n = z_lower.size();
  const std::size_t m = b.size();
  Grid msg(n, std::vector<double>(m, 0.0));
  for (std::size_t j = 0; j < m; ++j) {
    double zj = b[j];
    for (std::size_t i = 0; i < n; ++i) zj += z_lower[i] * w(j, i);
    const double s = zj >= 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      msg[i][j] = (z_lower[i] * w(j, i) + (eps * s + delta * b[j]) / static_cast<double>(n)) / (zj + eps * s) *
                  r_upper[j];
    }
  }
  std::vector<double> r(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) r[i] += msg[i][j];
  return r;
}

}  // namespace oracle
