#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace xnap {

struct NadamSettings {
  double learning_rate = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  /// Momentum warm-up schedule, as in the Keras 2 Nadam.
  double schedule_decay = 0.004;
};

/// Nesterov-accelerated Adam with the Keras 2 momentum schedule:
///   mu_t = beta1 * (1 - 0.5 * 0.96^(t * schedule_decay))
/// and bias corrections over the running product of mu.
class NadamOptimizer {
 public:
  NadamOptimizer(NadamSettings settings, std::size_t parameter_count);

  /// Applies one update. `params` and `grads` are matching lists of blocks
  /// whose total size equals the parameter count given at construction.
  void step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads);

  std::uint64_t iterations() const noexcept { return iterations_; }

 private:
  NadamSettings settings_;
  std::vector<double> m_;
  std::vector<double> v_;
  double m_schedule_ = 1.0;
  std::uint64_t iterations_ = 0;
};

}  // namespace xnap
