#include "xnap/nadam.hpp"

#include <cmath>

#include "xnap/error.hpp"

namespace xnap {

NadamOptimizer::NadamOptimizer(NadamSettings settings, std::size_t parameter_count)
    : settings_(settings), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void NadamOptimizer::step(const std::vector<std::span<double>>& params,
                          const std::vector<std::span<const double>>& grads) {
  if (params.size() != grads.size()) throw Error(ErrorCode::ShapeMismatch, "nadam: block count differs");

  ++iterations_;
  const double t = static_cast<double>(iterations_);
  const double b1 = settings_.beta1;
  const double b2 = settings_.beta2;
  const double mu_t = b1 * (1.0 - 0.5 * std::pow(0.96, t * settings_.schedule_decay));
  const double mu_next = b1 * (1.0 - 0.5 * std::pow(0.96, (t + 1.0) * settings_.schedule_decay));
  const double schedule_new = m_schedule_ * mu_t;
  const double schedule_next = schedule_new * mu_next;
  m_schedule_ = schedule_new;
  const double v_correction = 1.0 - std::pow(b2, t);

  std::size_t k = 0;
  for (std::size_t block = 0; block < params.size(); ++block) {
    auto p = params[block];
    auto g = grads[block];
    if (p.size() != g.size()) throw Error(ErrorCode::ShapeMismatch, "nadam: block size differs");
    for (std::size_t i = 0; i < p.size(); ++i, ++k) {
      if (k >= m_.size()) throw Error(ErrorCode::ShapeMismatch, "nadam: more parameters than state");
      const double gi = g[i];
      m_[k] = b1 * m_[k] + (1.0 - b1) * gi;
      v_[k] = b2 * v_[k] + (1.0 - b2) * gi * gi;
      const double g_prime = gi / (1.0 - schedule_new);
      const double m_prime = m_[k] / (1.0 - schedule_next);
      const double v_prime = v_[k] / v_correction;
      const double m_bar = (1.0 - mu_t) * g_prime + mu_next * m_prime;
      p[i] -= settings_.learning_rate * m_bar / (std::sqrt(v_prime) + settings_.epsilon);
    }
  }
  if (k != m_.size()) throw Error(ErrorCode::ShapeMismatch, "nadam: fewer parameters than state");
}

}  // namespace xnap
