#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "xnap/bilstm.hpp"
#include "xnap/encoding.hpp"
#include "xnap/tensor.hpp"

namespace xnap {

/// Stabilizer and bias factor of the epsilon rule for weighted connections.
struct LinearRule {
  double epsilon = 0.001;
  double delta = 0.0;
};

enum class RelevanceSource { Logit, Probability };

struct LrpConfig {
  double epsilon = 0.001;
  double delta = 0.0;
  /// Class to explain; the predicted class when empty.
  std::optional<std::size_t> target_class;
  RelevanceSource start_from = RelevanceSource::Logit;

  LinearRule rule() const { return {epsilon, delta}; }
  /// Throws InvalidArgument unless epsilon > 0 and delta is 0 or 1.
  void validate() const;
};

/// sign(0) = +1.
inline double lrp_sign(double z) { return z >= 0.0 ? 1.0 : -1.0; }

/// Redistributes R_upper of the layer z_upper = W z_lower + b onto z_lower:
///
///   R_{i<-j} = (z_i w_ji + (eps*sign(z_j) + delta*b_j) / N) / (z_j + eps*sign(z_j)) * R_j
///   R_i      = sum_j R_{i<-j}
///
/// with N = z_lower.size(). An upper neuron whose denominator is exactly zero
/// (only possible with eps = 0) passes no relevance down.
Vector lrp_linear(std::span<const double> z_lower, const Matrix& w, std::span<const double> b,
                  std::span<const double> z_upper, std::span<const double> r_upper, const LinearRule& rule);

/// Relevance the rule leaves with the biases: sum_j (1 - delta) b_j R_j / (z_j + eps*sign(z_j)).
double lrp_bias_absorbed(std::span<const double> b, std::span<const double> z_upper,
                         std::span<const double> r_upper, const LinearRule& rule);

struct MultiplicativeRelevance {
  Vector gate;
  Vector source;
};

/// Gate/source rule for z = gate * source: the gate receives nothing.
MultiplicativeRelevance lrp_multiplicative(std::span<const double> r_product);

struct RelevanceTrace {
  std::vector<double> raw;      // per event, oldest first
  std::vector<double> display;  // raw rescaled to [0, 1]
  std::size_t target_class = 0;
  double target_probability = 0;
  double initial_relevance = 0;  // relevance placed on the target output neuron

  // Per-direction shares of `raw` (event order).
  std::vector<double> forward_raw;
  std::vector<double> backward_raw;
  /// Total relevance left with biases across all linear layers (0 when delta = 1).
  double bias_absorbed = 0;
  /// Total relevance assigned to gate neurons. Always exactly 0.
  double gate_relevance = 0;
};

/// Explains one prediction of the model for a running trace of at least two events.
RelevanceTrace explain(const BiLstmModel& model, const SequenceView& sample, const LrpConfig& config = {});

/// Positives map to (0.5, 1] by r / max_positive, negatives to [0, 0.5) by
/// r / max_abs_negative, zeros to 0.5.
std::vector<double> rescale_for_display(std::span<const double> raw);

}  // namespace xnap
