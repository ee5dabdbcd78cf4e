#include "xnap/lrp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "xnap/error.hpp"

namespace xnap {

void LrpConfig::validate() const {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (delta != 0.0 && delta != 1.0) throw Error(ErrorCode::InvalidArgument, "delta must be 0 or 1");
}

namespace {

/// Lower-layer neurons and their weights into the upper layer.
struct InputBlock {
  std::span<const double> z;
  const Matrix* w;
};

std::vector<Vector> linear_blocks(std::span<const InputBlock> blocks, std::span<const double> b,
                                  std::span<const double> z_upper, std::span<const double> r_upper,
                                  const LinearRule& rule) {
  const std::size_t m = z_upper.size();
  if (b.size() != m || r_upper.size() != m) throw Error(ErrorCode::ShapeMismatch, "lrp_linear: upper layer sizes");
  std::size_t fan_in = 0;
  std::vector<Vector> out;
  for (const auto& blk : blocks) {
    if (blk.w->rows() != m || blk.w->cols() != blk.z.size()) {
      throw Error(ErrorCode::ShapeMismatch, "lrp_linear: weight shape");
    }
    fan_in += blk.z.size();
    out.emplace_back(blk.z.size(), 0.0);
  }
  if (fan_in == 0) return out;
  const double n = static_cast<double>(fan_in);

  for (std::size_t j = 0; j < m; ++j) {
    if (r_upper[j] == 0.0) continue;
    const double s = lrp_sign(z_upper[j]);
    const double denom = z_upper[j] + rule.epsilon * s;
    if (denom == 0.0) continue;
    const double scale = r_upper[j] / denom;
    const double share = (rule.epsilon * s + rule.delta * b[j]) / n;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      const auto row = blocks[k].w->row(j);
      const auto z = blocks[k].z;
      Vector& r = out[k];
      for (std::size_t i = 0; i < z.size(); ++i) r[i] += (z[i] * row[i] + share) * scale;
    }
  }
  return out;
}

}  // namespace

Vector lrp_linear(std::span<const double> z_lower, const Matrix& w, std::span<const double> b,
                  std::span<const double> z_upper, std::span<const double> r_upper, const LinearRule& rule) {
  const InputBlock block{z_lower, &w};
  return std::move(linear_blocks(std::span(&block, 1), b, z_upper, r_upper, rule).front());
}

double lrp_bias_absorbed(std::span<const double> b, std::span<const double> z_upper,
                         std::span<const double> r_upper, const LinearRule& rule) {
  if (b.size() != z_upper.size() || r_upper.size() != z_upper.size()) {
    throw Error(ErrorCode::ShapeMismatch, "lrp_bias_absorbed: sizes");
  }
  double total = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double denom = z_upper[j] + rule.epsilon * lrp_sign(z_upper[j]);
    if (denom == 0.0) {
      total += r_upper[j];
      continue;
    }
    total += (1.0 - rule.delta) * b[j] * r_upper[j] / denom;
  }
  return total;
}

MultiplicativeRelevance lrp_multiplicative(std::span<const double> r_product) {
  return {Vector(r_product.size(), 0.0), Vector(r_product.begin(), r_product.end())};
}

namespace {

// Walks one direction backwards from the relevance of its final hidden state.
// Writes the input relevance of each step to `per_event` in event order.
void explain_direction(const LstmDirectionParams& p, const ForwardTrace::Direction& dir, Vector r_h, bool reverse,
                       const LinearRule& rule, std::vector<double>& per_event, RelevanceTrace& out) {
  const std::size_t hidden = p.hidden_size();
  const std::size_t steps = dir.steps.size();
  const std::size_t cand = index(Gate::Candidate);
  Vector r_c(hidden, 0.0);
  Vector r_cell_prev(hidden), r_input_path(hidden);

  for (std::size_t s = steps; s-- > 0;) {
    const LstmStep& st = dir.steps[s];

    // h = o * tanh(c); tanh passes relevance through unchanged.
    auto at_h = lrp_multiplicative(r_h);
    out.gate_relevance += std::accumulate(at_h.gate.begin(), at_h.gate.end(), 0.0);
    for (std::size_t k = 0; k < hidden; ++k) r_c[k] += at_h.source[k];

    // c = f * c_prev + i * g, a unit-weight sum with no bias. The first step
    // has no previous cell, so i * g is its only summand.
    const double fan_in = s > 0 ? 2.0 : 1.0;
    for (std::size_t k = 0; k < hidden; ++k) {
      const double kept = s > 0 ? st.act[index(Gate::Forget)][k] * dir.steps[s - 1].c[k] : 0.0;
      const double written = st.act[index(Gate::Input)][k] * st.act[cand][k];
      const double sgn = lrp_sign(st.c[k]);
      const double denom = st.c[k] + rule.epsilon * sgn;
      const double share = rule.epsilon * sgn / fan_in;
      if (denom == 0.0 || r_c[k] == 0.0) {
        r_cell_prev[k] = 0.0;
        r_input_path[k] = 0.0;
        continue;
      }
      r_cell_prev[k] = s > 0 ? (kept + share) / denom * r_c[k] : 0.0;
      r_input_path[k] = (written + share) / denom * r_c[k];
    }
    auto via_forget = lrp_multiplicative(r_cell_prev);
    auto via_input = lrp_multiplicative(r_input_path);
    out.gate_relevance += std::accumulate(via_forget.gate.begin(), via_forget.gate.end(), 0.0);
    out.gate_relevance += std::accumulate(via_input.gate.begin(), via_input.gate.end(), 0.0);

    // g = tanh(W_g x + U_g h_prev + b_g); the initial state is not an input.
    std::vector<InputBlock> blocks{{st.x, &p.w[cand]}};
    if (s > 0) blocks.push_back({dir.steps[s - 1].h, &p.u[cand]});
    auto lower = linear_blocks(blocks, p.b[cand], st.pre[cand], via_input.source, rule);
    out.bias_absorbed += lrp_bias_absorbed(p.b[cand], st.pre[cand], via_input.source, rule);

    const std::size_t event = reverse ? steps - 1 - s : s;
    per_event[event] = std::accumulate(lower[0].begin(), lower[0].end(), 0.0);
    if (s > 0) r_h = std::move(lower[1]);
    r_c = std::move(via_forget.source);
  }
}

}  // namespace

RelevanceTrace explain(const BiLstmModel& model, const SequenceView& sample, const LrpConfig& config) {
  config.validate();
  if (sample.true_length < 2) {
    throw Error(ErrorCode::TraceTooShort, "explanations need at least two events, got " +
                                              std::to_string(sample.true_length));
  }
  const auto trace = forward(model, sample);
  const std::size_t width = model.width();
  const std::size_t target = config.target_class.value_or(argmax(trace.probabilities));
  if (target >= width) throw Error(ErrorCode::ShapeMismatch, "target class " + std::to_string(target) + " >= H");

  RelevanceTrace out;
  out.target_class = target;
  out.target_probability = trace.probabilities[target];
  out.initial_relevance =
      config.start_from == RelevanceSource::Logit ? trace.logits[target] : trace.probabilities[target];

  const LinearRule rule = config.rule();
  Vector r_out(width, 0.0);
  r_out[target] = out.initial_relevance;
  const Vector r_hidden = lrp_linear(trace.hidden, model.params.w_out, model.params.b_out, trace.logits, r_out, rule);
  out.bias_absorbed += lrp_bias_absorbed(model.params.b_out, trace.logits, r_out, rule);

  const std::size_t hidden = model.hidden_size();
  const std::size_t steps = sample.true_length;
  out.forward_raw.assign(steps, 0.0);
  out.backward_raw.assign(steps, 0.0);
  explain_direction(model.params.forward, trace.forward, Vector(r_hidden.begin(), r_hidden.begin() + hidden), false,
                    rule, out.forward_raw, out);
  explain_direction(model.params.backward, trace.backward, Vector(r_hidden.begin() + hidden, r_hidden.end()), true,
                    rule, out.backward_raw, out);

  out.raw.resize(steps);
  for (std::size_t t = 0; t < steps; ++t) out.raw[t] = out.forward_raw[t] + out.backward_raw[t];
  out.display = rescale_for_display(out.raw);
  return out;
}

std::vector<double> rescale_for_display(std::span<const double> raw) {
  double max_pos = 0.0;
  double max_neg = 0.0;
  for (double r : raw) {
    if (r > 0.0) max_pos = std::max(max_pos, r);
    if (r < 0.0) max_neg = std::max(max_neg, -r);
  }
  std::vector<double> out;
  out.reserve(raw.size());
  for (double r : raw) {
    if (r > 0.0) {
      out.push_back(0.5 + 0.5 * r / max_pos);
    } else if (r < 0.0) {
      out.push_back(0.5 + 0.5 * r / max_neg);
    } else {
      out.push_back(0.5);
    }
  }
  return out;
}

}  // namespace xnap
