#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xnap/bilstm.hpp"
#include "xnap/lrp.hpp"

namespace xnap {

/// One heatmap row: a prefix, its prediction and the relevance of each event.
struct ExplainedPrefix {
  std::string case_id;
  std::vector<std::string> prefix;
  std::string target_class;
  double target_probability = 0;
  std::optional<std::string> ground_truth;
  RelevanceTrace relevance;
};

/// Explains prefixes of lengths min_prefix .. activities.size() (clamped to at
/// least 2). For a completed trace the ground truth after the last event is
/// the end symbol; for a running trace it is unknown.
std::vector<ExplainedPrefix> explain_prefixes(const BiLstmModel& model, std::span<const std::string> activities,
                                              const std::string& case_id, std::size_t min_prefix, bool completed,
                                              const LrpConfig& config = {});

/// Blue (0) - white (0.5) - red (1) palette as "#RRGGBB".
std::string heat_color(double display);

/// One JSON object per line with case_id, prefix, target_class, target_prob,
/// raw_relevance, display and ground_truth.
void render_json(std::ostream& sink, std::span<const ExplainedPrefix> rows);
void render_html(std::ostream& sink, std::span<const ExplainedPrefix> rows);
/// 24-bit color terminal output.
void render_ansi(std::ostream& sink, std::span<const ExplainedPrefix> rows);

}  // namespace xnap
