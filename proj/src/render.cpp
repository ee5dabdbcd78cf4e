#include "xnap/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "json.hpp"
#include "xnap/error.hpp"

namespace xnap {

std::vector<ExplainedPrefix> explain_prefixes(const BiLstmModel& model, std::span<const std::string> activities,
                                              const std::string& case_id, std::size_t min_prefix, bool completed,
                                              const LrpConfig& config) {
  if (activities.size() < 2) {
    throw Error(ErrorCode::TraceTooShort, "trace '" + case_id + "' has fewer than two events");
  }
  std::vector<ExplainedPrefix> rows;
  for (std::size_t k = std::max<std::size_t>(min_prefix, 2); k <= activities.size(); ++k) {
    const auto prefix = activities.first(k);
    const auto sample = encode_running_trace(prefix, model.vocab, model.max_len, case_id);
    ExplainedPrefix row;
    row.case_id = case_id;
    row.prefix.assign(prefix.begin(), prefix.end());
    row.relevance = explain(model, sample.view(), config);
    row.target_class = model.vocab.label(row.relevance.target_class);
    row.target_probability = row.relevance.target_probability;
    if (k < activities.size()) {
      row.ground_truth = activities[k];
    } else if (completed) {
      row.ground_truth = kEndActivity;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string heat_color(double display) {
  const double d = std::clamp(display, 0.0, 1.0);
  int r = 255, g = 255, b = 255;
  if (d > 0.5) {
    g = b = static_cast<int>(std::lround(255.0 * (1.0 - d) * 2.0));
  } else if (d < 0.5) {
    r = g = static_cast<int>(std::lround(255.0 * d * 2.0));
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02X%02X%02X", r, g, b);
  return buf;
}

void render_json(std::ostream& sink, std::span<const ExplainedPrefix> rows) {
  for (const auto& row : rows) {
    nlohmann::ordered_json j;
    j["case_id"] = row.case_id;
    j["prefix"] = row.prefix;
    j["target_class"] = row.target_class;
    j["target_prob"] = row.target_probability;
    j["raw_relevance"] = row.relevance.raw;
    j["display"] = row.relevance.display;
    j["ground_truth"] = row.ground_truth ? nlohmann::ordered_json(*row.ground_truth) : nlohmann::ordered_json();
    sink << j.dump() << '\n';
  }
}

namespace {

std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

void render_html(std::ostream& sink, std::span<const ExplainedPrefix> rows) {
  sink << "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Activity relevance</title>\n"
          "<style>table{border-collapse:collapse;font-family:sans-serif;margin-bottom:1em}"
          "td,th{border:1px solid #999;padding:4px 8px;text-align:center}</style></head><body>\n";
  std::string current;
  bool open = false;
  for (const auto& row : rows) {
    if (!open || row.case_id != current) {
      if (open) sink << "</table>\n";
      current = row.case_id;
      open = true;
      sink << "<h3>" << html_escape(current) << "</h3>\n<table>\n<tr><th>prefix</th>";
      std::size_t longest = 0;
      for (const auto& r : rows) {
        if (r.case_id == current) longest = std::max(longest, r.prefix.size());
      }
      for (std::size_t t = 1; t <= longest; ++t) sink << "<th>" << t << "</th>";
      sink << "<th>prediction</th><th>ground truth</th></tr>\n";
    }
    sink << "<tr><td>" << row.prefix.size() << "</td>";
    for (std::size_t t = 0; t < row.prefix.size(); ++t) {
      // Numbers are written exactly as in the JSON output.
      const auto r = nlohmann::json(row.relevance.raw[t]).dump();
      const auto d = nlohmann::json(row.relevance.display[t]).dump();
      sink << "<td style=\"background:" << heat_color(row.relevance.display[t]) << "\" data-r=\"" << r
           << "\" data-d=\"" << d << "\" title=\"r=" << r << "\">" << html_escape(row.prefix[t]) << "</td>";
    }
    sink << "<td>" << html_escape(row.target_class) << "</td><td>"
         << html_escape(row.ground_truth.value_or("?")) << "</td></tr>\n";
  }
  if (open) sink << "</table>\n";
  sink << "</body></html>\n";
}

void render_ansi(std::ostream& sink, std::span<const ExplainedPrefix> rows) {
  std::string current;
  for (const auto& row : rows) {
    if (row.case_id != current) {
      current = row.case_id;
      sink << "case " << current << '\n';
    }
    sink << "  " << row.prefix.size() << ":";
    for (std::size_t t = 0; t < row.prefix.size(); ++t) {
      const std::string hex = heat_color(row.relevance.display[t]);
      const int r = std::stoi(hex.substr(1, 2), nullptr, 16);
      const int g = std::stoi(hex.substr(3, 2), nullptr, 16);
      const int b = std::stoi(hex.substr(5, 2), nullptr, 16);
      sink << " \x1b[48;2;" << r << ';' << g << ';' << b << "m\x1b[38;2;0;0;0m " << row.prefix[t] << " \x1b[0m";
    }
    sink << "  -> " << row.target_class << " (p=" << row.target_probability << ")";
    if (row.ground_truth) sink << "  truth: " << *row.ground_truth;
    sink << '\n';
  }
}

}  // namespace xnap
