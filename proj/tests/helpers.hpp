#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "xnap/bilstm.hpp"
#include "xnap/encoding.hpp"
#include "xnap/eventlog.hpp"
#include "xnap/rng.hpp"

namespace testing {

inline xnap::EventLog log_from_csv(const std::string& csv, const xnap::CsvFormat& fmt = {}) {
  std::istringstream in(csv);
  return xnap::parse_log(in, fmt);
}

/// Model with every weight drawn from U(-scale, scale).
inline xnap::BiLstmModel random_model(std::size_t hidden, std::size_t width, std::size_t max_len,
                                      std::uint64_t seed, double scale = 0.5) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i + 1 < width; ++i) labels.push_back("a" + std::to_string(i));
  labels.emplace_back(xnap::kEndActivity);
  xnap::TrainConfig cfg;
  cfg.hidden_size = hidden;
  cfg.seed = seed;
  auto model = xnap::BiLstmModel::initialize(xnap::ActivityVocabulary(labels), max_len, cfg);
  xnap::Rng rng(seed * 7919 + 1);
  for (auto block : model.params.blocks())
    for (double& v : block) v = rng.uniform(-scale, scale);
  return model;
}

/// Random one-hot sample of `length` events padded to max_len.
inline xnap::PrefixSample random_sample(std::size_t width, std::size_t max_len, std::size_t length,
                                        std::uint64_t seed) {
  xnap::Rng rng(seed);
  xnap::PrefixSample s;
  s.rows = xnap::Matrix(max_len, width);
  s.true_length = length;
  for (std::size_t t = 0; t < length; ++t) s.rows(max_len - length + t, rng.below(width - 1)) = 1.0;
  return s;
}

}  // namespace testing
