#include "xnap/encoding.hpp"

#include <algorithm>
#include <iostream>
#include <set>

#include "xnap/error.hpp"

namespace xnap {

ActivityVocabulary::ActivityVocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty() || labels_.back() != kEndActivity) {
    throw Error(ErrorCode::InvalidArgument, "vocabulary must end with " + std::string(kEndActivity));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) {
      if (labels_[i] == kEndActivity) {
        throw Error(ErrorCode::ReservedLabelCollision, "data label equals " + std::string(kEndActivity));
      }
      throw Error(ErrorCode::InvalidArgument, "duplicate label '" + labels_[i] + "'");
    }
  }
}

std::optional<std::size_t> ActivityVocabulary::find(const std::string& label) const {
  const auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ActivityVocabulary::index_of(const std::string& label) const {
  if (auto i = find(label)) return *i;
  throw Error(ErrorCode::UnknownActivity, "'" + label + "'");
}

ActivityVocabulary build_vocabulary(const EventLog& log) {
  if (log.empty()) throw Error(ErrorCode::EmptyLog, "cannot build a vocabulary from an empty log");
  std::set<std::string> distinct;
  for (const Trace& t : log.traces()) {
    for (const Event& e : t.events()) distinct.insert(e.activity);
  }
  if (distinct.count(kEndActivity) != 0) {
    throw Error(ErrorCode::ReservedLabelCollision, "log uses the reserved label " + std::string(kEndActivity));
  }
  std::vector<std::string> labels(distinct.begin(), distinct.end());
  labels.emplace_back(kEndActivity);
  return ActivityVocabulary(std::move(labels));
}

std::vector<std::size_t> augment_with_end(const Trace& trace, const ActivityVocabulary& vocab) {
  std::vector<std::size_t> seq;
  seq.reserve(trace.size() + 1);
  for (const Event& e : trace.events()) {
    const auto idx = vocab.find(e.activity);
    if (!idx) {
      throw Error(ErrorCode::UnknownActivity, "'" + e.activity + "' in case '" + trace.case_id() + "'");
    }
    seq.push_back(*idx);
  }
  seq.push_back(vocab.end_index());
  return seq;
}

std::vector<std::pair<std::vector<std::size_t>, std::size_t>> generate_prefixes(
    std::span<const std::size_t> index_seq) {
  std::vector<std::pair<std::vector<std::size_t>, std::size_t>> out;
  for (std::size_t k = 1; k < index_seq.size(); ++k) {
    out.emplace_back(std::vector<std::size_t>(index_seq.begin(), index_seq.begin() + k), index_seq[k]);
  }
  return out;
}

std::size_t max_augmented_length(const EventLog& log) {
  std::size_t longest = 0;
  for (const Trace& t : log.traces()) longest = std::max(longest, t.size() + 1);
  return longest;
}

PrefixDataset assemble_dataset(const EventLog& log, const ActivityVocabulary& vocab, std::size_t max_len) {
  std::vector<std::pair<std::vector<std::size_t>, std::size_t>> prefixes;
  std::vector<std::string> case_ids;
  for (const Trace& t : log.traces()) {
    const auto seq = augment_with_end(t, vocab);
    for (auto& p : generate_prefixes(seq)) {
      if (p.first.size() > max_len) {
        throw Error(ErrorCode::PrefixTooLong, "prefix of length " + std::to_string(p.first.size()) +
                                                  " in case '" + t.case_id() + "' exceeds " +
                                                  std::to_string(max_len));
      }
      prefixes.push_back(std::move(p));
      case_ids.push_back(t.case_id());
    }
  }

  const std::size_t h = vocab.size();
  PrefixDataset ds;
  ds.max_len = max_len;
  ds.width = h;
  ds.x = Tensor3(prefixes.size(), max_len, h);
  ds.y = Matrix(prefixes.size(), h);
  ds.case_ids = std::move(case_ids);
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    const auto& [prefix, label] = prefixes[i];
    const std::size_t pad = max_len - prefix.size();
    for (std::size_t t = 0; t < prefix.size(); ++t) ds.x(i, pad + t, prefix[t]) = 1.0;
    ds.y(i, label) = 1.0;
    ds.labels.push_back(label);
    ds.true_lengths.push_back(prefix.size());
  }
  return ds;
}

PrefixSample encode_running_trace(std::span<const std::string> activities, const ActivityVocabulary& vocab,
                                  std::size_t max_len, const std::string& case_id) {
  if (activities.size() <= 1) {
    throw Error(ErrorCode::TraceTooShort, "running trace '" + case_id + "' has " +
                                              std::to_string(activities.size()) + " event(s)");
  }
  if (activities.size() > max_len) {
    std::clog << "warning: running trace '" << case_id << "' is longer than the model's padding length "
              << max_len << "\n";
    throw Error(ErrorCode::PrefixTooLong, "running trace '" + case_id + "' has " +
                                              std::to_string(activities.size()) + " events, limit " +
                                              std::to_string(max_len));
  }
  PrefixSample s;
  s.rows = Matrix(max_len, vocab.size());
  s.true_length = activities.size();
  s.case_id = case_id;
  const std::size_t pad = max_len - activities.size();
  for (std::size_t t = 0; t < activities.size(); ++t) {
    const auto idx = vocab.find(activities[t]);
    if (!idx) throw Error(ErrorCode::UnknownActivity, "'" + activities[t] + "' in case '" + case_id + "'");
    s.rows(pad + t, *idx) = 1.0;
  }
  return s;
}

PrefixSample encode_running_trace(const Trace& trace, const ActivityVocabulary& vocab, std::size_t max_len) {
  const auto acts = trace.activities();
  return encode_running_trace(acts, vocab, max_len, trace.case_id());
}

std::vector<std::string> decode(const SequenceView& sample, const ActivityVocabulary& vocab) {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < sample.true_length; ++t) {
    out.push_back(vocab.label(argmax(sample.event(t))));
  }
  return out;
}

}  // namespace xnap
