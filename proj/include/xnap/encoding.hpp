#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xnap/eventlog.hpp"
#include "xnap/tensor.hpp"

namespace xnap {

/// Reserved label appended to every trace so that termination is predictable.
inline constexpr const char* kEndActivity = "__END__";

/// Bijection between activity labels and one-hot indices. The end symbol
/// always occupies the last index.
class ActivityVocabulary {
 public:
  ActivityVocabulary() = default;
  /// `labels` must be unique and end with kEndActivity (as stored in model files).
  explicit ActivityVocabulary(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t end_index() const noexcept { return labels_.size() - 1; }

  std::optional<std::size_t> find(const std::string& label) const;
  /// Throws UnknownActivity.
  std::size_t index_of(const std::string& label) const;
  const std::string& label(std::size_t index) const { return labels_.at(index); }

  bool operator==(const ActivityVocabulary& o) const { return labels_ == o.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Read-only view of one left-padded sample: `max_len` rows of `width`
/// entries, the last `true_length` of which hold the events oldest to newest.
struct SequenceView {
  std::span<const double> data;
  std::size_t max_len = 0;
  std::size_t width = 0;
  std::size_t true_length = 0;

  /// Input vector of event t, t = 0 (oldest) .. true_length-1 (newest).
  std::span<const double> event(std::size_t t) const {
    return data.subspan((max_len - true_length + t) * width, width);
  }
};

struct PrefixSample {
  Matrix rows;  // max_len x H, zero rows first
  std::size_t true_length = 0;
  std::optional<std::size_t> label;
  std::string case_id;

  SequenceView view() const { return {rows.flat(), rows.rows(), rows.cols(), true_length}; }
};

struct PrefixDataset {
  Tensor3 x;                 // samples x max_len x H
  Matrix y;                  // samples x H, one-hot
  std::vector<std::size_t> labels;
  std::vector<std::size_t> true_lengths;
  std::vector<std::string> case_ids;
  std::size_t max_len = 0;
  std::size_t width = 0;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  SequenceView view(std::size_t i) const { return {x.slice(i), max_len, width, true_lengths[i]}; }
};

ActivityVocabulary build_vocabulary(const EventLog& log);

/// Label indices of the trace followed by the end index.
std::vector<std::size_t> augment_with_end(const Trace& trace, const ActivityVocabulary& vocab);

/// (first k indices, index k) for k = 1 .. n-1.
std::vector<std::pair<std::vector<std::size_t>, std::size_t>> generate_prefixes(
    std::span<const std::size_t> index_seq);

/// Longest augmented trace in the log; the default padding length.
std::size_t max_augmented_length(const EventLog& log);

PrefixDataset assemble_dataset(const EventLog& log, const ActivityVocabulary& vocab, std::size_t max_len);

/// Encodes a whole running trace (no end symbol, no label).
/// Throws TraceTooShort for fewer than two events, PrefixTooLong beyond max_len.
PrefixSample encode_running_trace(std::span<const std::string> activities, const ActivityVocabulary& vocab,
                                  std::size_t max_len, const std::string& case_id = {});
PrefixSample encode_running_trace(const Trace& trace, const ActivityVocabulary& vocab, std::size_t max_len);

/// Labels of the one-hot rows of a sample, oldest first.
std::vector<std::string> decode(const SequenceView& sample, const ActivityVocabulary& vocab);

}  // namespace xnap
