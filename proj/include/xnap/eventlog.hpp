#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace xnap {

/// UTC instant with millisecond resolution.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

struct Event {
  std::string case_id;
  std::string activity;
  Timestamp timestamp{};

  bool operator==(const Event&) const = default;
};

/// Time-ordered, non-empty sequence of events sharing one case id.
class Trace {
 public:
  /// Validates the invariants; events must already be in timestamp order.
  Trace(std::string case_id, std::vector<Event> events);

  const std::string& case_id() const noexcept { return case_id_; }
  const std::vector<Event>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  const Event& operator[](std::size_t i) const { return events_[i]; }

  std::vector<std::string> activities() const;

  bool operator==(const Trace&) const = default;

 private:
  std::string case_id_;
  std::vector<Event> events_;
};

/// Traces with unique case ids, kept in first-appearance order.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(std::vector<Trace> traces);

  const std::vector<Trace>& traces() const noexcept { return traces_; }
  std::size_t size() const noexcept { return traces_.size(); }
  bool empty() const noexcept { return traces_.empty(); }
  const Trace& operator[](std::size_t i) const { return traces_[i]; }

  std::size_t event_count() const;

  /// Sub-log of the given trace indices, in the order given.
  EventLog select(const std::vector<std::size_t>& indices) const;

  bool operator==(const EventLog&) const = default;

 private:
  std::vector<Trace> traces_;
};

struct SummaryStats {
  double min = 0;
  double max = 0;
  double mean = 0;
  double median = 0;
};

struct LogStats {
  std::size_t n_instances = 0;
  std::size_t n_variants = 0;
  std::size_t n_events = 0;
  std::size_t n_activities = 0;
  SummaryStats events_per_instance;
  SummaryStats activities_per_instance;
};

/// Column mapping for CSV logs. `timestamp_format` is either "auto" (plain
/// `YYYY-MM-DD HH:MM:SS` or ISO-8601 with optional fraction and offset) or a
/// std::get_time pattern such as "%d.%m.%Y %H:%M".
struct CsvFormat {
  std::string case_column = "case";
  std::string activity_column = "activity";
  std::string timestamp_column = "timestamp";
  std::string timestamp_format = "auto";
  char delimiter = ',';
};

Timestamp parse_timestamp(const std::string& text, const std::string& format = "auto");
std::string format_timestamp(Timestamp ts);

EventLog parse_log(std::istream& source, const CsvFormat& format = {});
EventLog read_log_file(const std::filesystem::path& path, const CsvFormat& format = {});

/// Writes one row per event, traces in log order, using the format's column names.
void write_log(std::ostream& sink, const EventLog& log, const CsvFormat& format = {});

LogStats compute_stats(const EventLog& log);

inline constexpr std::size_t kNoLengthLimit = std::numeric_limits<std::size_t>::max();

/// Drops traces longer than `max_trace_len`, then keeps floor(fraction * n)
/// uniformly chosen traces (log order preserved).
EventLog filter_log(const EventLog& log, std::size_t max_trace_len, double sample_fraction,
                    std::uint64_t seed);

}  // namespace xnap
