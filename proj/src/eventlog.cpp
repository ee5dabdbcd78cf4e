#include "xnap/eventlog.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "xnap/error.hpp"
#include "xnap/rng.hpp"

namespace xnap {

namespace chr = std::chrono;

Trace::Trace(std::string case_id, std::vector<Event> events)
    : case_id_(std::move(case_id)), events_(std::move(events)) {
  if (events_.empty()) throw Error(ErrorCode::InvalidArgument, "trace '" + case_id_ + "' is empty");
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const Event& e = events_[i];
    if (e.case_id != case_id_) {
      throw Error(ErrorCode::InvalidArgument, "event case id '" + e.case_id + "' in trace '" + case_id_ + "'");
    }
    if (e.activity.empty()) {
      throw Error(ErrorCode::InvalidArgument, "empty activity in trace '" + case_id_ + "'");
    }
    if (i > 0 && e.timestamp < events_[i - 1].timestamp) {
      throw Error(ErrorCode::InvalidArgument, "trace '" + case_id_ + "' is not time ordered");
    }
  }
}

std::vector<std::string> Trace::activities() const {
  std::vector<std::string> out;
  out.reserve(events_.size());
  for (const Event& e : events_) out.push_back(e.activity);
  return out;
}

EventLog::EventLog(std::vector<Trace> traces) : traces_(std::move(traces)) {
  std::unordered_set<std::string> seen;
  for (const Trace& t : traces_) {
    if (!seen.insert(t.case_id()).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate case id '" + t.case_id() + "'");
    }
  }
}

std::size_t EventLog::event_count() const {
  std::size_t n = 0;
  for (const Trace& t : traces_) n += t.size();
  return n;
}

EventLog EventLog::select(const std::vector<std::size_t>& indices) const {
  std::vector<Trace> picked;
  picked.reserve(indices.size());
  for (std::size_t i : indices) picked.push_back(traces_.at(i));
  return EventLog(std::move(picked));
}

// ---------------------------------------------------------------------------
// Timestamps

namespace {

bool read_digits(const std::string& s, std::size_t& pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    v = v * 10 + (c - '0');
  }
  pos += count;
  out = v;
  return true;
}

bool expect(const std::string& s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

std::optional<Timestamp> make_timestamp(int y, int mo, int d, int h, int mi, int sec, int ms) {
  const chr::year_month_day ymd{chr::year{y}, chr::month{static_cast<unsigned>(mo)},
                                chr::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  return Timestamp{chr::sys_days{ymd}} + chr::hours{h} + chr::minutes{mi} + chr::seconds{sec} +
         chr::milliseconds{ms};
}

// YYYY-MM-DD[T| ]HH:MM[:SS[.fff...]][Z|(+|-)HH[:]MM]
std::optional<Timestamp> parse_auto(const std::string& raw) {
  std::string s = raw;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t p = 0;
  while (p < s.size() && std::isspace(static_cast<unsigned char>(s[p]))) ++p;

  int y, mo, d, h, mi, sec = 0, ms = 0;
  if (!read_digits(s, p, 4, y) || !expect(s, p, '-') || !read_digits(s, p, 2, mo) ||
      !expect(s, p, '-') || !read_digits(s, p, 2, d)) {
    return std::nullopt;
  }
  if (!(expect(s, p, 'T') || expect(s, p, ' '))) return std::nullopt;
  if (!read_digits(s, p, 2, h) || !expect(s, p, ':') || !read_digits(s, p, 2, mi)) return std::nullopt;
  if (expect(s, p, ':')) {
    if (!read_digits(s, p, 2, sec)) return std::nullopt;
    if (expect(s, p, '.') || expect(s, p, ',')) {
      int digits = 0;
      while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) {
        if (digits < 3) ms = ms * 10 + (s[p] - '0');
        ++digits;
        ++p;
      }
      if (digits == 0) return std::nullopt;
      for (int i = digits; i < 3; ++i) ms *= 10;
    }
  }
  int offset_minutes = 0;
  if (p < s.size()) {
    if (s[p] == 'Z' || s[p] == 'z') {
      ++p;
    } else if (s[p] == '+' || s[p] == '-') {
      const int sign = s[p] == '-' ? -1 : 1;
      ++p;
      int oh, om = 0;
      if (!read_digits(s, p, 2, oh)) return std::nullopt;
      expect(s, p, ':');
      if (p < s.size() && !read_digits(s, p, 2, om)) return std::nullopt;
      offset_minutes = sign * (oh * 60 + om);
    }
  }
  if (p != s.size()) return std::nullopt;
  auto ts = make_timestamp(y, mo, d, h, mi, sec, ms);
  if (!ts) return std::nullopt;
  return *ts - chr::minutes{offset_minutes};
}

std::optional<Timestamp> parse_pattern(const std::string& s, const std::string& pattern) {
  std::tm tm{};
  std::istringstream in(s);
  in >> std::get_time(&tm, pattern.c_str());
  if (in.fail()) return std::nullopt;
  return make_timestamp(tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min,
                        tm.tm_sec, 0);
}

}  // namespace

Timestamp parse_timestamp(const std::string& text, const std::string& format) {
  const auto ts = format == "auto" ? parse_auto(text) : parse_pattern(text, format);
  if (!ts) throw Error(ErrorCode::BadTimestamp, "'" + text + "'");
  return *ts;
}

std::string format_timestamp(Timestamp ts) {
  const auto day = chr::floor<chr::days>(ts);
  const chr::year_month_day ymd{day};
  const chr::hh_mm_ss hms{ts - day};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  std::string out = buf;
  const auto ms = hms.subseconds().count();
  if (ms != 0) {
    std::snprintf(buf, sizeof buf, ".%03d", static_cast<int>(ms));
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

// One RFC-4180 record. Returns false at end of input. Quoted fields may span lines.
bool read_record(std::istream& in, char delim, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int ch;
  while ((ch = in.get()) != EOF) {
    any = true;
    const char c = static_cast<char>(ch);
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == delim) {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

std::string quote_field(const std::string& s, char delim) {
  if (s.find_first_of(std::string{delim, '"', '\n', '\r'}) == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not in header");
  return static_cast<std::size_t>(it - header.begin());
}

bool blank(const std::vector<std::string>& fields) {
  return fields.size() == 1 && fields[0].empty();
}

}  // namespace

EventLog parse_log(std::istream& source, const CsvFormat& format) {
  std::vector<std::string> header;
  if (!read_record(source, format.delimiter, header)) throw Error(ErrorCode::EmptyLog, "no header row");
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  const std::size_t case_col = column_index(header, format.case_column);
  const std::size_t act_col = column_index(header, format.activity_column);
  const std::size_t time_col = column_index(header, format.timestamp_column);
  const std::size_t needed = std::max({case_col, act_col, time_col}) + 1;

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Event>> groups;
  std::vector<std::string> fields;
  std::size_t row = 1;  // header is row 1
  while (read_record(source, format.delimiter, fields)) {
    ++row;
    if (blank(fields)) continue;
    if (fields.size() < needed) {
      throw Error(ErrorCode::MissingColumn, "row " + std::to_string(row) + " has " +
                                                std::to_string(fields.size()) + " fields");
    }
    Event e;
    e.case_id = fields[case_col];
    e.activity = fields[act_col];
    if (e.activity.empty()) {
      throw Error(ErrorCode::InvalidArgument, "row " + std::to_string(row) + ": empty activity");
    }
    try {
      e.timestamp = parse_timestamp(fields[time_col], format.timestamp_format);
    } catch (const Error&) {
      throw Error(ErrorCode::BadTimestamp, "row " + std::to_string(row) + ": '" + fields[time_col] + "'");
    }
    auto [it, inserted] = groups.try_emplace(e.case_id);
    if (inserted) order.push_back(e.case_id);
    it->second.push_back(std::move(e));
  }
  if (order.empty()) throw Error(ErrorCode::EmptyLog, "no events");

  std::vector<Trace> traces;
  traces.reserve(order.size());
  for (const std::string& id : order) {
    auto& events = groups[id];
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    traces.emplace_back(id, std::move(events));
  }
  return EventLog(std::move(traces));
}

EventLog read_log_file(const std::filesystem::path& path, const CsvFormat& format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return parse_log(in, format);
}

void write_log(std::ostream& sink, const EventLog& log, const CsvFormat& format) {
  const char d = format.delimiter;
  sink << quote_field(format.case_column, d) << d << quote_field(format.activity_column, d) << d
       << quote_field(format.timestamp_column, d) << '\n';
  for (const Trace& t : log.traces()) {
    for (const Event& e : t.events()) {
      sink << quote_field(e.case_id, d) << d << quote_field(e.activity, d) << d
           << format_timestamp(e.timestamp) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Statistics and filtering

namespace {

SummaryStats summarize(std::vector<double> values) {
  SummaryStats s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const std::size_t n = values.size();
  s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

}  // namespace

LogStats compute_stats(const EventLog& log) {
  if (log.empty()) throw Error(ErrorCode::EmptyLog, "cannot summarize an empty log");
  LogStats stats;
  stats.n_instances = log.size();
  std::set<std::vector<std::string>> variants;
  std::set<std::string> labels;
  std::vector<double> lengths, distinct;
  for (const Trace& t : log.traces()) {
    auto acts = t.activities();
    labels.insert(acts.begin(), acts.end());
    distinct.push_back(static_cast<double>(std::set<std::string>(acts.begin(), acts.end()).size()));
    lengths.push_back(static_cast<double>(t.size()));
    stats.n_events += t.size();
    variants.insert(std::move(acts));
  }
  stats.n_variants = variants.size();
  stats.n_activities = labels.size();
  stats.events_per_instance = summarize(std::move(lengths));
  stats.activities_per_instance = summarize(std::move(distinct));
  return stats;
}

EventLog filter_log(const EventLog& log, std::size_t max_trace_len, double sample_fraction,
                    std::uint64_t seed) {
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "sample fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].size() <= max_trace_len) kept.push_back(i);
  }
  if (sample_fraction < 1.0) {
    const auto target = static_cast<std::size_t>(sample_fraction * static_cast<double>(kept.size()));
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(kept));
    kept.resize(target);
    std::sort(kept.begin(), kept.end());
  }
  return log.select(kept);
}

}  // namespace xnap
