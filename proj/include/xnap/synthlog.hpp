#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xnap/eventlog.hpp"

namespace xnap {

inline constexpr std::size_t kTerminalState = std::numeric_limits<std::size_t>::max();

struct Transition {
  std::size_t to = kTerminalState;  // state index, or kTerminalState to end the trace
  double probability = 1.0;
};

struct GrammarState {
  std::string activity;
  std::vector<Transition> next;
};

/// The activity at `key_position` (0-based) decides the activity emitted
/// `distance` events later, overriding that state's own emission.
struct KeyRule {
  std::size_t key_position = 0;
  std::size_t distance = 3;
  std::map<std::string, std::string> mapping;
};

/// Markov chain over activity-emitting states.
struct GrammarSpec {
  std::vector<GrammarState> states;
  std::vector<Transition> initial;
  std::optional<KeyRule> key_rule;
  std::size_t n_traces = 100;
  std::size_t min_length = 1;
  std::size_t max_length = 1000;
  std::uint64_t seed = 1;

  /// Throws InvalidSpec.
  void validate() const;
};

/// Every trace is exactly `activities`.
GrammarSpec linear_grammar(const std::vector<std::string>& activities, std::size_t n_traces, std::uint64_t seed);

struct CopyTaskOptions {
  std::vector<std::string> keys{"X", "Y"};
  std::vector<std::string> targets{"P", "Q"};  // targets[i] follows keys[i]
  std::vector<std::string> fillers{"A", "B", "C"};
  std::size_t key_position = 0;
  std::size_t distance = 3;
  std::size_t n_traces = 2000;
  std::uint64_t seed = 1;
};

/// Traces of length key_position + distance + 1: uniform random fillers
/// everywhere except a uniform random key and its mapped target.
GrammarSpec copy_task(const CopyTaskOptions& options);

EventLog generate(const GrammarSpec& spec);

/// Index of the event that determines the activity at
/// key_position + distance. Throws NotACopyTask without a key rule.
std::size_t oracle_relevant_position(const GrammarSpec& spec, const Trace& trace);

/// Prefix length whose next activity is decided by the key.
std::size_t key_prefix_length(const GrammarSpec& spec);

}  // namespace xnap
