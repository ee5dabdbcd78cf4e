#include "xnap/synthlog.hpp"

#include <cmath>
#include <deque>

#include "xnap/error.hpp"
#include "xnap/rng.hpp"

namespace xnap {
namespace {

void check_distribution(const std::vector<Transition>& next, std::size_t n_states, const std::string& where) {
  if (next.empty()) throw Error(ErrorCode::InvalidSpec, where + " has no transitions");
  double total = 0.0;
  for (const auto& t : next) {
    if (!(t.probability >= 0.0)) throw Error(ErrorCode::InvalidSpec, where + " has a negative probability");
    if (t.to != kTerminalState && t.to >= n_states) throw Error(ErrorCode::InvalidSpec, where + " targets no state");
    total += t.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::InvalidSpec, where + " probabilities do not sum to 1");
}

std::size_t draw(const std::vector<Transition>& next, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& t : next) {
    acc += t.probability;
    if (u < acc) return t.to;
  }
  return next.back().to;
}

}  // namespace

void GrammarSpec::validate() const {
  if (states.empty()) throw Error(ErrorCode::InvalidSpec, "grammar has no states");
  if (n_traces == 0) throw Error(ErrorCode::InvalidSpec, "trace count must be positive");
  if (min_length == 0 || min_length > max_length) throw Error(ErrorCode::InvalidSpec, "bad length range");
  check_distribution(initial, states.size(), "initial distribution");
  for (const auto& t : initial) {
    if (t.to == kTerminalState) throw Error(ErrorCode::InvalidSpec, "traces cannot be empty");
  }
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (states[s].activity.empty()) throw Error(ErrorCode::InvalidSpec, "state " + std::to_string(s) + " emits nothing");
    check_distribution(states[s].next, states.size(), "state " + std::to_string(s));
  }

  // Every state reachable from the start must be able to reach the end.
  std::vector<char> finishes(states.size(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t s = 0; s < states.size(); ++s) {
      if (finishes[s]) continue;
      for (const auto& t : states[s].next) {
        if (t.probability > 0.0 && (t.to == kTerminalState || finishes[t.to])) {
          finishes[s] = 1;
          changed = true;
          break;
        }
      }
    }
  }
  std::vector<char> seen(states.size(), 0);
  std::deque<std::size_t> queue;
  for (const auto& t : initial) {
    if (t.probability > 0.0 && !seen[t.to]) {
      seen[t.to] = 1;
      queue.push_back(t.to);
    }
  }
  while (!queue.empty()) {
    const std::size_t s = queue.front();
    queue.pop_front();
    if (!finishes[s]) throw Error(ErrorCode::InvalidSpec, "state " + std::to_string(s) + " cannot reach the end");
    for (const auto& t : states[s].next) {
      if (t.probability > 0.0 && t.to != kTerminalState && !seen[t.to]) {
        seen[t.to] = 1;
        queue.push_back(t.to);
      }
    }
  }

  if (key_rule) {
    if (key_rule->distance == 0) throw Error(ErrorCode::InvalidSpec, "key distance must be positive");
    if (key_rule->mapping.empty()) throw Error(ErrorCode::InvalidSpec, "key rule has no mapping");
  }
}

GrammarSpec linear_grammar(const std::vector<std::string>& activities, std::size_t n_traces, std::uint64_t seed) {
  GrammarSpec spec;
  for (std::size_t i = 0; i < activities.size(); ++i) {
    const std::size_t next = i + 1 < activities.size() ? i + 1 : kTerminalState;
    spec.states.push_back({activities[i], {{next, 1.0}}});
  }
  spec.initial = {{0, 1.0}};
  spec.n_traces = n_traces;
  spec.seed = seed;
  return spec;
}

GrammarSpec copy_task(const CopyTaskOptions& o) {
  if (o.keys.empty() || o.keys.size() != o.targets.size()) {
    throw Error(ErrorCode::InvalidSpec, "copy task needs one target per key");
  }
  if (o.distance == 0) throw Error(ErrorCode::InvalidSpec, "key distance must be positive");
  const std::size_t target_pos = o.key_position + o.distance;
  if (o.fillers.empty() && target_pos > 1) throw Error(ErrorCode::InvalidSpec, "copy task needs filler activities");

  GrammarSpec spec;
  spec.n_traces = o.n_traces;
  spec.seed = o.seed;
  spec.min_length = spec.max_length = target_pos + 1;

  // States are laid out position by position; each position links uniformly
  // to every state of the next one.
  std::vector<std::vector<std::size_t>> layer(target_pos + 1);
  for (std::size_t pos = 0; pos <= target_pos; ++pos) {
    std::vector<std::string> emits;
    if (pos == o.key_position) {
      emits = o.keys;
    } else if (pos == target_pos) {
      emits = {o.targets.front()};  // replaced by the key rule
    } else {
      emits = o.fillers;
    }
    for (const auto& a : emits) {
      layer[pos].push_back(spec.states.size());
      spec.states.push_back({a, {}});
    }
  }
  const auto uniform_over = [](const std::vector<std::size_t>& targets) {
    std::vector<Transition> out;
    for (std::size_t s : targets) out.push_back({s, 1.0 / static_cast<double>(targets.size())});
    return out;
  };
  spec.initial = uniform_over(layer[0]);
  for (std::size_t pos = 0; pos < target_pos; ++pos) {
    for (std::size_t s : layer[pos]) spec.states[s].next = uniform_over(layer[pos + 1]);
  }
  spec.states[layer[target_pos].front()].next = {{kTerminalState, 1.0}};

  KeyRule rule;
  rule.key_position = o.key_position;
  rule.distance = o.distance;
  for (std::size_t i = 0; i < o.keys.size(); ++i) rule.mapping[o.keys[i]] = o.targets[i];
  spec.key_rule = std::move(rule);
  return spec;
}

EventLog generate(const GrammarSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  constexpr int kAttempts = 1000;
  const Timestamp base = Timestamp{std::chrono::sys_days{std::chrono::year{2020} / 1 / 1}};

  std::vector<Trace> traces;
  traces.reserve(spec.n_traces);
  for (std::size_t i = 0; i < spec.n_traces; ++i) {
    std::vector<std::string> acts;
    bool accepted = false;
    for (int attempt = 0; attempt < kAttempts && !accepted; ++attempt) {
      acts.clear();
      std::size_t state = draw(spec.initial, rng);
      while (state != kTerminalState && acts.size() <= spec.max_length) {
        acts.push_back(spec.states[state].activity);
        state = draw(spec.states[state].next, rng);
      }
      accepted = state == kTerminalState && acts.size() >= spec.min_length && acts.size() <= spec.max_length;
    }
    if (!accepted) throw Error(ErrorCode::InvalidSpec, "could not generate a trace within the length range");

    if (spec.key_rule) {
      const auto& rule = *spec.key_rule;
      const std::size_t target = rule.key_position + rule.distance;
      if (target < acts.size()) {
        const auto it = rule.mapping.find(acts[rule.key_position]);
        if (it == rule.mapping.end()) {
          throw Error(ErrorCode::InvalidSpec, "no key mapping for '" + acts[rule.key_position] + "'");
        }
        acts[target] = it->second;
      }
    }

    const std::string case_id = "case" + std::to_string(i + 1);
    std::vector<Event> events;
    events.reserve(acts.size());
    const Timestamp start = base + std::chrono::hours{static_cast<long>(i)};
    for (std::size_t j = 0; j < acts.size(); ++j) {
      events.push_back({case_id, acts[j], start + std::chrono::minutes{static_cast<long>(j)}});
    }
    traces.emplace_back(case_id, std::move(events));
  }
  return EventLog(std::move(traces));
}

std::size_t key_prefix_length(const GrammarSpec& spec) {
  if (!spec.key_rule) throw Error(ErrorCode::NotACopyTask, "grammar has no key rule");
  return spec.key_rule->key_position + spec.key_rule->distance;
}

std::size_t oracle_relevant_position(const GrammarSpec& spec, const Trace& trace) {
  const std::size_t target = key_prefix_length(spec);
  if (trace.size() <= target) {
    throw Error(ErrorCode::InvalidArgument, "trace '" + trace.case_id() + "' ends before the key's target");
  }
  return spec.key_rule->key_position;
}

}  // namespace xnap
