#include "xnap/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <ostream>
#include <unordered_map>

#include "xnap/error.hpp"
#include "xnap/rng.hpp"

namespace xnap {

FoldPlan make_folds(const EventLog& log, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "need at least two folds");
  if (log.size() < k) {
    throw Error(ErrorCode::TooFewTraces, std::to_string(log.size()) + " traces for " + std::to_string(k) + " folds");
  }
  std::vector<std::string> ids;
  ids.reserve(log.size());
  for (const Trace& t : log.traces()) ids.push_back(t.case_id());
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(ids));

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  const std::size_t n = ids.size();
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t lo = f * n / k;
    const std::size_t hi = (f + 1) * n / k;
    Fold fold;
    fold.test.assign(ids.begin() + lo, ids.begin() + hi);
    std::vector<std::string> rest(ids.begin(), ids.begin() + lo);
    rest.insert(rest.end(), ids.begin() + hi, ids.end());
    if (rest.size() < 2) throw Error(ErrorCode::TooFewTraces, "fold has fewer than two training traces");
    const std::size_t n_val = std::max<std::size_t>(1, rest.size() / 10);
    fold.validation.assign(rest.end() - n_val, rest.end());
    rest.resize(rest.size() - n_val);
    fold.train = std::move(rest);
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

EventLog cases_of(const EventLog& log, const std::vector<std::string>& case_ids) {
  std::unordered_map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < log.size(); ++i) where.emplace(log[i].case_id(), i);
  std::vector<std::size_t> picked;
  picked.reserve(case_ids.size());
  for (const auto& id : case_ids) {
    const auto it = where.find(id);
    if (it == where.end()) throw Error(ErrorCode::InvalidArgument, "unknown case '" + id + "'");
    picked.push_back(it->second);
  }
  return log.select(picked);
}

WeightedMetrics weighted_metrics(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                                 std::size_t classes) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(y_true.size()) + " labels vs " +
                                               std::to_string(y_pred.size()) + " predictions");
  }
  std::vector<std::size_t> tp(classes, 0), predicted(classes, 0), actual(classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] >= classes || y_pred[i] >= classes) {
      throw Error(ErrorCode::InvalidArgument, "class index out of range");
    }
    ++actual[y_true[i]];
    ++predicted[y_pred[i]];
    if (y_true[i] == y_pred[i]) {
      ++tp[y_true[i]];
      ++correct;
    }
  }
  const auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  const auto total = static_cast<double>(y_true.size());

  WeightedMetrics out;
  out.per_class.resize(classes);
  out.weighted.accuracy = ratio(correct, y_true.size());
  for (std::size_t c = 0; c < classes; ++c) {
    ClassMetrics& m = out.per_class[c];
    m.support = actual[c];
    m.precision = ratio(tp[c], predicted[c]);
    m.recall = ratio(tp[c], actual[c]);
    m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    const double w = static_cast<double>(m.support) / total;
    out.weighted.precision += w * m.precision;
    out.weighted.recall += w * m.recall;
    out.weighted.f1 += w * m.f1;
  }
  return out;
}

namespace {

std::array<double, 4> as_array(const MetricSummary& m) { return {m.accuracy, m.precision, m.recall, m.f1}; }

MetricSummary from_array(const std::array<double, 4>& v) { return {v[0], v[1], v[2], v[3]}; }

}  // namespace

void summarize_folds(MetricsReport& report) {
  const std::size_t n = report.folds.size();
  std::array<double, 4> mean{}, var{};
  for (const auto& f : report.folds) {
    const auto v = as_array(f.weighted);
    for (std::size_t m = 0; m < 4; ++m) mean[m] += v[m];
  }
  for (double& m : mean) m = n == 0 ? 0.0 : m / static_cast<double>(n);
  if (n >= 2) {
    for (const auto& f : report.folds) {
      const auto v = as_array(f.weighted);
      for (std::size_t m = 0; m < 4; ++m) var[m] += (v[m] - mean[m]) * (v[m] - mean[m]);
    }
    for (double& v : var) v = std::sqrt(v / static_cast<double>(n - 1));
  }
  report.average = from_array(mean);
  report.stddev = from_array(var);
}

void write_metrics_csv(std::ostream& sink, const MetricsReport& report) {
  const auto flags = sink.flags();
  const auto precision = sink.precision();
  sink << std::fixed << std::setprecision(6);
  sink << "fold,accuracy,precision,recall,f1\n";
  const auto row = [&sink](const std::string& label, const MetricSummary& m) {
    sink << label << ',' << m.accuracy << ',' << m.precision << ',' << m.recall << ',' << m.f1 << '\n';
  };
  for (std::size_t i = 0; i < report.folds.size(); ++i) row(std::to_string(i + 1), report.folds[i].weighted);
  row("AVG", report.average);
  row("SD", report.stddev);
  sink.flags(flags);
  sink.precision(precision);
}

CvResult run_cv(const EventLog& log, const TrainConfig& config, std::size_t k, std::uint64_t seed) {
  config.validate();
  const ActivityVocabulary vocab = build_vocabulary(log);
  const std::size_t max_len = max_augmented_length(log);

  CvResult result;
  result.plan = make_folds(log, k, seed);
  for (std::size_t f = 0; f < k; ++f) {
    const Fold& fold = result.plan.folds[f];
    const auto train_set = assemble_dataset(cases_of(log, fold.train), vocab, max_len);
    const auto val_set = assemble_dataset(cases_of(log, fold.validation), vocab, max_len);
    const auto test_set = assemble_dataset(cases_of(log, fold.test), vocab, max_len);

    TrainConfig fold_config = config;
    fold_config.seed = config.seed + f;
    auto trained = train(train_set, val_set, vocab, fold_config);

    std::vector<std::size_t> predicted;
    predicted.reserve(test_set.size());
    for (std::size_t i = 0; i < test_set.size(); ++i) predicted.push_back(predict(trained.model, test_set.view(i)).index);
    result.report.folds.push_back(weighted_metrics(test_set.labels, predicted, vocab.size()));
    if (config.verbose) {
      const auto& m = result.report.folds.back().weighted;
      std::clog << "fold " << f + 1 << "/" << k << " accuracy " << m.accuracy << " f1 " << m.f1 << " epochs "
                << trained.model.trained_epochs << "\n";
    }
    result.models.push_back(std::move(trained.model));
    result.histories.push_back(std::move(trained.history));
  }
  summarize_folds(result.report);
  for (std::size_t f = 1; f < k; ++f) {
    if (result.report.folds[f].weighted.f1 > result.report.folds[result.best_fold].weighted.f1) result.best_fold = f;
  }
  return result;
}

std::pair<EventLog, EventLog> validation_split(const EventLog& log, std::uint64_t seed) {
  const std::size_t n = log.traces().size();
  if (n < 2) throw Error(ErrorCode::TooFewTraces, "training needs at least two traces, got " + std::to_string(n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto cut = static_cast<std::ptrdiff_t>(n - std::max<std::size_t>(1, n / 10));
  std::vector<std::size_t> train(order.begin(), order.begin() + cut);
  std::vector<std::size_t> val(order.begin() + cut, order.end());
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {log.select(train), log.select(val)};
}

}  // namespace xnap
