#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xnap/bilstm.hpp"
#include "xnap/eventlog.hpp"

namespace xnap {

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

/// Case-level k-fold partition: test windows rotate over one seeded shuffle
/// of the case ids; the last 10% (at least one) of each fold's remaining
/// cases are held out for validation.
struct FoldPlan {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;
};

FoldPlan make_folds(const EventLog& log, std::size_t k, std::uint64_t seed);

/// Seeded case-level hold-out for a single training run: the last
/// max(1, 10%) of the shuffled cases validate, the rest train. Both parts
/// keep log order. Throws TooFewTraces below two traces.
std::pair<EventLog, EventLog> validation_split(const EventLog& log, std::uint64_t seed);

/// Sub-log holding the listed cases, in list order.
EventLog cases_of(const EventLog& log, const std::vector<std::string>& case_ids);

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
};

struct MetricSummary {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct WeightedMetrics {
  MetricSummary weighted;  // support-weighted over classes; accuracy is plain accuracy
  std::vector<ClassMetrics> per_class;
};

/// Throws LengthMismatch when the inputs differ in length or are empty.
WeightedMetrics weighted_metrics(std::span<const std::size_t> y_true, std::span<const std::size_t> y_pred,
                                 std::size_t classes);

struct MetricsReport {
  std::vector<WeightedMetrics> folds;
  MetricSummary average;
  MetricSummary stddev;  // sample standard deviation across folds
};

/// Fills `average` and `stddev` from the fold values.
void summarize_folds(MetricsReport& report);

/// Writes fold,accuracy,precision,recall,f1 rows followed by AVG and SD rows.
void write_metrics_csv(std::ostream& sink, const MetricsReport& report);

struct CvResult {
  FoldPlan plan;
  MetricsReport report;
  std::vector<BiLstmModel> models;
  std::vector<std::vector<EpochRecord>> histories;
  std::size_t best_fold = 0;  // highest weighted F1
};

/// Trains and tests one model per fold. Vocabulary and padding length come
/// from the whole log; every prefix of every test trace is scored.
CvResult run_cv(const EventLog& log, const TrainConfig& config, std::size_t k, std::uint64_t seed);

}  // namespace xnap
