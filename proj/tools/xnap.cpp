// xnap command-line frontend.
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "xnap/bilstm.hpp"
#include "xnap/error.hpp"
#include "xnap/eval.hpp"
#include "xnap/eventlog.hpp"
#include "xnap/lrp.hpp"
#include "xnap/render.hpp"
#include "xnap/rng.hpp"
#include "xnap/synthlog.hpp"

namespace {

using namespace xnap;

constexpr int kOk = 0;
constexpr int kIoError = 2;
constexpr int kDomainGuard = 3;
constexpr int kInternal = 4;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::MissingColumn:
    case ErrorCode::BadTimestamp:
    case ErrorCode::EmptyLog:
    case ErrorCode::ReservedLabelCollision:
    case ErrorCode::VersionMismatch:
    case ErrorCode::CorruptModel:
      return kIoError;
    case ErrorCode::ShapeMismatch:
    case ErrorCode::NonFiniteInput:
    case ErrorCode::LengthMismatch:
      return kInternal;
    default:
      return kDomainGuard;
  }
}

struct Options {
  std::string log_path;
  std::string model_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  CsvFormat csv;
  std::size_t max_trace_len = kNoLengthLimit;
  double sample_fraction = 1.0;

  TrainConfig train;
  LrpConfig lrp;

  // synth
  std::string grammar = "copy";
  std::size_t traces = 2000;
  std::size_t distance = 3;
  std::string activities = "A,B,C";

  // predict / explain
  std::string trace;
  std::string case_id;
  std::size_t min_prefix = 3;
  std::string render = "html";

  std::size_t folds = 10;
  std::string history_path;
};

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("XNAP_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidArgument, std::string("XNAP_SEED is not an unsigned integer: ") + env);
  }
  return 42;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

EventLog load_log(const Options& o, std::uint64_t seed) {
  if (o.log_path.empty()) throw Error(ErrorCode::InvalidArgument, "--log is required");
  auto log = read_log_file(o.log_path, o.csv);
  if (o.max_trace_len != kNoLengthLimit || o.sample_fraction < 1.0) {
    log = filter_log(log, o.max_trace_len, o.sample_fraction, seed);
  }
  return log;
}

BiLstmModel load_model_arg(const Options& o) {
  if (o.model_path.empty()) throw Error(ErrorCode::InvalidArgument, "--model is required");
  return load_model_file(o.model_path);
}

// Writes to --out, or stdout when it is empty or "-".
template <typename F>
void emit(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  write(out);
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

void print_summary(std::ostream& os, const char* name, const SummaryStats& s) {
  os << name << "_min," << s.min << '\n'
     << name << "_max," << s.max << '\n'
     << name << "_mean," << s.mean << '\n'
     << name << "_median," << s.median << '\n';
}

int cmd_stats(const Options& o) {
  const auto seed = resolve_seed(o);
  const auto stats = compute_stats(load_log(o, seed));
  emit(o.out_path, [&](std::ostream& os) {
    os << std::setprecision(6) << "statistic,value\n"
       << "instances," << stats.n_instances << '\n'
       << "variants," << stats.n_variants << '\n'
       << "events," << stats.n_events << '\n'
       << "activities," << stats.n_activities << '\n';
    print_summary(os, "events_per_instance", stats.events_per_instance);
    print_summary(os, "activities_per_instance", stats.activities_per_instance);
  });
  return kOk;
}

int cmd_synth(const Options& o) {
  const auto seed = resolve_seed(o);
  GrammarSpec spec;
  if (o.grammar == "copy") {
    CopyTaskOptions copy;
    copy.n_traces = o.traces;
    copy.distance = o.distance;
    copy.seed = seed;
    spec = copy_task(copy);
  } else if (o.grammar == "linear") {
    spec = linear_grammar(split_list(o.activities), o.traces, seed);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown grammar '" + o.grammar + "' (copy|linear)");
  }
  const auto log = generate(spec);
  emit(o.out_path, [&](std::ostream& os) { write_log(os, log, o.csv); });
  return kOk;
}

int cmd_train(Options o) {
  const auto seed = resolve_seed(o);
  if (o.out_path.empty()) throw Error(ErrorCode::InvalidArgument, "--out (model path) is required");
  const auto log = load_log(o, seed);
  const auto vocab = build_vocabulary(log);
  const std::size_t max_len = max_augmented_length(log);
  const auto [train_log, val_log] = validation_split(log, seed);
  o.train.seed = seed;
  const auto result = train(assemble_dataset(train_log, vocab, max_len), assemble_dataset(val_log, vocab, max_len),
                            vocab, o.train);
  save_model_file(result.model, o.out_path);
  const std::string history = o.history_path.empty() ? o.out_path + ".history.csv" : o.history_path;
  emit(history, [&](std::ostream& os) { write_history_csv(os, result.history); });
  std::cerr << "trained " << result.history.size() << " epochs, best epoch " << result.best_epoch << '\n';
  return kOk;
}

struct NamedTrace {
  std::string case_id;
  std::vector<std::string> activities;
  bool completed = false;
};

// --trace "A,B,C" (running) or the cases of --log (completed), optionally one --case.
std::vector<NamedTrace> input_traces(const Options& o, std::uint64_t seed) {
  if (!o.trace.empty()) return {{"trace", split_list(o.trace), false}};
  const auto log = load_log(o, seed);
  std::vector<NamedTrace> out;
  for (const auto& t : log.traces()) {
    if (!o.case_id.empty() && t.case_id() != o.case_id) continue;
    out.push_back({t.case_id(), t.activities(), true});
  }
  if (!o.case_id.empty() && out.empty()) throw Error(ErrorCode::InvalidArgument, "no case '" + o.case_id + "' in log");
  return out;
}

int cmd_predict(const Options& o) {
  const auto seed = resolve_seed(o);
  const auto model = load_model_arg(o);
  const auto traces = input_traces(o, seed);
  std::ostringstream rows;
  rows << std::setprecision(17);
  for (const auto& t : traces) {
    const auto sample = encode_running_trace(t.activities, model.vocab, model.max_len, t.case_id);
    const auto p = predict(model, sample.view());
    rows << t.case_id << ',' << t.activities.size() << ',' << model.vocab.label(p.index) << ','
         << p.probabilities[p.index] << '\n';
  }
  emit(o.out_path, [&](std::ostream& os) { os << "case_id,prefix_length,prediction,probability\n" << rows.str(); });
  return kOk;
}

int cmd_explain(const Options& o) {
  const auto seed = resolve_seed(o);
  const auto model = load_model_arg(o);
  const auto traces = input_traces(o, seed);
  std::vector<ExplainedPrefix> rows;
  for (const auto& t : traces) {
    try {
      auto part = explain_prefixes(model, t.activities, t.case_id, o.min_prefix, t.completed, o.lrp);
      std::move(part.begin(), part.end(), std::back_inserter(rows));
    } catch (const Error& e) {
      // A single running trace that is too short is a hard stop; in a log it is skipped.
      if (e.code() != ErrorCode::TraceTooShort || traces.size() == 1) throw;
      std::cerr << "warning: skipping case '" << t.case_id << "': " << e.what() << '\n';
    }
  }
  emit(o.out_path, [&](std::ostream& os) {
    if (o.render == "json") {
      render_json(os, rows);
    } else if (o.render == "ansi") {
      render_ansi(os, rows);
    } else {
      render_html(os, rows);
    }
  });
  return kOk;
}

int cmd_evaluate(Options o) {
  const auto seed = resolve_seed(o);
  const auto log = load_log(o, seed);
  o.train.seed = seed;
  const auto cv = run_cv(log, o.train, o.folds, seed);
  emit(o.out_path, [&](std::ostream& os) { write_metrics_csv(os, cv.report); });
  if (!o.model_path.empty()) save_model_file(cv.models[cv.best_fold], o.model_path);
  std::cerr << "best fold " << cv.best_fold + 1 << " (weighted F1 "
            << cv.report.folds[cv.best_fold].weighted.f1 << ")\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Explainable next-activity prediction for event logs"};
  app.require_subcommand(1);

  auto add_log = [&](CLI::App* cmd) {
    cmd->add_option("--log", o.log_path, "event log CSV");
    cmd->add_option("--case-col", o.csv.case_column, "case id column")->capture_default_str();
    cmd->add_option("--activity-col", o.csv.activity_column, "activity column")->capture_default_str();
    cmd->add_option("--time-col", o.csv.timestamp_column, "timestamp column")->capture_default_str();
    cmd->add_option("--time-format", o.csv.timestamp_format, "'auto' or a strftime-style pattern")
        ->capture_default_str();
    cmd->add_option("--max-trace-len", o.max_trace_len, "drop traces longer than this");
    cmd->add_option("--sample-fraction", o.sample_fraction, "keep a seeded random fraction of the traces")
        ->check(CLI::Range(0.0, 1.0));
  };
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", o.seed, "random seed (falls back to XNAP_SEED, then 42)");
    cmd->add_option("--out", o.out_path, "output file ('-' for stdout)");
  };
  auto add_train = [&](CLI::App* cmd) {
    cmd->add_option("--hidden", o.train.hidden_size, "LSTM units per direction")->capture_default_str();
    cmd->add_option("--epochs", o.train.max_epochs, "maximum epochs")->capture_default_str();
    cmd->add_option("--patience", o.train.patience, "early stopping patience")->capture_default_str();
    cmd->add_option("--dropout", o.train.dropout_rate, "input dropout rate")->capture_default_str();
    cmd->add_option("--batch", o.train.batch_size, "mini-batch size")->capture_default_str();
    cmd->add_option("--lr", o.train.learning_rate, "learning rate")->capture_default_str();
    cmd->add_flag("--verbose", o.train.verbose, "print per-epoch progress");
  };
  auto add_trace = [&](CLI::App* cmd) {
    cmd->add_option("--model", o.model_path, "model file")->required();
    cmd->add_option("--trace", o.trace, "running trace as comma-separated activities");
    cmd->add_option("--case", o.case_id, "only this case of --log");
  };

  auto* stats = app.add_subcommand("stats", "log statistics");
  add_log(stats);
  add_common(stats);

  auto* synth = app.add_subcommand("synth", "generate a synthetic log");
  add_common(synth);
  synth->add_option("--grammar", o.grammar, "copy|linear")->capture_default_str();
  synth->add_option("--traces", o.traces, "number of traces")->capture_default_str();
  synth->add_option("--distance", o.distance, "copy-task key distance")->capture_default_str();
  synth->add_option("--activities", o.activities, "linear grammar activities")->capture_default_str();
  synth->add_option("--case-col", o.csv.case_column)->capture_default_str();
  synth->add_option("--activity-col", o.csv.activity_column)->capture_default_str();
  synth->add_option("--time-col", o.csv.timestamp_column)->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "train a model");
  add_log(train_cmd);
  add_common(train_cmd);
  add_train(train_cmd);
  train_cmd->add_option("--history", o.history_path, "history CSV (default: <out>.history.csv)");

  auto* predict_cmd = app.add_subcommand("predict", "predict the next activity");
  add_log(predict_cmd);
  add_common(predict_cmd);
  add_trace(predict_cmd);

  auto* explain_cmd = app.add_subcommand("explain", "relevance heatmaps");
  add_log(explain_cmd);
  add_common(explain_cmd);
  add_trace(explain_cmd);
  explain_cmd->add_option("--epsilon", o.lrp.epsilon, "stabilizer")->capture_default_str();
  explain_cmd->add_option("--delta", o.lrp.delta, "bias factor (0 or 1)")->capture_default_str();
  explain_cmd->add_option("--min-prefix", o.min_prefix, "shortest prefix to explain")->capture_default_str();
  explain_cmd->add_option("--render", o.render, "html|ansi|json")
      ->check(CLI::IsMember({"html", "ansi", "json"}))
      ->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation");
  add_log(evaluate);
  add_common(evaluate);
  add_train(evaluate);
  evaluate->add_option("--folds", o.folds, "number of folds")->capture_default_str();
  evaluate->add_option("--model", o.model_path, "also save the best fold's model here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kIoError;
  }

  try {
    if (*stats) return cmd_stats(o);
    if (*synth) return cmd_synth(o);
    if (*train_cmd) return cmd_train(o);
    if (*predict_cmd) return cmd_predict(o);
    if (*explain_cmd) return cmd_explain(o);
    if (*evaluate) return cmd_evaluate(o);
  } catch (const Error& e) {
    std::cerr << "xnap: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "xnap: internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
