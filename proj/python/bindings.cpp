#include <fstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "xnap/bilstm.hpp"
#include "xnap/error.hpp"
#include "xnap/eval.hpp"
#include "xnap/eventlog.hpp"
#include "xnap/lrp.hpp"
#include "xnap/synthlog.hpp"

namespace py = pybind11;
using namespace xnap;

namespace {

py::dict summary_dict(const MetricSummary& s) {
  py::dict d;
  d["accuracy"] = s.accuracy;
  d["precision"] = s.precision;
  d["recall"] = s.recall;
  d["f1"] = s.f1;
  return d;
}

py::dict stats_dict(const LogStats& s) {
  auto summary = [](const SummaryStats& x) {
    py::dict d;
    d["min"] = x.min;
    d["max"] = x.max;
    d["mean"] = x.mean;
    d["median"] = x.median;
    return d;
  };
  py::dict d;
  d["instances"] = s.n_instances;
  d["variants"] = s.n_variants;
  d["events"] = s.n_events;
  d["activities"] = s.n_activities;
  d["events_per_instance"] = summary(s.events_per_instance);
  d["activities_per_instance"] = summary(s.activities_per_instance);
  return d;
}

CsvFormat csv_format(const std::string& case_col, const std::string& activity_col, const std::string& time_col) {
  CsvFormat f;
  f.case_column = case_col;
  f.activity_column = activity_col;
  f.timestamp_column = time_col;
  return f;
}

TrainConfig train_config(std::size_t hidden, std::size_t epochs, std::size_t patience, std::uint64_t seed) {
  TrainConfig c;
  c.hidden_size = hidden;
  c.max_epochs = epochs;
  c.patience = patience;
  c.seed = seed;
  return c;
}

}  // namespace

PYBIND11_MODULE(_xnap, m) {
  m.doc() = "Bi-LSTM next-activity prediction with relevance explanations";

  // Raised with a `code` attribute naming the error kind.
  static PyObject* error_type = PyErr_NewException("xnap._xnap.XnapError", PyExc_RuntimeError, nullptr);
  m.add_object("XnapError", py::handle(error_type));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_type)(e.what());
      exc.attr("code") = to_string(e.code());
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  py::class_<EventLog>(m, "EventLog")
      .def("__len__", [](const EventLog& l) { return l.traces().size(); })
      .def("case_ids",
           [](const EventLog& l) {
             std::vector<std::string> ids;
             for (const auto& t : l.traces()) ids.push_back(t.case_id());
             return ids;
           })
      .def("traces",
           [](const EventLog& l) {
             std::vector<std::vector<std::string>> out;
             for (const auto& t : l.traces()) out.push_back(t.activities());
             return out;
           })
      .def("stats", [](const EventLog& l) { return stats_dict(compute_stats(l)); })
      .def("write", [](const EventLog& l, const std::string& path) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
        write_log(out, l);
      });

  m.def("read_log", [](const std::string& path, const std::string& case_col, const std::string& activity_col,
                       const std::string& time_col) { return read_log_file(path, csv_format(case_col, activity_col, time_col)); },
        py::arg("path"), py::arg("case_col") = "case", py::arg("activity_col") = "activity",
        py::arg("time_col") = "timestamp");

  m.def(
      "linear_log",
      [](const std::vector<std::string>& activities, std::size_t n, std::uint64_t seed) {
        return generate(linear_grammar(activities, n, seed));
      },
      py::arg("activities"), py::arg("n_traces"), py::arg("seed") = 1);
  m.def(
      "copy_task_log",
      [](std::size_t n, std::size_t distance, std::uint64_t seed) {
        CopyTaskOptions o;
        o.n_traces = n;
        o.distance = distance;
        o.seed = seed;
        return generate(copy_task(o));
      },
      py::arg("n_traces") = 2000, py::arg("distance") = 3, py::arg("seed") = 1);

  py::class_<BiLstmModel>(m, "Model")
      .def_property_readonly("vocabulary", [](const BiLstmModel& md) { return md.vocab.labels(); })
      .def_property_readonly("hidden_size", &BiLstmModel::hidden_size)
      .def_readonly("max_len", &BiLstmModel::max_len)
      .def_readonly("trained_epochs", &BiLstmModel::trained_epochs)
      .def("save", [](const BiLstmModel& md, const std::string& path) { save_model_file(md, path); })
      .def_static("load", [](const std::string& path) { return load_model_file(path); })
      .def("predict",
           [](const BiLstmModel& md, const std::vector<std::string>& activities) {
             const auto sample = encode_running_trace(activities, md.vocab, md.max_len);
             const auto p = predict(md, sample.view());
             return py::make_tuple(md.vocab.label(p.index), p.probabilities);
           })
      .def(
          "explain",
          [](const BiLstmModel& md, const std::vector<std::string>& activities, double epsilon, double delta) {
            const auto sample = encode_running_trace(activities, md.vocab, md.max_len);
            LrpConfig cfg;
            cfg.epsilon = epsilon;
            cfg.delta = delta;
            const auto r = explain(md, sample.view(), cfg);
            py::dict d;
            d["target_class"] = md.vocab.label(r.target_class);
            d["target_prob"] = r.target_probability;
            d["initial_relevance"] = r.initial_relevance;
            d["raw"] = r.raw;
            d["display"] = r.display;
            d["bias_absorbed"] = r.bias_absorbed;
            d["gate_relevance"] = r.gate_relevance;
            return d;
          },
          py::arg("activities"), py::arg("epsilon") = 0.001, py::arg("delta") = 0.0);

  m.def(
      "train",
      [](const EventLog& log, std::size_t hidden, std::size_t epochs, std::size_t patience, std::uint64_t seed) {
        const auto vocab = build_vocabulary(log);
        const std::size_t max_len = max_augmented_length(log);
        const auto [tr, va] = validation_split(log, seed);
        py::gil_scoped_release release;
        auto result = train(assemble_dataset(tr, vocab, max_len), assemble_dataset(va, vocab, max_len), vocab,
                            train_config(hidden, epochs, patience, seed));
        return result.model;
      },
      py::arg("log"), py::arg("hidden") = 100, py::arg("epochs") = 100, py::arg("patience") = 10,
      py::arg("seed") = 42);

  m.def(
      "evaluate",
      [](const EventLog& log, std::size_t folds, std::size_t hidden, std::size_t epochs, std::size_t patience,
         std::uint64_t seed) {
        CvResult cv;
        {
          py::gil_scoped_release release;
          cv = run_cv(log, train_config(hidden, epochs, patience, seed), folds, seed);
        }
        py::list per_fold;
        for (const auto& f : cv.report.folds) per_fold.append(summary_dict(f.weighted));
        py::dict d;
        d["folds"] = per_fold;
        d["average"] = summary_dict(cv.report.average);
        d["stddev"] = summary_dict(cv.report.stddev);
        d["best_fold"] = cv.best_fold;
        d["best_model"] = cv.models[cv.best_fold];
        return d;
      },
      py::arg("log"), py::arg("folds") = 10, py::arg("hidden") = 100, py::arg("epochs") = 100,
      py::arg("patience") = 10, py::arg("seed") = 42);

  m.def("rescale_for_display", [](const std::vector<double>& raw) { return rescale_for_display(raw); });
}
