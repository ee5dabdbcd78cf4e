#include "xnap/bilstm.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <string>

#include "json.hpp"
#include "xnap/error.hpp"
#include "xnap/nadam.hpp"
#include "xnap/rng.hpp"

namespace xnap {

// ---------------------------------------------------------------------------
// Parameters

LstmDirectionParams LstmDirectionParams::zeros(std::size_t hidden, std::size_t width) {
  LstmDirectionParams p;
  for (std::size_t g = 0; g < kGateCount; ++g) {
    p.w[g] = Matrix(hidden, width);
    p.u[g] = Matrix(hidden, hidden);
    p.b[g] = Vector(hidden, 0.0);
  }
  return p;
}

BiLstmParams BiLstmParams::zeros(std::size_t hidden, std::size_t width) {
  BiLstmParams p;
  p.forward = LstmDirectionParams::zeros(hidden, width);
  p.backward = LstmDirectionParams::zeros(hidden, width);
  p.w_out = Matrix(width, 2 * hidden);
  p.b_out = Vector(width, 0.0);
  return p;
}

namespace {

template <typename Params, typename Span>
void collect_direction(Params& d, std::vector<Span>& out) {
  for (std::size_t g = 0; g < kGateCount; ++g) {
    out.emplace_back(d.w[g].flat());
    out.emplace_back(d.u[g].flat());
    out.emplace_back(d.b[g]);
  }
}

}  // namespace

std::vector<std::span<double>> BiLstmParams::blocks() {
  std::vector<std::span<double>> out;
  collect_direction(forward, out);
  collect_direction(backward, out);
  out.emplace_back(w_out.flat());
  out.emplace_back(b_out);
  return out;
}

std::vector<std::span<const double>> BiLstmParams::blocks() const {
  std::vector<std::span<const double>> out;
  collect_direction(forward, out);
  collect_direction(backward, out);
  out.emplace_back(w_out.flat());
  out.emplace_back(b_out);
  return out;
}

std::size_t BiLstmParams::parameter_count() const {
  std::size_t n = 0;
  for (auto b : blocks()) n += b.size();
  return n;
}

void BiLstmParams::fill(double value) {
  for (auto b : blocks()) std::fill(b.begin(), b.end(), value);
}

void BiLstmParams::add_scaled(const BiLstmParams& other, double scale) {
  auto mine = blocks();
  const auto theirs = other.blocks();
  if (mine.size() != theirs.size()) throw Error(ErrorCode::ShapeMismatch, "parameter block count");
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (mine[i].size() != theirs[i].size()) throw Error(ErrorCode::ShapeMismatch, "parameter block size");
    for (std::size_t j = 0; j < mine[i].size(); ++j) mine[i][j] += scale * theirs[i][j];
  }
}

void TrainConfig::validate() const {
  if (hidden_size == 0) throw Error(ErrorCode::InvalidArgument, "hidden size must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout rate must lie in [0, 1)");
  }
  if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "batch size must be at least 1");
  if (max_epochs == 0) throw Error(ErrorCode::InvalidArgument, "max epochs must be at least 1");
  if (patience == 0) throw Error(ErrorCode::InvalidArgument, "patience must be at least 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
}

namespace {

void glorot_fill(Matrix& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (double& v : m.flat()) v = rng.uniform(-limit, limit);
}

}  // namespace

BiLstmModel BiLstmModel::initialize(ActivityVocabulary vocab, std::size_t max_len, const TrainConfig& config) {
  config.validate();
  BiLstmModel model;
  const std::size_t h = vocab.size();
  model.params = BiLstmParams::zeros(config.hidden_size, h);
  model.vocab = std::move(vocab);
  model.max_len = max_len;
  model.hyperparams = config;

  Rng rng(config.seed);
  for (LstmDirectionParams* d : {&model.params.forward, &model.params.backward}) {
    for (std::size_t g = 0; g < kGateCount; ++g) {
      glorot_fill(d->w[g], rng);
      glorot_fill(d->u[g], rng);
    }
    std::fill(d->b[index(Gate::Forget)].begin(), d->b[index(Gate::Forget)].end(), 1.0);
  }
  glorot_fill(model.params.w_out, rng);
  return model;
}

// ---------------------------------------------------------------------------
// Forward pass

namespace {

void run_direction(const LstmDirectionParams& p, const SequenceView& sample, const Matrix* mask, bool reverse,
                   ForwardTrace::Direction& out) {
  const std::size_t steps = sample.true_length;
  const std::size_t hidden = p.hidden_size();
  out.steps.resize(steps);
  const Vector zeros(hidden, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t event = reverse ? steps - 1 - s : s;
    LstmStep& st = out.steps[s];
    const auto src = sample.event(event);
    st.x.assign(src.begin(), src.end());
    if (mask != nullptr) {
      const auto m = mask->row(event);
      for (std::size_t j = 0; j < st.x.size(); ++j) st.x[j] *= m[j];
    }
    const Vector& h_prev = s == 0 ? zeros : out.steps[s - 1].h;
    const Vector& c_prev = s == 0 ? zeros : out.steps[s - 1].c;
    for (std::size_t g = 0; g < kGateCount; ++g) {
      st.pre[g] = p.b[g];
      matvec_add(p.w[g], st.x, st.pre[g]);
      if (s > 0) matvec_add(p.u[g], h_prev, st.pre[g]);
      st.act[g].resize(hidden);
      for (std::size_t k = 0; k < hidden; ++k) {
        st.act[g][k] = g == index(Gate::Candidate) ? tanh_(st.pre[g][k]) : sigmoid(st.pre[g][k]);
      }
    }
    const auto& in = st.act[index(Gate::Input)];
    const auto& fg = st.act[index(Gate::Forget)];
    const auto& og = st.act[index(Gate::Output)];
    const auto& cand = st.act[index(Gate::Candidate)];
    st.c.resize(hidden);
    st.h.resize(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
      st.c[k] = fg[k] * c_prev[k] + in[k] * cand[k];
      st.h[k] = og[k] * std::tanh(st.c[k]);
    }
  }
}

void check_sample(const BiLstmModel& model, const SequenceView& sample, const Matrix* mask) {
  if (sample.width != model.width()) {
    throw Error(ErrorCode::ShapeMismatch, "sample width " + std::to_string(sample.width) + " vs vocabulary " +
                                              std::to_string(model.width()));
  }
  if (sample.true_length == 0 || sample.true_length > sample.max_len) {
    throw Error(ErrorCode::ShapeMismatch, "sample true length out of range");
  }
  if (sample.data.size() != sample.max_len * sample.width) {
    throw Error(ErrorCode::ShapeMismatch, "sample storage does not match its dimensions");
  }
  if (mask != nullptr && (mask->rows() != sample.true_length || mask->cols() != sample.width)) {
    throw Error(ErrorCode::ShapeMismatch, "dropout mask must be true_length x H");
  }
}

}  // namespace

ForwardTrace forward(const BiLstmModel& model, const SequenceView& sample, const Matrix* dropout_mask) {
  check_sample(model, sample, dropout_mask);
  ForwardTrace trace;
  run_direction(model.params.forward, sample, dropout_mask, false, trace.forward);
  run_direction(model.params.backward, sample, dropout_mask, true, trace.backward);
  const auto& hf = trace.forward.steps.back().h;
  const auto& hb = trace.backward.steps.back().h;
  trace.hidden.reserve(hf.size() + hb.size());
  trace.hidden.insert(trace.hidden.end(), hf.begin(), hf.end());
  trace.hidden.insert(trace.hidden.end(), hb.begin(), hb.end());
  trace.logits = affine(model.params.w_out, trace.hidden, model.params.b_out);
  trace.probabilities = softmax(trace.logits);
  return trace;
}

Prediction predict(const BiLstmModel& model, const SequenceView& sample) {
  auto trace = forward(model, sample);
  Prediction p;
  p.index = argmax(trace.probabilities);
  p.probabilities = std::move(trace.probabilities);
  return p;
}

// ---------------------------------------------------------------------------
// Backpropagation through time

namespace {

void backprop_direction(const LstmDirectionParams& p, const ForwardTrace::Direction& dir, Vector dh,
                        LstmDirectionParams& grad) {
  const std::size_t hidden = p.hidden_size();
  Vector dc_next(hidden, 0.0);
  std::array<Vector, kGateCount> dpre;
  for (auto& v : dpre) v.resize(hidden);

  for (std::size_t s = dir.steps.size(); s-- > 0;) {
    const LstmStep& st = dir.steps[s];
    const auto& in = st.act[index(Gate::Input)];
    const auto& fg = st.act[index(Gate::Forget)];
    const auto& og = st.act[index(Gate::Output)];
    const auto& cand = st.act[index(Gate::Candidate)];
    for (std::size_t k = 0; k < hidden; ++k) {
      const double c_prev = s == 0 ? 0.0 : dir.steps[s - 1].c[k];
      const double tc = std::tanh(st.c[k]);
      const double d_out = dh[k] * tc;
      const double dc = dc_next[k] + dh[k] * og[k] * (1.0 - tc * tc);
      dc_next[k] = dc * fg[k];
      dpre[index(Gate::Input)][k] = dc * cand[k] * in[k] * (1.0 - in[k]);
      dpre[index(Gate::Forget)][k] = dc * c_prev * fg[k] * (1.0 - fg[k]);
      dpre[index(Gate::Output)][k] = d_out * og[k] * (1.0 - og[k]);
      dpre[index(Gate::Candidate)][k] = dc * in[k] * (1.0 - cand[k] * cand[k]);
    }
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t g = 0; g < kGateCount; ++g) {
      for (std::size_t k = 0; k < hidden; ++k) grad.b[g][k] += dpre[g][k];
      outer_add(grad.w[g], dpre[g], st.x);
      if (s > 0) {
        outer_add(grad.u[g], dpre[g], dir.steps[s - 1].h);
        matvec_transposed_add(p.u[g], dpre[g], dh);
      }
    }
  }
}

}  // namespace

double accumulate_gradients(const BiLstmModel& model, const ForwardTrace& trace, std::size_t label,
                            BiLstmParams& grads) {
  const auto& p = trace.probabilities;
  if (label >= p.size()) throw Error(ErrorCode::ShapeMismatch, "label index out of range");
  const double loss = cross_entropy(p, label);

  Vector dz = p;
  dz[label] -= 1.0;
  for (std::size_t j = 0; j < dz.size(); ++j) grads.b_out[j] += dz[j];
  outer_add(grads.w_out, dz, trace.hidden);

  Vector dhidden(trace.hidden.size(), 0.0);
  matvec_transposed_add(model.params.w_out, dz, dhidden);
  const std::size_t hidden = model.hidden_size();
  backprop_direction(model.params.forward, trace.forward, Vector(dhidden.begin(), dhidden.begin() + hidden),
                     grads.forward);
  backprop_direction(model.params.backward, trace.backward, Vector(dhidden.begin() + hidden, dhidden.end()),
                     grads.backward);
  return loss;
}

BiLstmParams backward(const BiLstmModel& model, const SequenceView& sample, std::size_t label,
                      const Matrix* dropout_mask) {
  const auto trace = forward(model, sample, dropout_mask);
  auto grads = BiLstmParams::zeros(model.hidden_size(), model.width());
  accumulate_gradients(model, trace, label, grads);
  return grads;
}

double sample_loss(const BiLstmModel& model, const SequenceView& sample, std::size_t label,
                   const Matrix* dropout_mask) {
  return cross_entropy(forward(model, sample, dropout_mask).probabilities, label);
}

// ---------------------------------------------------------------------------
// Training

std::pair<double, double> evaluate_loss(const BiLstmModel& model, const PrefixDataset& data) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "nothing to evaluate");
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto trace = forward(model, data.view(i));
    loss += cross_entropy(trace.probabilities, data.labels[i]);
    if (argmax(trace.probabilities) == data.labels[i]) ++correct;
  }
  const auto n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n};
}

namespace {

Matrix draw_dropout_mask(std::size_t steps, std::size_t width, double rate, Rng& rng) {
  Matrix mask(steps, width);
  const double keep = 1.0 - rate;
  const double scale = 1.0 / keep;
  for (double& v : mask.flat()) v = rng.bernoulli(keep) ? scale : 0.0;
  return mask;
}

void check_dataset(const PrefixDataset& data, const BiLstmModel& model, const char* name) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, std::string(name) + " set has no samples");
  if (data.width != model.width()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(name) + " set width differs from the vocabulary");
  }
}

}  // namespace

TrainResult train(const PrefixDataset& train_data, const PrefixDataset& val_data, const ActivityVocabulary& vocab,
                  const TrainConfig& config) {
  const std::size_t max_len = std::max(train_data.max_len, val_data.max_len);
  return train_from(BiLstmModel::initialize(vocab, max_len, config), train_data, val_data, config);
}

TrainResult train_from(BiLstmModel model, const PrefixDataset& train_data, const PrefixDataset& val_data,
                       const TrainConfig& config) {
  config.validate();
  check_dataset(train_data, model, "training");
  check_dataset(val_data, model, "validation");
  model.hyperparams = config;

  // Separate stream from the one used for initialization.
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  NadamOptimizer optimizer({config.learning_rate, config.beta1, config.beta2, config.epsilon, config.schedule_decay},
                           model.params.parameter_count());

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);
  auto grads = BiLstmParams::zeros(model.hidden_size(), model.width());

  TrainResult result;
  BiLstmParams best = model.params;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::size_t epoch = 0;

  while (epoch < config.max_epochs) {
    ++epoch;
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    try {
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t stop = std::min(order.size(), start + config.batch_size);
        grads.fill(0.0);
        for (std::size_t k = start; k < stop; ++k) {
          const std::size_t i = order[k];
          const auto view = train_data.view(i);
          ForwardTrace trace;
          if (config.dropout_rate > 0.0) {
            const Matrix mask = draw_dropout_mask(view.true_length, view.width, config.dropout_rate, rng);
            trace = forward(model, view, &mask);
          } else {
            trace = forward(model, view);
          }
          loss_sum += accumulate_gradients(model, trace, train_data.labels[i], grads);
          if (argmax(trace.probabilities) == train_data.labels[i]) ++correct;
        }
        const double scale = 1.0 / static_cast<double>(stop - start);
        for (auto b : grads.blocks()) {
          for (double& v : b) v *= scale;
        }
        optimizer.step(model.params.blocks(), std::as_const(grads).blocks());
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteInput) throw;
      throw Error(ErrorCode::NonFiniteLoss, "diverged in epoch " + std::to_string(epoch));
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(order.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (!std::isfinite(rec.train_loss)) {
      throw Error(ErrorCode::NonFiniteLoss, "training loss is not finite in epoch " + std::to_string(epoch));
    }
    try {
      std::tie(rec.val_loss, rec.val_accuracy) = evaluate_loss(model, val_data);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonFiniteInput) throw;
      throw Error(ErrorCode::NonFiniteLoss, "diverged in epoch " + std::to_string(epoch));
    }
    result.history.push_back(rec);
    if (config.verbose) {
      std::clog << "epoch " << epoch << " loss " << rec.train_loss << " acc " << rec.train_accuracy << " val_loss "
                << rec.val_loss << " val_acc " << rec.val_accuracy << "\n";
    }

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      best = model.params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  model.params = std::move(best);
  model.trained_epochs = epoch;
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array<const char*, kGateCount> kGateSuffix = {"i", "f", "o", "g"};

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(Json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, std::size_t rows, std::size_t cols, const std::string& name) {
  if (!j.is_array() || j.size() != rows) throw Error(ErrorCode::CorruptModel, name + ": wrong row count");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw Error(ErrorCode::CorruptModel, name + ": wrong column count");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Vector vector_from_json(const Json& j, std::size_t size, const std::string& name) {
  if (!j.is_array() || j.size() != size) throw Error(ErrorCode::CorruptModel, name + ": wrong length");
  return j.get<Vector>();
}

Json direction_to_json(const LstmDirectionParams& d) {
  Json out = Json::object();
  for (std::size_t g = 0; g < kGateCount; ++g) {
    out[std::string("W_") + kGateSuffix[g]] = to_json(d.w[g]);
    out[std::string("U_") + kGateSuffix[g]] = to_json(d.u[g]);
    out[std::string("b_") + kGateSuffix[g]] = d.b[g];
  }
  return out;
}

LstmDirectionParams direction_from_json(const Json& j, std::size_t hidden, std::size_t width, const std::string& name) {
  if (!j.is_object()) throw Error(ErrorCode::CorruptModel, name + " is not an object");
  LstmDirectionParams d;
  for (std::size_t g = 0; g < kGateCount; ++g) {
    const std::string sfx = kGateSuffix[g];
    d.w[g] = matrix_from_json(j.at("W_" + sfx), hidden, width, name + ".W_" + sfx);
    d.u[g] = matrix_from_json(j.at("U_" + sfx), hidden, hidden, name + ".U_" + sfx);
    d.b[g] = vector_from_json(j.at("b_" + sfx), hidden, name + ".b_" + sfx);
  }
  return d;
}

Json config_to_json(const TrainConfig& c) {
  return Json{{"hidden_size", c.hidden_size},
              {"dropout_rate", c.dropout_rate},
              {"batch_size", c.batch_size},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"learning_rate", c.learning_rate},
              {"beta1", c.beta1},
              {"beta2", c.beta2},
              {"epsilon", c.epsilon},
              {"schedule_decay", c.schedule_decay},
              {"seed", c.seed},
              {"readout", "concat_final_states"}};
}

TrainConfig config_from_json(const Json& j) {
  TrainConfig c;
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.max_epochs = j.at("max_epochs").get<std::size_t>();
  c.patience = j.at("patience").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.epsilon = j.at("epsilon").get<double>();
  c.schedule_decay = j.value("schedule_decay", c.schedule_decay);
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_model(const BiLstmModel& model, std::ostream& sink) {
  Json j;
  j["format_version"] = kModelFormatVersion;
  j["hidden_size"] = model.hidden_size();
  j["vocab"] = model.vocab.labels();
  j["max_len"] = model.max_len;
  j["trained_epochs"] = model.trained_epochs;
  j["hyperparams"] = config_to_json(model.hyperparams);
  j["forward"] = direction_to_json(model.params.forward);
  j["backward"] = direction_to_json(model.params.backward);
  j["W_out"] = to_json(model.params.w_out);
  j["b_out"] = model.params.b_out;
  sink << j.dump(1) << '\n';
  if (!sink) throw Error(ErrorCode::Io, "failed writing model");
}

BiLstmModel load_model(std::istream& source) {
  Json j;
  try {
    j = Json::parse(source);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::CorruptModel, e.what());
  }
  try {
    if (!j.is_object() || !j.contains("format_version")) throw Error(ErrorCode::CorruptModel, "no format_version");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "format_version " + std::to_string(version) + ", expected " +
                                                  std::to_string(kModelFormatVersion));
    }
    BiLstmModel model;
    model.vocab = ActivityVocabulary(j.at("vocab").get<std::vector<std::string>>());
    const std::size_t hidden = j.at("hidden_size").get<std::size_t>();
    const std::size_t width = model.vocab.size();
    model.max_len = j.at("max_len").get<std::size_t>();
    model.trained_epochs = j.value("trained_epochs", std::size_t{0});
    model.hyperparams = config_from_json(j.at("hyperparams"));
    model.params.forward = direction_from_json(j.at("forward"), hidden, width, "forward");
    model.params.backward = direction_from_json(j.at("backward"), hidden, width, "backward");
    model.params.w_out = matrix_from_json(j.at("W_out"), width, 2 * hidden, "W_out");
    model.params.b_out = vector_from_json(j.at("b_out"), width, "b_out");
    return model;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::CorruptModel, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VersionMismatch || e.code() == ErrorCode::CorruptModel) throw;
    throw Error(ErrorCode::CorruptModel, e.what());
  }
}

void save_model_file(const BiLstmModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  save_model(model, out);
}

BiLstmModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return load_model(in);
}

void write_history_csv(std::ostream& sink, const std::vector<EpochRecord>& history) {
  sink << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  const auto old = sink.precision(10);
  for (const auto& r : history) {
    sink << r.epoch << ',' << r.train_loss << ',' << r.train_accuracy << ',' << r.val_loss << ','
         << r.val_accuracy << '\n';
  }
  sink.precision(old);
}

}  // namespace xnap
