#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "xnap/encoding.hpp"
#include "xnap/tensor.hpp"

namespace xnap {

/// Gate order used for parameter arrays and the model file.
enum class Gate : std::size_t { Input = 0, Forget = 1, Output = 2, Candidate = 3 };
inline constexpr std::size_t kGateCount = 4;

constexpr std::size_t index(Gate g) noexcept { return static_cast<std::size_t>(g); }

/// One LSTM direction. For gate g: w[g] is D x H, u[g] is D x D, b[g] has D entries.
struct LstmDirectionParams {
  std::array<Matrix, kGateCount> w;
  std::array<Matrix, kGateCount> u;
  std::array<Vector, kGateCount> b;

  static LstmDirectionParams zeros(std::size_t hidden, std::size_t width);
  std::size_t hidden_size() const noexcept { return u[0].rows(); }
  std::size_t input_size() const noexcept { return w[0].cols(); }

  bool operator==(const LstmDirectionParams&) const = default;
};

/// Every trainable tensor of the network. Also used for gradients.
struct BiLstmParams {
  LstmDirectionParams forward;
  LstmDirectionParams backward;
  Matrix w_out;  // H x 2D
  Vector b_out;  // H

  static BiLstmParams zeros(std::size_t hidden, std::size_t width);

  /// Flat views in a fixed order (forward, backward, w_out, b_out).
  std::vector<std::span<double>> blocks();
  std::vector<std::span<const double>> blocks() const;
  std::size_t parameter_count() const;

  void fill(double value);
  /// this += scale * other
  void add_scaled(const BiLstmParams& other, double scale);

  bool operator==(const BiLstmParams&) const = default;
};

struct TrainConfig {
  std::size_t hidden_size = 100;
  double dropout_rate = 0.2;
  std::size_t batch_size = 128;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  double learning_rate = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  double schedule_decay = 0.004;
  std::uint64_t seed = 42;
  bool verbose = false;

  /// Throws InvalidArgument on out-of-range settings.
  void validate() const;
};

struct BiLstmModel {
  BiLstmParams params;
  ActivityVocabulary vocab;
  std::size_t max_len = 0;
  TrainConfig hyperparams;
  std::size_t trained_epochs = 0;

  std::size_t hidden_size() const noexcept { return params.forward.hidden_size(); }
  std::size_t width() const noexcept { return vocab.size(); }

  /// Glorot-uniform weights, zero biases except the forget gate (1.0).
  static BiLstmModel initialize(ActivityVocabulary vocab, std::size_t max_len, const TrainConfig& config);
};

/// Quantities of one recurrence step, in the direction's own reading order.
struct LstmStep {
  Vector x;                                // input as seen by the cell (after dropout)
  std::array<Vector, kGateCount> pre;      // gate pre-activations
  std::array<Vector, kGateCount> act;      // i, f, o (sigmoid) and candidate (tanh)
  Vector c;
  Vector h;
};

struct ForwardTrace {
  /// forward.steps[s] consumed event s; backward.steps[s] consumed event T-1-s.
  struct Direction {
    std::vector<LstmStep> steps;
  };
  Direction forward;
  Direction backward;
  Vector hidden;         // [h_fwd_T ; h_bwd_T]
  Vector logits;
  Vector probabilities;
};

/// Runs both directions over the true_length suffix of the sample.
/// `dropout_mask`, if given, is true_length x H and multiplies the inputs.
ForwardTrace forward(const BiLstmModel& model, const SequenceView& sample, const Matrix* dropout_mask = nullptr);

struct Prediction {
  std::size_t index = 0;
  Vector probabilities;
};

Prediction predict(const BiLstmModel& model, const SequenceView& sample);

/// Adds d(loss)/d(params) of one sample to `grads`; returns the sample loss.
double accumulate_gradients(const BiLstmModel& model, const ForwardTrace& trace, std::size_t label,
                            BiLstmParams& grads);

/// Gradient of the cross-entropy loss of one sample.
BiLstmParams backward(const BiLstmModel& model, const SequenceView& sample, std::size_t label,
                      const Matrix* dropout_mask = nullptr);

double sample_loss(const BiLstmModel& model, const SequenceView& sample, std::size_t label,
                   const Matrix* dropout_mask = nullptr);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double train_accuracy = 0;
  double val_loss = 0;
  double val_accuracy = 0;
};

struct TrainResult {
  BiLstmModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

/// Mean loss and accuracy without dropout.
std::pair<double, double> evaluate_loss(const BiLstmModel& model, const PrefixDataset& data);

/// Mini-batch Nadam with inverted input dropout and early stopping on the
/// validation loss; returns the snapshot with the lowest validation loss.
TrainResult train(const PrefixDataset& train_data, const PrefixDataset& val_data, const ActivityVocabulary& vocab,
                  const TrainConfig& config);

/// Continues training from `initial` (weights and vocabulary are kept).
TrainResult train_from(BiLstmModel initial, const PrefixDataset& train_data, const PrefixDataset& val_data,
                       const TrainConfig& config);

inline constexpr int kModelFormatVersion = 1;

void save_model(const BiLstmModel& model, std::ostream& sink);
BiLstmModel load_model(std::istream& source);
void save_model_file(const BiLstmModel& model, const std::filesystem::path& path);
BiLstmModel load_model_file(const std::filesystem::path& path);

void write_history_csv(std::ostream& sink, const std::vector<EpochRecord>& history);

}  // namespace xnap
