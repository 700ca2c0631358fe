#ifndef TRAITSCORE_ORDINAL_HPP
#define TRAITSCORE_ORDINAL_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "traitscore/corpus.hpp"
#include "traitscore/decoding.hpp"
#include "traitscore/features.hpp"

namespace traitscore {

struct ShapeMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonBinaryTargetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateThresholdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EmptySplitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergedLossError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CheckpointFormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// CORAL head: one shared weight vector, one bias per rank threshold.
// logit_k = w.x + b_k, so P(y>1) >= P(y>2) whenever b1 >= b2.
struct OrdinalHead {
  std::vector<double> w;
  std::array<double, 2> b{0.0, 0.0};
  double dropout_rate = 0.1;  // input dropout during training only
};

// Three-way softmax baseline.
struct NominalHead {
  std::vector<double> weights;  // row-major 3 x d
  std::array<double, 3> bias{0.0, 0.0, 0.0};
  double dropout_rate = 0.1;
};

// Scalar regression baseline; bands enter as the reals 1, 2, 3.
struct RegressionHead {
  std::vector<double> w;
  double b0 = 0.0;
  double dropout_rate = 0.1;
};

OrdinalHead make_ordinal_head(std::size_t dim, double dropout_rate = 0.1);
NominalHead make_nominal_head(std::size_t dim, double dropout_rate = 0.1);
RegressionHead make_regression_head(std::size_t dim, double dropout_rate = 0.1);

// Binary threshold targets: weak -> [0,0], fair -> [1,0], strong -> [1,1].
std::array<int, 2> encode_targets(Band band);

struct CoralOutput {
  std::array<double, 2> logits;
  ThresholdProbs probs;
};

CoralOutput coral_forward(const OrdinalHead& head, const FeatureVector& x);

// Mean over the batch of the per-threshold weighted BCE-with-logits:
//   sum_k [ pos_weight_k * t_k * softplus(-z_k) + (1 - t_k) * softplus(z_k) ].
// Computed in logit space; stable for |z| up to ~1e3.
double coral_loss(const std::vector<std::array<double, 2>>& logits,
                  const std::vector<std::array<int, 2>>& targets,
                  const std::array<double, 2>& pos_weights);

// negatives / positives at each threshold, from training bands.
std::array<double, 2> compute_pos_weights(const std::vector<Band>& train_bands);

struct CoralGradient {
  std::vector<double> w;
  std::array<double, 2> b;
};

// Analytic gradient of coral_loss over (w, b) for a feature batch.
CoralGradient coral_gradient(const OrdinalHead& head, const std::vector<FeatureVector>& batch,
                             const std::vector<std::array<int, 2>>& targets,
                             const std::array<double, 2>& pos_weights);

std::array<double, 3> nominal_forward(const NominalHead& head, const FeatureVector& x);
double cross_entropy_loss(const std::array<double, 3>& probs, Band band);
Band nominal_predict(const std::array<double, 3>& probs);  // argmax, ties -> lowest band

struct NominalGradient {
  std::vector<double> weights;  // row-major 3 x d
  std::array<double, 3> bias;
};

NominalGradient nominal_gradient(const NominalHead& head, const std::vector<FeatureVector>& batch,
                                 const std::vector<Band>& bands);

double regression_forward(const RegressionHead& head, const FeatureVector& x);
double mse_loss(double prediction, double target);
// Fixed thresholds (1.5, 2.5), intervals closed below on the upper side.
Band discretize(double prediction);

struct RegressionGradient {
  std::vector<double> w;
  double b0;
};

RegressionGradient regression_gradient(const RegressionHead& head,
                                       const std::vector<FeatureVector>& batch,
                                       const std::vector<Band>& bands);

enum class HeadKind { Coral, Nominal, Regression };

std::string_view head_kind_name(HeadKind k);
HeadKind head_kind_from_name(std::string_view name);

struct Dataset {
  std::vector<FeatureVector> features;
  std::vector<Band> bands;

  std::size_t size() const { return features.size(); }
  std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }
};

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  int max_epochs = 6;
  int eval_interval = 50;  // steps between validation evaluations
  int patience = 2;        // consecutive non-improving evaluations before stopping
  std::uint64_t seed = 0;
  std::array<double, 2> pos_weights{1.0, 1.0};  // CORAL only
  double dropout_rate = 0.1;
  double cutoff_grid_step = 0.01;  // CORAL validation decoding
};

struct EvalPoint {
  long step = 0;
  double val_qwk = 0.0;
  CutoffPair cutoffs;  // tuned for CORAL, default (0.5, 0.5) for baselines
};

// Early-stopping policy: stop after `patience` consecutive evaluations
// without a strict improvement of the best metric.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);

  // Records one evaluation; returns true when training should stop.
  bool record(double metric);
  bool improved_last() const { return improved_last_; }
  double best() const { return best_; }

 private:
  int patience_;
  int non_improving_ = 0;
  double best_;
  bool improved_last_ = false;
};

struct TrainHistory {
  std::vector<double> batch_losses;  // one entry per optimization step
  std::vector<EvalPoint> evals;
  long steps = 0;
  int epochs_run = 0;
  bool early_stopped = false;
};

// Snapshot of the best head by validation QWK. Parameters are flattened:
// Coral w|b, Nominal W|bias, Regression w|b0.
struct Checkpoint {
  HeadKind kind = HeadKind::Coral;
  std::size_t dim = 0;
  std::vector<double> params;
  long step = 0;
  double val_tuned_qwk = 0.0;
  CutoffPair cutoffs;
};

// Mini-batch gradient descent with per-epoch seeded shuffling. Every
// eval_interval steps the head is scored on the validation split (CORAL:
// cutoffs tuned there first); the checkpoint with the highest validation QWK
// wins. Stops early after `patience` consecutive non-improving evaluations.
// A final evaluation runs at the last step when it missed the interval, so
// training always yields a checkpoint.
std::pair<Checkpoint, TrainHistory> train(HeadKind kind, const Dataset& train_data,
                                          const Dataset& val_data, const TrainConfig& cfg);

// Prediction with a trained checkpoint (stored cutoffs for CORAL).
Band predict(const Checkpoint& ckpt, const FeatureVector& x);
std::vector<Band> predict_all(const Checkpoint& ckpt, const std::vector<FeatureVector>& xs);

// Versioned flat text format; floats at 17 significant digits so save/load
// round-trips bit-exactly.
std::string write_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(std::string_view text);

OrdinalHead coral_from_checkpoint(const Checkpoint& ckpt);
NominalHead nominal_from_checkpoint(const Checkpoint& ckpt);
RegressionHead regression_from_checkpoint(const Checkpoint& ckpt);

}  // namespace traitscore

#endif  // TRAITSCORE_ORDINAL_HPP
