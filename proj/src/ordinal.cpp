#include "traitscore/ordinal.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "traitscore/detail/rng.hpp"
#include "traitscore/metrics.hpp"

namespace traitscore {
namespace {

double stable_softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))); }

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double dot(const std::vector<double>& w, const FeatureVector& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

void check_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw ShapeMismatchError(std::string(what) + ": expected dim " + std::to_string(expected) +
                             ", got " + std::to_string(got));
  }
}

void check_pos_weights(const std::array<double, 2>& pw) {
  if (!(pw[0] > 0.0) || !(pw[1] > 0.0)) {
    throw std::invalid_argument("pos_weights entries must be positive");
  }
}

// Loss and gradient of the weighted BCE-with-logits in one pass; gradient
// pointers may be null when only the loss is needed.
double coral_batch(const OrdinalHead& head, const std::vector<FeatureVector>& batch,
                   const std::vector<std::array<int, 2>>& targets,
                   const std::array<double, 2>& pos_weights, CoralGradient* grad) {
  if (batch.size() != targets.size() || batch.empty()) {
    throw ShapeMismatchError("coral batch and targets must be nonempty and equal length");
  }
  check_pos_weights(pos_weights);
  if (grad) {
    grad->w.assign(head.w.size(), 0.0);
    grad->b = {0.0, 0.0};
  }
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    check_dim(head.w.size(), batch[i].size(), "coral features");
    const double wx = dot(head.w, batch[i]);
    double dz_sum = 0.0;
    for (int k = 0; k < 2; ++k) {
      const int t = targets[i][k];
      if (t != 0 && t != 1) {
        throw NonBinaryTargetError("target entries must be 0 or 1");
      }
      const double z = wx + head.b[k];
      loss += pos_weights[k] * t * stable_softplus(-z) + (1 - t) * stable_softplus(z);
      if (grad) {
        const double dz = (1 - t) * stable_sigmoid(z) - pos_weights[k] * t * stable_sigmoid(-z);
        grad->b[k] += dz * inv_n;
        dz_sum += dz;
      }
    }
    if (grad) {
      const double scale = dz_sum * inv_n;
      for (std::size_t j = 0; j < head.w.size(); ++j) grad->w[j] += scale * batch[i][j];
    }
  }
  return loss * inv_n;
}

double nominal_batch(const NominalHead& head, const std::vector<FeatureVector>& batch,
                     const std::vector<Band>& bands, NominalGradient* grad) {
  if (batch.size() != bands.size() || batch.empty()) {
    throw ShapeMismatchError("nominal batch and bands must be nonempty and equal length");
  }
  const std::size_t d = head.weights.size() / 3;
  if (grad) {
    grad->weights.assign(head.weights.size(), 0.0);
    grad->bias = {0.0, 0.0, 0.0};
  }
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto probs = nominal_forward(head, batch[i]);
    loss += cross_entropy_loss(probs, bands[i]);
    if (grad) {
      for (int c = 0; c < 3; ++c) {
        const double dz = (probs[c] - (ordinal(bands[i]) - 1 == c ? 1.0 : 0.0)) * inv_n;
        grad->bias[c] += dz;
        for (std::size_t j = 0; j < d; ++j) grad->weights[c * d + j] += dz * batch[i][j];
      }
    }
  }
  return loss * inv_n;
}

double regression_batch(const RegressionHead& head, const std::vector<FeatureVector>& batch,
                        const std::vector<Band>& bands, RegressionGradient* grad) {
  if (batch.size() != bands.size() || batch.empty()) {
    throw ShapeMismatchError("regression batch and bands must be nonempty and equal length");
  }
  if (grad) {
    grad->w.assign(head.w.size(), 0.0);
    grad->b0 = 0.0;
  }
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double y = static_cast<double>(ordinal(bands[i]));
    const double pred = regression_forward(head, batch[i]);
    loss += (pred - y) * (pred - y);
    if (grad) {
      const double dz = 2.0 * (pred - y) * inv_n;
      grad->b0 += dz;
      for (std::size_t j = 0; j < head.w.size(); ++j) grad->w[j] += dz * batch[i][j];
    }
  }
  return loss * inv_n;
}

}  // namespace

OrdinalHead make_ordinal_head(std::size_t dim, double dropout_rate) {
  OrdinalHead head;
  head.w.assign(dim, 0.0);
  head.dropout_rate = dropout_rate;
  return head;
}

NominalHead make_nominal_head(std::size_t dim, double dropout_rate) {
  NominalHead head;
  head.weights.assign(3 * dim, 0.0);
  head.dropout_rate = dropout_rate;
  return head;
}

RegressionHead make_regression_head(std::size_t dim, double dropout_rate) {
  RegressionHead head;
  head.w.assign(dim, 0.0);
  head.dropout_rate = dropout_rate;
  return head;
}

std::array<int, 2> encode_targets(Band band) {
  const int y = ordinal(band);
  return {y > 1 ? 1 : 0, y > 2 ? 1 : 0};
}

CoralOutput coral_forward(const OrdinalHead& head, const FeatureVector& x) {
  check_dim(head.w.size(), x.size(), "coral_forward");
  const double wx = dot(head.w, x);
  CoralOutput out{};
  for (int k = 0; k < 2; ++k) {
    out.logits[k] = wx + head.b[k];
    out.probs[k] = stable_sigmoid(out.logits[k]);
  }
  return out;
}

double coral_loss(const std::vector<std::array<double, 2>>& logits,
                  const std::vector<std::array<int, 2>>& targets,
                  const std::array<double, 2>& pos_weights) {
  if (logits.size() != targets.size() || logits.empty()) {
    throw ShapeMismatchError("coral_loss logits and targets must be nonempty and equal length");
  }
  check_pos_weights(pos_weights);
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    for (int k = 0; k < 2; ++k) {
      const int t = targets[i][k];
      if (t != 0 && t != 1) {
        throw NonBinaryTargetError("target entries must be 0 or 1");
      }
      const double z = logits[i][k];
      loss += pos_weights[k] * t * stable_softplus(-z) + (1 - t) * stable_softplus(z);
    }
  }
  return loss / static_cast<double>(logits.size());
}

std::array<double, 2> compute_pos_weights(const std::vector<Band>& train_bands) {
  if (train_bands.empty()) {
    throw EmptySplitError("compute_pos_weights needs a nonempty training set");
  }
  std::array<double, 2> pos{0.0, 0.0};
  for (Band b : train_bands) {
    const auto t = encode_targets(b);
    pos[0] += t[0];
    pos[1] += t[1];
  }
  const double n = static_cast<double>(train_bands.size());
  std::array<double, 2> weights{};
  for (int k = 0; k < 2; ++k) {
    const double neg = n - pos[k];
    if (pos[k] == 0.0 || neg == 0.0) {
      throw DegenerateThresholdError("threshold " + std::to_string(k + 1) +
                                     " has no positive or no negative examples");
    }
    weights[k] = neg / pos[k];
  }
  return weights;
}

CoralGradient coral_gradient(const OrdinalHead& head, const std::vector<FeatureVector>& batch,
                             const std::vector<std::array<int, 2>>& targets,
                             const std::array<double, 2>& pos_weights) {
  CoralGradient grad;
  coral_batch(head, batch, targets, pos_weights, &grad);
  return grad;
}

std::array<double, 3> nominal_forward(const NominalHead& head, const FeatureVector& x) {
  const std::size_t d = head.weights.size() / 3;
  check_dim(d, x.size(), "nominal_forward");
  std::array<double, 3> z{};
  for (int c = 0; c < 3; ++c) {
    double s = head.bias[c];
    for (std::size_t j = 0; j < d; ++j) s += head.weights[c * d + j] * x[j];
    z[c] = s;
  }
  const double zmax = std::max({z[0], z[1], z[2]});
  double sum = 0.0;
  std::array<double, 3> probs{};
  for (int c = 0; c < 3; ++c) {
    probs[c] = std::exp(z[c] - zmax);
    sum += probs[c];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

double cross_entropy_loss(const std::array<double, 3>& probs, Band band) {
  return -std::log(probs[ordinal(band) - 1]);
}

Band nominal_predict(const std::array<double, 3>& probs) {
  int best = 0;
  for (int c = 1; c < 3; ++c) {
    if (probs[c] > probs[best]) best = c;
  }
  return static_cast<Band>(best + 1);
}

NominalGradient nominal_gradient(const NominalHead& head, const std::vector<FeatureVector>& batch,
                                 const std::vector<Band>& bands) {
  NominalGradient grad;
  nominal_batch(head, batch, bands, &grad);
  return grad;
}

double regression_forward(const RegressionHead& head, const FeatureVector& x) {
  check_dim(head.w.size(), x.size(), "regression_forward");
  return dot(head.w, x) + head.b0;
}

double mse_loss(double prediction, double target) {
  const double d = prediction - target;
  return d * d;
}

Band discretize(double prediction) {
  if (prediction < 1.5) return Band::Weak;
  if (prediction < 2.5) return Band::Fair;
  return Band::Strong;
}

RegressionGradient regression_gradient(const RegressionHead& head,
                                       const std::vector<FeatureVector>& batch,
                                       const std::vector<Band>& bands) {
  RegressionGradient grad;
  regression_batch(head, batch, bands, &grad);
  return grad;
}

EarlyStopper::EarlyStopper(int patience)
    : patience_(patience), best_(-std::numeric_limits<double>::infinity()) {
  if (patience < 1) {
    throw std::invalid_argument("patience must be >= 1");
  }
}

bool EarlyStopper::record(double metric) {
  if (metric > best_) {
    best_ = metric;
    non_improving_ = 0;
    improved_last_ = true;
    return false;
  }
  improved_last_ = false;
  ++non_improving_;
  return non_improving_ >= patience_;
}

std::string_view head_kind_name(HeadKind k) {
  switch (k) {
    case HeadKind::Coral:
      return "coral";
    case HeadKind::Nominal:
      return "nominal";
    case HeadKind::Regression:
      return "regression";
  }
  throw std::invalid_argument("invalid head kind");
}

HeadKind head_kind_from_name(std::string_view name) {
  if (name == "coral") return HeadKind::Coral;
  if (name == "nominal") return HeadKind::Nominal;
  if (name == "regression") return HeadKind::Regression;
  throw std::invalid_argument("unknown head kind: '" + std::string(name) + "'");
}

namespace {

// Mutable view over whichever head is being trained, so the descent loop,
// checkpointing, and prediction share one code path.
struct HeadState {
  HeadKind kind;
  OrdinalHead coral;
  NominalHead nominal;
  RegressionHead regression;

  static HeadState init(HeadKind kind, std::size_t dim, double dropout) {
    HeadState s{kind, {}, {}, {}};
    switch (kind) {
      case HeadKind::Coral:
        s.coral = make_ordinal_head(dim, dropout);
        break;
      case HeadKind::Nominal:
        s.nominal = make_nominal_head(dim, dropout);
        break;
      case HeadKind::Regression:
        s.regression = make_regression_head(dim, dropout);
        break;
    }
    return s;
  }

  std::vector<double> flatten() const {
    std::vector<double> params;
    switch (kind) {
      case HeadKind::Coral:
        params = coral.w;
        params.push_back(coral.b[0]);
        params.push_back(coral.b[1]);
        break;
      case HeadKind::Nominal:
        params = nominal.weights;
        params.insert(params.end(), nominal.bias.begin(), nominal.bias.end());
        break;
      case HeadKind::Regression:
        params = regression.w;
        params.push_back(regression.b0);
        break;
    }
    return params;
  }
};

std::vector<FeatureVector> apply_dropout(const std::vector<FeatureVector>& batch, double rate,
                                         std::mt19937_64& rng) {
  if (rate <= 0.0) return batch;
  const double keep = 1.0 - rate;
  const double scale = 1.0 / keep;
  std::vector<FeatureVector> masked = batch;
  for (FeatureVector& x : masked) {
    for (double& v : x) {
      v = detail::uniform01(rng) < keep ? v * scale : 0.0;
    }
  }
  return masked;
}

std::vector<Band> predict_with_state(const HeadState& state, const std::vector<FeatureVector>& xs,
                                     const CutoffPair& cutoffs) {
  std::vector<Band> preds;
  preds.reserve(xs.size());
  for (const FeatureVector& x : xs) {
    switch (state.kind) {
      case HeadKind::Coral:
        preds.push_back(decode(coral_forward(state.coral, x).probs, cutoffs));
        break;
      case HeadKind::Nominal:
        preds.push_back(nominal_predict(nominal_forward(state.nominal, x)));
        break;
      case HeadKind::Regression:
        preds.push_back(discretize(regression_forward(state.regression, x)));
        break;
    }
  }
  return preds;
}

}  // namespace

std::pair<Checkpoint, TrainHistory> train(HeadKind kind, const Dataset& train_data,
                                          const Dataset& val_data, const TrainConfig& cfg) {
  if (train_data.size() == 0 || val_data.size() == 0) {
    throw EmptySplitError("train and validation splits must be nonempty");
  }
  if (train_data.bands.size() != train_data.size() || val_data.bands.size() != val_data.size()) {
    throw ShapeMismatchError("feature and band counts differ");
  }
  const std::size_t dim = train_data.dim();
  for (const FeatureVector& x : train_data.features) check_dim(dim, x.size(), "train features");
  for (const FeatureVector& x : val_data.features) check_dim(dim, x.size(), "val features");
  if (cfg.max_epochs < 1 || cfg.patience < 1 || cfg.eval_interval < 1 || cfg.batch_size < 1 ||
      !(cfg.learning_rate > 0.0) || cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) {
    throw std::invalid_argument("invalid training configuration");
  }
  check_pos_weights(cfg.pos_weights);

  std::vector<std::array<int, 2>> train_targets(train_data.size());
  for (std::size_t i = 0; i < train_data.size(); ++i) {
    train_targets[i] = encode_targets(train_data.bands[i]);
  }

  HeadState state = HeadState::init(kind, dim, cfg.dropout_rate);
  std::mt19937_64 rng(cfg.seed);

  TrainHistory history;
  Checkpoint best;
  best.kind = kind;
  best.dim = dim;
  bool have_checkpoint = false;
  EarlyStopper stopper(cfg.patience);
  long step = 0;

  auto evaluate = [&]() {
    EvalPoint point;
    point.step = step;
    if (kind == HeadKind::Coral) {
      std::vector<ThresholdProbs> probs(val_data.size());
      for (std::size_t i = 0; i < val_data.size(); ++i) {
        probs[i] = coral_forward(state.coral, val_data.features[i]).probs;
      }
      const TuneResult tuned = tune_cutoffs(probs, val_data.bands, cfg.cutoff_grid_step);
      point.val_qwk = tuned.qwk;
      point.cutoffs = tuned.cutoffs;
    } else {
      const std::vector<Band> preds = predict_with_state(state, val_data.features, CutoffPair());
      point.val_qwk = qwk(preds, val_data.bands);
      point.cutoffs = CutoffPair();
    }
    history.evals.push_back(point);
    const bool stop = stopper.record(point.val_qwk);
    if (stopper.improved_last()) {
      best.params = state.flatten();
      best.step = step;
      best.val_tuned_qwk = point.val_qwk;
      best.cutoffs = point.cutoffs;
      have_checkpoint = true;
    }
    return stop;
  };

  std::vector<std::size_t> order(train_data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  bool stop = false;
  for (int epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
    history.epochs_run = epoch + 1;
    detail::fisher_yates(order, rng);
    for (std::size_t begin = 0; begin < order.size() && !stop; begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      std::vector<FeatureVector> batch;
      std::vector<std::array<int, 2>> batch_targets;
      std::vector<Band> batch_bands;
      batch.reserve(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(train_data.features[order[i]]);
        batch_targets.push_back(train_targets[order[i]]);
        batch_bands.push_back(train_data.bands[order[i]]);
      }
      const std::vector<FeatureVector> inputs = apply_dropout(batch, cfg.dropout_rate, rng);

      double loss = 0.0;
      switch (kind) {
        case HeadKind::Coral: {
          CoralGradient grad;
          loss = coral_batch(state.coral, inputs, batch_targets, cfg.pos_weights, &grad);
          for (std::size_t j = 0; j < dim; ++j) state.coral.w[j] -= cfg.learning_rate * grad.w[j];
          state.coral.b[0] -= cfg.learning_rate * grad.b[0];
          state.coral.b[1] -= cfg.learning_rate * grad.b[1];
          break;
        }
        case HeadKind::Nominal: {
          NominalGradient grad;
          loss = nominal_batch(state.nominal, inputs, batch_bands, &grad);
          for (std::size_t j = 0; j < state.nominal.weights.size(); ++j) {
            state.nominal.weights[j] -= cfg.learning_rate * grad.weights[j];
          }
          for (int c = 0; c < 3; ++c) state.nominal.bias[c] -= cfg.learning_rate * grad.bias[c];
          break;
        }
        case HeadKind::Regression: {
          RegressionGradient grad;
          loss = regression_batch(state.regression, inputs, batch_bands, &grad);
          for (std::size_t j = 0; j < dim; ++j) {
            state.regression.w[j] -= cfg.learning_rate * grad.w[j];
          }
          state.regression.b0 -= cfg.learning_rate * grad.b0;
          break;
        }
      }
      if (!std::isfinite(loss)) {
        throw DivergedLossError("non-finite loss at step " + std::to_string(step + 1));
      }
      ++step;
      history.batch_losses.push_back(loss);
      if (step % cfg.eval_interval == 0) {
        stop = evaluate();
        if (stop) history.early_stopped = true;
      }
    }
  }
  history.steps = step;
  // Guarantee at least one evaluation so a checkpoint always exists.
  if (!history.early_stopped && (history.evals.empty() || history.evals.back().step != step)) {
    evaluate();
  }
  if (!have_checkpoint) {
    // Defensive: evaluate() above always snapshots at least once.
    throw EmptySplitError("training produced no checkpoint");
  }
  return {best, history};
}

Band predict(const Checkpoint& ckpt, const FeatureVector& x) {
  switch (ckpt.kind) {
    case HeadKind::Coral:
      return decode(coral_forward(coral_from_checkpoint(ckpt), x).probs, ckpt.cutoffs);
    case HeadKind::Nominal:
      return nominal_predict(nominal_forward(nominal_from_checkpoint(ckpt), x));
    case HeadKind::Regression:
      return discretize(regression_forward(regression_from_checkpoint(ckpt), x));
  }
  throw std::invalid_argument("invalid checkpoint kind");
}

std::vector<Band> predict_all(const Checkpoint& ckpt, const std::vector<FeatureVector>& xs) {
  // Materialize the head once instead of per essay.
  std::vector<Band> preds;
  preds.reserve(xs.size());
  switch (ckpt.kind) {
    case HeadKind::Coral: {
      const OrdinalHead head = coral_from_checkpoint(ckpt);
      for (const auto& x : xs) preds.push_back(decode(coral_forward(head, x).probs, ckpt.cutoffs));
      break;
    }
    case HeadKind::Nominal: {
      const NominalHead head = nominal_from_checkpoint(ckpt);
      for (const auto& x : xs) preds.push_back(nominal_predict(nominal_forward(head, x)));
      break;
    }
    case HeadKind::Regression: {
      const RegressionHead head = regression_from_checkpoint(ckpt);
      for (const auto& x : xs) preds.push_back(discretize(regression_forward(head, x)));
      break;
    }
  }
  return preds;
}

std::string write_checkpoint(const Checkpoint& ckpt) {
  std::string out = "traitscore checkpoint v1\n";
  char buf[64];
  out += "kind ";
  out += head_kind_name(ckpt.kind);
  out += '\n';
  out += "dim " + std::to_string(ckpt.dim) + '\n';
  out += "step " + std::to_string(ckpt.step) + '\n';
  std::snprintf(buf, sizeof buf, "%.17g", ckpt.val_tuned_qwk);
  out += std::string("val_tuned_qwk ") + buf + '\n';
  std::snprintf(buf, sizeof buf, "%.17g %.17g", ckpt.cutoffs.c1(), ckpt.cutoffs.c2());
  out += std::string("cutoffs ") + buf + '\n';
  out += "params " + std::to_string(ckpt.params.size()) + '\n';
  for (double p : ckpt.params) {
    std::snprintf(buf, sizeof buf, "%.17g", p);
    out += buf;
    out += '\n';
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "traitscore checkpoint v1") {
    throw CheckpointFormatError("unrecognized checkpoint header");
  }
  Checkpoint ckpt;
  std::string key;
  std::string kind_name;
  in >> key >> kind_name;
  if (key != "kind") throw CheckpointFormatError("expected 'kind'");
  ckpt.kind = head_kind_from_name(kind_name);
  in >> key >> ckpt.dim;
  if (key != "dim") throw CheckpointFormatError("expected 'dim'");
  in >> key >> ckpt.step;
  if (key != "step") throw CheckpointFormatError("expected 'step'");
  in >> key >> ckpt.val_tuned_qwk;
  if (key != "val_tuned_qwk") throw CheckpointFormatError("expected 'val_tuned_qwk'");
  double c1 = 0.0;
  double c2 = 0.0;
  in >> key >> c1 >> c2;
  if (key != "cutoffs") throw CheckpointFormatError("expected 'cutoffs'");
  ckpt.cutoffs = CutoffPair(c1, c2);
  std::size_t n_params = 0;
  in >> key >> n_params;
  if (key != "params") throw CheckpointFormatError("expected 'params'");
  ckpt.params.resize(n_params);
  for (std::size_t i = 0; i < n_params; ++i) {
    if (!(in >> ckpt.params[i])) {
      throw CheckpointFormatError("checkpoint truncated at parameter " + std::to_string(i));
    }
  }
  const std::size_t expected = ckpt.kind == HeadKind::Coral        ? ckpt.dim + 2
                               : ckpt.kind == HeadKind::Nominal    ? 3 * ckpt.dim + 3
                                                                   : ckpt.dim + 1;
  if (n_params != expected) {
    throw CheckpointFormatError("parameter count " + std::to_string(n_params) +
                                " does not match kind/dim");
  }
  return ckpt;
}

OrdinalHead coral_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != HeadKind::Coral || ckpt.params.size() != ckpt.dim + 2) {
    throw CheckpointFormatError("checkpoint does not hold a coral head");
  }
  OrdinalHead head;
  head.w.assign(ckpt.params.begin(), ckpt.params.begin() + static_cast<long>(ckpt.dim));
  head.b = {ckpt.params[ckpt.dim], ckpt.params[ckpt.dim + 1]};
  return head;
}

NominalHead nominal_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != HeadKind::Nominal || ckpt.params.size() != 3 * ckpt.dim + 3) {
    throw CheckpointFormatError("checkpoint does not hold a nominal head");
  }
  NominalHead head;
  head.weights.assign(ckpt.params.begin(), ckpt.params.begin() + static_cast<long>(3 * ckpt.dim));
  head.bias = {ckpt.params[3 * ckpt.dim], ckpt.params[3 * ckpt.dim + 1], ckpt.params[3 * ckpt.dim + 2]};
  return head;
}

RegressionHead regression_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != HeadKind::Regression || ckpt.params.size() != ckpt.dim + 1) {
    throw CheckpointFormatError("checkpoint does not hold a regression head");
  }
  RegressionHead head;
  head.w.assign(ckpt.params.begin(), ckpt.params.begin() + static_cast<long>(ckpt.dim));
  head.b0 = ckpt.params[ckpt.dim];
  return head;
}

}  // namespace traitscore
