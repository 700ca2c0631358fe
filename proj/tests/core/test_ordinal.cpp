#include "traitscore/ordinal.hpp"

#include <cmath>
#include <random>

#include "common/oracles.hpp"
#include "common/synthetic.hpp"
#include "doctest.h"
#include "traitscore/metrics.hpp"

using namespace traitscore;
using namespace traitscore::testing;

namespace {

std::mt19937& rng() {
  static std::mt19937 engine(4242);
  return engine;
}

double unit() {
  static std::uniform_real_distribution<double> dist(0.0, 1.0);
  return dist(rng());
}

double normalish() { return (unit() - 0.5) * 4.0; }

FeatureVector random_vec(std::size_t d) {
  FeatureVector x(d);
  for (double& v : x) v = normalish();
  return x;
}

std::array<int, 2> random_target() {
  const int o = 1 + static_cast<int>(unit() * 3.0);
  return encode_targets(band_from_ordinal(std::min(o, 3)));
}

// coral_loss as a function of the flattened (w, b) for oracle gradients.
double coral_loss_at(const std::vector<double>& params, std::size_t d,
                     const std::vector<FeatureVector>& batch,
                     const std::vector<std::array<int, 2>>& targets,
                     const std::array<double, 2>& pos_weights) {
  OrdinalHead head;
  head.w.assign(params.begin(), params.begin() + static_cast<long>(d));
  head.b = {params[d], params[d + 1]};
  std::vector<std::array<double, 2>> logits;
  logits.reserve(batch.size());
  for (const auto& x : batch) logits.push_back(coral_forward(head, x).logits);
  return coral_loss(logits, targets, pos_weights);
}

}  // namespace

TEST_CASE("encode_targets reproduces the threshold mapping and is injective") {
  CHECK(encode_targets(Band::Weak) == std::array<int, 2>{0, 0});
  CHECK(encode_targets(Band::Fair) == std::array<int, 2>{1, 0});
  CHECK(encode_targets(Band::Strong) == std::array<int, 2>{1, 1});
  CHECK(encode_targets(Band::Weak) != encode_targets(Band::Fair));
  CHECK(encode_targets(Band::Fair) != encode_targets(Band::Strong));
  CHECK(encode_targets(Band::Weak) != encode_targets(Band::Strong));
}

TEST_CASE("coral_forward closed forms") {
  OrdinalHead head = make_ordinal_head(3);
  const CoralOutput zero = coral_forward(head, {1.0, -2.0, 0.5});
  CHECK(zero.probs[0] == doctest::Approx(0.5));
  CHECK(zero.probs[1] == doctest::Approx(0.5));

  head.b = {1.0, -1.0};
  const CoralOutput biased = coral_forward(head, {0.0, 0.0, 0.0});
  CHECK(biased.probs[0] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  CHECK(biased.probs[1] == doctest::Approx(0.2689414213699951).epsilon(1e-12));

  CHECK_THROWS_AS(coral_forward(head, {1.0}), ShapeMismatchError);
}

TEST_CASE("rank consistency holds whenever biases are ordered") {
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = 8;
    OrdinalHead head = make_ordinal_head(d);
    for (double& w : head.w) w = normalish();
    const double b2 = normalish();
    head.b = {b2 + unit() * 3.0, b2};  // b1 >= b2
    const CoralOutput out = coral_forward(head, random_vec(d));
    CHECK(out.probs[0] >= out.probs[1]);
  }
}

TEST_CASE("coral_loss closed forms") {
  const std::vector<std::array<double, 2>> logits{{0.0, 0.0}};
  const std::vector<std::array<int, 2>> targets{{1, 0}};
  CHECK(coral_loss(logits, targets, {1.0, 1.0}) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(coral_loss(logits, targets, {3.0, 1.0}) ==
        doctest::Approx(4.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("coral_loss validates shapes and targets") {
  CHECK_THROWS_AS(coral_loss({}, {}, {1.0, 1.0}), ShapeMismatchError);
  CHECK_THROWS_AS(coral_loss({{0.0, 0.0}}, {{0, 0}, {1, 1}}, {1.0, 1.0}), ShapeMismatchError);
  CHECK_THROWS_AS(coral_loss({{0.0, 0.0}}, {{2, 0}}, {1.0, 1.0}), NonBinaryTargetError);
  CHECK_THROWS_AS(coral_loss({{0.0, 0.0}}, {{1, 0}}, {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("coral_loss equals the probability-space oracle on random batches") {
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(unit() * 16);
    std::vector<std::array<double, 2>> logits(n);
    std::vector<std::array<int, 2>> targets(n);
    for (std::size_t i = 0; i < n; ++i) {
      logits[i] = {(unit() - 0.5) * 60.0, (unit() - 0.5) * 60.0};  // |z| <= 30
      targets[i] = random_target();
    }
    const std::array<double, 2> pw{0.5 + unit() * 3.0, 0.5 + unit() * 3.0};
    CHECK(coral_loss(logits, targets, pw) ==
          doctest::Approx(oracle_bce_probability_space(logits, targets, pw)).epsilon(1e-9));
  }
}

TEST_CASE("coral_loss stays finite in logit space at |z| = 1e3") {
  const std::vector<std::array<double, 2>> logits{{1e3, -1e3}};
  const std::vector<std::array<int, 2>> targets{{0, 1}};
  const double loss = coral_loss(logits, targets, {1.0, 1.0});
  // softplus(1e3) = 1e3 to machine precision, twice.
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(2e3).epsilon(1e-12));
}

TEST_CASE("coral_loss is convex in the parameters") {
  const std::size_t d = 6;
  std::vector<FeatureVector> batch;
  std::vector<std::array<int, 2>> targets;
  for (int i = 0; i < 12; ++i) {
    batch.push_back(random_vec(d));
    targets.push_back(random_target());
  }
  const std::array<double, 2> pw{1.0, 1.0};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> theta1(d + 2), theta2(d + 2);
    for (std::size_t j = 0; j < d + 2; ++j) {
      theta1[j] = normalish();
      theta2[j] = normalish();
    }
    const double lambda = 0.05 + 0.9 * unit();
    std::vector<double> mix(d + 2);
    for (std::size_t j = 0; j < d + 2; ++j) {
      mix[j] = lambda * theta1[j] + (1.0 - lambda) * theta2[j];
    }
    const double lhs = coral_loss_at(mix, d, batch, targets, pw);
    const double rhs = lambda * coral_loss_at(theta1, d, batch, targets, pw) +
                       (1.0 - lambda) * coral_loss_at(theta2, d, batch, targets, pw);
    CHECK(lhs <= rhs + 1e-9);
  }
}

TEST_CASE("compute_pos_weights counts negatives over positives") {
  const std::vector<Band> bands{Band::Weak, Band::Weak, Band::Fair, Band::Strong};
  const auto weights = compute_pos_weights(bands);
  CHECK(weights[0] == doctest::Approx(1.0));
  CHECK(weights[1] == doctest::Approx(3.0));

  const std::vector<Band> balanced{Band::Weak, Band::Weak, Band::Strong, Band::Strong};
  const auto even = compute_pos_weights(balanced);
  CHECK(even[0] == doctest::Approx(1.0));
  CHECK(even[1] == doctest::Approx(1.0));

  CHECK_THROWS_AS(compute_pos_weights({Band::Weak, Band::Weak}), DegenerateThresholdError);
  CHECK_THROWS_AS(compute_pos_weights({Band::Strong, Band::Strong}), DegenerateThresholdError);
  CHECK_THROWS_AS(compute_pos_weights({}), EmptySplitError);
}

TEST_CASE("coral_gradient matches central finite differences") {
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(unit() * 7);
    const std::size_t n = 1 + static_cast<std::size_t>(unit() * 9);
    std::vector<FeatureVector> batch;
    std::vector<std::array<int, 2>> targets;
    for (std::size_t i = 0; i < n; ++i) {
      batch.push_back(random_vec(d));
      targets.push_back(random_target());
    }
    const std::array<double, 2> pw{0.5 + unit() * 2.0, 0.5 + unit() * 2.0};
    OrdinalHead head = make_ordinal_head(d);
    for (double& w : head.w) w = normalish() * 0.5;
    head.b = {normalish() * 0.5, normalish() * 0.5};

    const CoralGradient analytic = coral_gradient(head, batch, targets, pw);
    std::vector<double> params = head.w;
    params.push_back(head.b[0]);
    params.push_back(head.b[1]);
    const std::vector<double> numeric = finite_difference_gradient(
        [&](const std::vector<double>& p) { return coral_loss_at(p, d, batch, targets, pw); },
        params, 1e-5);

    for (std::size_t j = 0; j < d; ++j) {
      const double scale = std::max({std::fabs(numeric[j]), std::fabs(analytic.w[j]), 1e-8});
      CHECK(std::fabs(analytic.w[j] - numeric[j]) / scale < 1e-5);
    }
    for (int k = 0; k < 2; ++k) {
      const double scale = std::max({std::fabs(numeric[d + k]), std::fabs(analytic.b[k]), 1e-8});
      CHECK(std::fabs(analytic.b[k] - numeric[d + k]) / scale < 1e-5);
    }
  }
}

TEST_CASE("coral gradient closed form for a single 1-d sample") {
  // With unit pos_weights the per-threshold dz is sigmoid(z) - t.
  OrdinalHead head = make_ordinal_head(1);
  head.w[0] = 0.7;
  head.b = {0.2, -0.4};
  const FeatureVector x{1.3};
  const std::array<int, 2> t{1, 0};
  const CoralGradient grad = coral_gradient(head, {x}, {t}, {1.0, 1.0});
  auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double dz1 = sigmoid(0.7 * 1.3 + 0.2) - 1.0;
  const double dz2 = sigmoid(0.7 * 1.3 - 0.4) - 0.0;
  CHECK(grad.b[0] == doctest::Approx(dz1).epsilon(1e-12));
  CHECK(grad.b[1] == doctest::Approx(dz2).epsilon(1e-12));
  CHECK(grad.w[0] == doctest::Approx((dz1 + dz2) * 1.3).epsilon(1e-12));
}

TEST_CASE("duplicating batch rows leaves the mean gradient unchanged") {
  const std::size_t d = 5;
  OrdinalHead head = make_ordinal_head(d);
  for (double& w : head.w) w = normalish();
  std::vector<FeatureVector> batch{random_vec(d), random_vec(d)};
  std::vector<std::array<int, 2>> targets{{1, 0}, {1, 1}};
  const CoralGradient once = coral_gradient(head, batch, targets, {1.5, 2.0});

  std::vector<FeatureVector> doubled = batch;
  doubled.insert(doubled.end(), batch.begin(), batch.end());
  std::vector<std::array<int, 2>> doubled_t = targets;
  doubled_t.insert(doubled_t.end(), targets.begin(), targets.end());
  const CoralGradient twice = coral_gradient(head, doubled, doubled_t, {1.5, 2.0});

  for (std::size_t j = 0; j < d; ++j) {
    CHECK(twice.w[j] == doctest::Approx(once.w[j]).epsilon(1e-12));
  }
  CHECK(twice.b[0] == doctest::Approx(once.b[0]).epsilon(1e-12));
  CHECK(twice.b[1] == doctest::Approx(once.b[1]).epsilon(1e-12));
}

TEST_CASE("nominal head closed forms") {
  const NominalHead zero = make_nominal_head(4);
  const auto probs = nominal_forward(zero, {1.0, 2.0, 3.0, 4.0});
  CHECK(probs[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(probs[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(probs[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(cross_entropy_loss(probs, Band::Fair) == doctest::Approx(std::log(3.0)).epsilon(1e-12));

  NominalHead favour = make_nominal_head(1);
  favour.bias = {10.0, 0.0, 0.0};
  CHECK(nominal_predict(nominal_forward(favour, {0.0})) == Band::Weak);
  // Exact tie goes to the lowest band.
  CHECK(nominal_predict({0.4, 0.4, 0.2}) == Band::Weak);
  CHECK(nominal_predict({0.2, 0.4, 0.4}) == Band::Fair);
}

TEST_CASE("nominal probabilities sum to one") {
  for (int trial = 0; trial < 50; ++trial) {
    NominalHead head = make_nominal_head(6);
    for (double& w : head.weights) w = normalish() * 3.0;
    for (double& b : head.bias) b = normalish();
    const auto probs = nominal_forward(head, random_vec(6));
    CHECK(probs[0] + probs[1] + probs[2] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(probs[0] > 0.0);
    CHECK(probs[1] > 0.0);
    CHECK(probs[2] > 0.0);
  }
}

TEST_CASE("nominal gradient matches central finite differences") {
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(unit() * 5);
    const std::size_t n = 1 + static_cast<std::size_t>(unit() * 7);
    std::vector<FeatureVector> batch;
    std::vector<Band> bands;
    for (std::size_t i = 0; i < n; ++i) {
      batch.push_back(random_vec(d));
      bands.push_back(band_from_ordinal(1 + static_cast<int>(unit() * 2.999)));
    }
    NominalHead head = make_nominal_head(d);
    for (double& w : head.weights) w = normalish() * 0.5;
    for (double& b : head.bias) b = normalish() * 0.5;

    const NominalGradient analytic = nominal_gradient(head, batch, bands);

    std::vector<double> params = head.weights;
    params.insert(params.end(), head.bias.begin(), head.bias.end());
    auto loss_at = [&](const std::vector<double>& p) {
      NominalHead h = make_nominal_head(d);
      h.weights.assign(p.begin(), p.begin() + static_cast<long>(3 * d));
      h.bias = {p[3 * d], p[3 * d + 1], p[3 * d + 2]};
      double loss = 0.0;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        loss += cross_entropy_loss(nominal_forward(h, batch[i]), bands[i]);
      }
      return loss / static_cast<double>(batch.size());
    };
    const std::vector<double> numeric = finite_difference_gradient(loss_at, params, 1e-5);
    for (std::size_t j = 0; j < 3 * d; ++j) {
      const double scale = std::max({std::fabs(numeric[j]), std::fabs(analytic.weights[j]), 1e-8});
      CHECK(std::fabs(analytic.weights[j] - numeric[j]) / scale < 1e-5);
    }
    for (int c = 0; c < 3; ++c) {
      const double scale =
          std::max({std::fabs(numeric[3 * d + c]), std::fabs(analytic.bias[c]), 1e-8});
      CHECK(std::fabs(analytic.bias[c] - numeric[3 * d + c]) / scale < 1e-5);
    }
  }
}

TEST_CASE("regression head closed forms and discretization") {
  RegressionHead head = make_regression_head(2);
  head.w = {0.5, -0.25};
  head.b0 = 1.0;
  CHECK(regression_forward(head, {2.0, 4.0}) == doctest::Approx(1.0));
  CHECK(mse_loss(1.2, 1.0) == doctest::Approx(0.04));

  CHECK(discretize(1.2) == Band::Weak);
  CHECK(discretize(1.8) == Band::Fair);
  CHECK(discretize(2.6) == Band::Strong);
  CHECK(discretize(1.5) == Band::Fair);   // intervals closed below
  CHECK(discretize(2.5) == Band::Strong);
  CHECK(discretize(-3.0) == Band::Weak);
  CHECK(discretize(9.0) == Band::Strong);
}

TEST_CASE("a perfect regression predictor has zero loss") {
  RegressionHead head = make_regression_head(1);
  head.w = {1.0};
  head.b0 = 0.0;
  const std::vector<FeatureVector> xs{{1.0}, {2.0}, {3.0}};
  const std::vector<Band> ys{Band::Weak, Band::Fair, Band::Strong};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(mse_loss(regression_forward(head, xs[i]), ordinal(ys[i])) == doctest::Approx(0.0));
  }
}

TEST_CASE("early stopper implements the patience contract") {
  EarlyStopper stopper(2);
  CHECK_FALSE(stopper.record(0.5));  // improvement
  CHECK(stopper.improved_last());
  CHECK_FALSE(stopper.record(0.4));  // first miss
  CHECK_FALSE(stopper.improved_last());
  CHECK(stopper.record(0.4));  // second miss: stop after the third evaluation
  CHECK(stopper.best() == doctest::Approx(0.5));

  EarlyStopper recovers(2);
  CHECK_FALSE(recovers.record(0.5));
  CHECK_FALSE(recovers.record(0.4));
  CHECK_FALSE(recovers.record(0.6));  // recovery resets the counter
  CHECK_FALSE(recovers.record(0.5));
  CHECK(recovers.record(0.5));

  CHECK_THROWS_AS(EarlyStopper(0), std::invalid_argument);
}

TEST_CASE("training on separable ordinal data reaches high validation QWK") {
  const SyntheticSplits data = make_ordered_synthetic(16, 240, 80, 80, 7, 3.0);
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.eval_interval = 10;
  cfg.learning_rate = 0.5;
  cfg.cutoff_grid_step = 0.02;
  const auto [ckpt, history] = train(HeadKind::Coral, data.train, data.val, cfg);
  CHECK(ckpt.val_tuned_qwk >= 0.8);
  CHECK(history.steps > 0);
  CHECK(!history.evals.empty());

  // The recorded validation QWK reproduces when the snapshot is re-applied.
  const OrdinalHead head = coral_from_checkpoint(ckpt);
  std::vector<Band> preds;
  for (const auto& x : data.val.features) {
    preds.push_back(decode(coral_forward(head, x).probs, ckpt.cutoffs));
  }
  CHECK(qwk(preds, data.val.bands) == doctest::Approx(ckpt.val_tuned_qwk).epsilon(1e-12));
}

TEST_CASE("training is bit-reproducible under a fixed seed") {
  const SyntheticSplits data = make_ordered_synthetic(8, 90, 30, 30, 21, 3.0);
  TrainConfig cfg;
  cfg.seed = 5;
  cfg.eval_interval = 5;
  cfg.cutoff_grid_step = 0.05;
  const auto [ckpt_a, hist_a] = train(HeadKind::Coral, data.train, data.val, cfg);
  const auto [ckpt_b, hist_b] = train(HeadKind::Coral, data.train, data.val, cfg);
  CHECK(hist_a.batch_losses == hist_b.batch_losses);
  CHECK(ckpt_a.params == ckpt_b.params);
  CHECK(ckpt_a.val_tuned_qwk == ckpt_b.val_tuned_qwk);
  CHECK(ckpt_a.cutoffs == ckpt_b.cutoffs);

  TrainConfig other = cfg;
  other.seed = 6;
  const auto [ckpt_c, hist_c] = train(HeadKind::Coral, data.train, data.val, other);
  CHECK(hist_a.batch_losses != hist_c.batch_losses);  // different shuffle order
}

TEST_CASE("baseline heads train on the same data") {
  const SyntheticSplits data = make_ordered_synthetic(8, 120, 40, 40, 3, 3.0);
  TrainConfig cfg;
  cfg.seed = 2;
  cfg.eval_interval = 10;
  cfg.patience = 3;
  cfg.learning_rate = 0.1;  // within the MSE stability bound for this scale
  const auto [nominal, nh] = train(HeadKind::Nominal, data.train, data.val, cfg);
  CHECK(nominal.kind == HeadKind::Nominal);
  CHECK(nominal.val_tuned_qwk > 0.0);
  const auto [regression, rh] = train(HeadKind::Regression, data.train, data.val, cfg);
  CHECK(regression.kind == HeadKind::Regression);
  CHECK(regression.val_tuned_qwk > 0.0);
  const MetricReport report =
      compute_report(predict_all(regression, data.test.features), data.test.bands);
  CHECK(report.n == 40);
}

TEST_CASE("training validates inputs and flags divergence") {
  const SyntheticSplits data = make_ordered_synthetic(4, 30, 10, 10, 9, 3.0);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(HeadKind::Coral, Dataset{}, data.val, cfg), EmptySplitError);
  CHECK_THROWS_AS(train(HeadKind::Coral, data.train, Dataset{}, cfg), EmptySplitError);

  TrainConfig bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train(HeadKind::Coral, data.train, data.val, bad), std::invalid_argument);

  TrainConfig diverging = cfg;
  diverging.learning_rate = 1e200;
  diverging.eval_interval = 1000;
  CHECK_THROWS_AS(train(HeadKind::Regression, data.train, data.val, diverging), DivergedLossError);
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Checkpoint ckpt;
  ckpt.kind = HeadKind::Coral;
  ckpt.dim = 5;
  ckpt.params = {1.0 / 3.0, -2.0 / 7.0, 1e-17, 3.14159265358979312, -1e3, 0.125, -0.0625};
  ckpt.step = 420;
  ckpt.val_tuned_qwk = 0.8123456789012345;
  ckpt.cutoffs = CutoffPair(0.43, 0.57);
  const std::string text = write_checkpoint(ckpt);
  const Checkpoint back = parse_checkpoint(text);
  CHECK(back.kind == ckpt.kind);
  CHECK(back.dim == ckpt.dim);
  CHECK(back.params == ckpt.params);
  CHECK(back.step == ckpt.step);
  CHECK(back.val_tuned_qwk == ckpt.val_tuned_qwk);
  CHECK(back.cutoffs == ckpt.cutoffs);
  // Write -> parse -> write is byte stable.
  CHECK(write_checkpoint(back) == text);
}

TEST_CASE("checkpoint parsing rejects malformed input") {
  CHECK_THROWS_AS(parse_checkpoint("not a checkpoint"), CheckpointFormatError);
  Checkpoint ckpt;
  ckpt.kind = HeadKind::Regression;
  ckpt.dim = 2;
  ckpt.params = {0.5, 0.25, 0.125};
  std::string text = write_checkpoint(ckpt);
  text.resize(text.size() - 10);  // truncate parameters
  CHECK_THROWS_AS(parse_checkpoint(text), CheckpointFormatError);

  Checkpoint wrong = ckpt;
  wrong.params.push_back(9.0);
  CHECK_THROWS_AS(parse_checkpoint(write_checkpoint(wrong)), CheckpointFormatError);
}

TEST_CASE("predict dispatches on checkpoint kind") {
  Checkpoint coral;
  coral.kind = HeadKind::Coral;
  coral.dim = 1;
  coral.params = {2.0, 1.0, -1.0};  // w = 2, b = (1, -1)
  coral.cutoffs = CutoffPair(0.5, 0.5);
  CHECK(predict(coral, {2.0}) == Band::Strong);   // logits 5, 3
  CHECK(predict(coral, {-2.0}) == Band::Weak);    // logits -3, -5
  CHECK(predict(coral, {0.0}) == Band::Fair);     // logits 1, -1

  Checkpoint nominal;
  nominal.kind = HeadKind::Nominal;
  nominal.dim = 1;
  nominal.params = {1.0, 0.0, -1.0, 0.0, 0.0, 0.0};  // rows favour weak for x > 0
  CHECK(predict(nominal, {3.0}) == Band::Weak);
  CHECK(predict(nominal, {-3.0}) == Band::Strong);

  Checkpoint regression;
  regression.kind = HeadKind::Regression;
  regression.dim = 1;
  regression.params = {1.0, 0.0};
  CHECK(predict(regression, {2.2}) == Band::Fair);
}
