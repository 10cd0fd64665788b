#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fairlab/decision_model.hpp"
#include "fairlab/error.hpp"
#include "fixtures.hpp"

using namespace fairlab;

namespace {

Dataset two_points() { return Dataset({"A", "X", "D", "Y"}, {{0, 1}, {-1, 1}, {0, 0}, {-1, 1}}); }

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

}  // namespace

TEST_CASE("feature masks follow the policy") {
  CHECK(policy_features(PolicyRegime::Lottery) == std::vector<std::string>{kBiasFeature});
  CHECK(policy_features(PolicyRegime::Unawareness) == std::vector<std::string>{kBiasFeature, "X"});
  auto d = fixtures::data(PolicyRegime::AffirmativeAction, 2000);
  auto m = train(d, PolicyRegime::AffirmativeAction, {});
  CHECK(m.features == std::vector<std::string>{kBiasFeature, "X", "A"});
  CHECK(m.fixed == std::vector<std::string>{"A"});
  CHECK(m.weight("A") == 0.0);
  CHECK_THROWS_AS(m.weight("W"), Error);
}

TEST_CASE("separable two points train with falling loss") {
  TrainConfig cfg;
  cfg.epochs = 50;
  auto m = train(two_points(), PolicyRegime::Unawareness, cfg);
  REQUIRE(m.training_log.size() == 51);
  for (std::size_t i = 1; i < m.training_log.size(); ++i)
    CHECK(m.training_log[i].loss < m.training_log[i - 1].loss);
  CHECK(m.weight("X") > 0);
}

TEST_CASE("loss is non-increasing on fixture data") {
  for (double lr : {0.1, 1.0, 50.0}) {
    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.epochs = 100;
    cfg.l2 = 0.01;
    auto m = train(fixtures::data(), PolicyRegime::Unawareness, cfg);
    for (std::size_t i = 1; i < m.training_log.size(); ++i)
      CHECK(m.training_log[i].loss <= m.training_log[i - 1].loss + 1e-9);
  }
}

TEST_CASE("epoch and rate bounds") {
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(train(two_points(), PolicyRegime::Unawareness, cfg), Error);
  cfg.epochs = 1;
  cfg.learning_rate = 0.0;
  auto m = train(two_points(), PolicyRegime::Unawareness, cfg);
  CHECK(m.weights == std::vector<double>{0.0, 0.0});
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(train(two_points(), PolicyRegime::Unawareness, cfg), Error);
}

TEST_CASE("single-class labels are degenerate") {
  Dataset d({"A", "X", "D", "Y"}, {{0, 1}, {0, 1}, {0, 0}, {2, 3}});
  try {
    train(d, PolicyRegime::Unawareness, {});
    FAIL("trained on one class");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TrainingDegenerate);
  }
}

TEST_CASE("gradient matches central differences") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> jitter(0.0, 0.5);
  for (const auto& t : fixtures::shipped_trainings()) {
    TrainConfig cfg = t.cfg;
    cfg.epochs = 5;
    auto m = train(t.data, t.policy, cfg);
    for (double l2 : {0.0, 0.1}) {
      INFO(t.name, " l2=", l2);
      CHECK(fixtures::gradient_error(m, t.data, l2) <= 1e-6);
      auto moved = m;
      for (auto& w : moved.weights) w += jitter(rng);
      CHECK(fixtures::gradient_error(moved, t.data, l2) <= 1e-6);
    }
  }
}

TEST_CASE("training converges against a ten-fold longer run") {
  for (const auto& t : fixtures::shipped_trainings()) {
    if (t.policy == PolicyRegime::Lottery) continue;
    INFO(t.name);
    TrainConfig cfg = t.cfg;
    cfg.epochs = 200;
    auto m = train(t.data, t.policy, cfg);
    cfg.epochs = 2000;
    auto ref = train(t.data, t.policy, cfg);
    CHECK(std::abs(m.training_log.back().loss - ref.training_log.back().loss) <= 1e-6);
  }
}

TEST_CASE("decision boundary conventions") {
  DecisionModel m;
  m.policy = PolicyRegime::Unawareness;
  m.features = {kBiasFeature, "X"};
  m.weights = {0.0, 0.0};
  CHECK(decide(m, {{"X", 3.0}}) == 1);
  CHECK_THROWS_AS(decide(m, {{"A", 1.0}}), Error);

  DecisionModel l;
  l.policy = PolicyRegime::Lottery;
  l.features = {kBiasFeature};
  l.weights = {0.0};
  l.threshold = 0.3;
  CHECK(decide(l, {}, 0.29) == 1);
  CHECK(decide(l, {}, 0.3) == 0);
  CHECK_THROWS_AS(decide(l, {}), Error);
  CHECK_THROWS_AS(decide(l, {}, 1.0), Error);
}

TEST_CASE("trained score equals a hand computed sigmoid") {
  auto m = train(fixtures::data(), PolicyRegime::Unawareness, {});
  for (double x : {-2.0, -0.3, 0.0, 0.7}) {
    double p = sigmoid(m.weights[0] + m.weights[1] * x);
    CHECK(decision_probability(m, {{"X", x}}) == doctest::Approx(p).epsilon(1e-15));
    CHECK(decide(m, {{"X", x}}) == (p >= m.threshold ? 1 : 0));
  }
}

TEST_CASE("unawareness decisions ignore the A column") {
  auto d = fixtures::data();
  auto m = train(d, PolicyRegime::Unawareness, {});
  auto a = d.column("A");
  std::mt19937_64 rng(3);
  std::shuffle(a.begin(), a.end(), rng);
  std::vector<std::vector<double>> cols;
  for (const auto& c : d.columns()) cols.push_back(c == "A" ? a : d.column(c));
  Dataset permuted(d.columns(), cols);
  CHECK(decide_all(m, d, 1) == decide_all(m, permuted, 1));
}

TEST_CASE("lottery rate approaches the threshold in both groups") {
  auto d = fixtures::data(PolicyRegime::Lottery, 100000, 8);
  auto m = train(d, PolicyRegime::Lottery, {.epochs = 200});
  auto dec = decide_all(m, d, 99);
  const auto& a = d.column("A");
  double n[2] = {0, 0}, k[2] = {0, 0};
  for (std::size_t i = 0; i < dec.size(); ++i) {
    int g = a[i] == 1.0;
    n[g] += 1;
    k[g] += dec[i];
  }
  CHECK(std::abs(k[0] / n[0] - m.threshold) < 0.01);
  CHECK(std::abs(k[1] / n[1] - m.threshold) < 0.01);
  auto labels = make_labels(d, 0.0);
  double base = 0;
  for (double y : labels) base += y;
  CHECK(m.threshold == doctest::Approx(base / labels.size()).epsilon(1e-6));
}

TEST_CASE("training is deterministic") {
  auto d = fixtures::data();
  TrainConfig cfg;
  cfg.l2 = 0.1;
  auto a = train(d, PolicyRegime::Unawareness, cfg);
  auto b = train(d, PolicyRegime::Unawareness, cfg);
  CHECK(a == b);
}

TEST_CASE("logistic calibration cancels the soft total effect") {
  for (auto p : {PolicyRegime::AffirmativeAction, PolicyRegime::Supremacism}) {
    auto d = fixtures::data(p);
    auto m = calibrate_direct_weight(train(d, p, {}), d);
    INFO(policy_name(p));
    if (p == PolicyRegime::AffirmativeAction) {
      CHECK(std::abs(soft_total_effect(m, d)) <= kLogisticCalibrationTolerance);
      CHECK(m.weight("A") > 0);
    } else {
      CHECK(m.weight("A") < 0);
    }
  }
  auto d = fixtures::data();
  CHECK_THROWS_AS(calibrate_direct_weight(train(d, PolicyRegime::Unawareness, {}), d), Error);
}

TEST_CASE("accuracy") {
  CHECK(accuracy({1, 0, 1, 1}, {1, 0, 0, 1}) == 0.75);
  CHECK_THROWS_AS(accuracy({1}, {1, 0}), Error);
  CHECK_THROWS_AS(accuracy({}, {}), Error);
}

TEST_CASE("model json round-trips") {
  TrainConfig cfg;
  cfg.epochs = 10;
  auto m = train(fixtures::data(), PolicyRegime::Unawareness, cfg);
  auto back = model_from_json(model_to_json(m));
  CHECK(back == m);
  CHECK(model_to_json(back) == model_to_json(m));
  auto j = model_to_json(m);
  CHECK(j.find("\"policy\"") < j.find("\"features\""));
  CHECK_THROWS_AS(model_from_json("{\"policy\": \"unawareness\"}"), Error);
}
