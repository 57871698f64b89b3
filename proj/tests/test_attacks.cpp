#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "evadex/attacks.hpp"
#include "evadex/error.hpp"
#include "evadex/models.hpp"
#include "evadex/rng.hpp"
#include "evadex/synth.hpp"

using namespace evadex;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an evadex::Error");
  return ErrorCode::Corrupt;
}

FeatureSpace binary(std::size_t d) {
  return FeatureSpace{FeatureKind::Binary, std::vector<FeatureBounds>(d)};
}

FeatureSpace unit_box(std::size_t d) {
  return FeatureSpace{FeatureKind::Continuous, std::vector<FeatureBounds>(d)};
}

// Label 1 iff x[f] == 0.
TreeModel stump(std::size_t d, int f) {
  TreeNode root;
  root.feature = f;
  root.threshold = 0.5;
  root.left = 1;
  root.right = 2;
  TreeNode one, zero;
  one.distribution = {0.0, 1.0};
  zero.distribution = {1.0, 0.0};
  return TreeModel(2, d, {root, one, zero});
}

// Label 0 iff x0 == 1 and x1 == 1.
TreeModel conjunction() {
  std::vector<TreeNode> n(5);
  n[0].feature = 0;
  n[0].threshold = 0.5;
  n[0].left = 1;
  n[0].right = 2;
  n[1].distribution = {0.0, 1.0};
  n[2].feature = 1;
  n[2].threshold = 0.5;
  n[2].left = 3;
  n[2].right = 4;
  n[3].distribution = {0.2, 0.8};
  n[4].distribution = {1.0, 0.0};
  return TreeModel(2, 2, n);
}

LogRegModel linear_logit(const std::vector<double>& c, double b) {
  const std::size_t d = c.size();
  std::vector<double> w(2 * d);
  std::copy(c.begin(), c.end(), w.begin() + static_cast<std::ptrdiff_t>(d));
  return LogRegModel(2, d, w, {0.0, b});
}

// p(class 1) = 0.35 + 0.4 x0 - 0.2 x1, exactly linear on 0/1 masks.
class LinearProbability final : public PredictionModel {
 public:
  std::size_t num_classes() const override { return 2; }
  std::size_t dim() const override { return 3; }
  std::vector<double> predict_proba(std::span<const double> x) const override {
    const double p = 0.35 + 0.4 * x[0] - 0.2 * x[1];
    return {1.0 - p, p};
  }
};

bool contains(const std::vector<std::size_t>& v, std::size_t j) {
  return std::find(v.begin(), v.end(), j) != v.end();
}

}  // namespace

TEST_CASE("additive: stump on feature 3") {
  const auto model = stump(6, 3);
  const Sample x{{1, 0, 0, 0, 1, 0}, 0};
  REQUIRE(model.predict(x) == 1);

  // Brute force over single flips: only feature 3 evades.
  std::vector<std::size_t> evading;
  for (std::size_t j = 0; j < 6; ++j) {
    if (x.features[j] != 0.0) continue;
    Sample z = x;
    z.features[j] = 1.0;
    if (model.predict(z) != 1) evading.push_back(j);
  }
  CHECK(evading == std::vector<std::size_t>{3});

  const auto out = additive_flip_attack(model, x, 1, AttackConfig{.budget = 3}, binary(6));
  CHECK(out.status == AttackStatus::Evaded);
  CHECK(out.record.evasive);
  CHECK(out.record.perturbed_indices == std::vector<std::size_t>{3});
  CHECK(out.record.deltas == std::vector<double>{1.0});
  CHECK(out.record.adversarial_label == 0);
  CHECK(out.record.original_label == 1);
  CHECK(out.queries >= 1);
}

TEST_CASE("additive: already misclassified") {
  const auto model = stump(4, 0);
  const Sample x{{1, 0, 0, 0}, 5};
  const auto out = additive_flip_attack(model, x, 1, AttackConfig{.budget = 2}, binary(4));
  CHECK(out.status == AttackStatus::AlreadyMisclassified);
  CHECK(out.record.empty());
  CHECK_FALSE(out.record.evasive);
  CHECK(out.record.sample_id == 5);
}

TEST_CASE("additive: budget exhausted on a conjunction") {
  const auto model = conjunction();
  const Sample x{{0, 0}, 0};
  const auto out = additive_flip_attack(model, x, 1, AttackConfig{.budget = 1}, binary(2));
  CHECK(out.status == AttackStatus::BudgetExhausted);
  CHECK_FALSE(out.record.evasive);
  CHECK(out.record.size() == 1);
  const auto two = additive_flip_attack(model, x, 1, AttackConfig{.budget = 2}, binary(2));
  CHECK(two.status == AttackStatus::Evaded);
  CHECK(two.record.size() == 2);
}

TEST_CASE("additive: candidate restriction") {
  const auto model = stump(4, 2);
  const Sample x{{0, 0, 0, 0}, 0};
  const std::vector<std::size_t> cand = {0, 2};
  const auto out = additive_flip_attack(model, x, 1, AttackConfig{.budget = 4}, binary(4),
                                        std::span<const std::size_t>(cand));
  CHECK(out.status == AttackStatus::Evaded);
  CHECK(out.record.perturbed_indices == std::vector<std::size_t>{2});

  const std::vector<std::size_t> none;
  CHECK(code_of([&] {
          additive_flip_attack(model, Sample{{0, 0, 0, 0}, 0}, 1, AttackConfig{.budget = 1},
                               binary(4), std::span<const std::size_t>(none));
        }) == ErrorCode::EmptyCandidateSet);
}

TEST_CASE("config validation") {
  const auto model = stump(3, 0);
  const Sample x{{0, 0, 0}, 0};
  CHECK(code_of([&] { additive_flip_attack(model, x, 1, AttackConfig{.budget = 0}, binary(3)); }) ==
        ErrorCode::InvalidConfig);
  CHECK(code_of([&] { additive_flip_attack(model, x, 1, AttackConfig{.budget = 4}, binary(3)); }) ==
        ErrorCode::InvalidConfig);
  AttackConfig noisy{.strategy = AttackStrategy::BoundedNoise, .budget = 1, .noise_scale = 2.0};
  CHECK(code_of([&] { noisy.validate(unit_box(3)); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("noise: no background features") {
  const auto model = linear_logit({1, 1, 1}, -1);
  const Sample x{{0.9, 0.9, 0.9}, 0};
  AttackConfig cfg{.strategy = AttackStrategy::BoundedNoise, .budget = 3};
  CHECK(code_of([&] { bounded_noise_attack(model, x, 1, cfg, unit_box(3)); }) ==
        ErrorCode::NoBackgroundFeatures);
  CHECK(run_attack(model, x, 1, cfg, unit_box(3)).status == AttackStatus::NoCandidates);
}

TEST_CASE("noise: background-negative linear model is evaded") {
  std::vector<double> c(10, 1.0);
  for (std::size_t j = 5; j < 10; ++j) c[j] = -10.0;
  const auto model = linear_logit(c, -4.0);
  Sample x{std::vector<double>(10, 0.0), 3};
  for (std::size_t j = 0; j < 5; ++j) x.features[j] = 0.9;
  REQUIRE(model.predict(x) == 1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    AttackConfig cfg{.strategy = AttackStrategy::BoundedNoise, .budget = 5, .seed = seed};
    const auto out = bounded_noise_attack(model, x, 1, cfg, unit_box(10));
    CHECK(out.status == AttackStatus::Evaded);
    CHECK(out.record.size() <= 5);
    for (std::size_t j : out.record.perturbed_indices) CHECK(j >= 5);
    for (double dlt : out.record.deltas) {
      CHECK(dlt > 0.0);
      CHECK(dlt <= 0.5);
    }
    CHECK(model.predict(apply_perturbation(x, out.record, unit_box(10))) ==
          out.record.adversarial_label);
  }
}

TEST_CASE("noise: results stay inside bounds (fuzz)") {
  Rng rng(12);
  for (int t = 0; t < 300; ++t) {
    const std::size_t d = 2 + rng.index(30);
    std::vector<double> c(d);
    for (auto& v : c) v = rng.normal() * 3;
    const auto model = linear_logit(c, 0.0);
    Sample x{std::vector<double>(d), static_cast<std::uint64_t>(t)};
    for (auto& v : x.features) v = rng.coin() ? rng.uniform(0, 0.1) : rng.uniform();
    const int y = model.predict(x);
    x.features[0] = 0.05;
    AttackConfig cfg{.strategy = AttackStrategy::BoundedNoise,
                     .budget = 1 + rng.index(d),
                     .noise_scale = rng.uniform(0.01, 1.0),
                     .seed = 3};
    const auto out = run_attack(model, x, model.predict(x), cfg, unit_box(d));
    (void)y;
    const Sample z = apply_perturbation(x, out.record, unit_box(d));
    for (double v : z.features) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(out.record.size() <= cfg.budget);
  }
}

TEST_CASE("guided selection definition") {
  const LinearProbability model;
  ExplainConfig ecfg;
  ecfg.seed = 1;
  const Sample x{{1, 1, 1}, 0};
  const auto e = explain(model, x, ecfg);
  CHECK(e.weights[1][0] == doctest::Approx(0.4));
  CHECK(e.weights[1][1] == doctest::Approx(-0.2));
  CHECK(std::abs(e.weights[1][2]) <= ecfg.eps_neutral);
  CHECK(guided_feature_selection(model, x, 1, ecfg) == std::vector<std::size_t>{0});
  CHECK(guided_feature_selection(model, x, 0, ecfg) == std::vector<std::size_t>{1});

  const auto negative = linear_logit({-2.0, -2.0}, 5.0);
  const Sample y{{1, 1}, 0};
  REQUIRE(negative.predict(y) == 1);
  CHECK(guided_feature_selection(negative, y, 1, ecfg).empty());
  AttackConfig cfg{.strategy = AttackStrategy::Guided,
                   .budget = 2,
                   .noise_scale = 0.5,
                   .background_threshold = 1.0,
                   .guided_base = AttackStrategy::BoundedNoise,
                   .explain = ecfg};
  CHECK(code_of([&] { guided_attack(negative, y, 1, cfg, unit_box(2)); }) ==
        ErrorCode::EmptyCandidateSet);
  CHECK(run_attack(negative, y, 1, cfg, unit_box(2)).status == AttackStatus::NoCandidates);
}

TEST_CASE("guided selection covers large planted coefficients") {
  int hits = 0, trials = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t d = 12;
    std::vector<double> c(d);
    for (auto& v : c) v = rng.normal() * 0.3;
    std::vector<std::size_t> big;
    for (std::size_t j = 0; j < 3; ++j) {
      const std::size_t f = rng.index(d);
      c[f] = rng.uniform(2.0, 3.0);
      big.push_back(f);
    }
    const auto model = linear_logit(c, -1.0);
    Sample x{std::vector<double>(d), seed};
    for (auto& v : x.features) v = rng.uniform(0.3, 1.0);
    ExplainConfig ecfg;
    ecfg.num_perturbations = 2000;
    ecfg.seed = seed;
    const auto sel = guided_feature_selection(model, x, 1, ecfg);
    ++trials;
    if (std::all_of(big.begin(), big.end(), [&](std::size_t f) { return contains(sel, f); })) {
      ++hits;
    }
  }
  CHECK(static_cast<double>(hits) / trials >= 0.9);
}

TEST_CASE("guided never perturbs a negative feature") {
  const auto planted = make_binary_planted({.n = 600, .d = 20, .seed = 4});
  const auto model = train_logreg(planted.data, TrainConfig::defaults(ModelKind::LogReg));
  ExplainConfig ecfg;
  ecfg.num_perturbations = 400;
  ecfg.fill = MaskFill::Toggle;
  ecfg.seed = 2;
  AttackConfig cfg{.strategy = AttackStrategy::Guided, .budget = 20, .seed = 5,
                   .explain = ecfg};
  int attacked = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const Sample& x = planted.data.sample(i);
    const int y = planted.data.label(i);
    const auto out = run_attack(model, x, y, cfg, planted.data.space());
    if (out.status == AttackStatus::AlreadyMisclassified ||
        out.status == AttackStatus::NoCandidates) {
      continue;
    }
    ++attacked;
    const auto sel = guided_feature_selection(model, x, y, ecfg);
    for (std::size_t j : out.record.perturbed_indices) {
      CHECK(contains(sel, j));
      CHECK(x.features[j] == 0.0);
    }
    CHECK(out.queries > ecfg.num_perturbations);
  }
  CHECK(attacked > 100);
}

TEST_CASE("campaign: summary, determinism, replay") {
  const auto planted = make_binary_planted({.n = 500, .d = 30, .seed = 8});
  const auto model = train_logreg(planted.data, TrainConfig::defaults(ModelKind::LogReg));
  for (FlipOrder order : {FlipOrder::Greedy, FlipOrder::Random}) {
    AttackConfig cfg{.budget = 8, .seed = 4, .order = order};
    const auto a = run_attack_campaign(model, planted.data, cfg, 1);
    const auto b = run_attack_campaign(model, planted.data, cfg, 4);
    CHECK(a.outcomes == b.outcomes);
    REQUIRE(a.outcomes.size() == planted.data.size());
    for (std::size_t i = 1; i < a.outcomes.size(); ++i) {
      CHECK(a.outcomes[i - 1].record.sample_id < a.outcomes[i].record.sample_id);
    }
    std::size_t evaded = 0;
    for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
      const auto& o = a.outcomes[i];
      const Sample& x = planted.data.sample(i);
      CHECK(o.record.size() <= cfg.budget);
      CHECK((o.status == AttackStatus::Evaded) == o.record.evasive);
      if (o.status != AttackStatus::AlreadyMisclassified) CHECK(o.queries >= 1);
      for (std::size_t k = 0; k < o.record.size(); ++k) {
        CHECK(o.record.deltas[k] == 1.0);
        CHECK(x.features[o.record.perturbed_indices[k]] == 0.0);
      }
      if (o.status == AttackStatus::Evaded) {
        ++evaded;
        const int label = model.predict(apply_perturbation(x, o.record, planted.data.space()));
        CHECK(label == o.record.adversarial_label);
        CHECK(label != o.record.original_label);
      }
    }
    const auto& s = a.summary;
    CHECK(s.n_evaded == evaded);
    CHECK(s.pre_accuracy == doctest::Approx(accuracy(model, planted.data)));
    CHECK(s.aggregate_evasion == doctest::Approx(s.pre_accuracy - s.post_accuracy));
  }
  const LabeledDataset empty({}, {}, 2, binary(30));
  CHECK(code_of([&] { run_attack_campaign(model, empty, AttackConfig{}); }) ==
        ErrorCode::EmptyDataset);
}

TEST_CASE("campaign summary arithmetic") {
  // 9600 of 10000 correctly classified, 605 survive: 0.96 - 0.0605.
  std::vector<AttackOutcome> outs(10000);
  for (std::size_t i = 0; i < outs.size(); ++i) {
    outs[i].record.sample_id = i;
    outs[i].queries = 1;
    if (i < 400) {
      outs[i].status = AttackStatus::AlreadyMisclassified;
    } else if (i < 400 + 605) {
      outs[i].status = AttackStatus::BudgetExhausted;
    } else {
      outs[i].status = AttackStatus::Evaded;
    }
  }
  const auto s = summarize_campaign(outs);
  CHECK(s.pre_accuracy == doctest::Approx(0.96).epsilon(1e-12));
  CHECK(s.post_accuracy == doctest::Approx(0.0605).epsilon(1e-12));
  CHECK(s.aggregate_evasion == doctest::Approx(0.8995).epsilon(1e-12));

  std::vector<AttackOutcome> all(3);
  for (auto& o : all) o.status = AttackStatus::Evaded;
  CHECK(summarize_campaign(all).post_accuracy == 0.0);
}
