#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "evadex/error.hpp"
#include "evadex/metrics.hpp"
#include "evadex/models.hpp"
#include "support/oracles.hpp"

using namespace evadex;
using evadex::testing::SignInstance;

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

// weights[c] over features 0..P-1, all of them perturbed.
std::pair<PerturbationRecord, ExplanationSet> fixture(
    std::vector<std::vector<double>> weights, int y_true) {
  ExplanationSet e;
  e.num_classes = weights.size();
  e.dim = weights[0].size();
  e.weights = std::move(weights);
  e.intercepts.assign(e.num_classes, 0.0);
  PerturbationRecord r;
  for (std::size_t j = 0; j < e.dim; ++j) {
    r.perturbed_indices.push_back(j);
    r.deltas.push_back(1.0);
  }
  r.original_label = y_true;
  r.adversarial_label = y_true == 0 ? 1 : 0;
  r.evasive = true;
  return {r, e};
}

std::vector<double> negated(std::vector<double> v) {
  for (auto& x : v) x = -x;
  return v;
}

SampleDiagnosis diag(double pspp, double pspe, bool evasive, std::uint64_t id = 0) {
  SampleDiagnosis s;
  s.sample_id = id;
  s.pspp = pspp;
  s.pspe = pspe;
  s.evasive = evasive;
  return s;
}

}  // namespace

TEST_CASE("pspp / pspe worked examples") {
  const std::vector<double> toward_true = {0.2, -0.1, 0.0, -0.3};
  const auto [r, e] = fixture({negated(toward_true), toward_true}, 1);
  CHECK(pspp(r, e, 2, 0.0) == 0.5);
  CHECK(pspe(r, e, 0.0) == 0.25);
  CHECK(neutral_rate(r, e, 0.0) == 0.25);

  const std::vector<double> neg = {-0.2, -0.4, -1.0};
  const auto [r2, e2] = fixture({negated(neg), neg}, 1);
  CHECK(pspp(r2, e2, 2, 1e-9) == 1.0);
  CHECK(pspe(r2, e2, 1e-9) == 0.0);
  const auto [r3, e3] = fixture({neg, negated(neg)}, 1);
  CHECK(pspe(r3, e3, 1e-9) == 1.0);

  // k = 3, P = 2: y_true (+,-), y_a (+,+), y_b (-,+).
  const auto [r4, e4] = fixture({{0.3, -0.2}, {0.1, 0.4}, {-0.5, 0.7}}, 0);
  CHECK(pspp(r4, e4, 3, 1e-9) == 0.625);
}

TEST_CASE("targeted variants") {
  const auto [r, e] = fixture({{0.1, 0.2}, {-0.3, 0.1}, {0.5, 0.5}}, 0);
  CHECK(pspp_targeted(r, e, 2, 1e-9) == 1.0);
  CHECK(pspe_targeted(r, e, 2, 1e-9) == 0.0);
  const auto [r2, e2] = fixture({{0.1, 0.2, 0.3}, {0.4, -0.2, 0.0}}, 0);
  CHECK(pspp_targeted(r2, e2, 1, 1e-9) == doctest::Approx(1.0 / 3.0));
  CHECK(pspe_targeted(r2, e2, 1, 1e-9) == doctest::Approx(1.0 / 3.0));
  CHECK(code_of([&] { pspp_targeted(r2, e2, 0, 1e-9); }) == ErrorCode::InvalidTarget);
  CHECK(code_of([&] { pspe_targeted(r2, e2, 5, 1e-9); }) == ErrorCode::InvalidTarget);
}

TEST_CASE("zero perturbations are undefined") {
  auto [r, e] = fixture({{0.1}, {-0.1}}, 0);
  r.perturbed_indices.clear();
  r.deltas.clear();
  CHECK(code_of([&] { pspp(r, e, 2, 0.0); }) == ErrorCode::ZeroPerturbations);
  CHECK(code_of([&] { pspe(r, e, 0.0); }) == ErrorCode::ZeroPerturbations);
  CHECK(code_of([&] { pspp_targeted(r, e, 1, 0.0); }) == ErrorCode::ZeroPerturbations);
}

TEST_CASE("hcr and ape fixtures") {
  const std::vector<SampleDiagnosis> four = {diag(0.9, 0.1, true), diag(0.6, 0.3, true),
                                             diag(0.4, 0.5, true), diag(0.8, 0.2, false)};
  CHECK(hcr(four, {}) == 0.5);
  CHECK(hcr(four, {.tau = 0.5, .evasive_only = true}) == 2.0 / 3.0);
  // Strict threshold.
  CHECK(hcr(std::vector<SampleDiagnosis>{diag(0.5, 0, true)}, {}) == 0.0);
  CHECK(hcr(std::vector<SampleDiagnosis>{diag(1.0, 0, true), diag(1.0, 0, true)}, {}) == 1.0);

  CHECK(ape(std::vector<SampleDiagnosis>{diag(0, 0.25, true), diag(0, 0.75, true)}) == 0.5);
  CHECK(ape(std::vector<SampleDiagnosis>{diag(0, 0, true), diag(0, 0, false)}) == 0.0);

  CHECK(code_of([] { hcr(std::vector<SampleDiagnosis>{}, {}); }) == ErrorCode::EmptyDataset);
  CHECK(code_of([] { ape(std::vector<SampleDiagnosis>{}); }) == ErrorCode::EmptyDataset);

  auto with_skip = four;
  SampleDiagnosis skipped = diag(0.99, 0.99, true, 9);
  skipped.status = DiagnosisStatus::Skipped;
  with_skip.push_back(skipped);
  CHECK(hcr(with_skip, {}) == 0.5);
  CHECK(ape(with_skip) == ape(four));
  const auto report = summarize_diagnoses(with_skip, CampaignSummary{}, {});
  CHECK(report.hcr == 0.5);
  CHECK(report.ape == doctest::Approx(0.275));
  CHECK(report.n_samples == 4);
  CHECK(report.n_evasive == 3);
  CHECK(report.n_skipped == 1);
}

TEST_CASE("metric ranges (fuzz)") {
  Rng rng(1);
  std::vector<SampleDiagnosis> list;
  for (int t = 0; t < 10000; ++t) {
    SignInstance s = evadex::testing::random_instance(rng, 12, 12, 5, 1e-9 * rng.index(2));
    const auto e = evadex::testing::realize(s, rng);
    auto r = evadex::testing::record_for(s);
    r.evasive = rng.coin();
    const auto d = diagnose_sample(r, e, s.eps);
    for (double v : {d.pspp, d.pspe, d.neutral_rate}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    list.push_back(d);
    if (list.size() == 7) {
      const double h = hcr(list, {.tau = rng.uniform()});
      const double a = ape(list);
      CHECK(h >= 0.0);
      CHECK(h <= 1.0);
      CHECK(a >= 0.0);
      CHECK(a <= 1.0);
      list.clear();
    }
  }
}

TEST_CASE("binary identity under the complement convention") {
  Rng rng(2);
  for (int t = 0; t < 10000; ++t) {
    SignInstance s = evadex::testing::random_instance(rng, 20, 20, 2, 0.0);
    evadex::testing::make_complement(s);
    const auto e = evadex::testing::realize(s, rng);
    const auto r = evadex::testing::record_for(s);
    const double sum = pspp(r, e, 2, 0.0) + pspe(r, e, 0.0) + neutral_rate(r, e, 0.0);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("brute-force oracle equivalence") {
  Rng rng(3);
  for (int t = 0; t < 10000; ++t) {
    const double eps = rng.coin() ? 0.0 : 1e-3;
    SignInstance s = evadex::testing::random_instance(rng, 6, 6, 3, eps);
    const auto e = evadex::testing::realize(s, rng);
    const auto r = evadex::testing::record_for(s);
    const auto o = evadex::testing::brute_force(s);
    CHECK(pspp(r, e, s.k, eps) == o.pspp);
    CHECK(pspe(r, e, eps) == o.pspe);
    CHECK(neutral_rate(r, e, eps) == o.neutral);
  }
}

TEST_CASE("monotonicity: positive to negative toward y_true") {
  Rng rng(4);
  for (int t = 0; t < 2000; ++t) {
    SignInstance s = evadex::testing::random_instance(rng, 10, 10, 2, 0.0);
    evadex::testing::make_complement(s);
    const auto yt = static_cast<std::size_t>(s.y_true);
    std::vector<std::size_t> positive;
    for (std::size_t j : s.perturbed)
      if (s.signs[yt][j] > 0) positive.push_back(j);
    if (positive.empty()) continue;
    Rng r1(t), r2(t);
    const auto before = evadex::testing::realize(s, r1);
    const auto rec = evadex::testing::record_for(s);
    SignInstance flipped = s;
    const std::size_t j = positive[rng.index(positive.size())];
    flipped.signs[yt][j] = -1;
    flipped.signs[1 - yt][j] = 1;
    const auto after = evadex::testing::realize(flipped, r2);
    CHECK(pspp(rec, after, 2, 0.0) > pspp(rec, before, 2, 0.0));
    CHECK(pspe(rec, after, 0.0) < pspe(rec, before, 0.0));
  }
}

TEST_CASE("hcr and ape are permutation invariant") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<SampleDiagnosis> list;
    const std::size_t n = 1 + rng.index(40);
    for (std::size_t i = 0; i < n; ++i) {
      // Quarter steps so sums are exact in any order.
      list.push_back(diag(0.25 * rng.index(5), 0.25 * rng.index(5), rng.coin(), i));
    }
    const double h = hcr(list, {}), a = ape(list);
    for (int p = 0; p < 5; ++p) {
      rng.shuffle(std::span<SampleDiagnosis>(list));
      CHECK(hcr(list, {}) == h);
      CHECK(ape(list) == a);
    }
  }
}

TEST_CASE("targeted and untargeted agree for two classes") {
  Rng rng(6);
  for (int t = 0; t < 5000; ++t) {
    SignInstance s = evadex::testing::random_instance(rng, 10, 10, 2, 0.0);
    evadex::testing::make_complement(s);
    const auto e = evadex::testing::realize(s, rng);
    const auto r = evadex::testing::record_for(s);
    const int other = 1 - s.y_true;
    const double neg_term =
        static_cast<double>(direction_counts(e, r, static_cast<std::size_t>(s.y_true), 0.0).neg) /
        static_cast<double>(r.size());
    CHECK(pspp_targeted(r, e, other, 0.0) == neg_term);
    const double tau = rng.uniform();
    CHECK((pspp(r, e, 2, 0.0) > tau) == (pspp_targeted(r, e, other, 0.0) > tau));
  }
}

TEST_CASE("diagnose end to end") {
  // p(1) = sigmoid(-3 x0 - 3 x1 + x2 + 0.5); x = [0, 0, 1] is class 1 and
  // flipping x0 evades.
  const LogRegModel model(2, 3, {0, 0, 0, -3, -3, 1}, {0, 0.5});
  const FeatureSpace space{FeatureKind::Binary, std::vector<FeatureBounds>(3)};
  const LabeledDataset ev({Sample{{0, 0, 1}, 10}, Sample{{1, 1, 1}, 11}}, {1, 1}, 2, space);

  AttackOutcome evaded;
  evaded.record.sample_id = 10;
  evaded.record.perturbed_indices = {0};
  evaded.record.deltas = {1.0};
  evaded.record.original_label = 1;
  evaded.record.adversarial_label = 0;
  evaded.record.evasive = true;
  evaded.status = AttackStatus::Evaded;
  evaded.queries = 2;
  AttackOutcome missed;
  missed.record.sample_id = 11;
  missed.record.original_label = 1;
  missed.status = AttackStatus::AlreadyMisclassified;
  const std::vector<AttackOutcome> outcomes = {evaded, missed};

  ExplainConfig cfg;
  cfg.seed = 1;
  const auto report = diagnose(model, ev, outcomes, cfg);
  REQUIRE(report.samples.size() == 2);
  CHECK(report.samples[0].status == DiagnosisStatus::Ok);
  CHECK(report.samples[0].pspp == 1.0);
  CHECK(report.samples[0].pspe == 0.0);
  CHECK(report.samples[1].status == DiagnosisStatus::Skipped);
  CHECK_FALSE(report.samples[1].reason.empty());
  CHECK(report.hcr == 1.0);
  CHECK(report.ape == 0.0);
  CHECK(report.n_samples == 1);
  CHECK(report.n_skipped == 1);

  CHECK(diagnose(model, ev, outcomes, cfg, {.jobs = 3}).samples == report.samples);

  AttackOutcome stray = evaded;
  stray.record.sample_id = 99;
  const auto with_error =
      diagnose(model, ev, std::vector<AttackOutcome>{evaded, stray}, cfg);
  CHECK(with_error.samples[1].status == DiagnosisStatus::Error);
  CHECK(with_error.hcr == 1.0);

  CHECK(code_of([&] { diagnose(model, ev, std::vector<AttackOutcome>{}, cfg); }) ==
        ErrorCode::EmptyDataset);
}
