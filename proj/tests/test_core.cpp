#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "evadex/dataset.hpp"
#include "evadex/error.hpp"
#include "evadex/model_io.hpp"
#include "evadex/models.hpp"
#include "evadex/perturbation.hpp"
#include "evadex/rng.hpp"
#include "evadex/synth.hpp"

using namespace evadex;
namespace fs = std::filesystem;

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

fs::path temp_file(const std::string& name, const std::string& text) {
  const fs::path dir = fs::temp_directory_path() / "evadex_core_tests";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

LabeledDataset binary_set(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> s;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    Sample x{std::vector<double>(d), i};
    for (auto& v : x.features) v = rng.coin() ? 1.0 : 0.0;
    s.push_back(x);
    y.push_back(static_cast<int>(i % 2));
  }
  return LabeledDataset(s, y, 2, FeatureSpace{FeatureKind::Binary,
                                              std::vector<FeatureBounds>(d)});
}

}  // namespace

TEST_CASE("csv: three-row binary file") {
  const auto p = temp_file("tiny.csv", "f0,f1,label\n0,1,0\n1,1,1\n0,0,1\n");
  const LabeledDataset data = load_dataset_csv(p);
  CHECK(data.dim() == 2);
  CHECK(data.size() == 3);
  CHECK(data.num_classes() == 2);
  CHECK(data.kind() == FeatureKind::Binary);
  CHECK(data.sample(1).features == std::vector<double>{1, 1});
  CHECK(data.sample(2).id == 2);
  CHECK(data.label(0) == 0);
}

TEST_CASE("csv: error values") {
  CHECK(code_of([] { load_dataset_csv("/nonexistent/evadex.csv"); }) ==
        ErrorCode::MissingFile);
  CHECK(code_of([] { parse_dataset_csv("a,label\n1,0\n2\n"); }) ==
        ErrorCode::RaggedRow);
  CHECK(code_of([] { parse_dataset_csv("a,b,label\n1,2,0\n1,x,1\n"); }) ==
        ErrorCode::NonNumericCell);
  CHECK(code_of([] { parse_dataset_csv("a,b\n1,2\n"); }) ==
        ErrorCode::UnknownLabelColumn);

  try {
    parse_dataset_csv("a,b,label\n1,2,0\n0.5,nan,1\n");
    FAIL("NaN accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonNumericCell);
    CHECK(e.row() == 1);
    CHECK(e.col() == 1);
  }
}

TEST_CASE("csv: quoted fields and custom label column") {
  CsvOptions opt;
  opt.label_column = "class";
  const auto data = parse_dataset_csv("\"f,0\",class,\"f1\"\n\"0.5\",1,2\n0.25,0,3\n", opt);
  CHECK(data.dim() == 2);
  CHECK(data.feature_names() == std::vector<std::string>{"f,0", "f1"});
  CHECK(data.sample(0).features == std::vector<double>{0.5, 2});
  CHECK(data.label(0) == 1);
}

TEST_CASE("csv: continuous bounds match a column scan") {
  Rng rng(11);
  std::string text = "a,b,c,label\n";
  std::vector<std::vector<double>> cols(3);
  for (int i = 0; i < 100; ++i) {
    for (int c = 0; c < 3; ++c) {
      const double v = rng.uniform(-5.0, 5.0);
      cols[c].push_back(v);
      text += std::to_string(v) + ",";
    }
    text += std::to_string(i % 3) + "\n";
  }
  const auto data = parse_dataset_csv(text);
  CHECK(data.num_classes() == 3);
  CHECK(data.kind() == FeatureKind::Continuous);
  for (int c = 0; c < 3; ++c) {
    // std::to_string prints 6 decimals, so the oracle parses the same text.
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : data.samples()) {
      lo = std::min(lo, s.features[c]);
      hi = std::max(hi, s.features[c]);
    }
    CHECK(data.space().bounds[c].lo == lo);
    CHECK(data.space().bounds[c].hi == hi);
    const auto [mn, mx] = std::minmax_element(cols[c].begin(), cols[c].end());
    CHECK(data.space().bounds[c].lo == doctest::Approx(*mn).epsilon(1e-6));
    CHECK(data.space().bounds[c].hi == doctest::Approx(*mx).epsilon(1e-6));
  }
}

TEST_CASE("csv: feature kind override") {
  CsvOptions opt;
  opt.feature_kind = FeatureKind::Continuous;
  const auto data = parse_dataset_csv("a,label\n0,0\n1,1\n", opt);
  CHECK(data.kind() == FeatureKind::Continuous);
}

TEST_CASE("csv: write then load is the identity") {
  Rng rng(3);
  std::vector<Sample> s;
  std::vector<int> y;
  std::vector<FeatureBounds> b(4, FeatureBounds{-1e6, 1e6});
  for (std::size_t i = 0; i < 50; ++i) {
    Sample x{std::vector<double>(4), i};
    for (auto& v : x.features) v = rng.normal() * std::pow(10.0, rng.uniform(-8, 5));
    s.push_back(x);
    y.push_back(static_cast<int>(i % 3));
  }
  const LabeledDataset data(s, y, 3, FeatureSpace{FeatureKind::Continuous, b});
  const auto back = parse_dataset_csv(format_dataset_csv(data));
  REQUIRE(back.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(back.label(i) == data.label(i));
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(std::abs(back.sample(i).features[j] - data.sample(i).features[j]) <= 1e-12);
    }
  }

  const auto planted = make_binary_planted({.n = 200, .d = 12, .seed = 5}).data;
  const auto p = temp_file("planted.csv", "");
  write_dataset_csv(planted, p);
  const auto reread = load_dataset_csv(p);
  CHECK(reread.kind() == FeatureKind::Binary);
  CHECK(reread.samples().size() == planted.size());
  CHECK(reread.labels() == planted.labels());
}

TEST_CASE("dataset invariants are enforced") {
  const FeatureSpace bin{FeatureKind::Binary, std::vector<FeatureBounds>(1)};
  CHECK(code_of([&] { LabeledDataset({Sample{{0.5}, 0}}, {0}, 2, bin); }) ==
        ErrorCode::InvalidConfig);
  CHECK(code_of([&] { LabeledDataset({Sample{{1}, 0}}, {2}, 2, bin); }) ==
        ErrorCode::InvalidLabel);
  CHECK(code_of([&] { LabeledDataset({Sample{{1}, 0}}, {0, 1}, 2, bin); }) ==
        ErrorCode::ShapeMismatch);
}

TEST_CASE("split: sizes, disjointness and determinism") {
  const auto data = binary_set(10, 3, 1);
  const auto [tr, ev] = split_dataset(data, {0.6, 0.4}, 7);
  CHECK(tr.size() == 6);
  CHECK(ev.size() == 4);
  std::set<std::uint64_t> ids;
  for (const auto& s : tr.samples()) ids.insert(s.id);
  for (const auto& s : ev.samples()) CHECK(ids.insert(s.id).second);
  for (auto id : ids) CHECK(id < 10);

  const auto [tr2, ev2] = split_dataset(data, {0.6, 0.4}, 7);
  CHECK(tr2.labels() == tr.labels());
  for (std::size_t i = 0; i < ev.size(); ++i) CHECK(ev2.sample(i).id == ev.sample(i).id);

  CHECK(code_of([&] { split_dataset(data, {0.7, 0.4}, 1); }) == ErrorCode::InvalidFraction);
  CHECK(code_of([&] { split_dataset(data, {0.0, 0.4}, 1); }) == ErrorCode::InvalidFraction);
}

TEST_CASE("split: stratification within one sample per class") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 50 + rng.index(200);
    std::vector<Sample> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      s.push_back(Sample{{rng.uniform()}, i});
      y.push_back(static_cast<int>(rng.index(3)));
    }
    const LabeledDataset data(s, y, 3,
                              FeatureSpace{FeatureKind::Continuous, {{0, 1}}});
    const auto [tr, ev] = split_dataset(data, {0.6, 0.4}, seed);
    const auto all = data.class_counts();
    const auto ct = tr.class_counts(), ce = ev.class_counts();
    for (int c = 0; c < 3; ++c) {
      CHECK(std::abs(static_cast<double>(ct[c]) - 0.6 * all[c]) <= 1.0);
      CHECK(std::abs(static_cast<double>(ce[c]) - 0.4 * all[c]) <= 1.0);
    }
    std::set<std::uint64_t> seen;
    for (const auto& x : tr.samples()) CHECK(seen.insert(x.id).second);
    for (const auto& x : ev.samples()) CHECK(seen.insert(x.id).second);
  }

  std::vector<Sample> s;
  std::vector<int> y;
  for (std::size_t i = 0; i < 100; ++i) {
    s.push_back(Sample{{0.0}, i});
    y.push_back(i < 50 ? 0 : 1);
  }
  const LabeledDataset half(s, y, 2, FeatureSpace{FeatureKind::Binary, {{0, 1}}});
  const auto [tr, ev] = split_dataset(half, {0.6, 0.4}, 42);
  CHECK(std::abs(static_cast<int>(tr.class_counts()[0]) - 30) <= 1);
  CHECK(std::abs(static_cast<int>(ev.class_counts()[1]) - 20) <= 1);
}

TEST_CASE("apply_perturbation examples") {
  const FeatureSpace bin{FeatureKind::Binary, std::vector<FeatureBounds>(3)};
  PerturbationRecord r;
  r.perturbed_indices = {1};
  r.deltas = {1.0};
  CHECK(apply_perturbation(Sample{{0, 0, 1}, 0}, r, bin).features ==
        std::vector<double>{0, 1, 1});
  CHECK(apply_perturbation(Sample{{0, 0, 1}, 0}, PerturbationRecord{}, bin).features ==
        std::vector<double>{0, 0, 1});

  const FeatureSpace cont{FeatureKind::Continuous, {{0.0, 1.0}}};
  PerturbationRecord c;
  c.perturbed_indices = {0};
  c.deltas = {0.5};
  CHECK(apply_perturbation(Sample{{0.9}, 0}, c, cont).features[0] == 1.0);

  PerturbationRecord bad;
  bad.perturbed_indices = {3};
  bad.deltas = {1.0};
  CHECK(code_of([&] { apply_perturbation(Sample{{0, 0, 1}, 0}, bad, bin); }) ==
        ErrorCode::IndexOutOfRange);
}

TEST_CASE("apply_perturbation: idempotent flips and bounds (fuzz)") {
  Rng rng(99);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t d = 1 + rng.index(8);
    std::vector<FeatureBounds> b(d);
    for (auto& x : b) {
      x.lo = rng.uniform(-2, 0);
      x.hi = x.lo + rng.uniform(0.01, 3);
    }
    Sample x{std::vector<double>(d), 0};
    for (std::size_t j = 0; j < d; ++j) x.features[j] = rng.uniform(b[j].lo, b[j].hi);
    PerturbationRecord r;
    std::vector<std::size_t> idx(d);
    for (std::size_t j = 0; j < d; ++j) idx[j] = j;
    rng.shuffle(std::span(idx));
    for (std::size_t j = 0; j < 1 + rng.index(d); ++j) {
      r.perturbed_indices.push_back(idx[j]);
      r.deltas.push_back(rng.uniform(-5, 5));
    }
    const Sample y = apply_perturbation(x, r, FeatureSpace{FeatureKind::Continuous, b});
    for (std::size_t j = 0; j < d; ++j) {
      CHECK(y.features[j] >= b[j].lo);
      CHECK(y.features[j] <= b[j].hi);
      if (std::find(r.perturbed_indices.begin(), r.perturbed_indices.end(), j) ==
          r.perturbed_indices.end()) {
        CHECK(y.features[j] == x.features[j]);
      }
    }

    // Binary additive flips: applying twice equals applying once.
    const FeatureSpace bin{FeatureKind::Binary, std::vector<FeatureBounds>(d)};
    Sample z{std::vector<double>(d), 0};
    for (auto& v : z.features) v = rng.coin() ? 1.0 : 0.0;
    PerturbationRecord flips = r;
    std::fill(flips.deltas.begin(), flips.deltas.end(), 1.0);
    const Sample once = apply_perturbation(z, flips, bin);
    CHECK(apply_perturbation(once, flips, bin).features == once.features);
    for (std::size_t j : flips.perturbed_indices) CHECK(once.features[j] == 1.0);
  }
}

TEST_CASE("model files round-trip bit-identically") {
  const auto data = make_binary_planted({.n = 300, .d = 10, .seed = 2}).data;
  TrainConfig lr = TrainConfig::defaults(ModelKind::LogReg);
  lr.epochs = 50;
  TrainConfig mlp = TrainConfig::defaults(ModelKind::Mlp);
  mlp.epochs = 5;
  mlp.hidden_units = {6, 4};
  TrainConfig tree = TrainConfig::defaults(ModelKind::Tree);

  std::vector<std::unique_ptr<PredictionModel>> models;
  models.push_back(std::make_unique<LogRegModel>(train_logreg(data, lr)));
  models.push_back(std::make_unique<MlpModel>(train_mlp(data, mlp)));
  models.push_back(std::make_unique<TreeModel>(train_tree(data, tree)));

  Rng rng(5);
  for (const auto& m : models) {
    const std::string text = serialize_model(*m, 77);
    const ModelFile mf = parse_model(text, 10);
    CHECK(mf.seed == 77);
    CHECK(mf.dim == 10);
    CHECK(mf.num_classes == 2);
    CHECK(serialize_model(*mf.model, 77) == text);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> x(10);
      for (auto& v : x) v = rng.uniform(-1, 2);
      CHECK(mf.model->predict_proba(x) == m->predict_proba(x));
      CHECK(mf.model->predict(x) == m->predict(x));
    }

    const fs::path p = fs::temp_directory_path() / "evadex_core_tests" / "m.json";
    save_model(p, *m, 77);
    CHECK(load_model(p).model->predict_proba(data.sample(0)) ==
          m->predict_proba(data.sample(0)));

    CHECK(code_of([&] { parse_model(text.substr(0, text.size() / 2)); }) ==
          ErrorCode::Corrupt);
    CHECK(code_of([&] { parse_model(text, 11); }) == ErrorCode::ShapeMismatch);
    std::string v2 = text;
    v2.replace(v2.find("\"version\": 1"), 12, "\"version\": 2");
    CHECK(code_of([&] { parse_model(v2); }) == ErrorCode::VersionMismatch);
  }
  CHECK(code_of([] { load_model("/nonexistent/model.json"); }) == ErrorCode::MissingFile);
}

TEST_CASE("rng: derived seeds and draws are stable") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
  Rng a(4), b(4);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(8);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(c.index(7) < 7);
  }
}
