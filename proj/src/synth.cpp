#include "evadex/synth.hpp"

#include <algorithm>
#include <numeric>

#include "evadex/error.hpp"
#include "evadex/rng.hpp"

namespace evadex {

BinaryPlantedData make_binary_planted(const BinaryPlantedParams& p) {
  if (p.n == 0 || p.d == 0) throw Error(ErrorCode::InvalidConfig, "n and d must be >= 1");
  if (p.planted == 0 || p.planted > p.d || p.planted % 2 == 0) {
    throw Error(ErrorCode::InvalidConfig, "planted count must be odd and <= d");
  }
  if (!(p.density >= 0.0 && p.density <= 1.0) ||
      !(p.label_noise >= 0.0 && p.label_noise <= 0.5)) {
    throw Error(ErrorCode::InvalidConfig, "density/label_noise out of range");
  }
  Rng rng(p.seed);
  std::vector<std::size_t> positions(p.d);
  std::iota(positions.begin(), positions.end(), 0);
  rng.shuffle(std::span<std::size_t>(positions));
  std::vector<std::size_t> planted(positions.begin(),
                                   positions.begin() + static_cast<std::ptrdiff_t>(p.planted));
  std::sort(planted.begin(), planted.end());
  std::vector<int> polarity(p.planted);
  for (std::size_t i = 0; i < p.planted; ++i) polarity[i] = i % 2 == 0 ? 1 : -1;

  std::vector<bool> is_planted(p.d, false);
  for (auto j : planted) is_planted[j] = true;

  std::vector<Sample> samples(p.n);
  std::vector<int> labels(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    Sample& s = samples[i];
    s.id = i;
    s.features.assign(p.d, 0.0);
    for (std::size_t j = 0; j < p.d; ++j) {
      const double rate = is_planted[j] ? 0.5 : p.density;
      s.features[j] = rng.bernoulli(rate) ? 1.0 : 0.0;
    }
    std::size_t votes = 0;
    for (std::size_t t = 0; t < p.planted; ++t) {
      const bool present = s.features[planted[t]] == 1.0;
      if (present == (polarity[t] > 0)) ++votes;
    }
    int label = 2 * votes > p.planted ? 1 : 0;
    if (rng.bernoulli(p.label_noise)) label = 1 - label;
    labels[i] = label;
  }
  FeatureSpace space{FeatureKind::Binary, std::vector<FeatureBounds>(p.d)};
  return BinaryPlantedData{
      LabeledDataset(std::move(samples), std::move(labels), 2, std::move(space)),
      std::move(planted), std::move(polarity)};
}

LabeledDataset make_continuous_blobs(const ContinuousBlobsParams& p) {
  if (p.n == 0 || p.d == 0 || p.classes < 2) {
    throw Error(ErrorCode::InvalidConfig, "need n, d >= 1 and k >= 2");
  }
  if (!(p.active_fraction > 0.0 && p.active_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "active_fraction must lie in (0, 1]");
  }
  Rng rng(p.seed);
  const std::size_t active = std::max<std::size_t>(
      1, static_cast<std::size_t>(p.active_fraction * static_cast<double>(p.d)));
  // Each class lights up its own random subset of features.
  std::vector<std::vector<bool>> active_sets(p.classes, std::vector<bool>(p.d, false));
  for (auto& set : active_sets) {
    std::vector<std::size_t> order(p.d);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t t = 0; t < active; ++t) set[order[t]] = true;
  }
  std::vector<Sample> samples(p.n);
  std::vector<int> labels(p.n);
  for (std::size_t i = 0; i < p.n; ++i) {
    const std::size_t c = i % p.classes;
    labels[i] = static_cast<int>(c);
    Sample& s = samples[i];
    s.id = i;
    s.features.resize(p.d);
    for (std::size_t j = 0; j < p.d; ++j) {
      const double v = active_sets[c][j] ? 0.7 + 0.12 * rng.normal()
                                         : rng.uniform(0.0, 0.08);
      s.features[j] = std::clamp(v, 0.0, 1.0);
    }
  }
  FeatureSpace space{FeatureKind::Continuous,
                     std::vector<FeatureBounds>(p.d, FeatureBounds{0.0, 1.0})};
  return LabeledDataset(std::move(samples), std::move(labels), p.classes,
                        std::move(space));
}

}  // namespace evadex
