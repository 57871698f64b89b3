#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "evadex/dataset.hpp"

namespace evadex {

/// Sparse binary data with a planted majority-vote rule. Planted features
/// carry a polarity: one group votes for class 1 when present, the other
/// votes for class 1 when absent. The label is the majority of the planted
/// votes (odd count, so no ties), then flipped with probability label_noise.
struct BinaryPlantedParams {
  std::size_t n = 1000;
  std::size_t d = 50;
  std::size_t planted = 5;
  double density = 0.1;  // presence rate of unplanted features
  double label_noise = 0.05;
  std::uint64_t seed = 0;
};

/// k blobs of active features around 0.7, clipped to [0, 1], over a quiet
/// background band [0, 0.08].
struct ContinuousBlobsParams {
  std::size_t n = 1000;
  std::size_t d = 20;
  std::size_t classes = 3;
  double active_fraction = 0.25;
  std::uint64_t seed = 0;
};

struct BinaryPlantedData {
  LabeledDataset data;
  std::vector<std::size_t> planted;  // positions of planted features
  std::vector<int> polarity;         // +1 votes for class 1 when present
};

BinaryPlantedData make_binary_planted(const BinaryPlantedParams& params);
LabeledDataset make_continuous_blobs(const ContinuousBlobsParams& params);

}  // namespace evadex
