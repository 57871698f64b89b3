#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "evadex/dataset.hpp"

namespace evadex {

/// Feature-space perturbation that turned sample `sample_id` into its
/// adversarial variant. Indices are kept in the order they were perturbed.
struct PerturbationRecord {
  std::uint64_t sample_id = 0;
  std::vector<std::size_t> perturbed_indices;
  std::vector<double> deltas;
  bool evasive = false;
  int original_label = 0;
  int adversarial_label = 0;

  // Number of perturbed features, P(x').
  std::size_t size() const { return perturbed_indices.size(); }
  bool empty() const { return perturbed_indices.empty(); }

  // Throws IndexOutOfRange / ShapeMismatch / InvalidConfig on a broken record.
  void validate(std::size_t dim) const;

  bool operator==(const PerturbationRecord&) const = default;
};

/// x'_j = clamp(x_j + delta_j) for perturbed j. Binary spaces snap the result
/// to {0, 1}.
Sample apply_perturbation(const Sample& x, const PerturbationRecord& record,
                          const FeatureSpace& space);

}  // namespace evadex
