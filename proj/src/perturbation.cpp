#include "evadex/perturbation.hpp"

#include <algorithm>

#include "evadex/error.hpp"

namespace evadex {

void PerturbationRecord::validate(std::size_t dim) const {
  if (deltas.size() != perturbed_indices.size()) {
    throw Error(ErrorCode::ShapeMismatch, "deltas and indices differ in length");
  }
  std::vector<std::size_t> sorted = perturbed_indices;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(ErrorCode::InvalidConfig, "perturbed indices are not distinct");
  }
  if (!sorted.empty() && sorted.back() >= dim) {
    throw Error(ErrorCode::IndexOutOfRange,
                "perturbed index " + std::to_string(sorted.back()) +
                    " >= d=" + std::to_string(dim));
  }
  if (evasive && adversarial_label == original_label) {
    throw Error(ErrorCode::InvalidConfig,
                "evasive record keeps the original label");
  }
}

Sample apply_perturbation(const Sample& x, const PerturbationRecord& record,
                          const FeatureSpace& space) {
  if (x.dim() != space.dim()) {
    throw Error(ErrorCode::ShapeMismatch, "sample does not match feature space");
  }
  record.validate(x.dim());
  Sample out = x;
  for (std::size_t i = 0; i < record.size(); ++i) {
    const std::size_t j = record.perturbed_indices[i];
    double v = space.bounds[j].clamp(x.features[j] + record.deltas[i]);
    if (space.kind == FeatureKind::Binary) v = v >= 0.5 ? 1.0 : 0.0;
    out.features[j] = v;
  }
  return out;
}

}  // namespace evadex
