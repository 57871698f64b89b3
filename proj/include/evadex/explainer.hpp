#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "evadex/dataset.hpp"
#include "evadex/model.hpp"
#include "evadex/perturbation.hpp"

namespace evadex {

enum class KernelKind { Exponential, ShapleyKernel };

/// What an "off" mask bit does to a feature. Zero replaces the value with 0.
/// Toggle replaces a binary value v with 1 - v, which coincides with Zero on
/// present features and makes absent ones observable.
enum class MaskFill { Zero, Toggle };

std::string_view to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string_view name);
std::string_view to_string(MaskFill fill);
MaskFill mask_fill_from_string(std::string_view name);

inline constexpr double kShapleyEndpointWeight = 1e6;

struct ExplainConfig {
  // 0 selects max(2000, 10 * d).
  std::size_t num_perturbations = 0;
  KernelKind kernel = KernelKind::Exponential;
  // 0 selects 0.75 * sqrt(d).
  double kernel_width = 0.0;
  double eps_neutral = 1e-9;
  std::uint64_t seed = 0;
  double ridge = 1e-6;
  MaskFill fill = MaskFill::Zero;

  // Copy with defaults filled in for dimension d; throws InvalidConfig.
  ExplainConfig resolved(std::size_t d) const;
};

using Mask = std::vector<std::uint8_t>;

struct LocalPerturbation {
  Mask mask;  // 1 keeps feature j, 0 replaces it
  Sample z;
};

/// Draws l masks with i.i.d. fair bits. Mask 0 is always all ones; with
/// `include_empty` mask 1 is all zeros.
std::vector<LocalPerturbation> sample_local_perturbations(
    const Sample& x, std::size_t l, std::uint64_t seed,
    MaskFill fill = MaskFill::Zero, bool include_empty = false);

Sample fill_mask(const Sample& x, const Mask& mask, MaskFill fill);

/// Proximity weight of a mask with s kept bits out of d.
///   Exponential: exp(-D^2 / width^2), D^2 = d - s the squared Euclidean
///     distance between the mask and the all-ones mask.
///   ShapleyKernel: (d - 1) / (C(d, s) s (d - s)); s in {0, d} is capped.
double kernel_weight(const Mask& mask, KernelKind kind, double width,
                     std::size_t d);
double shapley_kernel(std::size_t d, std::size_t s);

struct LinearFit {
  std::vector<double> coefficients;
  double intercept = 0.0;
};

/// Minimizes sum_i w_i (t_i - b - m_i . beta)^2 + ridge * |beta|^2.
/// Throws Singular when fewer than d + 1 samples carry weight or the
/// regularized normal equations are not positive definite.
LinearFit fit_weighted_linear(std::span<const Mask> masks,
                              std::span<const double> targets,
                              std::span<const double> weights, double ridge);

struct ExplanationSet {
  std::uint64_t sample_id = 0;
  std::size_t num_classes = 0;
  std::size_t dim = 0;
  // weights[c][j]: weight of feature j toward class c.
  std::vector<std::vector<double>> weights;
  std::vector<double> intercepts;

  bool operator==(const ExplanationSet&) const = default;
};

/// Local surrogate explanation of model at x: one weighted linear fit of
/// each class probability over the masks. Binary models fit class 1 only and
/// set class 0 to the exact negation.
ExplanationSet explain(const PredictionModel& model, const Sample& x,
                       const ExplainConfig& cfg);

enum class DirectionTag { Positive, Negative, Neutral };

std::string_view to_string(DirectionTag tag);
DirectionTag direction(double w, double eps_neutral);

struct DirectionCounts {
  std::size_t pos = 0;
  std::size_t neg = 0;
  std::size_t neut = 0;

  std::size_t total() const { return pos + neg + neut; }
  bool operator==(const DirectionCounts&) const = default;
};

/// Direction counts of weights[cls][j] over the record's perturbed features.
DirectionCounts direction_counts(const ExplanationSet& expl,
                                 const PerturbationRecord& record,
                                 std::size_t cls, double eps_neutral);

}  // namespace evadex
