#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evadex {

struct Sample {
  std::vector<double> features;
  std::uint64_t id = 0;

  std::size_t dim() const { return features.size(); }
};

enum class FeatureKind { Binary, Continuous };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view name);

struct FeatureBounds {
  double lo = 0.0;
  double hi = 1.0;

  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
  bool operator==(const FeatureBounds&) const = default;
};

/// Value domain of a dataset's features. Binary spaces always carry [0, 1]
/// bounds.
struct FeatureSpace {
  FeatureKind kind = FeatureKind::Continuous;
  std::vector<FeatureBounds> bounds;

  std::size_t dim() const { return bounds.size(); }
};

/// Immutable labelled feature matrix. The constructor validates every
/// invariant, so a constructed dataset is always consistent.
class LabeledDataset {
 public:
  LabeledDataset(std::vector<Sample> samples, std::vector<int> labels,
                 std::size_t num_classes, FeatureSpace space,
                 std::vector<std::string> feature_names = {});

  const std::vector<Sample>& samples() const { return samples_; }
  const std::vector<int>& labels() const { return labels_; }
  const Sample& sample(std::size_t i) const { return samples_[i]; }
  int label(std::size_t i) const { return labels_[i]; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  std::size_t dim() const { return space_.dim(); }
  std::size_t num_classes() const { return num_classes_; }
  FeatureKind kind() const { return space_.kind; }
  const FeatureSpace& space() const { return space_; }
  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }

  // Selects rows by position, preserving the feature space.
  LabeledDataset subset(std::span<const std::size_t> positions) const;
  std::vector<std::size_t> class_counts() const;

 private:
  std::vector<Sample> samples_;
  std::vector<int> labels_;
  std::size_t num_classes_;
  FeatureSpace space_;
  std::vector<std::string> feature_names_;
};

struct CsvOptions {
  std::string label_column = "label";
  // Overrides feature-kind inference when set.
  std::optional<FeatureKind> feature_kind;
};

/// Reads a header-first CSV file. Sample ids are the 0-based data row
/// numbers. Binary is inferred iff every feature value is 0 or 1; continuous
/// bounds are the per-column (min, max).
LabeledDataset load_dataset_csv(const std::filesystem::path& path,
                                const CsvOptions& options = {});
LabeledDataset parse_dataset_csv(std::string_view text,
                                 const CsvOptions& options = {});

/// Writes features then the label column. Values use round-trip precision.
void write_dataset_csv(const LabeledDataset& data,
                       const std::filesystem::path& path,
                       std::string_view label_column = "label");
std::string format_dataset_csv(const LabeledDataset& data,
                               std::string_view label_column = "label");

struct SplitFractions {
  double train = 0.6;
  double evasion = 0.4;
};

/// Stratified, seeded split into disjoint (train, evasion) subsets. Each
/// part's size is round(n * fraction); per-class counts use largest-remainder
/// allocation so class proportions hold within one sample per class.
std::pair<LabeledDataset, LabeledDataset> split_dataset(
    const LabeledDataset& data, SplitFractions fractions, std::uint64_t seed);

}  // namespace evadex
