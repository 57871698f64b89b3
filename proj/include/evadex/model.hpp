#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "evadex/dataset.hpp"

namespace evadex {

enum class ModelKind { LogReg, Mlp, Tree };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

/// Black-box classifier f_b. Implementations supply class probabilities;
/// the predicted label is always their argmax (lowest index on ties).
class PredictionModel {
 public:
  virtual ~PredictionModel() = default;

  virtual std::size_t num_classes() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> predict_proba(std::span<const double> x) const = 0;

  int predict(std::span<const double> x) const;

  std::vector<double> predict_proba(const Sample& x) const {
    return predict_proba(std::span<const double>(x.features));
  }
  int predict(const Sample& x) const {
    return predict(std::span<const double>(x.features));
  }
};

int argmax(std::span<const double> values);

/// Fraction of samples whose prediction equals the label.
double accuracy(const PredictionModel& model, const LabeledDataset& data);

}  // namespace evadex
