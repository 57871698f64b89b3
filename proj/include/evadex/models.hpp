#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evadex/dataset.hpp"
#include "evadex/model.hpp"

namespace evadex {

/// Hyperparameters for every model kind. Fields irrelevant to a kind are
/// ignored by its trainer.
struct TrainConfig {
  ModelKind kind = ModelKind::LogReg;
  double learning_rate = 0.1;
  int epochs = 500;
  std::vector<std::size_t> hidden_units;
  std::size_t batch_size = 32;
  int max_depth = 8;
  std::size_t min_leaf = 5;
  std::uint64_t seed = 0;
  double l2 = 0.0;

  // Desk-scale defaults for the given kind.
  static TrainConfig defaults(ModelKind kind);
  void validate() const;
};

/// Per-epoch training loss, recorded when requested.
struct TrainTrace {
  std::vector<double> losses;
};

// Softmax (multinomial) logistic regression.
class LogRegModel final : public PredictionModel {
 public:
  LogRegModel(std::size_t num_classes, std::size_t dim);
  LogRegModel(std::size_t num_classes, std::size_t dim,
              std::vector<double> weights, std::vector<double> bias);

  std::size_t num_classes() const override { return k_; }
  std::size_t dim() const override { return d_; }
  std::vector<double> predict_proba(std::span<const double> x) const override;
  using PredictionModel::predict_proba;

  // Row-major k x d.
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }

  // Flat parameter vector: weights then bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);
  std::size_t num_parameters() const { return k_ * d_ + k_; }

  /// Mean cross-entropy plus (l2/2)*||W||^2, and its gradient with respect
  /// to parameters() when `gradient` is non-null.
  double loss(const LabeledDataset& data, double l2,
              std::vector<double>* gradient = nullptr) const;

 private:
  std::size_t k_;
  std::size_t d_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // row-major outputs x inputs
  std::vector<double> bias;
};

// Sigmoid hidden layers with a softmax output layer.
class MlpModel final : public PredictionModel {
 public:
  explicit MlpModel(std::vector<DenseLayer> layers);

  std::size_t num_classes() const override { return layers_.back().outputs; }
  std::size_t dim() const override { return layers_.front().inputs; }
  std::vector<double> predict_proba(std::span<const double> x) const override;
  using PredictionModel::predict_proba;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<std::size_t> hidden_units() const;

  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);
  std::size_t num_parameters() const;

  // Loss over the given rows (all rows when empty) and its gradient.
  double loss(const LabeledDataset& data, double l2,
              std::vector<double>* gradient = nullptr,
              std::span<const std::size_t> rows = {}) const;

 private:
  std::vector<DenseLayer> layers_;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> distribution;  // class probabilities, leaves only

  bool is_leaf() const { return feature < 0; }
};

/// Array-encoded binary tree. A sample goes left when x[feature] <= threshold.
class TreeModel final : public PredictionModel {
 public:
  TreeModel(std::size_t num_classes, std::size_t dim,
            std::vector<TreeNode> nodes);

  std::size_t num_classes() const override { return k_; }
  std::size_t dim() const override { return d_; }
  std::vector<double> predict_proba(std::span<const double> x) const override;
  using PredictionModel::predict_proba;

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t num_internal() const;
  std::size_t depth() const;
  // Index of the leaf reached by x.
  std::size_t leaf_index(std::span<const double> x) const;

 private:
  std::size_t k_;
  std::size_t d_;
  std::vector<TreeNode> nodes_;
};

LogRegModel train_logreg(const LabeledDataset& data, const TrainConfig& cfg,
                         TrainTrace* trace = nullptr);
MlpModel train_mlp(const LabeledDataset& data, const TrainConfig& cfg,
                   TrainTrace* trace = nullptr);
TreeModel train_tree(const LabeledDataset& data, const TrainConfig& cfg);

/// Weighted Gini impurity n * (1 - sum p_c^2) of a class-count vector.
double gini_impurity(std::span<const double> counts);

}  // namespace evadex
