#include <cmath>

#include "evadex/error.hpp"
#include "evadex/models.hpp"

namespace evadex {

TreeModel::TreeModel(std::size_t num_classes, std::size_t dim,
                     std::vector<TreeNode> nodes)
    : k_(num_classes), d_(dim), nodes_(std::move(nodes)) {
  if (k_ < 1 || d_ < 1 || nodes_.empty()) {
    throw Error(ErrorCode::InvalidConfig, "tree needs k, d >= 1 and a root");
  }
  // Children must point forward and have exactly one parent, so the
  // array encodes a tree rooted at node 0.
  std::vector<int> parents(nodes_.size(), 0);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& node = nodes_[i];
    if (node.is_leaf()) {
      if (node.distribution.size() != k_) {
        throw Error(ErrorCode::Corrupt, "leaf distribution has wrong size");
      }
      double sum = 0.0;
      for (double p : node.distribution) {
        if (!std::isfinite(p) || p < 0.0) {
          throw Error(ErrorCode::Corrupt, "invalid leaf probability");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorCode::Corrupt, "leaf distribution does not sum to 1");
      }
      continue;
    }
    if (static_cast<std::size_t>(node.feature) >= d_ ||
        !std::isfinite(node.threshold)) {
      throw Error(ErrorCode::Corrupt, "invalid split node");
    }
    for (int child : {node.left, node.right}) {
      if (child <= static_cast<int>(i) ||
          static_cast<std::size_t>(child) >= nodes_.size()) {
        throw Error(ErrorCode::Corrupt, "tree child index breaks ordering");
      }
      if (++parents[static_cast<std::size_t>(child)] > 1) {
        throw Error(ErrorCode::Corrupt, "tree node has two parents");
      }
    }
  }
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (parents[i] != 1) throw Error(ErrorCode::Corrupt, "unreachable tree node");
  }
}

std::size_t TreeModel::leaf_index(std::span<const double> x) const {
  if (x.size() != d_) {
    throw Error(ErrorCode::ShapeMismatch, "input dimension mismatch");
  }
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const TreeNode& node = nodes_[i];
    i = static_cast<std::size_t>(
        x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                    : node.right);
  }
  return i;
}

std::vector<double> TreeModel::predict_proba(std::span<const double> x) const {
  return nodes_[leaf_index(x)].distribution;
}

std::size_t TreeModel::num_internal() const {
  std::size_t n = 0;
  for (const auto& node : nodes_) n += node.is_leaf() ? 0 : 1;
  return n;
}

std::size_t TreeModel::depth() const {
  std::vector<std::size_t> level(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

double gini_impurity(std::span<const double> counts) {
  double n = 0.0, sq = 0.0;
  for (double c : counts) {
    n += c;
    sq += c * c;
  }
  return n > 0.0 ? n - sq / n : 0.0;
}

}  // namespace evadex
