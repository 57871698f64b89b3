#include <algorithm>
#include <cmath>
#include <numeric>

#include "evadex/error.hpp"
#include "evadex/models.hpp"
#include "evadex/rng.hpp"

namespace evadex {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::LogReg: return "logreg";
    case ModelKind::Mlp: return "mlp";
    case ModelKind::Tree: return "tree";
  }
  return "unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "logreg") return ModelKind::LogReg;
  if (name == "mlp") return ModelKind::Mlp;
  if (name == "tree") return ModelKind::Tree;
  throw Error(ErrorCode::InvalidConfig,
              "unknown model kind '" + std::string(name) + "'");
}

int argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

int PredictionModel::predict(std::span<const double> x) const {
  return argmax(predict_proba(x));
}

double accuracy(const PredictionModel& model, const LabeledDataset& data) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "accuracy of no samples");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (model.predict(data.sample(i)) == data.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainConfig TrainConfig::defaults(ModelKind kind) {
  TrainConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case ModelKind::LogReg:
      cfg.learning_rate = 0.1;
      cfg.epochs = 500;
      break;
    case ModelKind::Mlp:
      cfg.learning_rate = 0.05;
      cfg.epochs = 200;
      cfg.hidden_units = {16};
      break;
    case ModelKind::Tree:
      break;
  }
  return cfg;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvalidConfig, what);
  };
  if (!(l2 >= 0.0) || !std::isfinite(l2)) fail("l2 must be >= 0");
  switch (kind) {
    case ModelKind::Mlp:
      if (hidden_units.empty()) fail("mlp needs hidden_units");
      for (auto u : hidden_units) {
        if (u == 0) fail("hidden layer with zero units");
      }
      if (batch_size == 0) fail("batch_size must be >= 1");
      [[fallthrough]];
    case ModelKind::LogReg:
      if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        fail("learning_rate must be > 0");
      }
      if (epochs < 1) fail("epochs must be >= 1");
      break;
    case ModelKind::Tree:
      if (max_depth < 1) fail("max_depth must be >= 1");
      if (min_leaf < 1) fail("min_leaf must be >= 1");
      break;
  }
}

namespace {

void require_trainable(const LabeledDataset& data) {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  std::size_t present = 0;
  for (auto c : data.class_counts()) present += c > 0 ? 1 : 0;
  if (data.num_classes() < 2 || present < 2) {
    throw Error(ErrorCode::DegenerateLabels, "training needs two classes");
  }
}

}  // namespace

LogRegModel train_logreg(const LabeledDataset& data, const TrainConfig& cfg,
                         TrainTrace* trace) {
  cfg.validate();
  require_trainable(data);
  LogRegModel model(data.num_classes(), data.dim());
  std::vector<double> params = model.parameters();
  std::vector<double> grad, candidate(params.size());
  double step = cfg.learning_rate;
  double current = model.loss(data, cfg.l2, &grad);
  if (trace) trace->losses.assign(1, current);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Full-batch gradient step; the step is halved whenever it would raise
    // the loss, so the loss sequence is non-increasing.
    double next = current;
    for (int attempt = 0; attempt < 40; ++attempt) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        candidate[i] = params[i] - step * grad[i];
      }
      model.set_parameters(candidate);
      next = model.loss(data, cfg.l2);
      if (next <= current) break;
      step *= 0.5;
    }
    if (next > current) {
      model.set_parameters(params);
      if (trace) trace->losses.push_back(current);
      continue;
    }
    params = candidate;
    current = model.loss(data, cfg.l2, &grad);
    if (trace) trace->losses.push_back(current);
  }
  return model;
}

MlpModel train_mlp(const LabeledDataset& data, const TrainConfig& cfg,
                   TrainTrace* trace) {
  cfg.validate();
  require_trainable(data);
  Rng rng(cfg.seed);
  std::vector<DenseLayer> layers;
  std::size_t inputs = data.dim();
  auto add_layer = [&](std::size_t outputs) {
    DenseLayer layer;
    layer.inputs = inputs;
    layer.outputs = outputs;
    const double limit = std::sqrt(6.0 / static_cast<double>(inputs + outputs));
    layer.weights.resize(inputs * outputs);
    for (double& w : layer.weights) w = rng.uniform(-limit, limit);
    layer.bias.assign(outputs, 0.0);
    layers.push_back(std::move(layer));
    inputs = outputs;
  };
  for (auto units : cfg.hidden_units) add_layer(units);
  add_layer(data.num_classes());
  MlpModel model(std::move(layers));

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> params = model.parameters();
  std::vector<double> grad;
  if (trace) trace->losses.assign(1, model.loss(data, cfg.l2));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::span<const std::size_t> batch(order.data() + start, stop - start);
      model.loss(data, cfg.l2, &grad, batch);
      for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= cfg.learning_rate * grad[i];
      }
      model.set_parameters(params);
    }
    if (trace) trace->losses.push_back(model.loss(data, cfg.l2));
  }
  return model;
}

namespace {

struct TreeBuilder {
  const LabeledDataset& data;
  const TrainConfig& cfg;
  std::size_t k;
  std::vector<TreeNode> nodes;

  std::vector<double> counts_of(std::span<const std::size_t> rows) const {
    std::vector<double> counts(k, 0.0);
    for (auto r : rows) counts[static_cast<std::size_t>(data.label(r))] += 1.0;
    return counts;
  }

  int make_leaf(const std::vector<double>& counts, std::size_t n) {
    TreeNode leaf;
    leaf.distribution.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
      leaf.distribution[c] = counts[c] / static_cast<double>(n);
    }
    nodes.push_back(std::move(leaf));
    return static_cast<int>(nodes.size() - 1);
  }

  int build(std::vector<std::size_t> rows, int depth) {
    const auto counts = counts_of(rows);
    const double parent = gini_impurity(counts);
    const std::size_t n = rows.size();
    if (depth >= cfg.max_depth || n < 2 * cfg.min_leaf || parent <= 0.0) {
      return make_leaf(counts, n);
    }

    // Exhaustive search over features (ascending) and midpoint thresholds
    // (ascending); only a strictly better decrease replaces the incumbent.
    double best_gain = 1e-12;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> sorted(rows);
    std::vector<double> left(k), right(k);
    for (std::size_t j = 0; j < data.dim(); ++j) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](auto a, auto b) {
        return data.sample(a).features[j] < data.sample(b).features[j];
      });
      std::fill(left.begin(), left.end(), 0.0);
      right = counts;
      for (std::size_t pos = 0; pos + 1 < n; ++pos) {
        const auto c = static_cast<std::size_t>(data.label(sorted[pos]));
        left[c] += 1.0;
        right[c] -= 1.0;
        const double a = data.sample(sorted[pos]).features[j];
        const double b = data.sample(sorted[pos + 1]).features[j];
        if (a == b) continue;
        const std::size_t n_left = pos + 1;
        if (n_left < cfg.min_leaf || n - n_left < cfg.min_leaf) continue;
        const double gain = parent - gini_impurity(left) - gini_impurity(right);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(j);
          best_threshold = 0.5 * (a + b);
        }
      }
    }
    if (best_feature < 0) return make_leaf(counts, n);

    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : rows) {
      const double v =
          data.sample(r).features[static_cast<std::size_t>(best_feature)];
      (v <= best_threshold ? left_rows : right_rows).push_back(r);
    }
    const int self = static_cast<int>(nodes.size());
    TreeNode split;
    split.feature = best_feature;
    split.threshold = best_threshold;
    nodes.push_back(std::move(split));
    rows.clear();
    rows.shrink_to_fit();
    const int l = build(std::move(left_rows), depth + 1);
    const int r = build(std::move(right_rows), depth + 1);
    nodes[static_cast<std::size_t>(self)].left = l;
    nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }
};

}  // namespace

TreeModel train_tree(const LabeledDataset& data, const TrainConfig& cfg) {
  TrainConfig tree_cfg = cfg;
  tree_cfg.kind = ModelKind::Tree;
  tree_cfg.validate();
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "training set is empty");
  TreeBuilder builder{data, tree_cfg, data.num_classes(), {}};
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), 0);
  builder.build(std::move(rows), 0);
  return TreeModel(data.num_classes(), data.dim(), std::move(builder.nodes));
}

}  // namespace evadex
