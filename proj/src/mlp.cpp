#include <cmath>

#include "evadex/error.hpp"
#include "evadex/models.hpp"
#include "math_detail.hpp"

namespace evadex {

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "mlp needs at least one hidden layer");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (layer.inputs == 0 || layer.outputs == 0 ||
        layer.weights.size() != layer.inputs * layer.outputs ||
        layer.bias.size() != layer.outputs) {
      throw Error(ErrorCode::ShapeMismatch, "malformed mlp layer");
    }
    if (l > 0 && layer.inputs != layers_[l - 1].outputs) {
      throw Error(ErrorCode::ShapeMismatch, "mlp layer sizes do not chain");
    }
    for (double w : layer.weights) {
      if (!std::isfinite(w)) throw Error(ErrorCode::Corrupt, "non-finite weight");
    }
    for (double b : layer.bias) {
      if (!std::isfinite(b)) throw Error(ErrorCode::Corrupt, "non-finite bias");
    }
  }
  if (layers_.back().outputs < 2) {
    throw Error(ErrorCode::InvalidConfig, "mlp output layer needs k >= 2");
  }
}

std::vector<std::size_t> MlpModel::hidden_units() const {
  std::vector<std::size_t> units;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    units.push_back(layers_[l].outputs);
  }
  return units;
}

namespace {

void dense_forward(const DenseLayer& layer, std::span<const double> in,
                   std::vector<double>& out) {
  out.assign(layer.bias.begin(), layer.bias.end());
  for (std::size_t o = 0; o < layer.outputs; ++o) {
    const double* w = &layer.weights[o * layer.inputs];
    double acc = out[o];
    for (std::size_t i = 0; i < layer.inputs; ++i) acc += w[i] * in[i];
    out[o] = acc;
  }
}

}  // namespace

std::vector<double> MlpModel::predict_proba(std::span<const double> x) const {
  if (x.size() != dim()) {
    throw Error(ErrorCode::ShapeMismatch, "input dimension mismatch");
  }
  std::vector<double> current(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    dense_forward(layers_[l], current, next);
    if (l + 1 < layers_.size()) {
      for (double& v : next) v = detail::sigmoid(v);
    }
    current.swap(next);
  }
  detail::softmax_inplace(current);
  return current;
}

std::size_t MlpModel::num_parameters() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weights.size() + layer.bias.size();
  return n;
}

std::vector<double> MlpModel::parameters() const {
  std::vector<double> p;
  p.reserve(num_parameters());
  for (const auto& layer : layers_) {
    p.insert(p.end(), layer.weights.begin(), layer.weights.end());
    p.insert(p.end(), layer.bias.begin(), layer.bias.end());
  }
  return p;
}

void MlpModel::set_parameters(std::span<const double> params) {
  if (params.size() != num_parameters()) {
    throw Error(ErrorCode::ShapeMismatch, "parameter count mismatch");
  }
  std::size_t off = 0;
  for (auto& layer : layers_) {
    std::copy_n(params.begin() + off, layer.weights.size(), layer.weights.begin());
    off += layer.weights.size();
    std::copy_n(params.begin() + off, layer.bias.size(), layer.bias.begin());
    off += layer.bias.size();
  }
}

double MlpModel::loss(const LabeledDataset& data, double l2,
                      std::vector<double>* gradient,
                      std::span<const std::size_t> rows) const {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no samples");
  const std::size_t n_rows = rows.empty() ? data.size() : rows.size();
  const double n = static_cast<double>(n_rows);
  const std::size_t L = layers_.size();

  // Offsets of each layer's weights inside the flat parameter vector.
  std::vector<std::size_t> offsets(L);
  {
    std::size_t off = 0;
    for (std::size_t l = 0; l < L; ++l) {
      offsets[l] = off;
      off += layers_[l].weights.size() + layers_[l].bias.size();
    }
  }
  if (gradient) gradient->assign(num_parameters(), 0.0);

  std::vector<std::vector<double>> act(L + 1);
  std::vector<std::vector<double>> delta(L);
  double total = 0.0;
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::size_t i = rows.empty() ? r : rows[r];
    const auto y = static_cast<std::size_t>(data.label(i));
    act[0] = data.sample(i).features;
    for (std::size_t l = 0; l < L; ++l) {
      dense_forward(layers_[l], act[l], act[l + 1]);
      if (l + 1 < L) {
        for (double& v : act[l + 1]) v = detail::sigmoid(v);
      }
    }
    const double zy = act[L][y];
    const double lse = detail::softmax_inplace(act[L]);
    total += lse - zy;
    if (!gradient) continue;

    delta[L - 1] = act[L];
    delta[L - 1][y] -= 1.0;
    for (std::size_t l = L - 1; l > 0; --l) {
      const auto& layer = layers_[l];
      delta[l - 1].assign(layer.inputs, 0.0);
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double* w = &layer.weights[o * layer.inputs];
        for (std::size_t in = 0; in < layer.inputs; ++in) {
          delta[l - 1][in] += w[in] * delta[l][o];
        }
      }
      for (std::size_t in = 0; in < layer.inputs; ++in) {
        const double a = act[l][in];
        delta[l - 1][in] *= a * (1.0 - a);
      }
    }
    auto& g = *gradient;
    for (std::size_t l = 0; l < L; ++l) {
      const auto& layer = layers_[l];
      double* gw = &g[offsets[l]];
      double* gb = gw + layer.weights.size();
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double dl = delta[l][o] / n;
        for (std::size_t in = 0; in < layer.inputs; ++in) {
          gw[o * layer.inputs + in] += dl * act[l][in];
        }
        gb[o] += dl;
      }
    }
  }
  double penalty = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& w = layers_[l].weights;
    for (std::size_t i = 0; i < w.size(); ++i) {
      penalty += w[i] * w[i];
      if (gradient) (*gradient)[offsets[l] + i] += l2 * w[i];
    }
  }
  return total / n + 0.5 * l2 * penalty;
}

}  // namespace evadex
