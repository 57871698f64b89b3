#include <cmath>

#include "evadex/error.hpp"
#include "evadex/models.hpp"
#include "math_detail.hpp"

namespace evadex {

LogRegModel::LogRegModel(std::size_t num_classes, std::size_t dim)
    : k_(num_classes),
      d_(dim),
      weights_(num_classes * dim, 0.0),
      bias_(num_classes, 0.0) {
  if (k_ < 2 || d_ < 1) {
    throw Error(ErrorCode::InvalidConfig, "logreg needs k >= 2 and d >= 1");
  }
}

LogRegModel::LogRegModel(std::size_t num_classes, std::size_t dim,
                         std::vector<double> weights, std::vector<double> bias)
    : LogRegModel(num_classes, dim) {
  if (weights.size() != k_ * d_ || bias.size() != k_) {
    throw Error(ErrorCode::ShapeMismatch, "logreg parameter shape mismatch");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::Corrupt, "non-finite weight");
  }
  for (double b : bias) {
    if (!std::isfinite(b)) throw Error(ErrorCode::Corrupt, "non-finite bias");
  }
  weights_ = std::move(weights);
  bias_ = std::move(bias);
}

std::vector<double> LogRegModel::predict_proba(std::span<const double> x) const {
  if (x.size() != d_) {
    throw Error(ErrorCode::ShapeMismatch, "input dimension mismatch");
  }
  std::vector<double> z(bias_);
  for (std::size_t c = 0; c < k_; ++c) {
    const double* w = &weights_[c * d_];
    double acc = z[c];
    for (std::size_t j = 0; j < d_; ++j) acc += w[j] * x[j];
    z[c] = acc;
  }
  detail::softmax_inplace(z);
  return z;
}

std::vector<double> LogRegModel::parameters() const {
  std::vector<double> p(weights_);
  p.insert(p.end(), bias_.begin(), bias_.end());
  return p;
}

void LogRegModel::set_parameters(std::span<const double> params) {
  if (params.size() != num_parameters()) {
    throw Error(ErrorCode::ShapeMismatch, "parameter count mismatch");
  }
  std::copy(params.begin(), params.begin() + k_ * d_, weights_.begin());
  std::copy(params.begin() + k_ * d_, params.end(), bias_.begin());
}

double LogRegModel::loss(const LabeledDataset& data, double l2,
                         std::vector<double>* gradient) const {
  if (data.empty()) throw Error(ErrorCode::EmptyDataset, "no samples");
  const double n = static_cast<double>(data.size());
  if (gradient) gradient->assign(num_parameters(), 0.0);
  double total = 0.0;
  std::vector<double> z(k_);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& x = data.sample(i).features;
    const auto y = static_cast<std::size_t>(data.label(i));
    for (std::size_t c = 0; c < k_; ++c) {
      const double* w = &weights_[c * d_];
      double acc = bias_[c];
      for (std::size_t j = 0; j < d_; ++j) acc += w[j] * x[j];
      z[c] = acc;
    }
    const double zy = z[y];
    const double lse = detail::softmax_inplace(z);
    total += lse - zy;
    if (gradient) {
      auto& g = *gradient;
      for (std::size_t c = 0; c < k_; ++c) {
        const double r = (z[c] - (c == y ? 1.0 : 0.0)) / n;
        double* gw = &g[c * d_];
        for (std::size_t j = 0; j < d_; ++j) gw[j] += r * x[j];
        g[k_ * d_ + c] += r;
      }
    }
  }
  double penalty = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    penalty += weights_[i] * weights_[i];
    if (gradient) (*gradient)[i] += l2 * weights_[i];
  }
  return total / n + 0.5 * l2 * penalty;
}

}  // namespace evadex
