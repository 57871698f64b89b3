#include "evadex/explainer.hpp"

#include <algorithm>
#include <cmath>

#include "evadex/error.hpp"
#include "evadex/rng.hpp"

namespace evadex {

std::string_view to_string(KernelKind kind) {
  return kind == KernelKind::Exponential ? "exponential" : "shapley";
}

KernelKind kernel_kind_from_string(std::string_view name) {
  if (name == "exponential") return KernelKind::Exponential;
  if (name == "shapley") return KernelKind::ShapleyKernel;
  throw Error(ErrorCode::InvalidConfig, "unknown kernel '" + std::string(name) + "'");
}

std::string_view to_string(MaskFill fill) {
  return fill == MaskFill::Zero ? "zero" : "toggle";
}

MaskFill mask_fill_from_string(std::string_view name) {
  if (name == "zero") return MaskFill::Zero;
  if (name == "toggle") return MaskFill::Toggle;
  throw Error(ErrorCode::InvalidConfig,
              "unknown mask fill '" + std::string(name) + "'");
}

std::string_view to_string(DirectionTag tag) {
  switch (tag) {
    case DirectionTag::Positive: return "positive";
    case DirectionTag::Negative: return "negative";
    case DirectionTag::Neutral: return "neutral";
  }
  return "unknown";
}

ExplainConfig ExplainConfig::resolved(std::size_t d) const {
  ExplainConfig out = *this;
  if (out.num_perturbations == 0) {
    out.num_perturbations = std::max<std::size_t>(2000, 10 * d);
  }
  if (out.kernel_width == 0.0) {
    out.kernel_width = 0.75 * std::sqrt(static_cast<double>(d));
  }
  if (out.num_perturbations < d + 2) {
    throw Error(ErrorCode::InvalidConfig,
                "num_perturbations must be >= d + 2 = " + std::to_string(d + 2));
  }
  if (!(out.kernel_width > 0.0) || !std::isfinite(out.kernel_width)) {
    throw Error(ErrorCode::InvalidConfig, "kernel_width must be > 0");
  }
  if (!(out.eps_neutral >= 0.0) || !std::isfinite(out.eps_neutral)) {
    throw Error(ErrorCode::InvalidConfig, "eps_neutral must be finite and >= 0");
  }
  if (!(out.ridge >= 0.0) || !std::isfinite(out.ridge)) {
    throw Error(ErrorCode::InvalidConfig, "ridge must be >= 0");
  }
  return out;
}

Sample fill_mask(const Sample& x, const Mask& mask, MaskFill fill) {
  Sample z = x;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask[j]) continue;
    z.features[j] = fill == MaskFill::Zero ? 0.0 : 1.0 - x.features[j];
  }
  return z;
}

std::vector<LocalPerturbation> sample_local_perturbations(
    const Sample& x, std::size_t l, std::uint64_t seed, MaskFill fill,
    bool include_empty) {
  const std::size_t d = x.dim();
  Rng rng(seed);
  std::vector<LocalPerturbation> out;
  out.reserve(l);
  for (std::size_t i = 0; i < l; ++i) {
    Mask mask(d, 1);
    if (i == 1 && include_empty) {
      std::fill(mask.begin(), mask.end(), 0);
    } else if (i > 0) {
      for (auto& bit : mask) bit = rng.coin() ? 1 : 0;
    }
    Sample z = fill_mask(x, mask, fill);
    out.push_back(LocalPerturbation{std::move(mask), std::move(z)});
  }
  return out;
}

double shapley_kernel(std::size_t d, std::size_t s) {
  if (s == 0 || s >= d) return kShapleyEndpointWeight;
  // Multiplicative binomial; exact for the integer range that matters.
  const std::size_t r = std::min(s, d - s);
  double binom = 1.0;
  for (std::size_t i = 1; i <= r; ++i) {
    binom = binom * static_cast<double>(d - r + i) / static_cast<double>(i);
  }
  return static_cast<double>(d - 1) /
         (binom * static_cast<double>(s) * static_cast<double>(d - s));
}

double kernel_weight(const Mask& mask, KernelKind kind, double width,
                     std::size_t d) {
  std::size_t kept = 0;
  for (auto bit : mask) kept += bit ? 1 : 0;
  if (kind == KernelKind::ShapleyKernel) return shapley_kernel(d, kept);
  const double dist2 = static_cast<double>(d - kept);
  return std::exp(-dist2 / (width * width));
}

namespace {

// Factorization of the centred, ridge-regularized weighted normal equations,
// reusable across several target vectors over the same masks.
class WeightedNormalEquations {
 public:
  WeightedNormalEquations(std::span<const Mask> masks,
                          std::span<const double> weights, double ridge)
      : masks_(masks), weights_(weights) {
    if (masks.empty()) throw Error(ErrorCode::Singular, "no samples");
    d_ = masks.front().size();
    if (d_ == 0) throw Error(ErrorCode::Singular, "zero-dimensional masks");
    if (weights.size() != masks.size()) {
      throw Error(ErrorCode::ShapeMismatch, "weights and masks differ in length");
    }
    std::size_t weighted = 0;
    total_ = 0.0;
    for (std::size_t i = 0; i < masks.size(); ++i) {
      if (masks[i].size() != d_) {
        throw Error(ErrorCode::ShapeMismatch, "masks differ in length");
      }
      if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
        throw Error(ErrorCode::InvalidConfig, "weights must be finite and >= 0");
      }
      if (weights[i] > 0.0) ++weighted;
      total_ += weights[i];
    }
    if (weighted < d_ + 1) {
      throw Error(ErrorCode::Singular,
                  "need at least d + 1 weighted samples, got " +
                      std::to_string(weighted));
    }

    mean_.assign(d_, 0.0);
    for (std::size_t i = 0; i < masks.size(); ++i) {
      for (std::size_t j = 0; j < d_; ++j) {
        if (masks[i][j]) mean_[j] += weights[i];
      }
    }
    for (double& m : mean_) m /= total_;

    gram_.assign(d_ * d_, 0.0);
    std::vector<double> c(d_);
    for (std::size_t i = 0; i < masks.size(); ++i) {
      const double w = weights[i];
      if (w == 0.0) continue;
      for (std::size_t j = 0; j < d_; ++j) c[j] = masks[i][j] - mean_[j];
      for (std::size_t j = 0; j < d_; ++j) {
        const double wc = w * c[j];
        double* row = &gram_[j * d_];
        for (std::size_t k = j; k < d_; ++k) row[k] += wc * c[k];
      }
    }
    for (std::size_t j = 0; j < d_; ++j) {
      for (std::size_t k = 0; k < j; ++k) gram_[j * d_ + k] = gram_[k * d_ + j];
    }
    double max_diag = 0.0;
    for (std::size_t j = 0; j < d_; ++j) {
      gram_[j * d_ + j] += ridge;
      max_diag = std::max(max_diag, gram_[j * d_ + j]);
    }

    // Cholesky G = L L^T. Without ridge a pivot below a relative tolerance
    // means collinear masks.
    const double tol = ridge > 0.0 ? 0.0 : 1e-10 * std::max(max_diag, 1e-300);
    chol_ = gram_;
    for (std::size_t j = 0; j < d_; ++j) {
      double diag = chol_[j * d_ + j];
      for (std::size_t k = 0; k < j; ++k) diag -= chol_[j * d_ + k] * chol_[j * d_ + k];
      if (!(diag > tol) || !std::isfinite(diag)) {
        throw Error(ErrorCode::Singular,
                    "weighted normal equations are singular at column " +
                        std::to_string(j));
      }
      const double ljj = std::sqrt(diag);
      chol_[j * d_ + j] = ljj;
      for (std::size_t i = j + 1; i < d_; ++i) {
        double v = chol_[i * d_ + j];
        for (std::size_t k = 0; k < j; ++k) v -= chol_[i * d_ + k] * chol_[j * d_ + k];
        chol_[i * d_ + j] = v / ljj;
      }
    }
  }

  LinearFit solve(std::span<const double> targets) const {
    if (targets.size() != masks_.size()) {
      throw Error(ErrorCode::ShapeMismatch, "targets and masks differ in length");
    }
    double mean_t = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      if (!std::isfinite(targets[i])) {
        throw Error(ErrorCode::InvalidConfig, "non-finite target");
      }
      mean_t += weights_[i] * targets[i];
    }
    mean_t /= total_;
    std::vector<double> rhs(d_, 0.0);
    for (std::size_t i = 0; i < masks_.size(); ++i) {
      const double r = weights_[i] * (targets[i] - mean_t);
      if (r == 0.0) continue;
      for (std::size_t j = 0; j < d_; ++j) rhs[j] += r * (masks_[i][j] - mean_[j]);
    }
    std::vector<double> beta = back_substitute(rhs);
    // One step of iterative refinement against the unfactored matrix.
    std::vector<double> residual(rhs);
    for (std::size_t j = 0; j < d_; ++j) {
      for (std::size_t k = 0; k < d_; ++k) residual[j] -= gram_[j * d_ + k] * beta[k];
    }
    const auto correction = back_substitute(residual);
    for (std::size_t j = 0; j < d_; ++j) beta[j] += correction[j];

    LinearFit fit;
    fit.intercept = mean_t;
    for (std::size_t j = 0; j < d_; ++j) fit.intercept -= mean_[j] * beta[j];
    fit.coefficients = std::move(beta);
    return fit;
  }

 private:
  std::vector<double> back_substitute(const std::vector<double>& b) const {
    std::vector<double> y(b);
    for (std::size_t i = 0; i < d_; ++i) {
      for (std::size_t k = 0; k < i; ++k) y[i] -= chol_[i * d_ + k] * y[k];
      y[i] /= chol_[i * d_ + i];
    }
    for (std::size_t i = d_; i-- > 0;) {
      for (std::size_t k = i + 1; k < d_; ++k) y[i] -= chol_[k * d_ + i] * y[k];
      y[i] /= chol_[i * d_ + i];
    }
    return y;
  }

  std::span<const Mask> masks_;
  std::span<const double> weights_;
  std::size_t d_ = 0;
  double total_ = 0.0;
  std::vector<double> mean_;
  std::vector<double> gram_;
  std::vector<double> chol_;
};

}  // namespace

LinearFit fit_weighted_linear(std::span<const Mask> masks,
                              std::span<const double> targets,
                              std::span<const double> weights, double ridge) {
  if (!(ridge >= 0.0)) throw Error(ErrorCode::InvalidConfig, "ridge must be >= 0");
  return WeightedNormalEquations(masks, weights, ridge).solve(targets);
}

ExplanationSet explain(const PredictionModel& model, const Sample& x,
                       const ExplainConfig& cfg) {
  const std::size_t d = x.dim();
  if (model.dim() != d) {
    throw Error(ErrorCode::ShapeMismatch, "model and sample dimensions differ");
  }
  const std::size_t k = model.num_classes();
  if (k < 2) throw Error(ErrorCode::InvalidConfig, "explain needs k >= 2");
  const ExplainConfig c = cfg.resolved(d);

  const auto local = sample_local_perturbations(
      x, c.num_perturbations, derive_seed(c.seed, x.id), c.fill,
      c.kernel == KernelKind::ShapleyKernel);
  const std::size_t l = local.size();
  std::vector<Mask> masks;
  std::vector<double> weights;
  masks.reserve(l);
  weights.reserve(l);
  // probs[c][i]: probability of class c at perturbation i.
  std::vector<std::vector<double>> probs(k, std::vector<double>(l));
  for (std::size_t i = 0; i < l; ++i) {
    masks.push_back(local[i].mask);
    weights.push_back(kernel_weight(local[i].mask, c.kernel, c.kernel_width, d));
    const auto p = model.predict_proba(local[i].z);
    for (std::size_t cls = 0; cls < k; ++cls) probs[cls][i] = p[cls];
  }

  const WeightedNormalEquations system(masks, weights, c.ridge);
  ExplanationSet out;
  out.sample_id = x.id;
  out.num_classes = k;
  out.dim = d;
  out.weights.assign(k, std::vector<double>(d, 0.0));
  out.intercepts.assign(k, 0.0);
  if (k == 2) {
    const LinearFit fit = system.solve(probs[1]);
    out.weights[1] = fit.coefficients;
    out.intercepts[1] = fit.intercept;
    for (std::size_t j = 0; j < d; ++j) out.weights[0][j] = -fit.coefficients[j];
    out.intercepts[0] = 1.0 - fit.intercept;
  } else {
    for (std::size_t cls = 0; cls < k; ++cls) {
      const LinearFit fit = system.solve(probs[cls]);
      out.weights[cls] = fit.coefficients;
      out.intercepts[cls] = fit.intercept;
    }
  }
  return out;
}

DirectionTag direction(double w, double eps_neutral) {
  if (w > eps_neutral) return DirectionTag::Positive;
  if (w < -eps_neutral) return DirectionTag::Negative;
  return DirectionTag::Neutral;
}

DirectionCounts direction_counts(const ExplanationSet& expl,
                                 const PerturbationRecord& record,
                                 std::size_t cls, double eps_neutral) {
  if (cls >= expl.num_classes || cls >= expl.weights.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "class index out of range");
  }
  record.validate(expl.dim);
  DirectionCounts counts;
  for (std::size_t j : record.perturbed_indices) {
    switch (direction(expl.weights[cls][j], eps_neutral)) {
      case DirectionTag::Positive: ++counts.pos; break;
      case DirectionTag::Negative: ++counts.neg; break;
      case DirectionTag::Neutral: ++counts.neut; break;
    }
  }
  return counts;
}

}  // namespace evadex
