#include "evadex/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

#include "evadex/error.hpp"
#include "evadex/parallel.hpp"
#include "evadex/rng.hpp"

namespace evadex {

std::string_view to_string(AttackStrategy s) {
  switch (s) {
    case AttackStrategy::AdditiveFlip: return "additive";
    case AttackStrategy::BoundedNoise: return "noise";
    case AttackStrategy::Guided: return "guided";
  }
  return "unknown";
}

AttackStrategy attack_strategy_from_string(std::string_view name) {
  if (name == "additive") return AttackStrategy::AdditiveFlip;
  if (name == "noise") return AttackStrategy::BoundedNoise;
  if (name == "guided") return AttackStrategy::Guided;
  throw Error(ErrorCode::InvalidConfig,
              "unknown strategy '" + std::string(name) + "'");
}

std::string_view to_string(FlipOrder order) {
  return order == FlipOrder::Greedy ? "greedy" : "random";
}

FlipOrder flip_order_from_string(std::string_view name) {
  if (name == "greedy") return FlipOrder::Greedy;
  if (name == "random") return FlipOrder::Random;
  throw Error(ErrorCode::InvalidConfig, "unknown order '" + std::string(name) + "'");
}

std::string_view to_string(AttackStatus s) {
  switch (s) {
    case AttackStatus::Evaded: return "Evaded";
    case AttackStatus::BudgetExhausted: return "BudgetExhausted";
    case AttackStatus::AlreadyMisclassified: return "AlreadyMisclassified";
    case AttackStatus::NoCandidates: return "NoCandidates";
  }
  return "unknown";
}

AttackStatus attack_status_from_string(std::string_view name) {
  for (auto s : {AttackStatus::Evaded, AttackStatus::BudgetExhausted,
                 AttackStatus::AlreadyMisclassified, AttackStatus::NoCandidates}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::Corrupt, "unknown attack status '" + std::string(name) + "'");
}

void AttackConfig::validate(const FeatureSpace& space) const {
  const std::size_t d = space.dim();
  if (budget < 1 || budget > d) {
    throw Error(ErrorCode::InvalidConfig,
                "budget must lie in [1, d=" + std::to_string(d) + "]");
  }
  if (strategy == AttackStrategy::Guided && guided_base == AttackStrategy::Guided) {
    throw Error(ErrorCode::InvalidConfig, "guided_base cannot be guided");
  }
  const bool noise = strategy == AttackStrategy::BoundedNoise ||
                     (strategy == AttackStrategy::Guided &&
                      guided_base == AttackStrategy::BoundedNoise);
  if (noise) {
    double span = 0.0;
    for (const auto& b : space.bounds) span = std::max(span, b.hi - b.lo);
    if (!(noise_scale > 0.0) || noise_scale > span) {
      throw Error(ErrorCode::InvalidConfig,
                  "noise_scale must lie in (0, max feature span]");
    }
    if (!std::isfinite(background_threshold)) {
      throw Error(ErrorCode::InvalidConfig, "background_threshold must be finite");
    }
  }
}

namespace {

struct AttackState {
  const PredictionModel& model;
  const Sample& x;
  int y_true;
  const FeatureSpace& space;
  AttackOutcome outcome;

  AttackState(const PredictionModel& m, const Sample& s, int y,
              const FeatureSpace& sp)
      : model(m), x(s), y_true(y), space(sp) {
    outcome.record.sample_id = s.id;
    outcome.record.original_label = y;
    outcome.record.adversarial_label = y;
  }

  std::vector<double> query(const Sample& z) {
    ++outcome.queries;
    return model.predict_proba(z);
  }

  // Returns false when x is already misclassified; the outcome is final then.
  bool check_initial() {
    const int label = argmax(query(x));
    outcome.record.adversarial_label = label;
    if (label != y_true) {
      outcome.status = AttackStatus::AlreadyMisclassified;
      return false;
    }
    return true;
  }

  void finish(int label) {
    outcome.record.adversarial_label = label;
    outcome.record.evasive = label != y_true;
    outcome.status =
        outcome.record.evasive ? AttackStatus::Evaded : AttackStatus::BudgetExhausted;
  }

  AttackOutcome no_candidates(ErrorCode why, const std::string& note) {
    outcome.status = AttackStatus::NoCandidates;
    outcome.note = std::string(to_string(why)) + ": " + note;
    return outcome;
  }
};

void check_inputs(const PredictionModel& model, const Sample& x, int y_true,
                  const AttackConfig& cfg, const FeatureSpace& space) {
  if (x.dim() != space.dim() || model.dim() != x.dim()) {
    throw Error(ErrorCode::ShapeMismatch, "model, sample and space disagree on d");
  }
  if (y_true < 0 || static_cast<std::size_t>(y_true) >= model.num_classes()) {
    throw Error(ErrorCode::InvalidLabel, "y_true outside [0, k)");
  }
  cfg.validate(space);
}

std::vector<std::size_t> restrict_to(std::vector<std::size_t> pool,
                                     std::optional<std::span<const std::size_t>> allowed) {
  if (!allowed) return pool;
  std::vector<std::size_t> sorted_allowed(allowed->begin(), allowed->end());
  std::sort(sorted_allowed.begin(), sorted_allowed.end());
  std::vector<std::size_t> out;
  std::set_intersection(pool.begin(), pool.end(), sorted_allowed.begin(),
                        sorted_allowed.end(), std::back_inserter(out));
  return out;
}

AttackOutcome additive_impl(const PredictionModel& model, const Sample& x,
                            int y_true, const AttackConfig& cfg,
                            const FeatureSpace& space,
                            std::optional<std::span<const std::size_t>> candidates) {
  if (space.kind != FeatureKind::Binary) {
    throw Error(ErrorCode::InvalidConfig, "additive flips need a binary space");
  }
  AttackState st(model, x, y_true, space);
  if (!st.check_initial()) return st.outcome;

  std::vector<std::size_t> pool;
  for (std::size_t j = 0; j < x.dim(); ++j) {
    if (x.features[j] == 0.0) pool.push_back(j);
  }
  pool = restrict_to(std::move(pool), candidates);
  if (pool.empty() && candidates) {
    return st.no_candidates(ErrorCode::EmptyCandidateSet,
                            "no admissible zero-valued feature to flip");
  }

  auto& record = st.outcome.record;
  Sample current = x;
  int label = y_true;
  if (cfg.order == FlipOrder::Random) {
    Rng rng(derive_seed(cfg.seed, x.id));
    rng.shuffle(std::span<std::size_t>(pool));
    for (std::size_t j : pool) {
      if (record.size() >= cfg.budget) break;
      record.perturbed_indices.push_back(j);
      record.deltas.push_back(1.0);
      current = apply_perturbation(x, record, space);
      label = argmax(st.query(current));
      if (label != y_true) break;
    }
  } else {
    while (record.size() < cfg.budget && !pool.empty()) {
      std::size_t best = 0;
      double best_p = 0.0;
      int best_label = y_true;
      for (std::size_t c = 0; c < pool.size(); ++c) {
        Sample trial = current;
        trial.features[pool[c]] = 1.0;
        const auto p = st.query(trial);
        const double py = p[static_cast<std::size_t>(y_true)];
        if (c == 0 || py < best_p) {
          best = c;
          best_p = py;
          best_label = argmax(p);
        }
      }
      record.perturbed_indices.push_back(pool[best]);
      record.deltas.push_back(1.0);
      current.features[pool[best]] = 1.0;
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
      label = best_label;
      if (label != y_true) break;
    }
  }
  st.finish(label);
  return st.outcome;
}

AttackOutcome noise_impl(const PredictionModel& model, const Sample& x,
                         int y_true, const AttackConfig& cfg,
                         const FeatureSpace& space,
                         std::optional<std::span<const std::size_t>> candidates) {
  if (space.kind != FeatureKind::Continuous) {
    throw Error(ErrorCode::InvalidConfig, "bounded noise needs a continuous space");
  }
  AttackState st(model, x, y_true, space);
  if (!st.check_initial()) return st.outcome;

  std::vector<std::size_t> pool;
  for (std::size_t j = 0; j < x.dim(); ++j) {
    if (x.features[j] <= cfg.background_threshold) pool.push_back(j);
  }
  pool = restrict_to(std::move(pool), candidates);
  if (pool.empty()) {
    return st.no_candidates(candidates ? ErrorCode::EmptyCandidateSet
                                       : ErrorCode::NoBackgroundFeatures,
                            "no background feature at or below threshold");
  }

  Rng rng(derive_seed(cfg.seed, x.id));
  rng.shuffle(std::span<std::size_t>(pool));
  const std::size_t batch = std::max<std::size_t>(1, x.dim() / 20);
  auto& record = st.outcome.record;
  int label = y_true;
  std::size_t next = 0;
  while (record.size() < cfg.budget && next < pool.size()) {
    const std::size_t take =
        std::min({batch, cfg.budget - record.size(), pool.size() - next});
    for (std::size_t t = 0; t < take; ++t) {
      record.perturbed_indices.push_back(pool[next++]);
      // (0, noise_scale]; clamping happens when the record is applied.
      record.deltas.push_back(cfg.noise_scale * (1.0 - rng.uniform()));
    }
    label = argmax(st.query(apply_perturbation(x, record, space)));
    if (label != y_true) break;
  }
  st.finish(label);
  return st.outcome;
}

AttackOutcome guided_impl(const PredictionModel& model, const Sample& x,
                          int y_true, const AttackConfig& cfg,
                          const FeatureSpace& space) {
  AttackState st(model, x, y_true, space);
  if (!st.check_initial()) return st.outcome;

  const ExplainConfig ecfg = cfg.explain.resolved(x.dim());
  const auto selected = guided_feature_selection(model, x, y_true, ecfg);
  const std::size_t explain_queries = ecfg.num_perturbations;

  std::vector<std::size_t> base_pool;
  for (std::size_t j = 0; j < x.dim(); ++j) {
    const double v = x.features[j];
    const bool admissible = cfg.guided_base == AttackStrategy::AdditiveFlip
                                ? v == 0.0
                                : v <= cfg.background_threshold;
    if (admissible) base_pool.push_back(j);
  }
  const auto pool = restrict_to(base_pool, std::span<const std::size_t>(selected));
  if (pool.empty()) {
    st.outcome.queries += explain_queries;
    return st.no_candidates(ErrorCode::EmptyCandidateSet,
                            "no positive feature admissible for the base strategy");
  }
  AttackOutcome out =
      cfg.guided_base == AttackStrategy::AdditiveFlip
          ? additive_impl(model, x, y_true, cfg, space, std::span<const std::size_t>(pool))
          : noise_impl(model, x, y_true, cfg, space, std::span<const std::size_t>(pool));
  // The base strategy repeats the initial check query; count it once.
  out.queries += explain_queries;
  return out;
}

AttackOutcome throw_if_empty(AttackOutcome outcome, ErrorCode code) {
  if (outcome.status != AttackStatus::NoCandidates) return outcome;
  if (outcome.note.rfind(std::string(to_string(ErrorCode::EmptyCandidateSet)), 0) == 0) {
    code = ErrorCode::EmptyCandidateSet;
  }
  throw Error(code, outcome.note);
}

AttackOutcome dispatch(const PredictionModel& model, const Sample& x, int y_true,
                       const AttackConfig& cfg, const FeatureSpace& space) {
  switch (cfg.strategy) {
    case AttackStrategy::AdditiveFlip:
      return additive_impl(model, x, y_true, cfg, space, std::nullopt);
    case AttackStrategy::BoundedNoise:
      return noise_impl(model, x, y_true, cfg, space, std::nullopt);
    case AttackStrategy::Guided:
      return guided_impl(model, x, y_true, cfg, space);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown strategy");
}

}  // namespace

AttackOutcome additive_flip_attack(
    const PredictionModel& model, const Sample& x, int y_true,
    const AttackConfig& cfg, const FeatureSpace& space,
    std::optional<std::span<const std::size_t>> candidates) {
  check_inputs(model, x, y_true, cfg, space);
  return throw_if_empty(additive_impl(model, x, y_true, cfg, space, candidates),
                        ErrorCode::EmptyCandidateSet);
}

AttackOutcome bounded_noise_attack(
    const PredictionModel& model, const Sample& x, int y_true,
    const AttackConfig& cfg, const FeatureSpace& space,
    std::optional<std::span<const std::size_t>> candidates) {
  check_inputs(model, x, y_true, cfg, space);
  return throw_if_empty(noise_impl(model, x, y_true, cfg, space, candidates),
                        ErrorCode::NoBackgroundFeatures);
}

std::vector<std::size_t> guided_feature_selection(const PredictionModel& model,
                                                  const Sample& x, int y_true,
                                                  const ExplainConfig& cfg) {
  const ExplainConfig ecfg = cfg.resolved(x.dim());
  const ExplanationSet expl = explain(model, x, ecfg);
  if (y_true < 0 || static_cast<std::size_t>(y_true) >= expl.num_classes) {
    throw Error(ErrorCode::InvalidLabel, "y_true outside [0, k)");
  }
  std::vector<std::size_t> selected;
  const auto& w = expl.weights[static_cast<std::size_t>(y_true)];
  for (std::size_t j = 0; j < w.size(); ++j) {
    if (direction(w[j], ecfg.eps_neutral) == DirectionTag::Positive) {
      selected.push_back(j);
    }
  }
  return selected;
}

AttackOutcome guided_attack(const PredictionModel& model, const Sample& x,
                            int y_true, const AttackConfig& cfg,
                            const FeatureSpace& space) {
  AttackConfig gcfg = cfg;
  gcfg.strategy = AttackStrategy::Guided;
  check_inputs(model, x, y_true, gcfg, space);
  return throw_if_empty(guided_impl(model, x, y_true, gcfg, space),
                        ErrorCode::EmptyCandidateSet);
}

AttackOutcome run_attack(const PredictionModel& model, const Sample& x,
                         int y_true, const AttackConfig& cfg,
                         const FeatureSpace& space) {
  check_inputs(model, x, y_true, cfg, space);
  return dispatch(model, x, y_true, cfg, space);
}

CampaignSummary summarize_campaign(std::span<const AttackOutcome> outcomes) {
  CampaignSummary s;
  s.n_samples = outcomes.size();
  double queries = 0.0, perturbed = 0.0;
  for (const auto& o : outcomes) {
    if (o.status == AttackStatus::AlreadyMisclassified) continue;
    ++s.n_attacked;
    if (o.status == AttackStatus::Evaded) ++s.n_evaded;
    queries += static_cast<double>(o.queries);
    perturbed += static_cast<double>(o.record.size());
  }
  if (s.n_samples > 0) {
    const double n = static_cast<double>(s.n_samples);
    s.pre_accuracy = static_cast<double>(s.n_attacked) / n;
    s.post_accuracy = static_cast<double>(s.n_attacked - s.n_evaded) / n;
    s.aggregate_evasion = s.pre_accuracy - s.post_accuracy;
  }
  if (s.n_attacked > 0) {
    s.mean_queries = queries / static_cast<double>(s.n_attacked);
    s.mean_perturbed = perturbed / static_cast<double>(s.n_attacked);
  }
  return s;
}

CampaignResult run_attack_campaign(const PredictionModel& model,
                                   const LabeledDataset& evasion_set,
                                   const AttackConfig& cfg, unsigned jobs) {
  if (evasion_set.empty()) {
    throw Error(ErrorCode::EmptyDataset, "evasion set is empty");
  }
  if (model.dim() != evasion_set.dim()) {
    throw Error(ErrorCode::ShapeMismatch, "model and evasion set differ in d");
  }
  cfg.validate(evasion_set.space());
  CampaignResult result;
  result.outcomes.resize(evasion_set.size());
  parallel_for(evasion_set.size(), jobs, [&](std::size_t i) {
    result.outcomes[i] = run_attack(model, evasion_set.sample(i),
                                    evasion_set.label(i), cfg, evasion_set.space());
  });
  std::stable_sort(result.outcomes.begin(), result.outcomes.end(),
                   [](const AttackOutcome& a, const AttackOutcome& b) {
                     return a.record.sample_id < b.record.sample_id;
                   });
  result.summary = summarize_campaign(result.outcomes);
  return result;
}

}  // namespace evadex
