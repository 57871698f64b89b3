#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evadex/dataset.hpp"
#include "evadex/explainer.hpp"
#include "evadex/model.hpp"
#include "evadex/perturbation.hpp"

namespace evadex {

enum class AttackStrategy { AdditiveFlip, BoundedNoise, Guided };
// Candidate order for the additive attack.
enum class FlipOrder { Greedy, Random };

std::string_view to_string(AttackStrategy s);
AttackStrategy attack_strategy_from_string(std::string_view name);
std::string_view to_string(FlipOrder order);
FlipOrder flip_order_from_string(std::string_view name);

struct AttackConfig {
  AttackStrategy strategy = AttackStrategy::AdditiveFlip;
  // Maximum number of perturbed features (an L0 budget).
  std::size_t budget = 10;
  double noise_scale = 0.5;
  double background_threshold = 0.1;
  std::uint64_t seed = 0;
  AttackStrategy guided_base = AttackStrategy::AdditiveFlip;
  FlipOrder order = FlipOrder::Greedy;
  ExplainConfig explain;

  void validate(const FeatureSpace& space) const;
};

enum class AttackStatus {
  Evaded,
  BudgetExhausted,
  AlreadyMisclassified,
  // Campaign-level only: the strategy had no admissible feature to perturb.
  NoCandidates,
};

std::string_view to_string(AttackStatus s);
AttackStatus attack_status_from_string(std::string_view name);

struct AttackOutcome {
  PerturbationRecord record;
  std::size_t queries = 0;
  AttackStatus status = AttackStatus::BudgetExhausted;
  std::string note;

  bool operator==(const AttackOutcome&) const = default;
};

/// Greedy (or seeded random-order) 0 -> 1 flips until the label changes or
/// the budget runs out. When `candidates` is given only those indices may
/// be flipped.
AttackOutcome additive_flip_attack(
    const PredictionModel& model, const Sample& x, int y_true,
    const AttackConfig& cfg, const FeatureSpace& space,
    std::optional<std::span<const std::size_t>> candidates = std::nullopt);

/// Adds uniform noise in (0, noise_scale] to seeded random batches of
/// background features (value <= background_threshold).
AttackOutcome bounded_noise_attack(
    const PredictionModel& model, const Sample& x, int y_true,
    const AttackConfig& cfg, const FeatureSpace& space,
    std::optional<std::span<const std::size_t>> candidates = std::nullopt);

/// Features explained as Positive toward y_true before any perturbation.
std::vector<std::size_t> guided_feature_selection(const PredictionModel& model,
                                                  const Sample& x, int y_true,
                                                  const ExplainConfig& cfg);

/// Base strategy restricted to guided_feature_selection candidates.
AttackOutcome guided_attack(const PredictionModel& model, const Sample& x,
                            int y_true, const AttackConfig& cfg,
                            const FeatureSpace& space);

/// Dispatches on cfg.strategy. An empty candidate set is reported as
/// status NoCandidates instead of being thrown.
AttackOutcome run_attack(const PredictionModel& model, const Sample& x,
                         int y_true, const AttackConfig& cfg,
                         const FeatureSpace& space);

struct CampaignSummary {
  std::size_t n_samples = 0;
  std::size_t n_attacked = 0;
  std::size_t n_evaded = 0;
  double pre_accuracy = 0.0;
  double post_accuracy = 0.0;
  double aggregate_evasion = 0.0;
  double mean_queries = 0.0;
  double mean_perturbed = 0.0;
};

struct CampaignResult {
  std::vector<AttackOutcome> outcomes;  // sorted by sample id
  CampaignSummary summary;
};

/// Attacks every correctly classified sample; misclassified samples are
/// listed as AlreadyMisclassified. Per-sample work may run on `jobs`
/// threads without affecting the result.
CampaignResult run_attack_campaign(const PredictionModel& model,
                                   const LabeledDataset& evasion_set,
                                   const AttackConfig& cfg,
                                   unsigned jobs = 1);

CampaignSummary summarize_campaign(std::span<const AttackOutcome> outcomes);

}  // namespace evadex
