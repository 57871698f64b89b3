#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "evadex/attacks.hpp"
#include "evadex/dataset.hpp"
#include "evadex/explainer.hpp"
#include "evadex/json_io.hpp"
#include "evadex/metrics.hpp"
#include "evadex/model.hpp"
#include "evadex/models.hpp"

namespace evadex {

/// Everything one run needs. Built from a flat JSON object; unset keys keep
/// their defaults, unknown keys are rejected.
struct RunConfig {
  std::filesystem::path dataset;
  CsvOptions csv;
  SplitFractions split;
  TrainConfig train = TrainConfig::defaults(ModelKind::LogReg);
  AttackConfig attack;
  ExplainConfig explain;
  // Unset: Zero, except the guided selection on binary data uses Toggle.
  std::optional<MaskFill> mask_fill;
  HcrOptions hcr;
  std::uint64_t seed = 0;
  std::filesystem::path out = ".";
  unsigned jobs = 1;

  void validate() const;
};

RunConfig parse_run_config(const Json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Purpose-specific seeds, all derived from the global seed.
struct StageSeeds {
  std::uint64_t split, train, attack, explain, guided_explain;
};
StageSeeds stage_seeds(std::uint64_t seed);

struct PreparedData {
  LabeledDataset full;
  LabeledDataset train;
  LabeledDataset evasion;
};

PreparedData prepare_data(const RunConfig& cfg);

std::shared_ptr<const PredictionModel> train_model(const LabeledDataset& data,
                                                   TrainConfig cfg);

/// Diagnosis explainer settings for a feature kind, seeded from the run.
ExplainConfig effective_explain(const RunConfig& cfg, FeatureKind kind);
/// Attack settings with seeds and the guided explainer filled in.
AttackConfig effective_attack(const RunConfig& cfg, FeatureKind kind);

struct ArmResult {
  CampaignResult campaign;
  DiagnosisReport report;
};

ArmResult run_arm(const PredictionModel& model, const LabeledDataset& evasion,
                  const AttackConfig& attack, const ExplainConfig& explain,
                  const RunConfig& cfg);

struct CaseStudyDeltas {
  double post_acc_delta = 0.0;  // guided - baseline
  double hcr_delta = 0.0;
  double ape_delta = 0.0;
};

struct CaseStudyResult {
  ArmResult baseline;
  ArmResult guided;
  CaseStudyDeltas deltas;
  double train_accuracy = 0.0;
};

/// Baseline: the unguided guided_base strategy. Guided: the same strategy
/// restricted to explanation-selected features. Both arms share the model,
/// evasion set and seeds.
CaseStudyResult run_case_study(const PredictionModel& model,
                               const LabeledDataset& evasion,
                               const RunConfig& cfg);
CaseStudyResult run_case_study(const RunConfig& cfg);

Json to_json(const ArmResult& arm);
Json to_json(const CaseStudyResult& result);

}  // namespace evadex
