#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evadex/attacks.hpp"
#include "evadex/dataset.hpp"
#include "evadex/explainer.hpp"
#include "evadex/model.hpp"
#include "evadex/perturbation.hpp"

namespace evadex {

inline constexpr double kDefaultTau = 0.5;

// Precision, error and neutral rate of one adversarial sample, computed from
// the post-evasion explanation restricted to its perturbed features.

/// 1/2 * [ mean over y != y_true of pos(y)/P + neg(y_true)/P ].
double pspp(const PerturbationRecord& record, const ExplanationSet& expl,
            std::size_t k, double eps_neutral);
/// pos(y_true)/P.
double pspe(const PerturbationRecord& record, const ExplanationSet& expl,
            double eps_neutral);
/// neut(y_true)/P.
double neutral_rate(const PerturbationRecord& record, const ExplanationSet& expl,
                    double eps_neutral);
/// pos(y_target)/P.
double pspp_targeted(const PerturbationRecord& record, const ExplanationSet& expl,
                     int y_target, double eps_neutral);
/// neg(y_target)/P.
double pspe_targeted(const PerturbationRecord& record, const ExplanationSet& expl,
                     int y_target, double eps_neutral);

enum class DiagnosisStatus { Ok, Skipped, Error };

std::string_view to_string(DiagnosisStatus s);

struct SampleDiagnosis {
  std::uint64_t sample_id = 0;
  double pspp = 0.0;
  double pspe = 0.0;
  double neutral_rate = 0.0;
  bool evasive = false;
  // (pos, neg, neut) toward each class over the perturbed features.
  std::vector<DirectionCounts> per_class_counts;
  DiagnosisStatus status = DiagnosisStatus::Ok;
  std::string reason;

  bool operator==(const SampleDiagnosis&) const = default;
};

struct HcrOptions {
  double tau = kDefaultTau;
  // Restrict the denominator to evasive samples.
  bool evasive_only = false;
};

/// |{s : pspp > tau and evasive}| / |diagnosed samples|. Entries whose status
/// is not Ok are ignored; throws EmptyDataset when none remain.
double hcr(std::span<const SampleDiagnosis> diagnoses, HcrOptions options = {});
/// Mean PSPE over Ok entries; throws EmptyDataset when none remain.
double ape(std::span<const SampleDiagnosis> diagnoses);

SampleDiagnosis diagnose_sample(const PerturbationRecord& record,
                                const ExplanationSet& post_explanation,
                                double eps_neutral);

struct DiagnosisReport {
  double tau = kDefaultTau;
  double hcr = 0.0;
  double ape = 0.0;
  double aggregate_evasion = 0.0;
  double pre_accuracy = 0.0;
  double post_accuracy = 0.0;
  std::size_t n_samples = 0;  // diagnosed samples (HCR/APE denominator)
  std::size_t n_evasive = 0;
  std::size_t n_skipped = 0;
  std::vector<SampleDiagnosis> samples;  // sorted by id, skipped included
};

struct DiagnoseOptions {
  HcrOptions hcr;
  unsigned jobs = 1;
};

/// Explains every adversarial sample x' (rebuilt from its record), scores
/// it, and aggregates. Samples with P(x') = 0 are listed as Skipped;
/// explainer failures are listed as Error. Neither enters HCR or APE.
DiagnosisReport diagnose(const PredictionModel& model,
                         const LabeledDataset& evasion_set,
                         std::span<const AttackOutcome> outcomes,
                         const ExplainConfig& explain_cfg,
                         DiagnoseOptions options = {});

/// Aggregates already-scored samples.
DiagnosisReport summarize_diagnoses(std::vector<SampleDiagnosis> samples,
                                    const CampaignSummary& campaign,
                                    HcrOptions options = {});

}  // namespace evadex
