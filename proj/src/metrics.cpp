#include "evadex/metrics.hpp"

#include <algorithm>
#include <unordered_map>

#include "evadex/error.hpp"
#include "evadex/parallel.hpp"

namespace evadex {

std::string_view to_string(DiagnosisStatus s) {
  switch (s) {
    case DiagnosisStatus::Ok: return "Ok";
    case DiagnosisStatus::Skipped: return "Skipped";
    case DiagnosisStatus::Error: return "Error";
  }
  return "unknown";
}

namespace {

double perturbation_count(const PerturbationRecord& record) {
  if (record.empty()) {
    throw Error(ErrorCode::ZeroPerturbations,
                "sample " + std::to_string(record.sample_id) +
                    " has no perturbed features");
  }
  return static_cast<double>(record.size());
}

std::size_t true_class(const PerturbationRecord& record,
                       const ExplanationSet& expl) {
  if (record.original_label < 0 ||
      static_cast<std::size_t>(record.original_label) >= expl.num_classes) {
    throw Error(ErrorCode::InvalidLabel, "original label outside [0, k)");
  }
  return static_cast<std::size_t>(record.original_label);
}

std::size_t target_class(const PerturbationRecord& record,
                         const ExplanationSet& expl, int y_target) {
  if (y_target < 0 || static_cast<std::size_t>(y_target) >= expl.num_classes) {
    throw Error(ErrorCode::InvalidTarget, "target label outside [0, k)");
  }
  if (y_target == record.original_label) {
    throw Error(ErrorCode::InvalidTarget, "target equals the original label");
  }
  return static_cast<std::size_t>(y_target);
}

}  // namespace

double pspp(const PerturbationRecord& record, const ExplanationSet& expl,
            std::size_t k, double eps_neutral) {
  const double P = perturbation_count(record);
  if (k != expl.num_classes || k < 2) {
    throw Error(ErrorCode::ShapeMismatch, "k disagrees with the explanation");
  }
  const std::size_t y = true_class(record, expl);
  double toward_others = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (c == y) continue;
    toward_others += direction_counts(expl, record, c, eps_neutral).pos / P;
  }
  const double away_from_true =
      direction_counts(expl, record, y, eps_neutral).neg / P;
  return 0.5 * (toward_others / static_cast<double>(k - 1) + away_from_true);
}

double pspe(const PerturbationRecord& record, const ExplanationSet& expl,
            double eps_neutral) {
  const double P = perturbation_count(record);
  return direction_counts(expl, record, true_class(record, expl), eps_neutral).pos / P;
}

double neutral_rate(const PerturbationRecord& record, const ExplanationSet& expl,
                    double eps_neutral) {
  const double P = perturbation_count(record);
  return direction_counts(expl, record, true_class(record, expl), eps_neutral).neut / P;
}

double pspp_targeted(const PerturbationRecord& record, const ExplanationSet& expl,
                     int y_target, double eps_neutral) {
  const double P = perturbation_count(record);
  const std::size_t t = target_class(record, expl, y_target);
  return direction_counts(expl, record, t, eps_neutral).pos / P;
}

double pspe_targeted(const PerturbationRecord& record, const ExplanationSet& expl,
                     int y_target, double eps_neutral) {
  const double P = perturbation_count(record);
  const std::size_t t = target_class(record, expl, y_target);
  return direction_counts(expl, record, t, eps_neutral).neg / P;
}

double hcr(std::span<const SampleDiagnosis> diagnoses, HcrOptions options) {
  std::size_t denominator = 0, high = 0;
  for (const auto& s : diagnoses) {
    if (s.status != DiagnosisStatus::Ok) continue;
    if (options.evasive_only && !s.evasive) continue;
    ++denominator;
    // Strict comparison: PSPP == tau counts as low-correlated.
    if (s.evasive && s.pspp > options.tau) ++high;
  }
  if (denominator == 0) throw Error(ErrorCode::EmptyDataset, "no diagnosed samples");
  return static_cast<double>(high) / static_cast<double>(denominator);
}

double ape(std::span<const SampleDiagnosis> diagnoses) {
  std::size_t n = 0;
  double sum = 0.0;
  for (const auto& s : diagnoses) {
    if (s.status != DiagnosisStatus::Ok) continue;
    ++n;
    sum += s.pspe;
  }
  if (n == 0) throw Error(ErrorCode::EmptyDataset, "no diagnosed samples");
  return sum / static_cast<double>(n);
}

SampleDiagnosis diagnose_sample(const PerturbationRecord& record,
                                const ExplanationSet& post_explanation,
                                double eps_neutral) {
  SampleDiagnosis out;
  out.sample_id = record.sample_id;
  out.evasive = record.evasive;
  out.pspp = pspp(record, post_explanation, post_explanation.num_classes, eps_neutral);
  out.pspe = pspe(record, post_explanation, eps_neutral);
  out.neutral_rate = neutral_rate(record, post_explanation, eps_neutral);
  for (std::size_t c = 0; c < post_explanation.num_classes; ++c) {
    out.per_class_counts.push_back(
        direction_counts(post_explanation, record, c, eps_neutral));
  }
  return out;
}

DiagnosisReport summarize_diagnoses(std::vector<SampleDiagnosis> samples,
                                    const CampaignSummary& campaign,
                                    HcrOptions options) {
  std::stable_sort(samples.begin(), samples.end(),
                   [](const SampleDiagnosis& a, const SampleDiagnosis& b) {
                     return a.sample_id < b.sample_id;
                   });
  DiagnosisReport report;
  report.tau = options.tau;
  report.pre_accuracy = campaign.pre_accuracy;
  report.post_accuracy = campaign.post_accuracy;
  report.aggregate_evasion = campaign.aggregate_evasion;
  for (const auto& s : samples) {
    if (s.status != DiagnosisStatus::Ok) {
      ++report.n_skipped;
      continue;
    }
    if (options.evasive_only && !s.evasive) continue;
    ++report.n_samples;
    if (s.evasive) ++report.n_evasive;
  }
  if (report.n_samples > 0) {
    report.hcr = hcr(samples, options);
    report.ape = ape(samples);
  }
  report.samples = std::move(samples);
  return report;
}

DiagnosisReport diagnose(const PredictionModel& model,
                         const LabeledDataset& evasion_set,
                         std::span<const AttackOutcome> outcomes,
                         const ExplainConfig& explain_cfg,
                         DiagnoseOptions options) {
  if (outcomes.empty()) throw Error(ErrorCode::EmptyDataset, "no attack outcomes");
  if (model.dim() != evasion_set.dim()) {
    throw Error(ErrorCode::ShapeMismatch, "model and evasion set differ in d");
  }
  const ExplainConfig cfg = explain_cfg.resolved(evasion_set.dim());
  std::unordered_map<std::uint64_t, std::size_t> position;
  for (std::size_t i = 0; i < evasion_set.size(); ++i) {
    position.emplace(evasion_set.sample(i).id, i);
  }

  std::vector<SampleDiagnosis> samples(outcomes.size());
  parallel_for(outcomes.size(), options.jobs, [&](std::size_t i) {
    const PerturbationRecord& record = outcomes[i].record;
    SampleDiagnosis& slot = samples[i];
    slot.sample_id = record.sample_id;
    slot.evasive = record.evasive;
    if (record.empty()) {
      slot.status = DiagnosisStatus::Skipped;
      slot.reason = "ZeroPerturbations (" +
                    std::string(to_string(outcomes[i].status)) + ")";
      return;
    }
    try {
      const auto it = position.find(record.sample_id);
      if (it == position.end()) {
        throw Error(ErrorCode::IndexOutOfRange,
                    "sample id " + std::to_string(record.sample_id) +
                        " not in evasion set");
      }
      const Sample adversarial =
          apply_perturbation(evasion_set.sample(it->second), record,
                             evasion_set.space());
      slot = diagnose_sample(record, explain(model, adversarial, cfg),
                             cfg.eps_neutral);
    } catch (const Error& e) {
      slot.status = DiagnosisStatus::Error;
      slot.reason = e.what();
    }
  });
  return summarize_diagnoses(std::move(samples), summarize_campaign(outcomes),
                             options.hcr);
}

}  // namespace evadex
