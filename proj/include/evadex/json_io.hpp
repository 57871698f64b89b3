#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evadex/attacks.hpp"
#include "evadex/explainer.hpp"
#include "evadex/metrics.hpp"
#include "json.hpp"

namespace evadex {

using Json = nlohmann::ordered_json;

Json to_json(const ExplanationSet& expl);
ExplanationSet explanation_from_json(const Json& j);

Json to_json(const AttackOutcome& outcome);
AttackOutcome outcome_from_json(const Json& j);

Json to_json(const CampaignSummary& summary);
// {"summary": ..., "outcomes": [...]}
Json campaign_to_json(const CampaignResult& result);
std::vector<AttackOutcome> outcomes_from_json(const Json& j);

Json to_json(const SampleDiagnosis& diagnosis);
Json to_json(const DiagnosisReport& report);

/// "index,pspp,evasive" rows over the diagnosed (status Ok) samples.
std::string format_scatter_csv(const DiagnosisReport& report);

// Canonical text form: two-space indent and a trailing newline.
std::string dump(const Json& j);
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace evadex
