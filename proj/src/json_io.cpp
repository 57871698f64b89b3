#include "evadex/json_io.hpp"

#include <fstream>
#include <sstream>

#include "evadex/error.hpp"

namespace evadex {

namespace {

template <class T>
T get(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw Error(ErrorCode::Corrupt, std::string("missing field '") + name + "'");
  }
  try {
    return j.at(name).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::Corrupt, std::string("bad field '") + name + "'");
  }
}

}  // namespace

Json to_json(const ExplanationSet& expl) {
  Json j;
  j["sample_id"] = expl.sample_id;
  j["k"] = expl.num_classes;
  j["d"] = expl.dim;
  j["weights"] = expl.weights;
  j["intercepts"] = expl.intercepts;
  return j;
}

ExplanationSet explanation_from_json(const Json& j) {
  ExplanationSet e;
  e.sample_id = get<std::uint64_t>(j, "sample_id");
  e.num_classes = get<std::size_t>(j, "k");
  e.dim = get<std::size_t>(j, "d");
  e.weights = get<std::vector<std::vector<double>>>(j, "weights");
  e.intercepts = get<std::vector<double>>(j, "intercepts");
  if (e.weights.size() != e.num_classes || e.intercepts.size() != e.num_classes) {
    throw Error(ErrorCode::Corrupt, "explanation class count mismatch");
  }
  for (const auto& w : e.weights) {
    if (w.size() != e.dim) throw Error(ErrorCode::Corrupt, "explanation width mismatch");
  }
  return e;
}

Json to_json(const AttackOutcome& o) {
  Json j;
  j["sample_id"] = o.record.sample_id;
  j["status"] = to_string(o.status);
  j["perturbed_indices"] = o.record.perturbed_indices;
  j["deltas"] = o.record.deltas;
  j["original_label"] = o.record.original_label;
  j["adversarial_label"] = o.record.adversarial_label;
  j["queries"] = o.queries;
  if (!o.note.empty()) j["note"] = o.note;
  return j;
}

AttackOutcome outcome_from_json(const Json& j) {
  AttackOutcome o;
  o.record.sample_id = get<std::uint64_t>(j, "sample_id");
  o.status = attack_status_from_string(get<std::string>(j, "status"));
  o.record.perturbed_indices = get<std::vector<std::size_t>>(j, "perturbed_indices");
  o.record.deltas = get<std::vector<double>>(j, "deltas");
  o.record.original_label = get<int>(j, "original_label");
  o.record.adversarial_label = get<int>(j, "adversarial_label");
  o.record.evasive = o.status == AttackStatus::Evaded;
  o.queries = get<std::size_t>(j, "queries");
  if (j.contains("note")) o.note = get<std::string>(j, "note");
  if (o.record.deltas.size() != o.record.perturbed_indices.size()) {
    throw Error(ErrorCode::Corrupt, "deltas and indices differ in length");
  }
  if (o.record.evasive && o.record.adversarial_label == o.record.original_label) {
    throw Error(ErrorCode::Corrupt, "evaded outcome keeps its original label");
  }
  return o;
}

Json to_json(const CampaignSummary& s) {
  Json j;
  j["n_samples"] = s.n_samples;
  j["n_attacked"] = s.n_attacked;
  j["n_evaded"] = s.n_evaded;
  j["pre_accuracy"] = s.pre_accuracy;
  j["post_accuracy"] = s.post_accuracy;
  j["aggregate_evasion"] = s.aggregate_evasion;
  j["mean_queries"] = s.mean_queries;
  j["mean_perturbed"] = s.mean_perturbed;
  return j;
}

Json campaign_to_json(const CampaignResult& result) {
  Json j;
  j["summary"] = to_json(result.summary);
  Json list = Json::array();
  for (const auto& o : result.outcomes) list.push_back(to_json(o));
  j["outcomes"] = std::move(list);
  return j;
}

std::vector<AttackOutcome> outcomes_from_json(const Json& j) {
  const Json* list = &j;
  if (j.is_object()) {
    if (!j.contains("outcomes")) throw Error(ErrorCode::Corrupt, "missing 'outcomes'");
    list = &j.at("outcomes");
  }
  if (!list->is_array()) throw Error(ErrorCode::Corrupt, "outcomes must be an array");
  std::vector<AttackOutcome> out;
  out.reserve(list->size());
  for (const auto& item : *list) out.push_back(outcome_from_json(item));
  return out;
}

Json to_json(const SampleDiagnosis& s) {
  Json j;
  j["id"] = s.sample_id;
  if (s.status == DiagnosisStatus::Ok) {
    j["pspp"] = s.pspp;
    j["pspe"] = s.pspe;
    j["neutral_rate"] = s.neutral_rate;
  } else {
    j["pspp"] = nullptr;
    j["pspe"] = nullptr;
    j["neutral_rate"] = nullptr;
  }
  j["evasive"] = s.evasive;
  j["status"] = to_string(s.status);
  if (!s.reason.empty()) j["reason"] = s.reason;
  return j;
}

Json to_json(const DiagnosisReport& r) {
  Json j;
  j["tau"] = r.tau;
  j["hcr"] = r.hcr;
  j["ape"] = r.ape;
  j["aggregate_evasion"] = r.aggregate_evasion;
  j["pre_accuracy"] = r.pre_accuracy;
  j["post_accuracy"] = r.post_accuracy;
  j["n_samples"] = r.n_samples;
  j["n_evasive"] = r.n_evasive;
  j["n_skipped"] = r.n_skipped;
  Json list = Json::array();
  for (const auto& s : r.samples) list.push_back(to_json(s));
  j["samples"] = std::move(list);
  return j;
}

std::string format_scatter_csv(const DiagnosisReport& report) {
  std::string out = "index,pspp,evasive\n";
  std::size_t index = 0;
  for (const auto& s : report.samples) {
    if (s.status != DiagnosisStatus::Ok) continue;
    out += std::to_string(index++);
    out += ',';
    out += Json(s.pspp).dump();
    out += s.evasive ? ",1\n" : ",0\n";
  }
  return out;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Corrupt, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::MissingFile, "cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace evadex
