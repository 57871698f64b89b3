#include "evadex/pipeline.hpp"

#include <cmath>
#include <set>

#include "evadex/error.hpp"
#include "evadex/rng.hpp"

namespace evadex {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "dataset",       "label_column",   "feature_kind",
      "train_fraction", "evasion_fraction", "model",
      "learning_rate", "epochs",          "hidden_units",
      "batch_size",    "max_depth",       "min_leaf",
      "l2",            "strategy",        "budget",
      "noise_scale",   "background_threshold", "guided_base",
      "order",         "num_perturbations", "kernel",
      "kernel_width",  "eps_neutral",     "ridge",
      "mask_fill",     "tau",             "hcr_evasive_only",
      "seed",          "out",             "jobs"};
  return keys;
}

template <class T>
T value(const Json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::InvalidConfig, "bad value for '" + key + "'");
  }
}

// Enum parsers throw InvalidConfig on unknown names; keep the key in the
// message.
template <class F>
auto parse_enum(const Json& j, const std::string& key, F parse) {
  const auto name = value<std::string>(j, key);
  try {
    return parse(name);
  } catch (const Error&) {
    throw Error(ErrorCode::InvalidConfig,
                "unknown value '" + name + "' for '" + key + "'");
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!(split.train > 0.0) || !(split.evasion > 0.0) ||
      split.train + split.evasion > 1.0 + 1e-12) {
    throw Error(ErrorCode::InvalidFraction,
                "fractions must be positive and sum to at most 1");
  }
  train.validate();
  if (attack.budget < 1) throw Error(ErrorCode::InvalidConfig, "budget must be >= 1");
  if (!(attack.noise_scale > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "noise_scale must be > 0");
  }
  if (attack.guided_base == AttackStrategy::Guided) {
    throw Error(ErrorCode::InvalidConfig, "guided_base must be additive or noise");
  }
  if (!std::isfinite(explain.eps_neutral) || explain.eps_neutral < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "eps_neutral must be finite and >= 0");
  }
  if (explain.ridge < 0.0 || explain.kernel_width < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "ridge and kernel_width must be >= 0");
  }
  if (!std::isfinite(hcr.tau)) throw Error(ErrorCode::InvalidConfig, "tau must be finite");
  if (jobs < 1) throw Error(ErrorCode::InvalidConfig, "jobs must be >= 1");
}

RunConfig parse_run_config(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known_keys().contains(key)) {
      throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    }
  }
  RunConfig cfg;
  // The model kind fixes the training defaults, so it is read first.
  if (j.contains("model")) {
    cfg.train = TrainConfig::defaults(parse_enum(j, "model", model_kind_from_string));
  }
  auto has = [&](const char* key) { return j.contains(key); };

  if (has("dataset")) cfg.dataset = value<std::string>(j, "dataset");
  if (has("label_column")) cfg.csv.label_column = value<std::string>(j, "label_column");
  if (has("feature_kind")) {
    cfg.csv.feature_kind = parse_enum(j, "feature_kind", feature_kind_from_string);
  }
  if (has("train_fraction")) cfg.split.train = value<double>(j, "train_fraction");
  if (has("evasion_fraction")) cfg.split.evasion = value<double>(j, "evasion_fraction");

  if (has("learning_rate")) cfg.train.learning_rate = value<double>(j, "learning_rate");
  if (has("epochs")) cfg.train.epochs = value<int>(j, "epochs");
  if (has("hidden_units")) {
    cfg.train.hidden_units = value<std::vector<std::size_t>>(j, "hidden_units");
  }
  if (has("batch_size")) cfg.train.batch_size = value<std::size_t>(j, "batch_size");
  if (has("max_depth")) cfg.train.max_depth = value<int>(j, "max_depth");
  if (has("min_leaf")) cfg.train.min_leaf = value<std::size_t>(j, "min_leaf");
  if (has("l2")) cfg.train.l2 = value<double>(j, "l2");

  if (has("strategy")) {
    cfg.attack.strategy = parse_enum(j, "strategy", attack_strategy_from_string);
  }
  if (has("budget")) cfg.attack.budget = value<std::size_t>(j, "budget");
  if (has("noise_scale")) cfg.attack.noise_scale = value<double>(j, "noise_scale");
  if (has("background_threshold")) {
    cfg.attack.background_threshold = value<double>(j, "background_threshold");
  }
  if (has("guided_base")) {
    cfg.attack.guided_base = parse_enum(j, "guided_base", attack_strategy_from_string);
  }
  if (has("order")) cfg.attack.order = parse_enum(j, "order", flip_order_from_string);

  if (has("num_perturbations")) {
    cfg.explain.num_perturbations = value<std::size_t>(j, "num_perturbations");
  }
  if (has("kernel")) cfg.explain.kernel = parse_enum(j, "kernel", kernel_kind_from_string);
  if (has("kernel_width")) cfg.explain.kernel_width = value<double>(j, "kernel_width");
  if (has("eps_neutral")) cfg.explain.eps_neutral = value<double>(j, "eps_neutral");
  if (has("ridge")) cfg.explain.ridge = value<double>(j, "ridge");
  if (has("mask_fill")) cfg.mask_fill = parse_enum(j, "mask_fill", mask_fill_from_string);

  if (has("tau")) cfg.hcr.tau = value<double>(j, "tau");
  if (has("hcr_evasive_only")) cfg.hcr.evasive_only = value<bool>(j, "hcr_evasive_only");
  if (has("seed")) cfg.seed = value<std::uint64_t>(j, "seed");
  if (has("out")) cfg.out = value<std::string>(j, "out");
  if (has("jobs")) cfg.jobs = value<unsigned>(j, "jobs");
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  Json j;
  try {
    j = read_json_file(path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Corrupt) throw Error(ErrorCode::InvalidConfig, e.what());
    throw;
  }
  return parse_run_config(j);
}

StageSeeds stage_seeds(std::uint64_t seed) {
  return {derive_seed(seed, 303), derive_seed(seed, 404), derive_seed(seed, 101),
          derive_seed(seed, 202), derive_seed(seed, 505)};
}

PreparedData prepare_data(const RunConfig& cfg) {
  LabeledDataset full = load_dataset_csv(cfg.dataset, cfg.csv);
  auto [train, evasion] = split_dataset(full, cfg.split, stage_seeds(cfg.seed).split);
  return {std::move(full), std::move(train), std::move(evasion)};
}

std::shared_ptr<const PredictionModel> train_model(const LabeledDataset& data,
                                                   TrainConfig cfg) {
  switch (cfg.kind) {
    case ModelKind::LogReg:
      return std::make_shared<LogRegModel>(train_logreg(data, cfg));
    case ModelKind::Mlp:
      return std::make_shared<MlpModel>(train_mlp(data, cfg));
    case ModelKind::Tree:
      return std::make_shared<TreeModel>(train_tree(data, cfg));
  }
  throw Error(ErrorCode::InvalidConfig, "unknown model kind");
}

ExplainConfig effective_explain(const RunConfig& cfg, FeatureKind kind) {
  ExplainConfig e = cfg.explain;
  (void)kind;
  e.fill = cfg.mask_fill.value_or(MaskFill::Zero);
  e.seed = stage_seeds(cfg.seed).explain;
  return e;
}

AttackConfig effective_attack(const RunConfig& cfg, FeatureKind kind) {
  AttackConfig a = cfg.attack;
  a.seed = stage_seeds(cfg.seed).attack;
  a.explain = effective_explain(cfg, kind);
  // Additive candidates are absent features, which zeroing cannot observe.
  a.explain.fill = cfg.mask_fill.value_or(kind == FeatureKind::Binary ? MaskFill::Toggle
                                                                      : MaskFill::Zero);
  a.explain.seed = stage_seeds(cfg.seed).guided_explain;
  return a;
}

ArmResult run_arm(const PredictionModel& model, const LabeledDataset& evasion,
                  const AttackConfig& attack, const ExplainConfig& explain,
                  const RunConfig& cfg) {
  ArmResult arm;
  arm.campaign = run_attack_campaign(model, evasion, attack, cfg.jobs);
  arm.report = diagnose(model, evasion, arm.campaign.outcomes, explain,
                        DiagnoseOptions{cfg.hcr, cfg.jobs});
  return arm;
}

CaseStudyResult run_case_study(const PredictionModel& model,
                               const LabeledDataset& evasion,
                               const RunConfig& cfg) {
  const AttackStrategy base = cfg.attack.strategy == AttackStrategy::Guided
                                  ? cfg.attack.guided_base
                                  : cfg.attack.strategy;
  AttackConfig baseline = effective_attack(cfg, evasion.kind());
  baseline.strategy = base;
  AttackConfig guided = baseline;
  guided.strategy = AttackStrategy::Guided;
  guided.guided_base = base;
  const ExplainConfig explain = effective_explain(cfg, evasion.kind());

  CaseStudyResult r;
  r.baseline = run_arm(model, evasion, baseline, explain, cfg);
  r.guided = run_arm(model, evasion, guided, explain, cfg);
  r.deltas.post_acc_delta =
      r.guided.report.post_accuracy - r.baseline.report.post_accuracy;
  r.deltas.hcr_delta = r.guided.report.hcr - r.baseline.report.hcr;
  r.deltas.ape_delta = r.guided.report.ape - r.baseline.report.ape;
  return r;
}

CaseStudyResult run_case_study(const RunConfig& cfg) {
  const PreparedData data = prepare_data(cfg);
  TrainConfig tc = cfg.train;
  tc.seed = stage_seeds(cfg.seed).train;
  const auto model = train_model(data.train, tc);
  CaseStudyResult r = run_case_study(*model, data.evasion, cfg);
  r.train_accuracy = accuracy(*model, data.train);
  return r;
}

Json to_json(const ArmResult& arm) {
  Json j;
  j["summary"] = to_json(arm.campaign.summary);
  j["report"] = to_json(arm.report);
  return j;
}

Json to_json(const CaseStudyResult& r) {
  Json j;
  j["train_accuracy"] = r.train_accuracy;
  j["baseline"] = to_json(r.baseline);
  j["guided"] = to_json(r.guided);
  j["deltas"] = {{"post_acc_delta", r.deltas.post_acc_delta},
                 {"hcr_delta", r.deltas.hcr_delta},
                 {"ape_delta", r.deltas.ape_delta}};
  return j;
}

}  // namespace evadex
