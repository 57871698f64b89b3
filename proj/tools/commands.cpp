#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "evadex/error.hpp"
#include "evadex/json_io.hpp"
#include "evadex/model_io.hpp"
#include "evadex/parallel.hpp"
#include "evadex/pipeline.hpp"
#include "evadex/synth.hpp"

namespace evadex::cli {

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> tau;
  std::optional<std::string> strategy;
  std::optional<std::size_t> budget;
  std::optional<unsigned> jobs;
  std::optional<std::string> out;
  std::string model;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_config) {
  auto* c = cmd->add_option("--config", f.config, "flat JSON run config");
  if (needs_config) c->required();
  cmd->add_option("--seed", f.seed, "global seed (falls back to EVADEX_SEED)");
  cmd->add_option("--tau", f.tau, "high-correlation threshold");
  cmd->add_option("--strategy", f.strategy, "additive|noise|guided")
      ->check(CLI::IsMember({"additive", "noise", "guided"}));
  cmd->add_option("--budget", f.budget, "max perturbed features")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output directory");
}

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("EVADEX_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  std::uint64_t v = 0;
  const char* end = raw + std::char_traits<char>::length(raw);
  const auto [p, ec] = std::from_chars(raw, end, v);
  if (ec != std::errc{} || p != end) {
    throw Error(ErrorCode::InvalidConfig, "EVADEX_SEED is not an unsigned integer");
  }
  return v;
}

// Flags win over the config file; the environment seed is used only when
// neither sets one.
RunConfig resolve(const CommonFlags& f) {
  Json j = Json::object();
  if (!f.config.empty()) {
    try {
      j = read_json_file(f.config);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Corrupt) throw Error(ErrorCode::InvalidConfig, e.what());
      throw;
    }
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  if (f.seed) {
    j["seed"] = *f.seed;
  } else if (!j.contains("seed")) {
    if (auto s = env_seed()) j["seed"] = *s;
  }
  if (f.tau) j["tau"] = *f.tau;
  if (f.strategy) j["strategy"] = *f.strategy;
  if (f.budget) j["budget"] = *f.budget;
  if (f.jobs) j["jobs"] = *f.jobs;
  if (f.out) j["out"] = *f.out;
  RunConfig cfg = parse_run_config(j);
  if (cfg.dataset.empty()) throw Error(ErrorCode::InvalidConfig, "config has no 'dataset'");
  return cfg;
}

fs::path output_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out, ec);
  if (ec || !fs::is_directory(cfg.out)) {
    throw Error(ErrorCode::MissingFile,
                "cannot create output directory '" + cfg.out.string() + "'");
  }
  return cfg.out;
}

struct Loaded {
  PreparedData data;
  std::shared_ptr<const PredictionModel> model;
  std::uint64_t train_seed = 0;
};

Loaded load_or_train(const RunConfig& cfg, const std::string& model_path) {
  PreparedData data = prepare_data(cfg);
  if (!model_path.empty()) {
    ModelFile mf = load_model(model_path, data.full.dim());
    return {std::move(data), mf.model, mf.seed};
  }
  TrainConfig tc = cfg.train;
  tc.seed = stage_seeds(cfg.seed).train;
  auto model = train_model(data.train, tc);
  return {std::move(data), std::move(model), tc.seed};
}

std::string fmt(double v) { return Json(v).dump(); }

void print_summary(std::ostream& out, const CampaignSummary& s) {
  out << "pre_accuracy=" << fmt(s.pre_accuracy)
      << " post_accuracy=" << fmt(s.post_accuracy)
      << " aggregate_evasion=" << fmt(s.aggregate_evasion)
      << " attacked=" << s.n_attacked << " evaded=" << s.n_evaded << "\n";
}

int cmd_train(const CommonFlags& f, std::ostream& out) {
  const RunConfig cfg = resolve(f);
  const fs::path dir = output_dir(cfg);
  const Loaded l = load_or_train(cfg, "");
  const fs::path path = dir / "model.json";
  save_model(path, *l.model, l.train_seed);
  out << "model=" << path.string()
      << " train_accuracy=" << fmt(accuracy(*l.model, l.data.train))
      << " pre_evasion_accuracy=" << fmt(accuracy(*l.model, l.data.evasion)) << "\n";
  return kOk;
}

int cmd_attack(const CommonFlags& f, std::ostream& out) {
  const RunConfig cfg = resolve(f);
  const fs::path dir = output_dir(cfg);
  const Loaded l = load_or_train(cfg, f.model);
  const AttackConfig attack = effective_attack(cfg, l.data.evasion.kind());
  const CampaignResult result =
      run_attack_campaign(*l.model, l.data.evasion, attack, cfg.jobs);
  write_text_file(dir / "outcomes.json", dump(campaign_to_json(result)));
  print_summary(out, result.summary);
  return kOk;
}

int cmd_explain(const CommonFlags& f, std::optional<std::uint64_t> sample,
                std::ostream& out) {
  const RunConfig cfg = resolve(f);
  const fs::path dir = output_dir(cfg);
  const Loaded l = load_or_train(cfg, f.model);
  const ExplainConfig ecfg = effective_explain(cfg, l.data.evasion.kind());
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < l.data.evasion.size(); ++i) {
    if (!sample || l.data.evasion.sample(i).id == *sample) rows.push_back(i);
  }
  if (rows.empty()) {
    throw Error(ErrorCode::IndexOutOfRange,
                "sample id " + std::to_string(*sample) + " is not in the evasion set");
  }
  std::vector<ExplanationSet> expl(rows.size());
  parallel_for(rows.size(), cfg.jobs, [&](std::size_t i) {
    expl[i] = explain(*l.model, l.data.evasion.sample(rows[i]), ecfg);
  });
  Json list = Json::array();
  for (const auto& e : expl) list.push_back(to_json(e));
  write_text_file(dir / "explanations.json", dump(Json{{"explanations", list}}));
  out << "explained=" << expl.size() << "\n";
  return kOk;
}

int cmd_diagnose(const CommonFlags& f, const std::string& outcomes_path,
                 std::ostream& out) {
  const RunConfig cfg = resolve(f);
  const std::vector<AttackOutcome> outcomes =
      outcomes_from_json(read_json_file(outcomes_path));
  const fs::path dir = output_dir(cfg);
  const Loaded l = load_or_train(cfg, f.model);
  const DiagnosisReport report =
      diagnose(*l.model, l.data.evasion, outcomes,
               effective_explain(cfg, l.data.evasion.kind()),
               DiagnoseOptions{cfg.hcr, cfg.jobs});
  write_text_file(dir / "report.json", dump(to_json(report)));
  write_text_file(dir / "scatter.csv", format_scatter_csv(report));
  out << "hcr=" << fmt(report.hcr) << " ape=" << fmt(report.ape)
      << " diagnosed=" << report.n_samples << " skipped=" << report.n_skipped << "\n";
  return kOk;
}

int cmd_case_study(const CommonFlags& f, std::ostream& out) {
  const RunConfig cfg = resolve(f);
  const fs::path dir = output_dir(cfg);
  const Loaded l = load_or_train(cfg, f.model);
  CaseStudyResult r = run_case_study(*l.model, l.data.evasion, cfg);
  r.train_accuracy = accuracy(*l.model, l.data.train);
  write_text_file(dir / "case_study.json", dump(to_json(r)));
  write_text_file(dir / "scatter_baseline.csv", format_scatter_csv(r.baseline.report));
  write_text_file(dir / "scatter_guided.csv", format_scatter_csv(r.guided.report));
  out << "baseline hcr=" << fmt(r.baseline.report.hcr)
      << " ape=" << fmt(r.baseline.report.ape)
      << " post_accuracy=" << fmt(r.baseline.report.post_accuracy) << "\n";
  out << "guided   hcr=" << fmt(r.guided.report.hcr)
      << " ape=" << fmt(r.guided.report.ape)
      << " post_accuracy=" << fmt(r.guided.report.post_accuracy) << "\n";
  return kOk;
}

// Re-applies every Evaded record and checks the adversarial label.
int cmd_replay(const CommonFlags& f, const std::string& outcomes_path,
               std::ostream& out, std::ostream& err) {
  const RunConfig cfg = resolve(f);
  const std::vector<AttackOutcome> outcomes =
      outcomes_from_json(read_json_file(outcomes_path));
  const Loaded l = load_or_train(cfg, f.model);
  const LabeledDataset& ev = l.data.evasion;
  std::size_t checked = 0, mismatched = 0;
  for (const auto& o : outcomes) {
    if (o.status != AttackStatus::Evaded) continue;
    const auto it = std::find_if(ev.samples().begin(), ev.samples().end(),
                                 [&](const Sample& s) { return s.id == o.record.sample_id; });
    if (it == ev.samples().end()) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "sample id " + std::to_string(o.record.sample_id) +
                      " is not in the evasion set");
    }
    ++checked;
    const int label = l.model->predict(apply_perturbation(*it, o.record, ev.space()));
    if (label != o.record.adversarial_label) {
      ++mismatched;
      err << "mismatch: sample " << o.record.sample_id << " predicted " << label
          << ", recorded " << o.record.adversarial_label << "\n";
    }
  }
  out << "replayed=" << checked << " mismatched=" << mismatched << "\n";
  return mismatched == 0 ? kOk : kDataError;
}

struct SynthFlags {
  std::string kind = "binary-planted";
  std::size_t n = 1000;
  std::size_t d = 0;
  std::size_t planted = 5;
  std::size_t classes = 3;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string file = "dataset.csv";
};

int cmd_synth(const SynthFlags& f, std::ostream& out) {
  std::uint64_t seed = 0;
  if (f.seed) {
    seed = *f.seed;
  } else if (auto s = env_seed()) {
    seed = *s;
  }
  std::optional<LabeledDataset> data;
  if (f.kind == "binary-planted") {
    BinaryPlantedParams p;
    p.n = f.n;
    if (f.d > 0) p.d = f.d;
    p.planted = f.planted;
    p.seed = seed;
    data = make_binary_planted(p).data;
  } else {
    ContinuousBlobsParams p;
    p.n = f.n;
    if (f.d > 0) p.d = f.d;
    p.classes = f.classes;
    p.seed = seed;
    data = make_continuous_blobs(p);
  }
  std::error_code ec;
  fs::create_directories(f.out, ec);
  const fs::path path = fs::path(f.out) / f.file;
  write_dataset_csv(*data, path);
  out << "dataset=" << path.string() << " n=" << data->size() << " d=" << data->dim()
      << " k=" << data->num_classes() << "\n";
  return kOk;
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidFraction:
    case ErrorCode::InvalidTarget:
      return kUsage;
    case ErrorCode::Singular:
    case ErrorCode::ZeroPerturbations:
      return kNumerical;
    default:
      return kDataError;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Feature-space evasion attacks and explanation-based diagnosis"};
  app.require_subcommand(1);

  CommonFlags common;
  std::string outcomes_path;
  std::optional<std::uint64_t> sample;
  SynthFlags synth;

  auto* train = app.add_subcommand("train", "train a model and save it");
  add_common(train, common, true);

  auto* attack = app.add_subcommand("attack", "run an attack campaign");
  add_common(attack, common, true);
  attack->add_option("--model", common.model, "trained model file");

  auto* expl = app.add_subcommand("explain", "explain evasion-set predictions");
  add_common(expl, common, true);
  expl->add_option("--model", common.model, "trained model file");
  expl->add_option("--sample", sample, "only this sample id");

  auto* diag = app.add_subcommand("diagnose", "score attack outcomes");
  add_common(diag, common, true);
  diag->add_option("--model", common.model, "trained model file");
  diag->add_option("--outcomes", outcomes_path, "outcomes JSON")->required();

  auto* cs = app.add_subcommand("case-study", "guided vs unguided comparison");
  add_common(cs, common, true);
  cs->add_option("--model", common.model, "trained model file");

  auto* replay = app.add_subcommand("replay", "re-check evaded outcomes");
  add_common(replay, common, true);
  replay->add_option("--model", common.model, "trained model file");
  replay->add_option("--outcomes", outcomes_path, "outcomes JSON")->required();

  auto* syn = app.add_subcommand("synth", "write a synthetic dataset CSV");
  syn->add_option("--kind", synth.kind, "binary-planted|continuous-blobs")
      ->check(CLI::IsMember({"binary-planted", "continuous-blobs"}));
  syn->add_option("--n", synth.n, "samples")->check(CLI::PositiveNumber);
  syn->add_option("--d", synth.d, "features")->check(CLI::PositiveNumber);
  syn->add_option("--planted", synth.planted, "planted features (odd)");
  syn->add_option("--classes", synth.classes, "blob classes");
  syn->add_option("--seed", synth.seed, "seed (falls back to EVADEX_SEED)");
  syn->add_option("--out", synth.out, "output directory");
  syn->add_option("--file", synth.file, "output file name");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*train) return cmd_train(common, out);
    if (*attack) return cmd_attack(common, out);
    if (*expl) return cmd_explain(common, sample, out);
    if (*diag) return cmd_diagnose(common, outcomes_path, out);
    if (*cs) return cmd_case_study(common, out);
    if (*replay) return cmd_replay(common, outcomes_path, out, err);
    if (*syn) return cmd_synth(synth, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace evadex::cli
