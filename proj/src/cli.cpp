#include "msd/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "msd/artifact.hpp"
#include "msd/classifiers.hpp"
#include "msd/config.hpp"
#include "msd/dataset.hpp"
#include "msd/evaluation.hpp"
#include "msd/version.hpp"

namespace msd::cli {

namespace {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Convergence: return 4;
    case ErrorKind::Internal: return 5;
  }
  return 5;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Data, "cannot write " + path.string());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Data, "cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct CommonOptions {
  std::vector<std::string> config_files;
  std::vector<std::string> overrides;
  int jobs = 1;

  RunConfig materialize() const {
    RunConfig cfg;
    for (const auto& f : config_files) cfg.apply_file(f);
    for (const auto& kv : overrides) cfg.apply_assignment(kv);
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--config", common.config_files, "Config file with dotted keys");
  cmd->add_option("--set", common.overrides, "Override a config key (key=value)");
  cmd->add_option("--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

struct ExtractionOutcome {
  bool ok = false;
  std::string error;
  features::FeatureVector vec;
};

int cmd_extract(const std::string& manifest_path, const std::string& out_dir,
                const CommonOptions& common) {
  const RunConfig cfg = common.materialize();
  const auto entries = dataset::load_manifest(manifest_path);
  const auto pre_cfg = cfg.preprocess_config();
  const auto feat_cfg = cfg.feature_config();

  std::vector<ExtractionOutcome> outcomes(entries.size());
  const auto work = [&](std::size_t i) {
    try {
      const Waveform w = dataset::preprocess(entries[i], pre_cfg);
      outcomes[i].vec = features::extract_features(w, feat_cfg);
      outcomes[i].ok = true;
    } catch (const Error& e) {
      outcomes[i].error = e.what();
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  };
  const int workers = std::max(1, std::min<int>(common.jobs, static_cast<int>(entries.size())));
  if (workers <= 1 || entries.size() < 2) {
    for (std::size_t i = 0; i < entries.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = static_cast<std::size_t>(t); i < entries.size();
             i += static_cast<std::size_t>(workers))
          work(i);
      });
    for (auto& t : pool) t.join();
  }

  features::FeatureMatrix m;
  m.feature_names = features::feature_names();
  std::string errors_log;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!outcomes[i].ok) {
      errors_log += entries[i].recording_id + ": " + outcomes[i].error + "\n";
      continue;
    }
    m.ids.push_back(entries[i].recording_id);
    m.labels.push_back(entries[i].label);
    m.values.insert(m.values.end(), outcomes[i].vec.values.begin(), outcomes[i].vec.values.end());
  }

  fs::create_directories(out_dir);
  features::write_feature_csv((fs::path(out_dir) / "features.csv").string(), m);
  if (!errors_log.empty()) {
    write_text(fs::path(out_dir) / "errors.log", errors_log);
    std::cerr << "extract: " << std::count(errors_log.begin(), errors_log.end(), '\n')
              << " recording(s) failed; see errors.log\n";
    return exit_code(ErrorKind::Data);
  }
  std::cout << "extracted " << m.rows() << " recordings -> " << out_dir << "/features.csv\n";
  return 0;
}

std::vector<evaluation::Scheme> parse_schemes(const std::string& list) {
  std::vector<evaluation::Scheme> schemes;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const std::string piece =
        comma == std::string::npos ? list.substr(pos) : list.substr(pos, comma - pos);
    if (!piece.empty()) schemes.push_back(evaluation::parse_scheme(piece));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (schemes.empty()) throw Error(ErrorKind::Usage, "no schemes requested");
  return schemes;
}

std::map<std::string, std::string> config_echo(const RunConfig& cfg,
                                               const std::string& schemes) {
  auto echo = cfg.values();
  echo["cli.schemes"] = schemes;
  return echo;
}

void save_final_models(const features::FeatureMatrix& m,
                       const std::vector<evaluation::Scheme>& schemes, const RunConfig& cfg,
                       const fs::path& out_dir, std::vector<std::string>& warnings) {
  const auto plan = cfg.cv_plan();
  const auto grid = cfg.grid_spec();
  const auto scfg = cfg.svm_config();
  classifiers::ClassifierConfig ccfg;
  ccfg.svm = scfg;
  ccfg.stage1_tie_to_patient = cfg.stage1_tie_to_patient();

  fs::create_directories(out_dir);
  std::vector<std::size_t> rows(m.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;

  for (const auto scheme : schemes) {
    const auto tuned = evaluation::nested_tune(m, rows, scheme, grid, plan.inner_folds,
                                               mix_seed(plan.seed, 0x5eed, 7), scfg, warnings);
    std::string bytes;
    switch (scheme) {
      case evaluation::Scheme::Hierarchical:
      case evaluation::Scheme::HierarchicalNoFs:
        bytes = classifiers::save_hierarchical(
            classifiers::train_hierarchical(m, rows, tuned[0].hp, tuned[1].hp, ccfg));
        break;
      case evaluation::Scheme::Ovo:
        bytes = classifiers::save_ovo(
            classifiers::train_ovo(m, rows, tuned[0].hp, tuned[1].hp, tuned[2].hp, ccfg));
        break;
      case evaluation::Scheme::Ovr:
        bytes = classifiers::save_ovr(
            classifiers::train_ovr(m, rows, tuned[0].hp, tuned[1].hp, tuned[2].hp, ccfg));
        break;
    }
    write_text(out_dir / (std::string(to_string(scheme)) + ".json"), bytes);
  }
}

int cmd_evaluate(const std::string& features_path, const std::string& out_dir,
                 const std::string& schemes_list, bool save_models,
                 const CommonOptions& common) {
  const RunConfig cfg = common.materialize();
  const auto schemes = parse_schemes(schemes_list);
  const auto m = features::read_feature_csv(features_path);

  auto report = evaluation::run_experiment(m, cfg.cv_plan(), cfg.grid_spec(), schemes,
                                           cfg.svm_config(), cfg.stage1_tie_to_patient(),
                                           config_echo(cfg, schemes_list), common.jobs);
  fs::create_directories(out_dir);
  if (save_models) {
    std::vector<std::string> warnings;
    save_final_models(m, schemes, cfg, fs::path(out_dir) / "models", warnings);
    for (auto& w : warnings) report.warnings.push_back("final models: " + w);
  }
  write_text(fs::path(out_dir) / "report.json", evaluation::report_json(report));
  write_text(fs::path(out_dir) / "report.md", evaluation::report_markdown(report));
  std::cout << "evaluation report -> " << out_dir << "/report.json\n";
  return 0;
}

evaluation::Aggregate aggregate_from_json(const nlohmann::json& j) {
  evaluation::Aggregate a;
  a.mean = j.at("mean").get<double>();
  a.std = j.at("std").get<double>();
  return a;
}

/// Pull one scheme's aggregates out of a previously written report.json.
evaluation::SchemeResult scheme_from_report(const std::string& bytes,
                                            evaluation::Scheme scheme) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::Data, std::string("report.json: parse error: ") + ex.what());
  }
  for (const auto& s : j.at("schemes")) {
    if (s.at("scheme").get<std::string>() != to_string(scheme)) continue;
    evaluation::SchemeResult out;
    out.scheme = scheme;
    out.balanced = aggregate_from_json(s.at("aggregate").at("balanced"));
    out.neurotypical = aggregate_from_json(s.at("aggregate").at("neurotypical"));
    out.patient = aggregate_from_json(s.at("aggregate").at("patient"));
    out.dysarthria = aggregate_from_json(s.at("aggregate").at("dysarthria"));
    out.aos = aggregate_from_json(s.at("aggregate").at("aos"));
    return out;
  }
  throw Error(ErrorKind::Data, std::string("report.json has no results for scheme ") +
                                   to_string(scheme));
}

int cmd_perceptual(const std::string& judges_path, const std::string& features_path,
                   const std::string& manifest_path, const std::string& report_path,
                   const std::string& scheme_name, const std::string& out_dir,
                   const CommonOptions& common) {
  const RunConfig cfg = common.materialize();
  const auto scheme = evaluation::parse_scheme(scheme_name);

  std::vector<std::string> ids;
  std::vector<ClassLabel> truths;
  features::FeatureMatrix m;
  bool have_features = false;
  if (!features_path.empty()) {
    m = features::read_feature_csv(features_path);
    ids = m.ids;
    truths = m.labels;
    have_features = true;
  } else if (!manifest_path.empty()) {
    for (const auto& e : dataset::load_manifest(manifest_path)) {
      ids.push_back(e.recording_id);
      truths.push_back(e.label);
    }
  } else {
    throw Error(ErrorKind::Usage, "perceptual: need --features or --manifest for true labels");
  }

  evaluation::SchemeResult automatic;
  if (!report_path.empty()) {
    automatic = scheme_from_report(read_text(report_path), scheme);
  } else if (have_features) {
    const auto report = evaluation::run_experiment(
        m, cfg.cv_plan(), cfg.grid_spec(), {scheme}, cfg.svm_config(),
        cfg.stage1_tie_to_patient(), config_echo(cfg, scheme_name), common.jobs);
    automatic = report.schemes.front();
  } else {
    throw Error(ErrorKind::Usage,
                "perceptual: need --report, or --features to compute the automatic side");
  }

  const auto responses = evaluation::load_judge_responses(judges_path);
  const auto perceptual = evaluation::perceptual_metrics(responses, ids, truths);

  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "comparison.json",
             evaluation::comparison_json(automatic, perceptual, config_echo(cfg, scheme_name)));
  write_text(fs::path(out_dir) / "comparison.md",
             evaluation::comparison_markdown(automatic, perceptual));
  std::cout << "comparison report -> " << out_dir << "/comparison.md\n";
  return 0;
}

int cmd_synth(const std::string& out_file, std::uint64_t seed, int n_neuro, int n_dys,
              int n_aos, double separation) {
  const auto m = evaluation::synth_cohort(seed, n_neuro, n_dys, n_aos, separation);
  features::write_feature_csv(out_file, m);
  std::cout << "synthetic cohort (" << m.rows() << " rows) -> " << out_file << "\n";
  return 0;
}

void print_member(const svm::SvmModel& m, const std::string& name) {
  std::cout << "  " << name << ": " << m.positive_class << " (+1) vs " << m.negative_class
            << " (-1)\n"
            << "    C = " << m.params.c << ", gamma = " << m.params.gamma
            << ", n_f = " << m.params.n_f << "\n"
            << "    support vectors: " << m.n_sv << ", bias = " << m.bias
            << ", class weights = (" << m.weight_positive << ", " << m.weight_negative << ")\n"
            << "    features:";
  for (const auto& f : m.feature_names) std::cout << " " << f;
  std::cout << "\n";
}

int cmd_inspect_model(const std::string& model_path) {
  const std::string bytes = read_text(model_path);
  nlohmann::json probe;
  try {
    probe = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::Data, model_path + ": parse error: " + ex.what());
  }
  const std::string kind = probe.value("kind", "");
  std::cout << model_path << ": kind = " << kind << "\n";
  if (kind == "svm") {
    print_member(svm::load_model(bytes), "svm");
  } else if (kind == "hierarchical") {
    const auto m = classifiers::load_hierarchical(bytes);
    print_member(m.svm1, "svm1");
    print_member(m.svm2, "svm2");
  } else if (kind == "ovo") {
    const auto m = classifiers::load_ovo(bytes);
    print_member(m.neuro_dys, "neuro_dys");
    print_member(m.neuro_aos, "neuro_aos");
    print_member(m.dys_aos, "dys_aos");
  } else if (kind == "ovr") {
    const auto m = classifiers::load_ovr(bytes);
    print_member(m.neuro, "neuro");
    print_member(m.dys, "dys");
    print_member(m.aos, "aos");
  } else {
    throw Error(ErrorKind::Data, model_path + ": unknown artifact kind \"" + kind + "\"");
  }
  std::cout << "checksum: ok\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{std::string(kToolName) +
               " - hierarchical classification of dysarthria, apraxia of speech, and "
               "neurotypical speech"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  CommonOptions common;

  auto* extract = app.add_subcommand("extract", "Extract the 28-dim feature CSV from a manifest");
  std::string manifest_path, out_dir;
  extract->add_option("--manifest", manifest_path, "JSON Lines manifest")->required();
  extract->add_option("--out", out_dir, "Output directory")->required();
  add_common(extract, common);

  auto* evaluate = app.add_subcommand("evaluate", "Run the cross-validation experiment");
  std::string features_path, schemes_list = "hierarchical,hierarchical-no-fs,ovo,ovr";
  bool save_models = false;
  evaluate->add_option("--features", features_path, "Feature CSV")->required();
  evaluate->add_option("--out", out_dir, "Output directory")->required();
  evaluate->add_option("--schemes", schemes_list, "Comma-separated scheme list");
  evaluate->add_flag("--save-models", save_models,
                     "Also train and save one model per scheme on the full dataset");
  add_common(evaluate, common);

  auto* perceptual =
      app.add_subcommand("perceptual", "Compare automatic and perceptual classification");
  std::string judges_path, perc_manifest, report_path, scheme_name = "hierarchical";
  std::string perc_features;
  perceptual->add_option("--judges", judges_path, "Judge response CSV")->required();
  perceptual->add_option("--features", perc_features, "Feature CSV (labels + automatic side)");
  perceptual->add_option("--manifest", perc_manifest, "Manifest (labels only)");
  perceptual->add_option("--report", report_path, "Existing report.json for the automatic side");
  perceptual->add_option("--scheme", scheme_name, "Automatic scheme for the comparison");
  perceptual->add_option("--out", out_dir, "Output directory")->required();
  add_common(perceptual, common);

  auto* synth = app.add_subcommand("synth", "Write a synthetic feature cohort CSV");
  std::string synth_out;
  std::uint64_t synth_seed = 42;
  int n_neuro = 20, n_dys = 20, n_aos = 20;
  double separation = 4.0;
  synth->add_option("--out", synth_out, "Output CSV path")->required();
  synth->add_option("--seed", synth_seed, "Random seed");
  synth->add_option("--n-neuro", n_neuro, "Neurotypical rows");
  synth->add_option("--n-dys", n_dys, "Dysarthria rows");
  synth->add_option("--n-aos", n_aos, "AoS rows");
  synth->add_option("--separation", separation, "Class separation in sigma units");

  auto* inspect = app.add_subcommand("inspect-model", "Print a model artifact summary");
  std::string model_path;
  inspect->add_option("--model", model_path, "Model artifact path")->required();

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (extract->parsed()) return cmd_extract(manifest_path, out_dir, common);
    if (evaluate->parsed())
      return cmd_evaluate(features_path, out_dir, schemes_list, save_models, common);
    if (perceptual->parsed())
      return cmd_perceptual(judges_path, perc_features, perc_manifest, report_path, scheme_name,
                            out_dir, common);
    if (synth->parsed()) return cmd_synth(synth_out, synth_seed, n_neuro, n_dys, n_aos, separation);
    if (inspect->parsed()) return cmd_inspect_model(model_path);
    std::cerr << app.help();
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 5;
  }
}

}  // namespace msd::cli
