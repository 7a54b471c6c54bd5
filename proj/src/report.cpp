#include <algorithm>
#include <cstdio>
#include <map>
#include <vector>

#include "json.hpp"
#include "msd/evaluation.hpp"
#include "msd/version.hpp"

namespace msd::evaluation {

namespace {

using nlohmann::json;

std::string percent(const Aggregate& a) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f ± %.1f", 100.0 * a.mean, 100.0 * a.std);
  return buf;
}

json aggregate_json(const Aggregate& a) { return json{{"mean", a.mean}, {"std", a.std}}; }

json accuracies_json(const GroupAccuracies& g) {
  return json{
      {"balanced", g.balanced},
      {"neurotypical", g.neurotypical},
      {"patient", g.patient},
      {"dysarthria", g.dysarthria},
      {"aos", g.aos},
      {"counts",
       {{"neurotypical", {g.ap_neuro, g.t_neuro}},
        {"dysarthria", {g.ap_dys, g.t_dys}},
        {"aos", {g.ap_aos, g.t_aos}},
        {"patient", {g.ap_patient, g.t_dys + g.t_aos}}}},
  };
}

json scheme_json(const SchemeResult& s, const std::vector<std::string>& ids) {
  json j;
  j["scheme"] = to_string(s.scheme);
  j["aggregate"] = {
      {"balanced", aggregate_json(s.balanced)},   {"neurotypical", aggregate_json(s.neurotypical)},
      {"patient", aggregate_json(s.patient)},     {"dysarthria", aggregate_json(s.dysarthria)},
      {"aos", aggregate_json(s.aos)},
  };
  json reps = json::array();
  for (std::size_t r = 0; r < s.repetitions.size(); ++r) {
    const auto& rep = s.repetitions[r];
    json preds;
    for (std::size_t i = 0; i < ids.size(); ++i) preds[ids[i]] = to_string(rep.predictions[i]);
    reps.push_back(
        {{"index", r}, {"accuracies", accuracies_json(rep.acc)}, {"predictions", preds}});
  }
  j["repetitions"] = std::move(reps);

  json folds = json::array();
  for (const auto& f : s.folds) {
    json members = json::array();
    for (const auto& mr : f.members) {
      members.push_back({{"name", mr.name},
                         {"c", mr.hp.c},
                         {"gamma", mr.hp.gamma},
                         {"n_f", mr.hp.n_f},
                         {"inner_score", mr.inner_score},
                         {"mask", mr.mask_indices},
                         {"scaler_mean", mr.scaler_mean},
                         {"scaler_std", mr.scaler_std}});
    }
    folds.push_back(
        {{"repetition", f.repetition}, {"fold", f.fold}, {"members", std::move(members)}});
  }
  j["folds"] = std::move(folds);
  return j;
}

}  // namespace

std::string report_json(const EvaluationReport& report) {
  json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["config"] = report.config;

  int n_neuro = 0, n_dys = 0, n_aos = 0;
  for (ClassLabel l : report.labels) {
    if (l == ClassLabel::Neurotypical)
      ++n_neuro;
    else if (l == ClassLabel::Dysarthria)
      ++n_dys;
    else
      ++n_aos;
  }
  json labels = json::array();
  for (ClassLabel l : report.labels) labels.push_back(to_string(l));
  j["dataset"] = {{"recordings", report.ids.size()},
                  {"ids", report.ids},
                  {"labels", std::move(labels)},
                  {"feature_names", report.feature_names},
                  {"class_counts",
                   {{"neurotypical", n_neuro}, {"dysarthria", n_dys}, {"aos", n_aos}}}};

  json schemes = json::array();
  for (const auto& s : report.schemes) schemes.push_back(scheme_json(s, report.ids));
  j["schemes"] = std::move(schemes);
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

std::string report_markdown(const EvaluationReport& report) {
  std::string md;
  md += "# ";
  md += kToolName;
  md += " evaluation report\n\n";

  int n_neuro = 0, n_dys = 0, n_aos = 0;
  for (ClassLabel l : report.labels) {
    if (l == ClassLabel::Neurotypical)
      ++n_neuro;
    else if (l == ClassLabel::Dysarthria)
      ++n_dys;
    else
      ++n_aos;
  }
  md += "- tool: " + std::string(kToolName) + " " + kToolVersion + "\n";
  md += "- recordings: " + std::to_string(report.ids.size()) + " (neurotypical " +
        std::to_string(n_neuro) + ", dysarthria " + std::to_string(n_dys) + ", aos " +
        std::to_string(n_aos) + ")\n\n";

  md += "## Balanced accuracy by scheme [%]\n\n";
  md += "| Classification approach | Balanced accuracy |\n|---|---|\n";
  for (const auto& s : report.schemes)
    md += "| " + std::string(to_string(s.scheme)) + " | " + percent(s.balanced) + " |\n";
  md += "\n";

  md += "## Group accuracies [%]\n\n";
  for (const auto& s : report.schemes) {
    md += "### ";
    md += to_string(s.scheme);
    md += "\n\n| Accuracy | Mean ± std |\n|---|---|\n";
    md += "| balanced | " + percent(s.balanced) + " |\n";
    md += "| neurotypical | " + percent(s.neurotypical) + " |\n";
    md += "| patient | " + percent(s.patient) + " |\n";
    md += "| dysarthria | " + percent(s.dysarthria) + " |\n";
    md += "| aos | " + percent(s.aos) + " |\n\n";
  }

  md += "## Selected features\n\n";
  md += "How often each feature entered a member's mask, over all folds and "
        "repetitions.\n\n";
  for (const auto& s : report.schemes) {
    // member name -> (feature index -> count), plus fold totals per member
    std::map<std::string, std::map<std::size_t, int>> counts;
    std::map<std::string, int> fold_totals;
    for (const auto& f : s.folds) {
      for (const auto& mr : f.members) {
        ++fold_totals[mr.name];
        for (std::size_t idx : mr.mask_indices) ++counts[mr.name][idx];
      }
    }
    md += "### ";
    md += to_string(s.scheme);
    md += "\n\n| Member | Feature | Selected in folds |\n|---|---|---|\n";
    for (const auto& [member, by_feature] : counts) {
      std::vector<std::pair<std::size_t, int>> ranked(by_feature.begin(), by_feature.end());
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
      });
      for (const auto& [idx, count] : ranked) {
        const std::string name = idx < report.feature_names.size()
                                     ? report.feature_names[idx]
                                     : "f" + std::to_string(idx);
        md += "| " + member + " | " + name + " | " + std::to_string(count) + "/" +
              std::to_string(fold_totals[member]) + " |\n";
      }
    }
    md += "\n";
  }

  md += "## Effective configuration\n\n```\n";
  for (const auto& [key, value] : report.config) md += key + " = " + value + "\n";
  md += "```\n";
  return md;
}

std::string comparison_json(const SchemeResult& automatic, const PerceptualResult& perceptual,
                            const std::map<std::string, std::string>& config_echo) {
  json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["config"] = config_echo;
  j["automatic"] = {{"scheme", to_string(automatic.scheme)},
                    {"balanced", aggregate_json(automatic.balanced)},
                    {"neurotypical", aggregate_json(automatic.neurotypical)},
                    {"patient", aggregate_json(automatic.patient)},
                    {"dysarthria", aggregate_json(automatic.dysarthria)},
                    {"aos", aggregate_json(automatic.aos)}};
  json judges = json::array();
  for (std::size_t i = 0; i < perceptual.judge_ids.size(); ++i)
    judges.push_back({{"judge_id", perceptual.judge_ids[i]},
                      {"accuracies", accuracies_json(perceptual.per_judge[i])}});
  j["perceptual"] = {{"balanced", aggregate_json(perceptual.balanced)},
                     {"neurotypical", aggregate_json(perceptual.neurotypical)},
                     {"patient", aggregate_json(perceptual.patient)},
                     {"dysarthria", aggregate_json(perceptual.dysarthria)},
                     {"aos", aggregate_json(perceptual.aos)},
                     {"judges", std::move(judges)}};
  return j.dump(2) + "\n";
}

std::string comparison_markdown(const SchemeResult& automatic,
                                const PerceptualResult& perceptual) {
  std::string md;
  md += "# Automatic vs perceptual classification\n\n";
  md += "Automatic scheme: ";
  md += to_string(automatic.scheme);
  md += "; judges: " + std::to_string(perceptual.judge_ids.size()) + "\n\n";
  md += "| Accuracy [%] | Automatic classification | Perceptual classification |\n";
  md += "|---|---|---|\n";
  const auto row = [&](const char* name, const Aggregate& a, const Aggregate& p) {
    md += "| " + std::string(name) + " | " + percent(a) + " | " + percent(p) + " |\n";
  };
  row("balanced", automatic.balanced, perceptual.balanced);
  row("neurotypical", automatic.neurotypical, perceptual.neurotypical);
  row("patient", automatic.patient, perceptual.patient);
  row("dysarthria", automatic.dysarthria, perceptual.dysarthria);
  row("aos", automatic.aos, perceptual.aos);
  return md;
}

}  // namespace msd::evaluation
