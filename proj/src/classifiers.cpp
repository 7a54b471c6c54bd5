#include "msd/classifiers.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "msd/artifact.hpp"

namespace msd::classifiers {

namespace {

void require_classes(const features::FeatureMatrix& m, std::span<const std::size_t> rows,
                     std::initializer_list<ClassLabel> needed) {
  for (ClassLabel c : needed) {
    const bool found = std::any_of(rows.begin(), rows.end(),
                                   [&](std::size_t r) { return m.labels[r] == c; });
    if (!found)
      throw Error(ErrorKind::Data,
                  std::string("training data has no ") + to_string(c) + " recordings");
  }
}

struct BinaryTask {
  std::vector<std::size_t> rows;
  std::vector<int> y;
  std::vector<std::uint8_t> group;  // 1 where y = +1, for ANOVA selection
};

// Membership rule: +1 where pos(label), -1 where neg(label); rows failing
// both predicates are excluded.
template <typename PosFn, typename NegFn>
BinaryTask make_task(const features::FeatureMatrix& m, std::span<const std::size_t> rows,
                     PosFn pos, NegFn neg) {
  BinaryTask t;
  for (std::size_t r : rows) {
    if (pos(m.labels[r])) {
      t.rows.push_back(r);
      t.y.push_back(+1);
      t.group.push_back(1);
    } else if (neg(m.labels[r])) {
      t.rows.push_back(r);
      t.y.push_back(-1);
      t.group.push_back(0);
    }
  }
  return t;
}

svm::SvmModel train_member(const features::FeatureMatrix& m, const BinaryTask& t,
                           const svm::HyperParams& hp, const std::string& pos_name,
                           const std::string& neg_name, const ClassifierConfig& cfg) {
  const auto mask = selection::select_top(m, t.rows, t.group,
                                          static_cast<std::size_t>(hp.n_f));
  return svm::train_svm(m, t.rows, t.y, hp, mask, pos_name, neg_name, cfg.svm);
}

}  // namespace

HierarchicalModel train_hierarchical(const features::FeatureMatrix& m,
                                     std::span<const std::size_t> rows,
                                     const svm::HyperParams& hp1, const svm::HyperParams& hp2,
                                     const ClassifierConfig& cfg) {
  require_classes(m, rows,
                  {ClassLabel::Neurotypical, ClassLabel::Dysarthria, ClassLabel::AoS});

  const auto stage1 = make_task(
      m, rows, [](ClassLabel c) { return is_patient(c); },
      [](ClassLabel c) { return !is_patient(c); });
  const auto stage2 = make_task(
      m, rows, [](ClassLabel c) { return c == ClassLabel::Dysarthria; },
      [](ClassLabel c) { return c == ClassLabel::AoS; });

  HierarchicalModel model;
  model.svm1 = train_member(m, stage1, hp1, "patient", "neurotypical", cfg);
  model.svm2 = train_member(m, stage2, hp2, "dysarthria", "aos", cfg);
  return model;
}

HierarchicalPrediction predict_hierarchical(const HierarchicalModel& model,
                                            std::span<const double> x,
                                            const ClassifierConfig& cfg) {
  HierarchicalPrediction p;
  p.stage1_value = svm::decision_value(model.svm1, x);
  const bool patient = cfg.stage1_tie_to_patient ? p.stage1_value >= 0.0 : p.stage1_value > 0.0;
  if (!patient) {
    p.label = ClassLabel::Neurotypical;
    return p;  // stage 2 is never consulted
  }
  p.stage2_value = svm::decision_value(model.svm2, x);
  p.label = *p.stage2_value >= 0.0 ? ClassLabel::Dysarthria : ClassLabel::AoS;
  return p;
}

OvoModel train_ovo(const features::FeatureMatrix& m, std::span<const std::size_t> rows,
                   const svm::HyperParams& hp_neuro_dys, const svm::HyperParams& hp_neuro_aos,
                   const svm::HyperParams& hp_dys_aos, const ClassifierConfig& cfg) {
  require_classes(m, rows,
                  {ClassLabel::Neurotypical, ClassLabel::Dysarthria, ClassLabel::AoS});
  const auto is = [](ClassLabel want) {
    return [want](ClassLabel c) { return c == want; };
  };
  OvoModel model;
  model.neuro_dys =
      train_member(m, make_task(m, rows, is(ClassLabel::Neurotypical), is(ClassLabel::Dysarthria)),
                   hp_neuro_dys, "neurotypical", "dysarthria", cfg);
  model.neuro_aos =
      train_member(m, make_task(m, rows, is(ClassLabel::Neurotypical), is(ClassLabel::AoS)),
                   hp_neuro_aos, "neurotypical", "aos", cfg);
  model.dys_aos =
      train_member(m, make_task(m, rows, is(ClassLabel::Dysarthria), is(ClassLabel::AoS)),
                   hp_dys_aos, "dysarthria", "aos", cfg);
  return model;
}

ClassLabel predict_ovo(const OvoModel& model, std::span<const double> x) {
  struct Vote {
    ClassLabel label;
    double confidence;
  };
  const auto vote = [&](const svm::SvmModel& m, ClassLabel pos, ClassLabel neg) {
    const double v = svm::decision_value(m, x);
    return v >= 0.0 ? Vote{pos, std::abs(v)} : Vote{neg, std::abs(v)};
  };
  const std::array<Vote, 3> votes = {
      vote(model.neuro_dys, ClassLabel::Neurotypical, ClassLabel::Dysarthria),
      vote(model.neuro_aos, ClassLabel::Neurotypical, ClassLabel::AoS),
      vote(model.dys_aos, ClassLabel::Dysarthria, ClassLabel::AoS),
  };

  const std::array<ClassLabel, 3> order = {ClassLabel::Neurotypical, ClassLabel::Dysarthria,
                                           ClassLabel::AoS};
  std::array<int, 3> counts{};
  std::array<double, 3> confidence{};
  for (const Vote& v : votes) {
    const std::size_t idx = static_cast<std::size_t>(v.label);
    counts[idx] += 1;
    confidence[idx] += v.confidence;
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (counts[i] > counts[best] ||
        (counts[i] == counts[best] && confidence[i] > confidence[best]))
      best = i;
  }
  return order[best];
}

OvrModel train_ovr(const features::FeatureMatrix& m, std::span<const std::size_t> rows,
                   const svm::HyperParams& hp_neuro, const svm::HyperParams& hp_dys,
                   const svm::HyperParams& hp_aos, const ClassifierConfig& cfg) {
  require_classes(m, rows,
                  {ClassLabel::Neurotypical, ClassLabel::Dysarthria, ClassLabel::AoS});
  const auto one_vs_rest = [&](ClassLabel target, const svm::HyperParams& hp) {
    const auto task = make_task(
        m, rows, [target](ClassLabel c) { return c == target; },
        [target](ClassLabel c) { return c != target; });
    return train_member(m, task, hp, to_string(target), "rest", cfg);
  };
  OvrModel model;
  model.neuro = one_vs_rest(ClassLabel::Neurotypical, hp_neuro);
  model.dys = one_vs_rest(ClassLabel::Dysarthria, hp_dys);
  model.aos = one_vs_rest(ClassLabel::AoS, hp_aos);
  return model;
}

ClassLabel predict_ovr(const OvrModel& model, std::span<const double> x) {
  const std::array<double, 3> values = {
      svm::decision_value(model.neuro, x),
      svm::decision_value(model.dys, x),
      svm::decision_value(model.aos, x),
  };
  const std::array<ClassLabel, 3> order = {ClassLabel::Neurotypical, ClassLabel::Dysarthria,
                                           ClassLabel::AoS};
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (values[i] > values[best]) best = i;
  return order[best];
}

namespace {

std::string save_composite(const char* kind,
                           std::initializer_list<std::pair<const char*, const svm::SvmModel*>>
                               members) {
  nlohmann::json j;
  j["kind"] = kind;
  nlohmann::json ms;
  for (const auto& [name, model] : members) ms[name] = svm::model_to_json(*model);
  j["members"] = std::move(ms);
  return artifact::seal(j);
}

nlohmann::json load_composite(const std::string& bytes, const char* kind) {
  nlohmann::json j = artifact::unseal(bytes);
  if (j.value("kind", "") != std::string(kind))
    throw Error(ErrorKind::Data, "model artifact: expected kind \"" + std::string(kind) +
                                     "\", found \"" + j.value("kind", "?") + "\"");
  return j.at("members");
}

}  // namespace

std::string save_hierarchical(const HierarchicalModel& m) {
  return save_composite("hierarchical", {{"svm1", &m.svm1}, {"svm2", &m.svm2}});
}

HierarchicalModel load_hierarchical(const std::string& bytes) {
  const auto members = load_composite(bytes, "hierarchical");
  HierarchicalModel m;
  m.svm1 = svm::model_from_json(members.at("svm1"));
  m.svm2 = svm::model_from_json(members.at("svm2"));
  return m;
}

std::string save_ovo(const OvoModel& m) {
  return save_composite(
      "ovo", {{"neuro_dys", &m.neuro_dys}, {"neuro_aos", &m.neuro_aos}, {"dys_aos", &m.dys_aos}});
}

OvoModel load_ovo(const std::string& bytes) {
  const auto members = load_composite(bytes, "ovo");
  OvoModel m;
  m.neuro_dys = svm::model_from_json(members.at("neuro_dys"));
  m.neuro_aos = svm::model_from_json(members.at("neuro_aos"));
  m.dys_aos = svm::model_from_json(members.at("dys_aos"));
  return m;
}

std::string save_ovr(const OvrModel& m) {
  return save_composite("ovr", {{"neuro", &m.neuro}, {"dys", &m.dys}, {"aos", &m.aos}});
}

OvrModel load_ovr(const std::string& bytes) {
  const auto members = load_composite(bytes, "ovr");
  OvrModel m;
  m.neuro = svm::model_from_json(members.at("neuro"));
  m.dys = svm::model_from_json(members.at("dys"));
  m.aos = svm::model_from_json(members.at("aos"));
  return m;
}

}  // namespace msd::classifiers
