#include "msd/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace msd::evaluation {

GridSpec GridSpec::log_range(int c_points, int gamma_points) {
  GridSpec g;
  const auto fill = [](std::vector<double>& out, double lo, double hi, int points) {
    const double step = points > 1 ? (std::log10(hi) - std::log10(lo)) / (points - 1) : 0.0;
    for (int i = 0; i < points; ++i) out.push_back(std::pow(10.0, std::log10(lo) + step * i));
  };
  fill(g.c_values, 1e-2, 1e4, c_points);
  fill(g.gamma_values, 1e-4, 1e2, gamma_points);
  g.nf_values = {5, 10, 15, 20};
  return g;
}

GridSpec GridSpec::endpoints() {
  GridSpec g;
  g.c_values = {1e-2, 1e4};
  g.gamma_values = {1e-4, 1e2};
  g.nf_values = {5, 10, 15, 20};
  return g;
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Hierarchical: return "hierarchical";
    case Scheme::HierarchicalNoFs: return "hierarchical-no-fs";
    case Scheme::Ovo: return "ovo";
    case Scheme::Ovr: return "ovr";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "hierarchical") return Scheme::Hierarchical;
  if (name == "hierarchical-no-fs") return Scheme::HierarchicalNoFs;
  if (name == "ovo") return Scheme::Ovo;
  if (name == "ovr") return Scheme::Ovr;
  throw Error(ErrorKind::Usage, "unknown scheme \"" + name +
                                    "\" (expected hierarchical, hierarchical-no-fs, ovo, ovr)");
}

double group_accuracy(std::span<const ClassLabel> predictions,
                      std::span<const ClassLabel> truths, ClassLabel group) {
  if (predictions.size() != truths.size())
    throw Error(ErrorKind::Internal, "group_accuracy: size mismatch");
  int total = 0, correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (truths[i] != group) continue;
    ++total;
    if (predictions[i] == truths[i]) ++correct;
  }
  if (total == 0)
    throw Error(ErrorKind::Data, std::string("group_accuracy: no ") + to_string(group) +
                                     " recordings in the evaluated set");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double patient_accuracy(std::span<const ClassLabel> predictions,
                        std::span<const ClassLabel> truths) {
  if (predictions.size() != truths.size())
    throw Error(ErrorKind::Internal, "patient_accuracy: size mismatch");
  int total = 0, correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    if (!is_patient(truths[i])) continue;
    ++total;
    if (is_patient(predictions[i])) ++correct;
  }
  if (total == 0)
    throw Error(ErrorKind::Data, "patient_accuracy: no patients in the evaluated set");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double balanced_accuracy(double acc_neurotypical, double acc_dysarthria, double acc_aos) {
  return (acc_neurotypical + acc_dysarthria + acc_aos) / 3.0;
}

GroupAccuracies compute_group_accuracies(std::span<const ClassLabel> predictions,
                                         std::span<const ClassLabel> truths) {
  GroupAccuracies g;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const bool hit = predictions[i] == truths[i];
    switch (truths[i]) {
      case ClassLabel::Neurotypical:
        ++g.t_neuro;
        g.ap_neuro += hit;
        break;
      case ClassLabel::Dysarthria:
        ++g.t_dys;
        g.ap_dys += hit;
        break;
      case ClassLabel::AoS:
        ++g.t_aos;
        g.ap_aos += hit;
        break;
    }
    if (is_patient(truths[i]) && is_patient(predictions[i])) ++g.ap_patient;
  }
  g.neurotypical = group_accuracy(predictions, truths, ClassLabel::Neurotypical);
  g.dysarthria = group_accuracy(predictions, truths, ClassLabel::Dysarthria);
  g.aos = group_accuracy(predictions, truths, ClassLabel::AoS);
  g.patient = patient_accuracy(predictions, truths);
  g.balanced = balanced_accuracy(g.neurotypical, g.dysarthria, g.aos);
  return g;
}

namespace {

void shuffle_indices(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

std::vector<int> assign_round_robin(std::span<const ClassLabel> labels, int k,
                                    std::uint64_t seed, bool check_counts) {
  if (k < 2) throw Error(ErrorKind::Data, "stratified_folds: need at least 2 folds");
  std::mt19937_64 rng(seed);
  std::vector<int> fold(labels.size(), -1);
  for (ClassLabel c :
       {ClassLabel::Neurotypical, ClassLabel::Dysarthria, ClassLabel::AoS}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) idx.push_back(i);
    if (idx.empty()) continue;
    if (check_counts && idx.size() < static_cast<std::size_t>(k))
      throw Error(ErrorKind::Data, std::string("stratified_folds: class ") + to_string(c) +
                                       " has " + std::to_string(idx.size()) +
                                       " recordings, fewer than " + std::to_string(k) +
                                       " folds");
    shuffle_indices(idx, rng);
    for (std::size_t i = 0; i < idx.size(); ++i)
      fold[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return fold;
}

}  // namespace

std::vector<int> stratified_folds(std::span<const ClassLabel> labels, int k,
                                  std::uint64_t seed) {
  return assign_round_robin(labels, k, seed, /*check_counts=*/true);
}

namespace {

struct BinarySubtask {
  std::string name;
  std::string positive;
  std::string negative;
  std::vector<std::size_t> rows;
  std::vector<int> y;
  std::vector<std::uint8_t> group;
  std::vector<ClassLabel> strata;
};

template <typename PosFn, typename NegFn>
BinarySubtask make_subtask(const features::FeatureMatrix& m, std::span<const std::size_t> rows,
                           std::string name, std::string positive, std::string negative,
                           PosFn pos, NegFn neg) {
  BinarySubtask t;
  t.name = std::move(name);
  t.positive = std::move(positive);
  t.negative = std::move(negative);
  for (std::size_t r : rows) {
    const ClassLabel c = m.labels[r];
    int y = 0;
    if (pos(c))
      y = +1;
    else if (neg(c))
      y = -1;
    else
      continue;
    t.rows.push_back(r);
    t.y.push_back(y);
    t.group.push_back(y > 0 ? 1 : 0);
    t.strata.push_back(c);
  }
  return t;
}

std::vector<BinarySubtask> scheme_subtasks(const features::FeatureMatrix& m,
                                           std::span<const std::size_t> rows, Scheme scheme) {
  const auto is = [](ClassLabel want) {
    return [want](ClassLabel c) { return c == want; };
  };
  const auto is_not = [](ClassLabel avoid) {
    return [avoid](ClassLabel c) { return c != avoid; };
  };
  std::vector<BinarySubtask> tasks;
  switch (scheme) {
    case Scheme::Hierarchical:
    case Scheme::HierarchicalNoFs:
      tasks.push_back(make_subtask(
          m, rows, "svm1", "patient", "neurotypical",
          [](ClassLabel c) { return is_patient(c); },
          [](ClassLabel c) { return !is_patient(c); }));
      tasks.push_back(make_subtask(m, rows, "svm2", "dysarthria", "aos",
                                   is(ClassLabel::Dysarthria), is(ClassLabel::AoS)));
      break;
    case Scheme::Ovo:
      tasks.push_back(make_subtask(m, rows, "neuro_dys", "neurotypical", "dysarthria",
                                   is(ClassLabel::Neurotypical), is(ClassLabel::Dysarthria)));
      tasks.push_back(make_subtask(m, rows, "neuro_aos", "neurotypical", "aos",
                                   is(ClassLabel::Neurotypical), is(ClassLabel::AoS)));
      tasks.push_back(make_subtask(m, rows, "dys_aos", "dysarthria", "aos",
                                   is(ClassLabel::Dysarthria), is(ClassLabel::AoS)));
      break;
    case Scheme::Ovr:
      tasks.push_back(make_subtask(m, rows, "neuro", "neurotypical", "rest",
                                   is(ClassLabel::Neurotypical),
                                   is_not(ClassLabel::Neurotypical)));
      tasks.push_back(make_subtask(m, rows, "dys", "dysarthria", "rest",
                                   is(ClassLabel::Dysarthria), is_not(ClassLabel::Dysarthria)));
      tasks.push_back(make_subtask(m, rows, "aos", "aos", "rest", is(ClassLabel::AoS),
                                   is_not(ClassLabel::AoS)));
      break;
  }
  return tasks;
}

struct InnerFold {
  std::vector<std::size_t> train_rows;  // matrix row indices
  std::vector<int> train_y;
  std::vector<std::uint8_t> train_group;
  std::vector<std::size_t> test_rows;
  std::vector<int> test_y;
  bool train_degenerate = false;
  bool test_degenerate = false;
};

TunedMember tune_binary(const features::FeatureMatrix& m, const BinarySubtask& task,
                        const GridSpec& grid_in, int inner_folds, std::uint64_t seed,
                        const svm::SvmConfig& scfg, std::vector<std::string>& warnings) {
  GridSpec grid = grid_in;
  // Ascending scan order makes the tie rule (smaller C, then gamma, then
  // n_f) independent of how the grid was written.
  for (auto* v : {&grid.c_values, &grid.gamma_values}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  std::sort(grid.nf_values.begin(), grid.nf_values.end());
  grid.nf_values.erase(std::unique(grid.nf_values.begin(), grid.nf_values.end()),
                       grid.nf_values.end());
  if (grid.c_values.empty() || grid.gamma_values.empty() || grid.nf_values.empty())
    throw Error(ErrorKind::Usage, "nested_tune: empty hyperparameter grid");

  const std::vector<int> fold_of = assign_round_robin(task.strata, inner_folds, seed,
                                                      /*check_counts=*/false);
  std::vector<InnerFold> folds(static_cast<std::size_t>(inner_folds));
  for (int f = 0; f < inner_folds; ++f) {
    InnerFold& fo = folds[static_cast<std::size_t>(f)];
    int train_pos = 0, train_neg = 0, test_pos = 0, test_neg = 0;
    for (std::size_t i = 0; i < task.rows.size(); ++i) {
      if (fold_of[i] == f) {
        fo.test_rows.push_back(task.rows[i]);
        fo.test_y.push_back(task.y[i]);
        (task.y[i] > 0 ? test_pos : test_neg)++;
      } else {
        fo.train_rows.push_back(task.rows[i]);
        fo.train_y.push_back(task.y[i]);
        fo.train_group.push_back(task.group[i]);
        (task.y[i] > 0 ? train_pos : train_neg)++;
      }
    }
    fo.train_degenerate = train_pos == 0 || train_neg == 0;
    fo.test_degenerate = test_pos == 0 || test_neg == 0;
    if (fo.train_degenerate)
      warnings.push_back("nested tune " + task.name + ": inner fold " + std::to_string(f) +
                         " lacks a class in training; grid points scored 0 for this fold");
    else if (fo.test_degenerate)
      warnings.push_back("nested tune " + task.name + ": inner fold " + std::to_string(f) +
                         " lacks a class in its test split; grid points scored 0 for this fold");
  }

  const std::size_t d = m.cols();
  bool warned_nf = false;
  bool have_best = false;
  TunedMember best;
  best.name = task.name;

  for (double c : grid.c_values) {
    for (double gamma : grid.gamma_values) {
      for (int nf : grid.nf_values) {
        if (nf < 1 || static_cast<std::size_t>(nf) > d) {
          if (!warned_nf) {
            warnings.push_back("nested tune " + task.name + ": skipping n_f=" +
                               std::to_string(nf) + " (feature count is " + std::to_string(d) +
                               ")");
            warned_nf = true;
          }
          continue;
        }
        const svm::HyperParams hp{c, gamma, nf};
        double total = 0.0;
        for (const InnerFold& fo : folds) {
          if (fo.train_degenerate || fo.test_degenerate) continue;  // counts as 0
          const auto mask =
              selection::select_top(m, fo.train_rows, fo.train_group,
                                    static_cast<std::size_t>(nf));
          const svm::SvmModel model = svm::train_svm(m, fo.train_rows, fo.train_y, hp, mask,
                                                     task.positive, task.negative, scfg);
          int cp = 0, tp = 0, cn = 0, tn = 0;
          for (std::size_t i = 0; i < fo.test_rows.size(); ++i) {
            const double v = svm::decision_value(model, m.row(fo.test_rows[i]));
            const int pred = v >= 0.0 ? +1 : -1;
            if (fo.test_y[i] > 0) {
              ++tp;
              cp += pred > 0;
            } else {
              ++tn;
              cn += pred < 0;
            }
          }
          total += 0.5 * (static_cast<double>(cp) / tp + static_cast<double>(cn) / tn);
        }
        const double score = total / static_cast<double>(inner_folds);
        if (!have_best || score > best.inner_score) {
          have_best = true;
          best.hp = hp;
          best.inner_score = score;
        }
      }
    }
  }
  if (!have_best)
    throw Error(ErrorKind::Usage, "nested_tune: grid contains no usable point");
  return best;
}

}  // namespace

std::vector<TunedMember> nested_tune(const features::FeatureMatrix& m,
                                     std::span<const std::size_t> train_rows, Scheme scheme,
                                     const GridSpec& grid, int inner_folds, std::uint64_t seed,
                                     const svm::SvmConfig& scfg,
                                     std::vector<std::string>& warnings) {
  GridSpec effective = grid;
  if (scheme == Scheme::HierarchicalNoFs)
    effective.nf_values = {static_cast<int>(m.cols())};

  std::vector<TunedMember> tuned;
  const auto tasks = scheme_subtasks(m, train_rows, scheme);
  for (std::size_t t = 0; t < tasks.size(); ++t)
    tuned.push_back(
        tune_binary(m, tasks[t], effective, inner_folds, mix_seed(seed, t), scfg, warnings));
  return tuned;
}

namespace {

MemberRecord member_record(const std::string& name, const svm::HyperParams& hp,
                           double inner_score, const svm::SvmModel& model) {
  MemberRecord rec;
  rec.name = name;
  rec.hp = hp;
  rec.inner_score = inner_score;
  rec.mask_indices = model.mask.indices;
  rec.scaler_mean = model.scaler.mean;
  rec.scaler_std = model.scaler.std;
  return rec;
}

void run_scheme_fold(const features::FeatureMatrix& m, Scheme scheme,
                     std::span<const std::size_t> train_rows,
                     std::span<const std::size_t> test_rows,
                     const std::vector<TunedMember>& tuned,
                     const classifiers::ClassifierConfig& ccfg,
                     std::vector<ClassLabel>& preds, FoldRecord& record) {
  switch (scheme) {
    case Scheme::Hierarchical:
    case Scheme::HierarchicalNoFs: {
      const auto model =
          classifiers::train_hierarchical(m, train_rows, tuned[0].hp, tuned[1].hp, ccfg);
      for (std::size_t r : test_rows)
        preds[r] = classifiers::predict_hierarchical(model, m.row(r), ccfg).label;
      record.members.push_back(
          member_record(tuned[0].name, tuned[0].hp, tuned[0].inner_score, model.svm1));
      record.members.push_back(
          member_record(tuned[1].name, tuned[1].hp, tuned[1].inner_score, model.svm2));
      break;
    }
    case Scheme::Ovo: {
      const auto model =
          classifiers::train_ovo(m, train_rows, tuned[0].hp, tuned[1].hp, tuned[2].hp, ccfg);
      for (std::size_t r : test_rows) preds[r] = classifiers::predict_ovo(model, m.row(r));
      record.members.push_back(
          member_record(tuned[0].name, tuned[0].hp, tuned[0].inner_score, model.neuro_dys));
      record.members.push_back(
          member_record(tuned[1].name, tuned[1].hp, tuned[1].inner_score, model.neuro_aos));
      record.members.push_back(
          member_record(tuned[2].name, tuned[2].hp, tuned[2].inner_score, model.dys_aos));
      break;
    }
    case Scheme::Ovr: {
      const auto model =
          classifiers::train_ovr(m, train_rows, tuned[0].hp, tuned[1].hp, tuned[2].hp, ccfg);
      for (std::size_t r : test_rows) preds[r] = classifiers::predict_ovr(model, m.row(r));
      record.members.push_back(
          member_record(tuned[0].name, tuned[0].hp, tuned[0].inner_score, model.neuro));
      record.members.push_back(
          member_record(tuned[1].name, tuned[1].hp, tuned[1].inner_score, model.dys));
      record.members.push_back(
          member_record(tuned[2].name, tuned[2].hp, tuned[2].inner_score, model.aos));
      break;
    }
  }
}

struct RepetitionOutput {
  RepetitionResult result;
  std::vector<FoldRecord> folds;
  std::vector<std::string> warnings;
};

RepetitionOutput run_repetition(const features::FeatureMatrix& m, Scheme scheme, int rep,
                                const CvPlan& plan, const GridSpec& grid,
                                const svm::SvmConfig& scfg,
                                const classifiers::ClassifierConfig& ccfg) {
  RepetitionOutput out;
  const std::uint64_t rep_seed = plan.seed + static_cast<std::uint64_t>(rep);
  const std::vector<int> fold_of = stratified_folds(m.labels, plan.outer_folds, rep_seed);

  const std::size_t n = m.rows();
  std::vector<ClassLabel> preds(n, ClassLabel::Neurotypical);
  std::vector<std::uint8_t> covered(n, 0);

  for (int f = 0; f < plan.outer_folds; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t i = 0; i < n; ++i)
      (fold_of[i] == f ? test_rows : train_rows).push_back(i);
    if (test_rows.empty())
      throw Error(ErrorKind::Data, "run_experiment: outer fold " + std::to_string(f) +
                                       " is empty");

    std::vector<std::string> fold_warnings;
    const auto tuned = nested_tune(m, train_rows, scheme, grid, plan.inner_folds,
                                   mix_seed(rep_seed, static_cast<std::uint64_t>(f)), scfg,
                                   fold_warnings);
    FoldRecord record;
    record.repetition = rep;
    record.fold = f;
    try {
      run_scheme_fold(m, scheme, train_rows, test_rows, tuned, ccfg, preds, record);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(to_string(scheme)) + " repetition " +
                                std::to_string(rep) + " fold " + std::to_string(f) +
                                " failed: " + e.what());
    }
    for (std::size_t r : test_rows) covered[r] += 1;
    for (auto& w : fold_warnings)
      out.warnings.push_back(std::string(to_string(scheme)) + " rep " + std::to_string(rep) +
                             " fold " + std::to_string(f) + ": " + w);
    out.folds.push_back(std::move(record));
  }

  for (std::size_t i = 0; i < n; ++i)
    if (covered[i] != 1)
      throw Error(ErrorKind::Internal, "run_experiment: recording " + m.ids[i] +
                                           " predicted " + std::to_string(covered[i]) +
                                           " times in one repetition");

  out.result.predictions = std::move(preds);
  out.result.acc = compute_group_accuracies(out.result.predictions, m.labels);
  return out;
}

Aggregate aggregate_of(const std::vector<double>& values) {
  Aggregate a;
  if (values.empty()) return a;
  const double n = static_cast<double>(values.size());
  for (double v : values) a.mean += v;
  a.mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(var / n);
  return a;
}

}  // namespace

EvaluationReport run_experiment(const features::FeatureMatrix& m, const CvPlan& plan,
                                const GridSpec& grid, const std::vector<Scheme>& schemes,
                                const svm::SvmConfig& scfg, bool stage1_tie_to_patient,
                                const std::map<std::string, std::string>& config_echo,
                                int jobs) {
  if (schemes.empty()) throw Error(ErrorKind::Usage, "run_experiment: no schemes requested");
  if (plan.repetitions < 1 || plan.outer_folds < 2 || plan.inner_folds < 2)
    throw Error(ErrorKind::Usage, "run_experiment: invalid cross-validation plan");
  if (m.rows() == 0) throw Error(ErrorKind::Data, "run_experiment: empty feature matrix");

  classifiers::ClassifierConfig ccfg;
  ccfg.svm = scfg;
  ccfg.stage1_tie_to_patient = stage1_tie_to_patient;

  EvaluationReport report;
  report.config = config_echo;
  report.ids = m.ids;
  report.labels = m.labels;
  report.feature_names = m.feature_names;

  for (Scheme scheme : schemes) {
    SchemeResult sres;
    sres.scheme = scheme;

    const int reps = plan.repetitions;
    std::vector<RepetitionOutput> outputs(static_cast<std::size_t>(reps));
    const int workers = std::max(1, std::min(jobs, reps));
    if (workers == 1) {
      for (int r = 0; r < reps; ++r)
        outputs[static_cast<std::size_t>(r)] =
            run_repetition(m, scheme, r, plan, grid, scfg, ccfg);
    } else {
      std::vector<std::thread> pool;
      std::exception_ptr first_error;
      std::mutex error_mutex;
      for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (int r = w; r < reps; r += workers) {
            try {
              outputs[static_cast<std::size_t>(r)] =
                  run_repetition(m, scheme, r, plan, grid, scfg, ccfg);
            } catch (...) {
              std::lock_guard<std::mutex> lock(error_mutex);
              if (!first_error) first_error = std::current_exception();
            }
          }
        });
      }
      for (auto& t : pool) t.join();
      if (first_error) std::rethrow_exception(first_error);
    }

    std::vector<double> balanced, neuro, dys, aos, patient;
    for (auto& out : outputs) {
      balanced.push_back(out.result.acc.balanced);
      neuro.push_back(out.result.acc.neurotypical);
      dys.push_back(out.result.acc.dysarthria);
      aos.push_back(out.result.acc.aos);
      patient.push_back(out.result.acc.patient);
      sres.repetitions.push_back(std::move(out.result));
      for (auto& f : out.folds) sres.folds.push_back(std::move(f));
      for (auto& w : out.warnings) report.warnings.push_back(std::move(w));
    }
    sres.balanced = aggregate_of(balanced);
    sres.neurotypical = aggregate_of(neuro);
    sres.dysarthria = aggregate_of(dys);
    sres.aos = aggregate_of(aos);
    sres.patient = aggregate_of(patient);
    report.schemes.push_back(std::move(sres));
  }
  return report;
}

std::vector<JudgeResponse> load_judge_responses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Data, "cannot open judge responses: " + path);

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Data, path + ": empty judge CSV");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  if (line != "judge_id,recording_id,stage1,stage2")
    throw Error(ErrorKind::Data,
                path + ": header must be judge_id,recording_id,stage1,stage2");

  std::vector<JudgeResponse> out;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line.back() == ',' || fields.size() == 3) fields.push_back("");
    if (fields.size() != 4)
      throw Error(ErrorKind::Data,
                  path + " line " + std::to_string(line_no) + ": expected 4 fields");

    JudgeResponse r;
    r.judge_id = fields[0];
    r.recording_id = fields[1];
    const std::string& stage1 = fields[2];
    const std::string& stage2 = fields[3];
    if (stage1 == "neurotypical")
      r.stage1_patient = false;
    else if (stage1 == "patient")
      r.stage1_patient = true;
    else
      throw Error(ErrorKind::Data, path + " line " + std::to_string(line_no) +
                                       ": stage1 must be neurotypical or patient");
    if (r.stage1_patient) {
      if (stage2 != "dysarthria" && stage2 != "aos")
        throw Error(ErrorKind::Data, path + " line " + std::to_string(line_no) +
                                         ": a patient response needs stage2 dysarthria or aos");
      r.stage2 = parse_class_label(stage2);
    } else if (!stage2.empty()) {
      throw Error(ErrorKind::Data, path + " line " + std::to_string(line_no) +
                                       ": stage2 must be empty for a neurotypical response");
    }
    if (!seen.insert({r.judge_id, r.recording_id}).second)
      throw Error(ErrorKind::Data, path + " line " + std::to_string(line_no) +
                                       ": duplicate response for judge " + r.judge_id +
                                       ", recording " + r.recording_id);
    out.push_back(std::move(r));
  }
  return out;
}

PerceptualResult perceptual_metrics(std::span<const JudgeResponse> responses,
                                    std::span<const std::string> ids,
                                    std::span<const ClassLabel> truths) {
  if (ids.size() != truths.size())
    throw Error(ErrorKind::Internal, "perceptual_metrics: ids/truths size mismatch");
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < ids.size(); ++i) row_of[ids[i]] = i;

  PerceptualResult res;
  std::map<std::string, std::vector<std::pair<ClassLabel, ClassLabel>>> by_judge;
  for (const auto& r : responses) {
    const auto it = row_of.find(r.recording_id);
    if (it == row_of.end())
      throw Error(ErrorKind::Data,
                  "judge " + r.judge_id + " refers to unknown recording id \"" +
                      r.recording_id + "\"");
    if (std::find(res.judge_ids.begin(), res.judge_ids.end(), r.judge_id) ==
        res.judge_ids.end())
      res.judge_ids.push_back(r.judge_id);
    by_judge[r.judge_id].emplace_back(r.predicted_label(), truths[it->second]);
  }
  if (res.judge_ids.empty())
    throw Error(ErrorKind::Data, "perceptual_metrics: no judge responses");

  std::vector<double> balanced, neuro, dys, aos, patient;
  for (const auto& judge : res.judge_ids) {
    const auto& pairs = by_judge[judge];
    std::vector<ClassLabel> preds, truth;
    preds.reserve(pairs.size());
    truth.reserve(pairs.size());
    for (const auto& [p, t] : pairs) {
      preds.push_back(p);
      truth.push_back(t);
    }
    GroupAccuracies g;
    try {
      g = compute_group_accuracies(preds, truth);
    } catch (const Error& e) {
      throw Error(e.kind(), "judge " + judge + ": " + e.what());
    }
    res.per_judge.push_back(g);
    balanced.push_back(g.balanced);
    neuro.push_back(g.neurotypical);
    dys.push_back(g.dysarthria);
    aos.push_back(g.aos);
    patient.push_back(g.patient);
  }
  res.balanced = aggregate_of(balanced);
  res.neurotypical = aggregate_of(neuro);
  res.dysarthria = aggregate_of(dys);
  res.aos = aggregate_of(aos);
  res.patient = aggregate_of(patient);
  return res;
}

features::FeatureMatrix synth_cohort(std::uint64_t seed, int n_neuro, int n_dys, int n_aos,
                                     double separation) {
  if (n_neuro < 5 || n_dys < 5 || n_aos < 5)
    throw Error(ErrorKind::Usage, "synth_cohort: need at least 5 recordings per class");
  if (separation < 0) throw Error(ErrorKind::Usage, "synth_cohort: separation must be >= 0");

  // Designated discriminative positions: stage 1 (patient vs neurotypical)
  // and stage 2 (dysarthria vs AoS).
  const std::size_t stage1_features[] = {3, 12};
  const std::size_t stage2_features[] = {8, 22};

  std::mt19937_64 rng(seed);
  const auto uniform = [&]() {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  };
  const auto gaussian = [&]() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  };

  features::FeatureMatrix m;
  m.feature_names = features::feature_names();
  const int total = n_neuro + n_dys + n_aos;
  char buf[32];
  for (int i = 0; i < total; ++i) {
    std::snprintf(buf, sizeof(buf), "synth_%04d", i);
    m.ids.emplace_back(buf);
    const ClassLabel label = i < n_neuro ? ClassLabel::Neurotypical
                             : i < n_neuro + n_dys ? ClassLabel::Dysarthria
                                                   : ClassLabel::AoS;
    m.labels.push_back(label);
    for (int c = 0; c < features::kFeatureCount; ++c) m.values.push_back(gaussian());
    double* row = m.values.data() + m.values.size() - features::kFeatureCount;
    if (is_patient(label))
      for (std::size_t f : stage1_features) row[f] += separation;
    if (label == ClassLabel::AoS)
      for (std::size_t f : stage2_features) row[f] += separation;
  }
  return m;
}

}  // namespace msd::evaluation
