#ifndef MSD_EVALUATION_HPP
#define MSD_EVALUATION_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "msd/classifiers.hpp"
#include "msd/features.hpp"
#include "msd/svm.hpp"

namespace msd::evaluation {

struct CvPlan {
  int repetitions = 10;
  int outer_folds = 5;
  int inner_folds = 5;
  std::uint64_t seed = 42;
};

/// Hyperparameter grid. The default is log-spaced points spanning the
/// endpoint ranges; the literal two-point reading is available as
/// endpoints().
struct GridSpec {
  std::vector<double> c_values;
  std::vector<double> gamma_values;
  std::vector<int> nf_values;

  static GridSpec log_range(int c_points = 7, int gamma_points = 7);
  static GridSpec endpoints();
};

enum class Scheme { Hierarchical, HierarchicalNoFs, Ovo, Ovr };

const char* to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

struct GroupAccuracies {
  double neurotypical = 0, dysarthria = 0, aos = 0, patient = 0, balanced = 0;
  int t_neuro = 0, t_dys = 0, t_aos = 0;
  int ap_neuro = 0, ap_dys = 0, ap_aos = 0, ap_patient = 0;
};

double group_accuracy(std::span<const ClassLabel> predictions,
                      std::span<const ClassLabel> truths, ClassLabel group);
double patient_accuracy(std::span<const ClassLabel> predictions,
                        std::span<const ClassLabel> truths);
double balanced_accuracy(double acc_neurotypical, double acc_dysarthria, double acc_aos);
GroupAccuracies compute_group_accuracies(std::span<const ClassLabel> predictions,
                                         std::span<const ClassLabel> truths);

/// Per-class round-robin fold assignment after a seeded shuffle. Every class
/// present must have at least k members; per-fold per-class counts differ by
/// at most one.
std::vector<int> stratified_folds(std::span<const ClassLabel> labels, int k,
                                  std::uint64_t seed);

struct TunedMember {
  std::string name;
  svm::HyperParams hp;
  double inner_score = 0.0;
};

/// Inner-CV grid search, one member SVM at a time on its own binary subtask.
/// Ties break toward smaller C, then gamma, then n_f. Degenerate inner folds
/// score 0 with a warning instead of aborting.
std::vector<TunedMember> nested_tune(const features::FeatureMatrix& m,
                                     std::span<const std::size_t> train_rows, Scheme scheme,
                                     const GridSpec& grid, int inner_folds, std::uint64_t seed,
                                     const svm::SvmConfig& scfg,
                                     std::vector<std::string>& warnings);

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;
};

struct MemberRecord {
  std::string name;
  svm::HyperParams hp;
  double inner_score = 0.0;
  std::vector<std::size_t> mask_indices;
  std::vector<double> scaler_mean;
  std::vector<double> scaler_std;
};

struct FoldRecord {
  int repetition = 0;
  int fold = 0;
  std::vector<MemberRecord> members;
};

struct RepetitionResult {
  GroupAccuracies acc;
  std::vector<ClassLabel> predictions;  // aligned with the matrix row order
};

struct SchemeResult {
  Scheme scheme = Scheme::Hierarchical;
  std::vector<RepetitionResult> repetitions;
  std::vector<FoldRecord> folds;
  Aggregate balanced, neurotypical, patient, dysarthria, aos;
};

struct EvaluationReport {
  std::map<std::string, std::string> config;
  std::vector<std::string> ids;
  std::vector<ClassLabel> labels;
  std::vector<std::string> feature_names;
  std::vector<SchemeResult> schemes;
  std::vector<std::string> warnings;
};

/// The full protocol: repeated stratified outer CV with nested tuning per
/// fold, pooled predictions per repetition, and mean +- std across
/// repetitions per scheme. Deterministic for a fixed seed.
EvaluationReport run_experiment(const features::FeatureMatrix& m, const CvPlan& plan,
                                const GridSpec& grid, const std::vector<Scheme>& schemes,
                                const svm::SvmConfig& scfg = {},
                                bool stage1_tie_to_patient = true,
                                const std::map<std::string, std::string>& config_echo = {},
                                int jobs = 1);

std::string report_json(const EvaluationReport& report);
std::string report_markdown(const EvaluationReport& report);

struct JudgeResponse {
  std::string judge_id;
  std::string recording_id;
  bool stage1_patient = false;
  std::optional<ClassLabel> stage2;  // set iff stage1_patient

  ClassLabel predicted_label() const {
    return stage1_patient ? *stage2 : ClassLabel::Neurotypical;
  }
};

std::vector<JudgeResponse> load_judge_responses(const std::string& path);

struct PerceptualResult {
  std::vector<std::string> judge_ids;  // first-appearance order
  std::vector<GroupAccuracies> per_judge;
  Aggregate balanced, neurotypical, patient, dysarthria, aos;
};

/// Per-judge metrics through the same accuracy code paths as the automatic
/// models, aggregated across judges.
PerceptualResult perceptual_metrics(std::span<const JudgeResponse> responses,
                                    std::span<const std::string> ids,
                                    std::span<const ClassLabel> truths);

std::string comparison_json(const SchemeResult& automatic, const PerceptualResult& perceptual,
                            const std::map<std::string, std::string>& config_echo);
std::string comparison_markdown(const SchemeResult& automatic,
                                const PerceptualResult& perceptual);

/// Gaussian test cohort: patients shift from neurotypical along two
/// designated stage-1 features, AoS additionally shifts from dysarthria
/// along two stage-2 features. separation is in units of sigma.
features::FeatureMatrix synth_cohort(std::uint64_t seed, int n_neuro, int n_dys, int n_aos,
                                     double separation);

}  // namespace msd::evaluation

#endif  // MSD_EVALUATION_HPP
