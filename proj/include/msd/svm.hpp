#ifndef MSD_SVM_HPP
#define MSD_SVM_HPP

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "msd/features.hpp"
#include "msd/selection.hpp"
#include "msd/types.hpp"

namespace msd::svm {

struct HyperParams {
  double c = 1.0;
  double gamma = 0.1;
  int n_f = features::kFeatureCount;
};

/// Per-feature standardization fitted on training rows only; zero-variance
/// features are dropped from the mask before the scaler is fitted.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;
};

struct SvmConfig {
  double kkt_tolerance = 1e-3;
  int max_stall_epochs = 200;  // epochs without a new best KKT violation
  bool class_weighting = true;
};

/// Soft-margin RBF SVM in the masked, standardized feature space.
/// Decision value: f(x) = sum_i dual_coefs[i] * K(sv_i, x) + bias.
struct SvmModel {
  std::vector<double> support_vectors;  // n_sv x dim, row-major
  std::size_t n_sv = 0;
  std::size_t dim = 0;
  std::vector<double> dual_coefs;  // alpha_i * y_i
  double bias = 0.0;
  HyperParams params;
  Scaler scaler;
  selection::SelectionMask mask;           // positions in the full feature space
  std::vector<std::string> feature_names;  // names of the masked features
  std::string positive_class;
  std::string negative_class;
  double weight_positive = 1.0;
  double weight_negative = 1.0;
};

struct SmoResult {
  std::vector<double> alpha;
  double bias = 0.0;
  double objective = 0.0;  // maximized dual objective
  long iterations = 0;
};

/// Sequential pairwise optimization of the dual problem with a precomputed
/// kernel matrix and per-point box constraints. Stops when the maximal KKT
/// violation falls below kkt_tolerance; raises a convergence error if no
/// progress is made for max_stall_epochs epochs.
SmoResult solve_smo(const std::vector<double>& kernel, std::span<const int> y,
                    std::span<const double> box, double kkt_tolerance, int max_stall_epochs);

/// Train on the given rows of the matrix: applies the mask, drops selected
/// features with zero training variance, standardizes, and solves the dual.
/// y holds +1/-1 per row (both classes required).
SvmModel train_svm(const features::FeatureMatrix& m, std::span<const std::size_t> rows,
                   std::span<const int> y, const HyperParams& hp,
                   const selection::SelectionMask& mask, const std::string& positive_class,
                   const std::string& negative_class, const SvmConfig& cfg = {});

double decision_value(const SvmModel& m, std::span<const double> x_full);

/// Versioned, checksummed text artifact; reals round-trip bit-exactly.
std::string save_model(const SvmModel& m);
SvmModel load_model(const std::string& bytes);

/// Unsealed JSON forms, used when embedding members in composite artifacts.
nlohmann::json model_to_json(const SvmModel& m);
SvmModel model_from_json(const nlohmann::json& j);

}  // namespace msd::svm

#endif  // MSD_SVM_HPP
