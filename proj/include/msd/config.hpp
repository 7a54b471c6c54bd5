#ifndef MSD_CONFIG_HPP
#define MSD_CONFIG_HPP

#include <map>
#include <string>
#include <vector>

#include "msd/dataset.hpp"
#include "msd/evaluation.hpp"
#include "msd/features.hpp"
#include "msd/svm.hpp"

namespace msd::cli {

/// Flat dotted-key configuration: a defaults registry, overridable from a
/// config file (`key = value` lines) and from --set flags. Unknown keys are
/// rejected. The effective map is echoed into every report.
class RunConfig {
 public:
  RunConfig();

  void apply_file(const std::string& path);
  void apply_override(const std::string& key, const std::string& value);
  void apply_assignment(const std::string& key_equals_value);

  const std::map<std::string, std::string>& values() const { return values_; }

  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  const std::string& get_string(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  features::FeatureConfig feature_config() const;
  dataset::PreprocessConfig preprocess_config() const;
  svm::SvmConfig svm_config() const;
  evaluation::CvPlan cv_plan() const;
  evaluation::GridSpec grid_spec() const;
  bool stage1_tie_to_patient() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace msd::cli

#endif  // MSD_CONFIG_HPP
