#ifndef MSD_CLASSIFIERS_HPP
#define MSD_CLASSIFIERS_HPP

#include <optional>
#include <span>
#include <string>

#include "msd/svm.hpp"

namespace msd::classifiers {

struct ClassifierConfig {
  svm::SvmConfig svm;
  bool stage1_tie_to_patient = true;  // decision value exactly 0 at stage 1
};

/// Two-stage scheme: svm1 screens neurotypical vs patient on all rows,
/// svm2 separates dysarthria vs AoS on patient rows only. Each stage has
/// its own ANOVA-selected mask.
struct HierarchicalModel {
  svm::SvmModel svm1;  // positive: patient
  svm::SvmModel svm2;  // positive: dysarthria
};

struct OvoModel {
  svm::SvmModel neuro_dys;  // positive: neurotypical
  svm::SvmModel neuro_aos;  // positive: neurotypical
  svm::SvmModel dys_aos;    // positive: dysarthria
};

struct OvrModel {
  svm::SvmModel neuro;  // each: positive = the named class, negative = rest
  svm::SvmModel dys;
  svm::SvmModel aos;
};

struct HierarchicalPrediction {
  ClassLabel label = ClassLabel::Neurotypical;
  double stage1_value = 0.0;
  std::optional<double> stage2_value;  // absent when stage 1 says neurotypical
};

HierarchicalModel train_hierarchical(const features::FeatureMatrix& m,
                                     std::span<const std::size_t> rows,
                                     const svm::HyperParams& hp1, const svm::HyperParams& hp2,
                                     const ClassifierConfig& cfg = {});

HierarchicalPrediction predict_hierarchical(const HierarchicalModel& model,
                                            std::span<const double> x,
                                            const ClassifierConfig& cfg = {});

OvoModel train_ovo(const features::FeatureMatrix& m, std::span<const std::size_t> rows,
                   const svm::HyperParams& hp_neuro_dys, const svm::HyperParams& hp_neuro_aos,
                   const svm::HyperParams& hp_dys_aos, const ClassifierConfig& cfg = {});

/// Majority vote over the three pairwise decisions; a 1-1-1 tie goes to the
/// class whose voting model is most confident, then to the fixed class order
/// neurotypical < dysarthria < aos.
ClassLabel predict_ovo(const OvoModel& model, std::span<const double> x);

OvrModel train_ovr(const features::FeatureMatrix& m, std::span<const std::size_t> rows,
                   const svm::HyperParams& hp_neuro, const svm::HyperParams& hp_dys,
                   const svm::HyperParams& hp_aos, const ClassifierConfig& cfg = {});

/// Argmax of the three signed one-vs-rest decision values; exact ties go to
/// the fixed class order.
ClassLabel predict_ovr(const OvrModel& model, std::span<const double> x);

std::string save_hierarchical(const HierarchicalModel& m);
HierarchicalModel load_hierarchical(const std::string& bytes);
std::string save_ovo(const OvoModel& m);
OvoModel load_ovo(const std::string& bytes);
std::string save_ovr(const OvrModel& m);
OvrModel load_ovr(const std::string& bytes);

}  // namespace msd::classifiers

#endif  // MSD_CLASSIFIERS_HPP
