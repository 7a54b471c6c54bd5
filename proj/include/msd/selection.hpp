#ifndef MSD_SELECTION_HPP
#define MSD_SELECTION_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "msd/features.hpp"

namespace msd::selection {

/// Result of ANOVA-F ranking: the n_f selected feature positions in
/// descending-F order, plus the score of every candidate feature.
struct SelectionMask {
  std::vector<std::size_t> indices;
  std::vector<double> scores;
  std::size_t n_f = 0;
};

/// One-way ANOVA F-value for a binary grouping. Returns +inf when the
/// within-group variance is zero but the group means differ, and 0 when
/// both variances are zero.
double anova_f(std::span<const double> values, std::span<const std::uint8_t> groups);

/// Rank all columns of the given rows by F against the binary grouping and
/// keep the n_f best; ties break toward the lower feature index.
SelectionMask select_top(const features::FeatureMatrix& m, std::span<const std::size_t> rows,
                         std::span<const std::uint8_t> groups, std::size_t n_f);

}  // namespace msd::selection

#endif  // MSD_SELECTION_HPP
