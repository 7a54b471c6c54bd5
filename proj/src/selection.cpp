#include "msd/selection.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace msd::selection {

double anova_f(std::span<const double> values, std::span<const std::uint8_t> groups) {
  if (values.size() != groups.size())
    throw Error(ErrorKind::Data, "anova_f: values and groups differ in length");
  const std::size_t n = values.size();
  if (n < 3) throw Error(ErrorKind::Data, "anova_f: need at least 3 observations");

  double sum0 = 0.0, sum1 = 0.0;
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (groups[i]) {
      sum1 += values[i];
      ++n1;
    } else {
      sum0 += values[i];
      ++n0;
    }
  }
  if (n0 == 0 || n1 == 0) throw Error(ErrorKind::Data, "anova_f: a group is empty");

  const double mean0 = sum0 / static_cast<double>(n0);
  const double mean1 = sum1 / static_cast<double>(n1);
  const double grand = (sum0 + sum1) / static_cast<double>(n);

  const double ssb = static_cast<double>(n0) * (mean0 - grand) * (mean0 - grand) +
                     static_cast<double>(n1) * (mean1 - grand) * (mean1 - grand);
  double ss0 = 0.0, ss1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i] - (groups[i] ? mean1 : mean0);
    (groups[i] ? ss1 : ss0) += d * d;
  }
  // Within-group spread as the sum of per-group sample variances; a
  // singleton group contributes zero spread.
  const double pooled = (n0 > 1 ? ss0 / static_cast<double>(n0 - 1) : 0.0) +
                        (n1 > 1 ? ss1 / static_cast<double>(n1 - 1) : 0.0);

  if (pooled == 0.0)
    return ssb > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return ssb / (pooled / static_cast<double>(n - 2));
}

SelectionMask select_top(const features::FeatureMatrix& m, std::span<const std::size_t> rows,
                         std::span<const std::uint8_t> groups, std::size_t n_f) {
  if (rows.size() != groups.size())
    throw Error(ErrorKind::Data, "select_top: rows and groups differ in length");
  const std::size_t d = m.cols();
  if (n_f < 1 || n_f > d)
    throw Error(ErrorKind::Data, "select_top: n_f out of range [1, " + std::to_string(d) + "]");

  SelectionMask mask;
  mask.scores.resize(d);
  std::vector<double> column(rows.size());
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = m.at(rows[i], c);
    mask.scores[c] = anova_f(column, groups);
  }

  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (mask.scores[a] != mask.scores[b]) return mask.scores[a] > mask.scores[b];
    return a < b;
  });
  mask.indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_f));
  mask.n_f = n_f;
  return mask;
}

}  // namespace msd::selection
