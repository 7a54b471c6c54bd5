#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "msd/selection.hpp"
#include "test_helpers.hpp"

using namespace msd;
using test::Rng;

namespace {

features::FeatureMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
  features::FeatureMatrix m;
  for (std::size_t c = 0; c < rows[0].size(); ++c)
    m.feature_names.push_back("f" + std::to_string(c));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.ids.push_back("r" + std::to_string(r));
    m.labels.push_back(ClassLabel::Neurotypical);
    m.values.insert(m.values.end(), rows[r].begin(), rows[r].end());
  }
  return m;
}

}  // namespace

TEST_SUITE_BEGIN("selection");

TEST_CASE("anova F oracle values") {
  SUBCASE("hand-computed two-group example") {
    const std::vector<double> values = {1, 2, 3, 2, 3, 4};
    const std::vector<std::uint8_t> groups = {0, 0, 0, 1, 1, 1};
    CHECK(selection::anova_f(values, groups) == doctest::Approx(3.0).epsilon(1e-9));
  }

  SUBCASE("identical group means give F = 0") {
    const std::vector<double> values = {1, 2, 3, 3, 2, 1};
    const std::vector<std::uint8_t> groups = {0, 0, 0, 1, 1, 1};
    CHECK(selection::anova_f(values, groups) == 0.0);
  }

  SUBCASE("zero within-group variance with separated means is the +inf sentinel") {
    const std::vector<double> values = {2, 2, 5, 5};
    const std::vector<std::uint8_t> groups = {0, 0, 1, 1};
    CHECK(std::isinf(selection::anova_f(values, groups)));
  }

  SUBCASE("all equal values give F = 0") {
    const std::vector<double> values = {3, 3, 3, 3};
    const std::vector<std::uint8_t> groups = {0, 0, 1, 1};
    CHECK(selection::anova_f(values, groups) == 0.0);
  }

  SUBCASE("empty group or tiny samples are rejected") {
    CHECK_THROWS_AS(
        (void)selection::anova_f(std::vector<double>{1, 2, 3}, std::vector<std::uint8_t>{0, 0, 0}),
        Error);
    CHECK_THROWS_AS(
        (void)selection::anova_f(std::vector<double>{1, 2}, std::vector<std::uint8_t>{0, 1}),
        Error);
  }
}

TEST_CASE("anova F is invariant under affine maps") {
  Rng rng(41);
  std::vector<double> values(40);
  std::vector<std::uint8_t> groups(40);
  for (std::size_t i = 0; i < values.size(); ++i) {
    groups[i] = i % 2;
    values[i] = rng.gaussian() + (groups[i] ? 0.8 : 0.0);
  }
  const double base = selection::anova_f(values, groups);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = (rng.uniform() - 0.5) * 20.0;
    const double b = (rng.uniform() - 0.5) * 100.0;
    if (std::abs(a) < 1e-3) continue;
    std::vector<double> mapped(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) mapped[i] = a * values[i] + b;
    CHECK(selection::anova_f(mapped, groups) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("select_top picks the discriminative features") {
  // Only features 3 and 7 carry group-dependent means.
  Rng rng(17);
  const std::size_t n_per_group = 200;
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> groups;
  for (std::size_t i = 0; i < 2 * n_per_group; ++i) {
    const std::uint8_t g = i < n_per_group ? 0 : 1;
    groups.push_back(g);
    std::vector<double> row(10);
    for (auto& v : row) v = rng.gaussian();
    if (g) {
      row[3] += 3.0;
      row[7] += 3.0;
    }
    rows.push_back(std::move(row));
  }
  const auto m = matrix_from(rows);
  std::vector<std::size_t> all(m.rows());
  std::iota(all.begin(), all.end(), 0);

  const auto mask = selection::select_top(m, all, groups, 2);
  std::vector<std::size_t> picked = mask.indices;
  std::sort(picked.begin(), picked.end());
  CHECK(picked == std::vector<std::size_t>{3, 7});

  SUBCASE("selected scores dominate unselected scores") {
    double min_selected = std::numeric_limits<double>::infinity();
    for (std::size_t i : mask.indices) min_selected = std::min(min_selected, mask.scores[i]);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (std::find(mask.indices.begin(), mask.indices.end(), c) != mask.indices.end()) continue;
      CHECK(mask.scores[c] <= min_selected);
    }
  }

  SUBCASE("indices come back in descending-F order") {
    for (std::size_t i = 1; i < mask.indices.size(); ++i)
      CHECK(mask.scores[mask.indices[i - 1]] >= mask.scores[mask.indices[i]]);
  }

  SUBCASE("affine transforms of single columns never change the mask") {
    auto scaled = m;
    for (std::size_t r = 0; r < scaled.rows(); ++r)
      for (std::size_t c = 0; c < scaled.cols(); ++c)
        scaled.values[r * scaled.cols() + c] =
            scaled.values[r * scaled.cols() + c] * (2.0 + static_cast<double>(c)) - 7.0;
    const auto mask2 = selection::select_top(scaled, all, groups, 2);
    CHECK(mask2.indices == mask.indices);
  }
}

TEST_CASE("select_top edge rules") {
  const std::vector<std::vector<double>> rows = {
      {1.0, 1.0, 0.3}, {2.0, 2.0, 0.1}, {5.0, 5.0, 0.2}, {6.0, 6.0, 0.4}};
  const auto m = matrix_from(rows);
  const std::vector<std::size_t> all = {0, 1, 2, 3};
  const std::vector<std::uint8_t> groups = {0, 0, 1, 1};

  SUBCASE("bit-identical columns tie toward the lower index") {
    const auto mask = selection::select_top(m, all, groups, 2);
    CHECK(mask.indices == std::vector<std::size_t>{0, 1});
  }

  SUBCASE("selecting everything returns a complete index set") {
    const auto mask = selection::select_top(m, all, groups, 3);
    auto sorted = mask.indices;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::size_t>{0, 1, 2});
  }

  SUBCASE("n_f out of range is rejected") {
    CHECK_THROWS_AS((void)selection::select_top(m, all, groups, 4), Error);
    CHECK_THROWS_AS((void)selection::select_top(m, all, groups, 0), Error);
  }
}

TEST_SUITE_END();
