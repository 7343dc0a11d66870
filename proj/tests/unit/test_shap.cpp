#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "rso/error.hpp"
#include "rso/shap.hpp"

namespace {

struct RandomProblem {
  rso::GbdtData data;
  std::vector<std::size_t> labels;
  std::size_t n_classes = 0;
};

// Random table with reals, small categoricals and ~15% missing cells; labels
// depend on a few of the columns so the trees have something to split on.
RandomProblem random_problem(rso::Rng& rng, std::size_t features, std::size_t rows) {
  RandomProblem p;
  p.n_classes = 2 + rng.uniform_index(3);
  p.data.n_rows = rows;
  for (std::size_t f = 0; f < features; ++f) {
    p.data.names.push_back("f" + std::to_string(f));
    p.data.kinds.push_back(rng.uniform() < 0.3 ? rso::FeatureKind::kCategorical
                                               : rso::FeatureKind::kReal);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    double score = 0.0;
    for (std::size_t f = 0; f < features; ++f) {
      double x = p.data.kinds[f] == rso::FeatureKind::kReal
                     ? rng.normal()
                     : static_cast<double>(rng.uniform_index(4));
      if (rng.uniform() < 0.15) x = NAN;
      if (!std::isnan(x) && f < 3) score += x;
      p.data.values.push_back(x);
    }
    const double noisy = score + 0.5 * rng.normal();
    p.labels.push_back(static_cast<std::size_t>(std::clamp(
        std::floor((noisy + 3.0) / 6.0 * static_cast<double>(p.n_classes)), 0.0,
        static_cast<double>(p.n_classes - 1))));
  }
  for (std::size_t c = 0; c < p.n_classes; ++c) p.labels[c] = c;  // every class present
  return p;
}

TEST(TreeShap, MatchesEnumerationOnRandomForests) {
  rso::Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t features = 1 + rng.uniform_index(10);
    const auto p = random_problem(rng, features, 120);
    rso::GbdtParams params;
    params.rounds = 3;
    params.max_depth = 1 + rng.uniform_index(4);
    params.learning_rate = 0.5;
    const auto forest = rso::fit_gbdt(p.data, p.labels, p.n_classes, params);
    for (std::size_t r = 0; r < 5; ++r) {
      const auto row = p.data.row(rng.uniform_index(p.data.n_rows));
      const std::size_t cls = rng.uniform_index(p.n_classes);
      const auto fast = rso::tree_shap(forest, row, cls);
      const auto slow = rso::testing::shapley_by_enumeration(forest, row, cls);
      const auto lib_brute = rso::brute_force_shap(forest, row, cls);
      ASSERT_EQ(fast.values.size(), features);
      for (std::size_t f = 0; f < features; ++f) {
        EXPECT_NEAR(fast.values[f], slow[f], 1e-9) << "trial " << trial << " feature " << f;
        EXPECT_NEAR(lib_brute.values[f], slow[f], 1e-9);
      }
      EXPECT_NEAR(fast.base, rso::testing::coalition_value(forest, row, cls, 0), 1e-9);
    }
  }
}

TEST(TreeShap, LocalAccuracy) {
  rso::Rng rng(7);
  const auto p = random_problem(rng, 8, 300);
  rso::GbdtParams params;
  params.rounds = 20;
  params.max_depth = 4;
  const auto forest = rso::fit_gbdt(p.data, p.labels, p.n_classes, params);
  for (std::size_t r = 0; r < p.data.n_rows; ++r) {
    const auto margin = rso::predict_margin(forest, p.data.row(r));
    for (std::size_t c = 0; c < p.n_classes; ++c) {
      const auto s = rso::tree_shap(forest, p.data.row(r), c);
      double total = s.base;
      for (const double v : s.values) total += v;
      ASSERT_NEAR(total, margin[c], 1e-9) << r << " " << c;
    }
  }
}

TEST(TreeShap, ExpectedValueOfStumpIsCoverWeighted) {
  rso::Tree t;
  t.nodes.resize(3);
  t.nodes[0].leaf = false;
  t.nodes[0].left = 1;
  t.nodes[0].right = 2;
  t.nodes[0].cover = 4.0;
  t.nodes[1].value = 1.0;
  t.nodes[1].cover = 1.0;
  t.nodes[2].value = -1.0;
  t.nodes[2].cover = 3.0;
  EXPECT_DOUBLE_EQ(rso::expected_value(t), (1.0 - 3.0) / 4.0);
}

TEST(TreeShap, UnusedFeatureGetsZero) {
  rso::Rng rng(8);
  auto p = random_problem(rng, 4, 200);
  for (std::size_t r = 0; r < p.data.n_rows; ++r) p.data.values[r * 4 + 3] = 1.0;  // constant
  rso::GbdtParams params;
  params.rounds = 5;
  const auto forest = rso::fit_gbdt(p.data, p.labels, p.n_classes, params);
  for (std::size_t r = 0; r < 10; ++r) {
    EXPECT_EQ(rso::tree_shap(forest, p.data.row(r), 0).values[3], 0.0);
  }
}

TEST(TreeShap, ArgumentChecks) {
  rso::Rng rng(9);
  const auto p = random_problem(rng, 3, 100);
  rso::GbdtParams params;
  params.rounds = 2;
  const auto forest = rso::fit_gbdt(p.data, p.labels, p.n_classes, params);
  EXPECT_THROW(rso::tree_shap(forest, p.data.row(0), p.n_classes), rso::ArgumentError);
  const std::vector<double> short_row{1.0};
  EXPECT_THROW(rso::tree_shap(forest, short_row, 0), rso::ArgumentError);
}

TEST(Summary, MeanAbsStackedAndRanking) {
  rso::Rng rng(10);
  const auto p = random_problem(rng, 5, 150);
  rso::GbdtParams params;
  params.rounds = 5;
  const auto forest = rso::fit_gbdt(p.data, p.labels, p.n_classes, params);
  const auto s = rso::shap_summary(forest, p.data);
  ASSERT_EQ(s.mean_abs.rows(), 5u);
  ASSERT_EQ(s.mean_abs.cols(), p.n_classes);
  for (std::size_t c = 0; c < p.n_classes; ++c) {
    for (std::size_t f = 0; f < 5; ++f) {
      double acc = 0.0;
      for (std::size_t r = 0; r < p.data.n_rows; ++r) {
        acc += std::abs(rso::tree_shap(forest, p.data.row(r), c).values[f]);
      }
      EXPECT_NEAR(s.mean_abs(f, c), acc / static_cast<double>(p.data.n_rows), 1e-12);
    }
  }
  for (std::size_t f = 0; f < 5; ++f) {
    double row = 0.0;
    for (std::size_t c = 0; c < p.n_classes; ++c) row += s.mean_abs(f, c);
    EXPECT_NEAR(s.stacked[f], row, 1e-12);
  }
  for (std::size_t i = 1; i < s.ranking.size(); ++i) {
    EXPECT_GE(s.stacked[s.ranking[i - 1]], s.stacked[s.ranking[i]]);
  }
}

TEST(ClusterDetail, SplitsByMissingness) {
  rso::Rng rng(11);
  const auto p = random_problem(rng, 4, 200);
  rso::GbdtParams params;
  params.rounds = 5;
  const auto forest = rso::fit_gbdt(p.data, p.labels, p.n_classes, params);
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < p.data.n_rows; ++r) {
    if (p.labels[r] == 1) rows.push_back(r);
  }
  const auto detail = rso::cluster_detail(forest, p.data, rows, 1);
  ASSERT_EQ(detail.size(), 4u);
  for (std::size_t i = 1; i < detail.size(); ++i) {
    EXPECT_GE(detail[i - 1].mean_abs, detail[i].mean_abs);
  }
  for (const auto& d : detail) {
    std::size_t missing = 0;
    double sum_missing = 0.0, sum_present = 0.0;
    for (const auto r : rows) {
      const double v = rso::tree_shap(forest, p.data.row(r), 1).values[d.feature];
      if (std::isnan(p.data.row(r)[d.feature])) {
        ++missing;
        sum_missing += v;
      } else {
        sum_present += v;
      }
    }
    EXPECT_EQ(d.missing_rows, missing);
    if (missing) {
      EXPECT_NEAR(d.mean_when_missing, sum_missing / double(missing), 1e-12);
    } else {
      EXPECT_TRUE(std::isnan(d.mean_when_missing));
    }
    if (missing < rows.size()) {
      EXPECT_NEAR(d.mean_when_present, sum_present / double(rows.size() - missing), 1e-12);
    }
  }
  EXPECT_THROW(rso::cluster_detail(forest, p.data, rows, p.n_classes), rso::ArgumentError);
}

}  // namespace
