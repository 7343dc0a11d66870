#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rso/gbdt.hpp"
#include "rso/matrix.hpp"

namespace rso {

struct ShapVector {
  std::vector<double> values;  // one per feature
  double base = 0.0;           // base score + expected tree output
};

// Expected output of a tree under its cover distribution.
double expected_value(const Tree& tree);

// Path-dependent TreeSHAP summed over every tree of `class_id`.
ShapVector tree_shap(const BoostedForest& forest, std::span<const double> row,
                     std::size_t class_id);

// Exact Shapley values by coalition enumeration. Absent features at a split
// average both children by cover. Throws ArgumentError above 20 features.
ShapVector brute_force_shap(const BoostedForest& forest, std::span<const double> row,
                            std::size_t class_id);

struct ShapSummary {
  std::vector<std::string> features;
  Matrix mean_abs;              // features x classes
  std::vector<double> stacked;  // row sums of mean_abs
  std::vector<std::size_t> ranking;  // features by stacked, descending
};

ShapSummary shap_summary(const BoostedForest& forest, const GbdtData& data);

struct ClusterFeatureDetail {
  std::size_t feature = 0;
  std::string name;
  double mean_abs = 0.0;
  double mean = 0.0;
  // Mean SHAP value over rows where the feature is missing / observed
  // (NaN when there are no such rows).
  double mean_when_missing = 0.0;
  double mean_when_present = 0.0;
  std::size_t missing_rows = 0;
};

// SHAP values of one cluster's output over rows of that cluster (all rows
// when `rows` is empty), ranked by mean |SHAP|.
std::vector<ClusterFeatureDetail> cluster_detail(const BoostedForest& forest,
                                                 const GbdtData& data,
                                                 std::span<const std::size_t> rows,
                                                 std::size_t class_id);

}  // namespace rso
