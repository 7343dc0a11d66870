#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rso/features.hpp"

namespace rso {

// Dense row-major table for the boosted trees. Missing values are
// NaN; categorical cells hold the vocabulary code as a double.
struct GbdtData {
  std::size_t n_rows = 0;
  std::vector<std::string> names;
  std::vector<FeatureKind> kinds;
  std::vector<double> values;  // n_rows x n_features, row-major

  std::size_t n_features() const { return names.size(); }
  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * n_features(), n_features()};
  }
};

// Features in schema order: reals on their original scale (NaN when
// missing), categoricals as codes (MISSING is code 0, an ordinary category).
GbdtData gbdt_data_from(const FeatureMatrix& matrix);

struct GbdtParams {
  std::size_t rounds = 100;
  double learning_rate = 0.1;
  std::size_t max_depth = 6;
  double lambda = 1.0;
  double min_child_weight = 1.0;
  double min_gain = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TreeNode {
  bool leaf = true;
  // Internal nodes. Reals go left when x <= threshold; categoricals go left
  // when x == category. Missing values follow default_left.
  std::size_t feature = 0;
  double threshold = 0.0;
  std::int64_t category = -1;
  bool default_left = false;
  std::size_t left = 0;
  std::size_t right = 0;
  double gain = 0.0;
  // Sum of hessians of the training rows reaching the node.
  double cover = 0.0;
  // Leaves: learning-rate-scaled output.
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  // Index of the leaf reached by `row`.
  std::size_t leaf_index(std::span<const double> row) const;
  double predict(std::span<const double> row) const { return nodes[leaf_index(row)].value; }
  std::size_t depth() const;
};

// True when `row` takes the left branch of internal node `n`.
bool goes_left(const TreeNode& n, std::span<const double> row);

struct BoostedForest {
  std::size_t n_classes = 0;
  double learning_rate = 0.1;
  std::vector<double> base_score;  // per class
  std::vector<std::string> feature_names;
  std::vector<FeatureKind> feature_kinds;
  std::string schema_hash;
  // trees[round * n_classes + class]
  std::vector<Tree> trees;
  // Training log-loss after each round; entry 0 is the base-score model.
  std::vector<double> train_logloss;

  std::size_t rounds() const { return n_classes ? trees.size() / n_classes : 0; }
  std::size_t n_features() const { return feature_names.size(); }
};

// Softmax boosting with exact greedy splits on all rows. Throws
// ArgumentError on bad shapes or labels outside [0, n_classes) and
// DegenerateModelError when fewer than two classes occur.
BoostedForest fit_gbdt(const GbdtData& data, std::span<const std::size_t> labels,
                       std::size_t n_classes, const GbdtParams& params);

// Per-class raw margins (base score plus tree outputs).
std::vector<double> predict_margin(const BoostedForest& forest, std::span<const double> row);
std::vector<double> predict_proba(const BoostedForest& forest, std::span<const double> row);
std::size_t predict_class(const BoostedForest& forest, std::span<const double> row);

double log_loss(const BoostedForest& forest, const GbdtData& data,
                std::span<const std::size_t> labels);

enum class ImportanceKind { kSplitCount, kTotalGain };

struct ImportanceEntry {
  std::size_t feature = 0;
  std::string name;
  double score = 0.0;
};

// Descending by score, ties by feature index.
std::vector<ImportanceEntry> feature_importance(const BoostedForest& forest,
                                                ImportanceKind kind);

std::string forest_to_json(const BoostedForest& forest);
BoostedForest forest_from_json(std::string_view text);
void save_forest(const std::filesystem::path& path, const BoostedForest& forest);
BoostedForest load_forest(const std::filesystem::path& path);

}  // namespace rso
