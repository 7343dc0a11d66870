#include "rso/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rso/error.hpp"

namespace rso {
namespace {

struct PathElement {
  std::int64_t feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, std::size_t depth, double zero_fraction,
                 double one_fraction, std::int64_t feature) {
  path[depth] = {feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  const double d1 = static_cast<double>(depth + 1);
  for (std::size_t i = depth; i-- > 0;) {
    path[i + 1].pweight += one_fraction * path[i].pweight * static_cast<double>(i + 1) / d1;
    path[i].pweight = zero_fraction * path[i].pweight * static_cast<double>(depth - i) / d1;
  }
}

void unwind_path(PathElement* path, std::size_t depth, std::size_t index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double d1 = static_cast<double>(depth + 1);
  double next_one = path[depth].pweight;
  for (std::size_t i = depth; i-- > 0;) {
    if (one != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one * d1 / (static_cast<double>(i + 1) * one);
      next_one = tmp - path[i].pweight * zero * static_cast<double>(depth - i) / d1;
    } else {
      path[i].pweight = path[i].pweight * d1 / (zero * static_cast<double>(depth - i));
    }
  }
  for (std::size_t i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_sum(const PathElement* path, std::size_t depth, std::size_t index) {
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  const double d1 = static_cast<double>(depth + 1);
  double next_one = path[depth].pweight;
  double total = 0.0;
  for (std::size_t i = depth; i-- > 0;) {
    if (one != 0.0) {
      const double tmp = next_one * d1 / (static_cast<double>(i + 1) * one);
      total += tmp;
      next_one = path[i].pweight - tmp * zero * (static_cast<double>(depth - i) / d1);
    } else if (zero != 0.0) {
      total += path[i].pweight / zero / (static_cast<double>(depth - i) / d1);
    }
  }
  return total;
}

void recurse(const Tree& tree, std::span<const double> row, std::vector<double>& phi,
             std::size_t node_id, std::size_t depth, PathElement* parent_path,
             double zero_fraction, double one_fraction, std::int64_t feature) {
  PathElement* path = parent_path + depth + 1;
  std::copy(parent_path, parent_path + depth + 1, path);
  extend_path(path, depth, zero_fraction, one_fraction, feature);
  const auto& node = tree.nodes[node_id];
  if (node.leaf) {
    for (std::size_t i = 1; i <= depth; ++i) {
      const double w = unwound_sum(path, depth, i);
      const auto& el = path[i];
      phi[static_cast<std::size_t>(el.feature)] +=
          w * (el.one_fraction - el.zero_fraction) * node.value;
    }
    return;
  }
  const bool left = goes_left(node, row);
  const std::size_t hot = left ? node.left : node.right;
  const std::size_t cold = left ? node.right : node.left;
  const double hot_zero = tree.nodes[hot].cover / node.cover;
  const double cold_zero = tree.nodes[cold].cover / node.cover;
  double incoming_zero = 1.0, incoming_one = 1.0;
  const auto split = static_cast<std::int64_t>(node.feature);
  std::size_t k = 0;
  for (; k <= depth; ++k) {
    if (path[k].feature == split) break;
  }
  if (k != depth + 1) {
    incoming_zero = path[k].zero_fraction;
    incoming_one = path[k].one_fraction;
    unwind_path(path, depth, k);
    --depth;
  }
  recurse(tree, row, phi, hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, split);
  recurse(tree, row, phi, cold, depth + 1, path, cold_zero * incoming_zero, 0.0, split);
}

void add_tree_shap(const Tree& tree, std::span<const double> row, std::vector<double>& phi) {
  const std::size_t max_depth = tree.depth() + 2;
  std::vector<PathElement> storage(max_depth * (max_depth + 1) / 2);
  recurse(tree, row, phi, 0, 0, storage.data(), 1.0, 1.0, -1);
}

double expected_from(const Tree& tree, std::size_t id) {
  const auto& n = tree.nodes[id];
  if (n.leaf) return n.value;
  return (tree.nodes[n.left].cover * expected_from(tree, n.left) +
          tree.nodes[n.right].cover * expected_from(tree, n.right)) /
         n.cover;
}

// Path-dependent value of coalition `mask` for one tree.
double coalition_value(const Tree& tree, std::size_t id, std::span<const double> row,
                       std::uint32_t mask) {
  const auto& n = tree.nodes[id];
  if (n.leaf) return n.value;
  if (mask & (1u << n.feature)) {
    return coalition_value(tree, goes_left(n, row) ? n.left : n.right, row, mask);
  }
  return (tree.nodes[n.left].cover * coalition_value(tree, n.left, row, mask) +
          tree.nodes[n.right].cover * coalition_value(tree, n.right, row, mask)) /
         n.cover;
}

void check_class(const BoostedForest& forest, std::span<const double> row,
                 std::size_t class_id) {
  if (class_id >= forest.n_classes) {
    throw ArgumentError("shap: class " + std::to_string(class_id) + " out of range");
  }
  if (row.size() != forest.n_features()) {
    throw ArgumentError("shap: row has the wrong number of features");
  }
}

}  // namespace

double expected_value(const Tree& tree) { return expected_from(tree, 0); }

ShapVector tree_shap(const BoostedForest& forest, std::span<const double> row,
                     std::size_t class_id) {
  check_class(forest, row, class_id);
  ShapVector out;
  out.values.assign(forest.n_features(), 0.0);
  out.base = forest.base_score[class_id];
  for (std::size_t t = class_id; t < forest.trees.size(); t += forest.n_classes) {
    out.base += expected_value(forest.trees[t]);
    add_tree_shap(forest.trees[t], row, out.values);
  }
  return out;
}

ShapVector brute_force_shap(const BoostedForest& forest, std::span<const double> row,
                            std::size_t class_id) {
  check_class(forest, row, class_id);
  const std::size_t f = forest.n_features();
  if (f > 20) throw ArgumentError("brute_force_shap: more than 20 features");
  const std::uint32_t full = f == 0 ? 0u : ((1u << f) - 1u);
  std::vector<double> value(static_cast<std::size_t>(full) + 1, 0.0);
  for (std::uint32_t mask = 0; mask <= full; ++mask) {
    double v = 0.0;
    for (std::size_t t = class_id; t < forest.trees.size(); t += forest.n_classes) {
      v += coalition_value(forest.trees[t], 0, row, mask);
    }
    value[mask] = v;
    if (mask == full) break;
  }
  // weight(s) = s! (f - s - 1)! / f!
  std::vector<double> weight(f, 0.0);
  for (std::size_t s = 0; s < f; ++s) {
    double w = 1.0 / static_cast<double>(f);
    // 1 / (f * C(f-1, s))
    for (std::size_t i = 1; i <= s; ++i) {
      w *= static_cast<double>(i) / static_cast<double>(f - s - 1 + i);
    }
    weight[s] = w;
  }
  ShapVector out;
  out.values.assign(f, 0.0);
  out.base = forest.base_score[class_id] + value[0];
  for (std::size_t i = 0; i < f; ++i) {
    const std::uint32_t bit = 1u << i;
    double phi = 0.0;
    for (std::uint32_t mask = 0; mask <= full; ++mask) {
      if (!(mask & bit)) {
        phi += weight[static_cast<std::size_t>(std::popcount(mask))] *
               (value[mask | bit] - value[mask]);
      }
      if (mask == full) break;
    }
    out.values[i] = phi;
  }
  return out;
}

ShapSummary shap_summary(const BoostedForest& forest, const GbdtData& data) {
  ShapSummary s;
  s.features = forest.feature_names;
  const std::size_t f = forest.n_features();
  s.mean_abs = Matrix(f, forest.n_classes);
  for (std::size_t r = 0; r < data.n_rows; ++r) {
    for (std::size_t c = 0; c < forest.n_classes; ++c) {
      const auto v = tree_shap(forest, data.row(r), c);
      for (std::size_t j = 0; j < f; ++j) s.mean_abs(j, c) += std::abs(v.values[j]);
    }
  }
  if (data.n_rows > 0) {
    for (double& v : s.mean_abs.values()) v /= static_cast<double>(data.n_rows);
  }
  s.stacked.assign(f, 0.0);
  for (std::size_t j = 0; j < f; ++j) {
    for (std::size_t c = 0; c < forest.n_classes; ++c) s.stacked[j] += s.mean_abs(j, c);
  }
  s.ranking.resize(f);
  std::iota(s.ranking.begin(), s.ranking.end(), 0);
  std::stable_sort(s.ranking.begin(), s.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return s.stacked[a] > s.stacked[b]; });
  return s;
}

std::vector<ClusterFeatureDetail> cluster_detail(const BoostedForest& forest,
                                                 const GbdtData& data,
                                                 std::span<const std::size_t> rows,
                                                 std::size_t class_id) {
  if (class_id >= forest.n_classes) {
    throw ArgumentError("cluster " + std::to_string(class_id) + " does not exist (" +
                        std::to_string(forest.n_classes) + " clusters)");
  }
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(data.n_rows);
    std::iota(all.begin(), all.end(), 0);
    rows = all;
  }
  const std::size_t f = forest.n_features();
  std::vector<ClusterFeatureDetail> out(f);
  std::vector<double> sum_missing(f, 0.0), sum_present(f, 0.0);
  for (const auto r : rows) {
    const auto row = data.row(r);
    const auto v = tree_shap(forest, row, class_id);
    for (std::size_t j = 0; j < f; ++j) {
      out[j].mean_abs += std::abs(v.values[j]);
      out[j].mean += v.values[j];
      if (std::isnan(row[j])) {
        sum_missing[j] += v.values[j];
        ++out[j].missing_rows;
      } else {
        sum_present[j] += v.values[j];
      }
    }
  }
  const double n = static_cast<double>(rows.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < f; ++j) {
    auto& d = out[j];
    d.feature = j;
    d.name = forest.feature_names[j];
    const std::size_t present = rows.size() - d.missing_rows;
    d.mean_when_missing = d.missing_rows ? sum_missing[j] / static_cast<double>(d.missing_rows) : nan;
    d.mean_when_present = present ? sum_present[j] / static_cast<double>(present) : nan;
    if (n > 0) {
      d.mean_abs /= n;
      d.mean /= n;
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ClusterFeatureDetail& a, const ClusterFeatureDetail& b) {
                     return a.mean_abs > b.mean_abs;
                   });
  return out;
}

}  // namespace rso
