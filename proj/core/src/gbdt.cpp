#include "rso/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "rso/error.hpp"

namespace rso {
namespace {

using nlohmann::json;

constexpr double kHessianFloor = 1e-16;
constexpr double kPriorFloor = 1e-12;
// Threshold of a "present vs missing" split: every observed value goes left.
constexpr double kPresentThreshold = std::numeric_limits<double>::max();

void softmax_inplace(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

struct Stats {
  double g = 0.0;
  double h = 0.0;
  std::size_t n = 0;
  void add(double gi, double hi) {
    g += gi;
    h += hi;
    ++n;
  }
};

struct Split {
  double gain = 0.0;
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::int64_t category = -1;
  bool default_left = false;
};

class TreeBuilder {
 public:
  TreeBuilder(const GbdtData& data, const std::vector<std::vector<std::size_t>>& sorted,
              const std::vector<std::size_t>& n_categories, const GbdtParams& params)
      : data_(data), sorted_(sorted), n_categories_(n_categories), p_(params) {}

  Tree build(const std::vector<double>& g, const std::vector<double>& h) {
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<std::size_t> row_node(data_.n_rows, 0);
    std::vector<std::size_t> frontier = {0};
    for (std::size_t depth = 0; !frontier.empty(); ++depth) {
      std::vector<std::int64_t> local(tree.nodes.size(), -1);
      for (std::size_t a = 0; a < frontier.size(); ++a) {
        local[frontier[a]] = static_cast<std::int64_t>(a);
      }
      std::vector<Stats> totals(frontier.size());
      for (std::size_t i = 0; i < data_.n_rows; ++i) {
        const auto a = local[row_node[i]];
        if (a >= 0) totals[static_cast<std::size_t>(a)].add(g[i], h[i]);
      }
      for (std::size_t a = 0; a < frontier.size(); ++a) {
        auto& node = tree.nodes[frontier[a]];
        node.cover = totals[a].h;
        node.value = -totals[a].g / (totals[a].h + p_.lambda) * p_.learning_rate;
      }
      if (depth >= p_.max_depth) break;

      const auto splits = find_splits(frontier, local, row_node, totals, g, h);
      std::vector<std::size_t> next;
      for (std::size_t a = 0; a < frontier.size(); ++a) {
        if (!splits[a].found) continue;
        const std::size_t id = frontier[a];
        const std::size_t left = tree.nodes.size();
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[id];
        node.leaf = false;
        node.feature = splits[a].feature;
        node.threshold = splits[a].threshold;
        node.category = splits[a].category;
        node.default_left = splits[a].default_left;
        node.gain = splits[a].gain;
        node.left = left;
        node.right = left + 1;
        node.value = 0.0;
        next.push_back(left);
        next.push_back(left + 1);
      }
      for (std::size_t i = 0; i < data_.n_rows; ++i) {
        const auto& node = tree.nodes[row_node[i]];
        if (node.leaf || local[row_node[i]] < 0) continue;
        row_node[i] = goes_left(node, data_.row(i)) ? node.left : node.right;
      }
      frontier = std::move(next);
    }
    // Internal covers as the sum of their children (children follow parents).
    for (std::size_t id = tree.nodes.size(); id-- > 0;) {
      auto& node = tree.nodes[id];
      if (!node.leaf) node.cover = tree.nodes[node.left].cover + tree.nodes[node.right].cover;
    }
    return tree;
  }

 private:
  double score(double g, double h) const { return g * g / (h + p_.lambda); }

  void consider(Split& best, const Stats& total, const Stats& left, const Stats& right,
                std::size_t feature, double threshold, std::int64_t category,
                bool default_left) const {
    if (left.n == 0 || right.n == 0) return;
    if (left.h < p_.min_child_weight || right.h < p_.min_child_weight) return;
    const double gain =
        0.5 * (score(left.g, left.h) + score(right.g, right.h) - score(total.g, total.h));
    if (!(gain > p_.min_gain) || !(gain > best.gain)) return;
    best = {gain, true, feature, threshold, category, default_left};
  }

  // Left = `present_left` (+ missing when default_left); right = the rest.
  void consider_both(Split& best, const Stats& total, const Stats& present_left,
                     const Stats& missing, std::size_t feature, double threshold,
                     std::int64_t category) const {
    Stats right{total.g - present_left.g - missing.g, total.h - present_left.h - missing.h,
                total.n - present_left.n - missing.n};
    Stats right_with{right.g + missing.g, right.h + missing.h, right.n + missing.n};
    consider(best, total, present_left, right_with, feature, threshold, category, false);
    if (missing.n > 0) {
      Stats left_with{present_left.g + missing.g, present_left.h + missing.h,
                      present_left.n + missing.n};
      consider(best, total, left_with, right, feature, threshold, category, true);
    }
  }

  std::vector<Split> find_splits(const std::vector<std::size_t>& frontier,
                                 const std::vector<std::int64_t>& local,
                                 const std::vector<std::size_t>& row_node,
                                 const std::vector<Stats>& totals,
                                 const std::vector<double>& g,
                                 const std::vector<double>& h) const {
    const std::size_t n_nodes = frontier.size();
    const std::size_t n_feat = data_.n_features();
    std::vector<Split> best(n_nodes);
    std::vector<Stats> missing(n_nodes * n_feat);
    for (std::size_t i = 0; i < data_.n_rows; ++i) {
      const auto a = local[row_node[i]];
      if (a < 0) continue;
      const auto row = data_.row(i);
      for (std::size_t f = 0; f < n_feat; ++f) {
        if (std::isnan(row[f])) missing[static_cast<std::size_t>(a) * n_feat + f].add(g[i], h[i]);
      }
    }

    std::vector<Stats> acc;
    std::vector<double> last(n_nodes);
    std::vector<std::uint8_t> seen(n_nodes);
    for (std::size_t f = 0; f < n_feat; ++f) {
      if (data_.kinds[f] == FeatureKind::kReal) {
        acc.assign(n_nodes, Stats{});
        std::fill(seen.begin(), seen.end(), 0);
        for (const std::size_t i : sorted_[f]) {
          const auto al = local[row_node[i]];
          if (al < 0) continue;
          const auto a = static_cast<std::size_t>(al);
          const double x = data_.values[i * n_feat + f];
          if (seen[a] && x != last[a]) {
            double t = 0.5 * last[a] + 0.5 * x;
            if (!(t >= last[a] && t < x)) t = last[a];
            consider_both(best[a], totals[a], acc[a], missing[a * n_feat + f], f, t, -1);
          }
          acc[a].add(g[i], h[i]);
          last[a] = x;
          seen[a] = 1;
        }
        for (std::size_t a = 0; a < n_nodes; ++a) {
          const auto& m = missing[a * n_feat + f];
          if (m.n == 0 || acc[a].n == 0) continue;
          consider(best[a], totals[a], acc[a], m, f, kPresentThreshold, -1, false);
        }
      } else {
        const std::size_t n_cat = n_categories_[f];
        acc.assign(n_nodes * n_cat, Stats{});
        for (std::size_t i = 0; i < data_.n_rows; ++i) {
          const auto al = local[row_node[i]];
          const double x = data_.values[i * n_feat + f];
          if (al < 0 || std::isnan(x)) continue;
          acc[static_cast<std::size_t>(al) * n_cat + static_cast<std::size_t>(x)].add(g[i], h[i]);
        }
        for (std::size_t a = 0; a < n_nodes; ++a) {
          for (std::size_t c = 0; c < n_cat; ++c) {
            const auto& s = acc[a * n_cat + c];
            if (s.n == 0) continue;
            consider_both(best[a], totals[a], s, missing[a * n_feat + f], f, 0.0,
                          static_cast<std::int64_t>(c));
          }
        }
      }
    }
    return best;
  }

  const GbdtData& data_;
  const std::vector<std::vector<std::size_t>>& sorted_;
  const std::vector<std::size_t>& n_categories_;
  const GbdtParams& p_;
};

void check_data(const GbdtData& data) {
  if (data.kinds.size() != data.names.size()) {
    throw ArgumentError("gbdt: feature names and kinds differ in length");
  }
  if (data.values.size() != data.n_rows * data.n_features()) {
    throw ArgumentError("gbdt: value table does not match n_rows x n_features");
  }
  for (std::size_t i = 0; i < data.n_rows; ++i) {
    const auto row = data.row(i);
    for (std::size_t f = 0; f < row.size(); ++f) {
      const double x = row[f];
      if (std::isinf(x)) throw ArgumentError("gbdt: infinite feature value");
      if (data.kinds[f] == FeatureKind::kCategorical && !std::isnan(x) &&
          (x < 0 || x != std::floor(x))) {
        throw ArgumentError("gbdt: categorical code must be a non-negative integer");
      }
    }
  }
}

std::string kind_name(FeatureKind k) {
  return k == FeatureKind::kReal ? "real" : "categorical";
}

}  // namespace

GbdtData gbdt_data_from(const FeatureMatrix& matrix) {
  GbdtData d;
  d.n_rows = matrix.n_rows;
  const auto& feats = matrix.schema.features;
  for (const auto& f : feats) {
    d.names.push_back(f.name);
    d.kinds.push_back(f.kind);
  }
  d.values.resize(d.n_rows * feats.size());
  for (std::size_t r = 0; r < d.n_rows; ++r) {
    const auto raw = matrix.raw_row(r);
    const auto miss = matrix.missing_row(r);
    const auto codes = matrix.code_row(r);
    std::size_t ri = 0, ci = 0;
    for (std::size_t f = 0; f < feats.size(); ++f) {
      double v;
      if (feats[f].kind == FeatureKind::kReal) {
        v = miss[ri] ? std::numeric_limits<double>::quiet_NaN() : raw[ri];
        ++ri;
      } else {
        v = static_cast<double>(codes[ci++]);
      }
      d.values[r * feats.size() + f] = v;
    }
  }
  return d;
}

void GbdtParams::validate() const {
  if (rounds == 0) throw ValidationError("gbdt: rounds must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw ValidationError("gbdt: learning rate must be in (0, 1]");
  }
  if (max_depth == 0) throw ValidationError("gbdt: max depth must be >= 1");
  if (!(lambda >= 0.0)) throw ValidationError("gbdt: lambda must be >= 0");
  if (!(min_child_weight >= 0.0)) throw ValidationError("gbdt: min child weight must be >= 0");
  if (!(min_gain >= 0.0)) throw ValidationError("gbdt: min gain must be >= 0");
}

bool goes_left(const TreeNode& n, std::span<const double> row) {
  const double x = row[n.feature];
  if (std::isnan(x)) return n.default_left;
  if (n.category >= 0) return x == static_cast<double>(n.category);
  return x <= n.threshold;
}

std::size_t Tree::leaf_index(std::span<const double> row) const {
  std::size_t id = 0;
  while (!nodes[id].leaf) id = goes_left(nodes[id], row) ? nodes[id].left : nodes[id].right;
  return id;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    deepest = std::max(deepest, d[id]);
    if (!nodes[id].leaf) {
      d[nodes[id].left] = d[id] + 1;
      d[nodes[id].right] = d[id] + 1;
    }
  }
  return deepest;
}

BoostedForest fit_gbdt(const GbdtData& data, std::span<const std::size_t> labels,
                       std::size_t n_classes, const GbdtParams& params) {
  params.validate();
  check_data(data);
  if (data.n_rows < 2) throw ArgumentError("gbdt: need at least two rows");
  if (labels.size() != data.n_rows) {
    throw ArgumentError("gbdt: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(data.n_rows) + " rows");
  }
  std::vector<std::size_t> counts(n_classes, 0);
  for (const auto y : labels) {
    if (y >= n_classes) {
      throw ArgumentError("gbdt: label " + std::to_string(y) + " outside [0, " +
                          std::to_string(n_classes) + ")");
    }
    ++counts[y];
  }
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    throw DegenerateModelError("gbdt: labels contain fewer than two classes");
  }

  const std::size_t n = data.n_rows;
  const std::size_t n_feat = data.n_features();
  std::vector<std::vector<std::size_t>> sorted(n_feat);
  std::vector<std::size_t> n_categories(n_feat, 0);
  for (std::size_t f = 0; f < n_feat; ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      const double x = data.values[i * n_feat + f];
      if (std::isnan(x)) continue;
      if (data.kinds[f] == FeatureKind::kReal) {
        sorted[f].push_back(i);
      } else {
        n_categories[f] = std::max(n_categories[f], static_cast<std::size_t>(x) + 1);
      }
    }
    std::stable_sort(sorted[f].begin(), sorted[f].end(), [&](std::size_t a, std::size_t b) {
      return data.values[a * n_feat + f] < data.values[b * n_feat + f];
    });
  }

  BoostedForest forest;
  forest.n_classes = n_classes;
  forest.learning_rate = params.learning_rate;
  forest.feature_names = data.names;
  forest.feature_kinds = data.kinds;
  for (const auto c : counts) {
    const double prior = static_cast<double>(c) / static_cast<double>(n);
    forest.base_score.push_back(std::log(std::max(prior, kPriorFloor)));
  }

  std::vector<double> margin(n * n_classes);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(forest.base_score.begin(), forest.base_score.end(),
              margin.begin() + static_cast<long>(i * n_classes));
  }
  auto current_logloss = [&] {
    double sum = 0.0;
    std::vector<double> p(n_classes);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(margin.begin() + static_cast<long>(i * n_classes), n_classes, p.begin());
      softmax_inplace(p);
      sum -= std::log(std::max(p[labels[i]], 1e-300));
    }
    return sum / static_cast<double>(n);
  };
  forest.train_logloss.push_back(current_logloss());

  TreeBuilder builder(data, sorted, n_categories, params);
  std::vector<double> prob(n * n_classes), g(n), h(n);
  for (std::size_t round = 0; round < params.rounds; ++round) {
    std::vector<double> p(n_classes);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(margin.begin() + static_cast<long>(i * n_classes), n_classes, p.begin());
      softmax_inplace(p);
      std::copy(p.begin(), p.end(), prob.begin() + static_cast<long>(i * n_classes));
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        const double pc = prob[i * n_classes + c];
        g[i] = pc - (labels[i] == c ? 1.0 : 0.0);
        h[i] = std::max(pc * (1.0 - pc), kHessianFloor);
      }
      forest.trees.push_back(builder.build(g, h));
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
      const auto& tree = forest.trees[round * n_classes + c];
      for (std::size_t i = 0; i < n; ++i) margin[i * n_classes + c] += tree.predict(data.row(i));
    }
    forest.train_logloss.push_back(current_logloss());
  }
  return forest;
}

std::vector<double> predict_margin(const BoostedForest& forest, std::span<const double> row) {
  if (row.size() != forest.n_features()) {
    throw ArgumentError("predict: row has " + std::to_string(row.size()) +
                        " features, forest expects " + std::to_string(forest.n_features()));
  }
  std::vector<double> m = forest.base_score;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    m[t % forest.n_classes] += forest.trees[t].predict(row);
  }
  return m;
}

std::vector<double> predict_proba(const BoostedForest& forest, std::span<const double> row) {
  auto m = predict_margin(forest, row);
  if (m.empty()) return m;
  softmax_inplace(m);
  return m;
}

std::size_t predict_class(const BoostedForest& forest, std::span<const double> row) {
  const auto p = predict_proba(forest, row);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

double log_loss(const BoostedForest& forest, const GbdtData& data,
                std::span<const std::size_t> labels) {
  double sum = 0.0;
  for (std::size_t i = 0; i < data.n_rows; ++i) {
    const auto p = predict_proba(forest, data.row(i));
    sum -= std::log(std::max(p.at(labels[i]), 1e-300));
  }
  return data.n_rows ? sum / static_cast<double>(data.n_rows) : 0.0;
}

std::vector<ImportanceEntry> feature_importance(const BoostedForest& forest,
                                                ImportanceKind kind) {
  std::vector<ImportanceEntry> out(forest.n_features());
  for (std::size_t f = 0; f < out.size(); ++f) {
    out[f].feature = f;
    out[f].name = forest.feature_names[f];
  }
  for (const auto& tree : forest.trees) {
    for (const auto& node : tree.nodes) {
      if (node.leaf) continue;
      out[node.feature].score += kind == ImportanceKind::kSplitCount ? 1.0 : node.gain;
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
    return a.score > b.score;
  });
  return out;
}

std::string forest_to_json(const BoostedForest& forest) {
  json features = json::array();
  for (std::size_t f = 0; f < forest.n_features(); ++f) {
    features.push_back({{"name", forest.feature_names[f]},
                        {"kind", kind_name(forest.feature_kinds[f])}});
  }
  json trees = json::array();
  for (const auto& tree : forest.trees) {
    json t = {{"leaf", json::array()},   {"feature", json::array()},
              {"threshold", json::array()}, {"category", json::array()},
              {"default_left", json::array()}, {"left", json::array()},
              {"right", json::array()},  {"gain", json::array()},
              {"cover", json::array()},  {"value", json::array()}};
    for (const auto& n : tree.nodes) {
      t["leaf"].push_back(n.leaf);
      t["feature"].push_back(n.feature);
      t["threshold"].push_back(n.threshold);
      t["category"].push_back(n.category);
      t["default_left"].push_back(n.default_left);
      t["left"].push_back(n.left);
      t["right"].push_back(n.right);
      t["gain"].push_back(n.gain);
      t["cover"].push_back(n.cover);
      t["value"].push_back(n.value);
    }
    trees.push_back(std::move(t));
  }
  const json doc = {{"format", "rso-taxa.gbdt"},
                    {"version", 1},
                    {"schema_hash", forest.schema_hash},
                    {"n_classes", forest.n_classes},
                    {"learning_rate", forest.learning_rate},
                    {"base_score", forest.base_score},
                    {"features", std::move(features)},
                    {"train_logloss", forest.train_logloss},
                    {"trees", std::move(trees)}};
  return doc.dump() + "\n";
}

BoostedForest forest_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("forest bundle: invalid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != "rso-taxa.gbdt") {
      throw SchemaError("format: not a forest bundle");
    }
    if (doc.at("version").get<int>() != 1) throw SchemaError("version: unsupported");
    BoostedForest f;
    f.schema_hash = doc.at("schema_hash").get<std::string>();
    f.n_classes = doc.at("n_classes").get<std::size_t>();
    f.learning_rate = doc.at("learning_rate").get<double>();
    f.base_score = doc.at("base_score").get<std::vector<double>>();
    f.train_logloss = doc.at("train_logloss").get<std::vector<double>>();
    if (f.base_score.size() != f.n_classes) {
      throw SchemaError("base_score: expected one entry per class");
    }
    for (const auto& feat : doc.at("features")) {
      f.feature_names.push_back(feat.at("name").get<std::string>());
      const auto kind = feat.at("kind").get<std::string>();
      if (kind != "real" && kind != "categorical") {
        throw SchemaError("features: unknown kind '" + kind + "'");
      }
      f.feature_kinds.push_back(kind == "real" ? FeatureKind::kReal : FeatureKind::kCategorical);
    }
    const auto& trees = doc.at("trees");
    if (f.n_classes == 0 || trees.size() % f.n_classes != 0) {
      throw SchemaError("trees: count is not a multiple of n_classes");
    }
    for (std::size_t ti = 0; ti < trees.size(); ++ti) {
      const auto& t = trees[ti];
      const std::size_t count = t.at("leaf").size();
      Tree tree;
      tree.nodes.resize(count);
      const std::string where = "trees[" + std::to_string(ti) + "]";
      for (const char* key : {"feature", "threshold", "category", "default_left", "left",
                              "right", "gain", "cover", "value"}) {
        if (t.at(key).size() != count) throw SchemaError(where + "." + key + ": length mismatch");
      }
      if (count == 0) throw SchemaError(where + ": empty tree");
      for (std::size_t i = 0; i < count; ++i) {
        auto& n = tree.nodes[i];
        n.leaf = t["leaf"][i].get<bool>();
        n.feature = t["feature"][i].get<std::size_t>();
        n.threshold = t["threshold"][i].get<double>();
        n.category = t["category"][i].get<std::int64_t>();
        n.default_left = t["default_left"][i].get<bool>();
        n.left = t["left"][i].get<std::size_t>();
        n.right = t["right"][i].get<std::size_t>();
        n.gain = t["gain"][i].get<double>();
        n.cover = t["cover"][i].get<double>();
        n.value = t["value"][i].get<double>();
        if (!n.leaf && (n.left <= i || n.right <= i || n.left >= count || n.right >= count ||
                        n.feature >= f.feature_names.size())) {
          throw SchemaError(where + ".nodes[" + std::to_string(i) + "]: bad child or feature");
        }
      }
      f.trees.push_back(std::move(tree));
    }
    return f;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("forest bundle: ") + e.what());
  }
}

void save_forest(const std::filesystem::path& path, const BoostedForest& forest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << forest_to_json(forest);
}

BoostedForest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("forest bundle not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return forest_from_json(ss.str());
}

}  // namespace rso
