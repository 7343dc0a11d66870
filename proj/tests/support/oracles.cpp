#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <unistd.h>

#include "rso/catalog.hpp"
#include "rso/features.hpp"
#include "rso/random.hpp"
#include "rso/synthetic.hpp"

namespace rso::testing {
namespace {

double dist(const Matrix& m, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double d = m(a, j) - m(b, j);
    s += d * d;
  }
  return std::sqrt(s);
}

// Neighbours of `i` sorted by (distance, index), self excluded.
std::vector<std::size_t> ranked(const Matrix& m, std::size_t i) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < m.rows(); ++j) {
    if (j != i) idx.push_back(j);
  }
  std::vector<double> d(m.rows());
  for (const auto j : idx) d[j] = dist(m, i, j);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return d[a] != d[b] ? d[a] < d[b] : a < b;
  });
  return idx;
}

bool left_of(const TreeNode& n, double x) {
  if (std::isnan(x)) return n.default_left;
  if (n.category >= 0) return x == static_cast<double>(n.category);
  return x <= n.threshold;
}

double expect(const Tree& t, std::size_t node, std::span<const double> row, std::uint64_t mask) {
  const auto& n = t.nodes[node];
  if (n.leaf) return n.value;
  if ((mask >> n.feature) & 1U) {
    return expect(t, left_of(n, row[n.feature]) ? n.left : n.right, row, mask);
  }
  const auto& l = t.nodes[n.left];
  const auto& r = t.nodes[n.right];
  return (l.cover * expect(t, n.left, row, mask) + r.cover * expect(t, n.right, row, mask)) /
         (l.cover + r.cover);
}

}  // namespace

double central_difference(const std::function<double()>& f, double& x, double h) {
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

Blobs make_blobs(const std::vector<std::vector<double>>& centres, std::size_t per_blob,
                 double sigma, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d = centres.front().size();
  Blobs b{Matrix(centres.size() * per_blob, d), {}};
  std::size_t r = 0;
  for (std::size_t c = 0; c < centres.size(); ++c) {
    for (std::size_t i = 0; i < per_blob; ++i, ++r) {
      for (std::size_t j = 0; j < d; ++j) b.points(r, j) = centres[c][j] + sigma * rng.normal();
      b.labels.push_back(c);
    }
  }
  return b;
}

double silhouette(const Matrix& points, std::span<const std::size_t> labels) {
  const std::size_t n = points.rows();
  const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::size_t> size(k, 0);
  for (const auto l : labels) ++size[l];
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (size[labels[i]] <= 1) continue;
    std::vector<double> sum(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum[labels[j]] += dist(points, i, j);
    }
    const double a = sum[labels[i]] / static_cast<double>(size[labels[i]] - 1);
    double b = INFINITY;
    for (std::size_t c = 0; c < k; ++c) {
      if (c != labels[i] && size[c] > 0) b = std::min(b, sum[c] / static_cast<double>(size[c]));
    }
    total += (b - a) / std::max(a, b);
  }
  return total / static_cast<double>(n);
}

double purity(std::span<const std::size_t> clusters, std::span<const std::size_t> truth) {
  std::map<std::size_t, std::map<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++counts[clusters[i]][truth[i]];
  std::size_t hit = 0;
  for (const auto& [c, by_truth] : counts) {
    std::size_t best = 0;
    for (const auto& [t, n] : by_truth) best = std::max(best, n);
    hit += best;
  }
  return static_cast<double>(hit) / static_cast<double>(clusters.size());
}

double naive_trustworthiness(const Matrix& high, const Matrix& low, std::size_t k) {
  const std::size_t n = high.rows();
  double penalty = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto hr = ranked(high, i);
    const auto lr = ranked(low, i);
    std::vector<std::size_t> rank(n, 0);
    for (std::size_t p = 0; p < hr.size(); ++p) rank[hr[p]] = p + 1;
    for (std::size_t p = 0; p < k; ++p) {
      const std::size_t r = rank[lr[p]];
      if (r > k) penalty += static_cast<double>(r - k);
    }
  }
  const double nn = static_cast<double>(n), kk = static_cast<double>(k);
  return 1.0 - 2.0 / (nn * kk * (2.0 * nn - 3.0 * kk - 1.0)) * penalty;
}

double coalition_value(const BoostedForest& forest, std::span<const double> row,
                       std::size_t class_id, std::uint64_t mask) {
  double v = forest.base_score[class_id];
  for (std::size_t t = class_id; t < forest.trees.size(); t += forest.n_classes) {
    v += expect(forest.trees[t], 0, row, mask);
  }
  return v;
}

std::vector<double> shapley_by_enumeration(const BoostedForest& forest,
                                           std::span<const double> row, std::size_t class_id) {
  const std::size_t m = forest.n_features();
  const std::uint64_t subsets = std::uint64_t{1} << m;
  std::vector<double> value(subsets);
  for (std::uint64_t s = 0; s < subsets; ++s) value[s] = coalition_value(forest, row, class_id, s);
  // |S|! (m - |S| - 1)! / m!
  std::vector<double> fact(m + 1, 1.0);
  for (std::size_t i = 1; i <= m; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  std::vector<double> phi(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    for (std::uint64_t s = 0; s < subsets; ++s) {
      if (s & bit) continue;
      const auto size = static_cast<std::size_t>(__builtin_popcountll(s));
      const double w = fact[size] * fact[m - size - 1] / fact[m];
      phi[i] += w * (value[s | bit] - value[s]);
    }
  }
  return phi;
}

Dataset fixture_dataset(std::size_t leo_objects, std::uint64_t seed) {
  SyntheticOptions opt;
  opt.leo_objects = leo_objects;
  opt.seed = seed;
  const auto cat = make_synthetic_catalog(opt);
  Dataset d;
  d.objects = filter_leo(merge_catalogs(cat.satcat, cat.discos));
  d.schema = infer_schema(d.objects);
  d.matrix = build_feature_matrix(d.objects, d.schema);
  d.schema = d.matrix.schema;
  return d;
}

std::filesystem::path fresh_dir(std::string_view tag) {
  static std::size_t counter = 0;
  const auto dir = std::filesystem::temp_directory_path() /
                   ("rso-test-" + std::string(tag) + "-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path data_file(std::string_view name) {
  return std::filesystem::path(RSO_TEST_DATA_DIR) / name;
}

}  // namespace rso::testing
