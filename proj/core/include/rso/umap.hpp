#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rso/matrix.hpp"

namespace rso {

struct UmapConfig {
  std::size_t n_neighbors = 15;
  double min_dist = 0.1;
  double spread = 1.0;
  // Low-dimensional kernel 1 / (1 + a d^(2b)). Zero means "fit from min_dist".
  double a = 0.0;
  double b = 0.0;
  std::size_t epochs = 200;
  double learning_rate = 1.0;
  std::size_t negative_sample_rate = 5;
  std::uint64_t seed = 0;

  // Throws ValidationError on n_neighbors < 2, non-positive a/b (when set),
  // min_dist outside [0, spread], or zero epochs.
  void validate() const;
};

struct CurveFit {
  double a = 0.0;
  double b = 0.0;
  double r_squared = 0.0;
};

// Least-squares fit of 1 / (1 + a x^(2b)) to the target curve that is 1 below
// min_dist and exp(-(x - min_dist) / spread) above it, on x in [0, 3 spread].
CurveFit fit_curve_params(double min_dist, double spread = 1.0);

// Exact k nearest non-self neighbours by Euclidean distance, ties broken by
// lower index. Rows of `indices`/`distances` are sorted by distance.
struct KnnGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::size_t> indices;  // n x k
  std::vector<double> distances;     // n x k
};
KnnGraph exact_knn(const Matrix& points, std::size_t k);

// Per-point smooth-kNN calibration.
struct SmoothKnn {
  std::vector<double> rho;
  std::vector<double> sigma;
};
SmoothKnn smooth_knn(const KnnGraph& knn, double target);

struct GraphEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  double weight = 0.0;
};

// Directed memberships exp(-max(0, d - rho) / sigma).
std::vector<GraphEdge> directed_memberships(const KnnGraph& knn, const SmoothKnn& s);

// Symmetric fuzzy union w_ab + w_ba - w_ab w_ba. Both directions of every
// pair are listed, sorted by (from, to).
std::vector<GraphEdge> fuzzy_graph(const Matrix& points, std::size_t n_neighbors);

struct UmapResult {
  Matrix embedding;  // n x 2, row-aligned with the input
  CurveFit curve;
};

// Throws ArgumentError unless rows > n_neighbors, NumericError on non-finite
// input or layout.
UmapResult umap_fit(const Matrix& points, const UmapConfig& config);

// Trustworthiness of `low` as a projection of `high` for neighbourhood size
// k. Throws ArgumentError on misaligned rows, k == 0, k >= n, or when
// 2n - 3k - 1 <= 0 (the normaliser vanishes).
double trustworthiness(const Matrix& high, const Matrix& low, std::size_t k);

}  // namespace rso
