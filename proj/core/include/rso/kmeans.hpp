#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rso/matrix.hpp"

namespace rso {

struct KmeansOptions {
  std::size_t n_init = 10;
  std::size_t max_iterations = 300;
  // Lloyd stops once no centroid moves farther than this.
  double tolerance = 1e-6;
};

struct ClusterModel {
  Matrix centroids;  // k x d, rows in lexicographic order
  double sse = 0.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> labels;  // one per input row
  // SSE after every assignment step of the winning restart.
  std::vector<double> sse_trace;

  std::size_t k() const { return centroids.rows(); }
};

// Index of the nearest centroid; ties go to the lowest index. Throws
// ArgumentError on a dimension mismatch.
std::size_t assign(const ClusterModel& model, std::span<const double> point);

// Sum of squared distances of every row to its nearest centroid.
double total_sse(const Matrix& points, const Matrix& centroids);

// k-means++ seeding, Lloyd iterations and best-of-n_init restarts. The result
// does not depend on the order of the input rows. Throws ArgumentError when
// k == 0 or k > rows.
ClusterModel kmeans_fit(const Matrix& points, std::size_t k, std::uint64_t seed,
                        const KmeansOptions& options = {});

// Lloyd iterations from the given starting centroids.
ClusterModel kmeans_refine(const Matrix& points, const Matrix& initial,
                           const KmeansOptions& options = {});

struct SsePoint {
  std::size_t k = 0;
  double sse = 0.0;
};

struct SseCurve {
  std::vector<SsePoint> points;
  std::size_t default_k = 8;
};

// One fit per k in [k_min, k_max]. Each k also tries the previous k's
// centroids plus the worst-served point, so the curve never increases.
SseCurve sse_curve(const Matrix& points, std::size_t k_min, std::size_t k_max,
                   std::uint64_t seed, const KmeansOptions& options = {});

}  // namespace rso
