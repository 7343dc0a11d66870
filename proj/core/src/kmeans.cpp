#include "rso/kmeans.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rso/error.hpp"
#include "rso/random.hpp"

namespace rso {
namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

std::pair<std::size_t, double> nearest(const Matrix& centroids,
                                       std::span<const double> p) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = sq_dist(p, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return {best, best_d};
}

bool lex_less(std::span<const double> a, std::span<const double> b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Rows sorted lexicographically, plus the original index of each sorted row.
struct Canonical {
  Matrix points;
  std::vector<std::size_t> origin;
};

Canonical canonicalize(const Matrix& points) {
  Canonical c;
  c.origin.resize(points.rows());
  std::iota(c.origin.begin(), c.origin.end(), 0);
  std::stable_sort(c.origin.begin(), c.origin.end(), [&](std::size_t a, std::size_t b) {
    return lex_less(points.row(a), points.row(b));
  });
  c.points = Matrix(points.rows(), points.cols());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    std::copy_n(points.row(c.origin[i]).begin(), points.cols(), c.points.row(i).begin());
  }
  return c;
}

struct Labeling {
  std::vector<std::size_t> labels;
  std::vector<double> dist;
  double sse = 0.0;
};

Labeling label_points(const Matrix& points, const Matrix& centroids) {
  Labeling l;
  l.labels.resize(points.rows());
  l.dist.resize(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto [c, d] = nearest(centroids, points.row(i));
    l.labels[i] = c;
    l.dist[i] = d;
    l.sse += d;
  }
  return l;
}

Matrix plus_plus_seed(const Matrix& points, std::size_t k, Rng& rng) {
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  std::size_t first = rng.uniform_index(n);
  std::copy_n(points.row(first).begin(), points.cols(), centroids.row(0).begin());
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points.row(i), centroids.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // Rounding can leave the target past the last positive weight.
      if (d2[pick] == 0.0) {
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      pick = rng.uniform_index(n);
    }
    std::copy_n(points.row(pick).begin(), points.cols(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(points.row(i), centroids.row(c)));
    }
  }
  return centroids;
}

// Lloyd iterations on canonical rows; returns the lowest-SSE state visited.
ClusterModel lloyd(const Matrix& points, Matrix centroids, const KmeansOptions& opt) {
  const std::size_t k = centroids.rows();
  const std::size_t d = points.cols();
  ClusterModel best;
  best.sse = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  bool converged = false;
  std::size_t iter = 0;
  while (true) {
    auto lab = label_points(points, centroids);
    assert(trace.empty() || lab.sse <= trace.back() * (1.0 + 1e-12) + 1e-300);
    trace.push_back(lab.sse);
    if (lab.sse < best.sse) {
      best.sse = lab.sse;
      best.centroids = centroids;
      best.labels = lab.labels;
    }
    if (converged || iter >= opt.max_iterations) break;

    Matrix next(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const auto row = points.row(i);
      auto c = next.row(lab.labels[i]);
      for (std::size_t j = 0; j < d; ++j) c[j] += row[j];
      ++counts[lab.labels[i]];
    }
    std::vector<std::uint8_t> used(points.rows(), 0);
    for (std::size_t c = 0; c < k; ++c) {
      auto row = next.row(c);
      if (counts[c] > 0) {
        for (double& v : row) v /= static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it onto the worst-served point not yet taken.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.rows(); ++i) {
        if (!used[i] && lab.dist[i] > far_d) {
          far_d = lab.dist[i];
          far = i;
        }
      }
      used[far] = 1;
      std::copy_n(points.row(far).begin(), d, row.begin());
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      shift = std::max(shift, std::sqrt(sq_dist(centroids.row(c), next.row(c))));
    }
    centroids = std::move(next);
    ++iter;
    converged = shift < opt.tolerance;
  }
  best.iterations = iter;
  best.sse_trace = std::move(trace);
  return best;
}

// Sorts centroids, maps labels back to input order and fills sizes.
ClusterModel finalize(ClusterModel m, const Canonical& canon, std::uint64_t seed) {
  const std::size_t k = m.centroids.rows();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lex_less(m.centroids.row(a), m.centroids.row(b));
  });
  Matrix sorted(k, m.centroids.cols());
  for (std::size_t c = 0; c < k; ++c) {
    std::copy_n(m.centroids.row(order[c]).begin(), sorted.cols(), sorted.row(c).begin());
  }
  m.centroids = std::move(sorted);
  m.seed = seed;
  m.labels.assign(canon.points.rows(), 0);
  m.sizes.assign(k, 0);
  for (std::size_t i = 0; i < canon.points.rows(); ++i) {
    const auto [label, dist] = nearest(m.centroids, canon.points.row(i));
    (void)dist;
    m.labels[canon.origin[i]] = label;
    ++m.sizes[label];
  }
  return m;
}

void check_points(const Matrix& points, std::size_t k) {
  if (k == 0) throw ArgumentError("k-means: k must be at least 1");
  if (points.rows() < k) {
    throw ArgumentError("k-means: " + std::to_string(points.rows()) +
                        " points cannot form " + std::to_string(k) + " clusters");
  }
  for (const double v : points.values()) {
    if (!std::isfinite(v)) throw NumericError("k-means: non-finite input coordinate");
  }
}

ClusterModel best_of_restarts(const Canonical& canon, std::size_t k, std::uint64_t seed,
                              const KmeansOptions& opt) {
  ClusterModel best;
  best.sse = std::numeric_limits<double>::infinity();
  const std::size_t restarts = std::max<std::size_t>(1, opt.n_init);
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng(derive_seed(seed, "kmeans++", r));
    auto m = lloyd(canon.points, plus_plus_seed(canon.points, k, rng), opt);
    if (m.sse < best.sse) best = std::move(m);
  }
  return best;
}

}  // namespace

std::size_t assign(const ClusterModel& model, std::span<const double> point) {
  if (point.size() != model.centroids.cols()) {
    throw ArgumentError("assign: point has " + std::to_string(point.size()) +
                        " coordinates, centroids have " +
                        std::to_string(model.centroids.cols()));
  }
  return nearest(model.centroids, point).first;
}

double total_sse(const Matrix& points, const Matrix& centroids) {
  return label_points(points, centroids).sse;
}

ClusterModel kmeans_fit(const Matrix& points, std::size_t k, std::uint64_t seed,
                        const KmeansOptions& options) {
  check_points(points, k);
  const auto canon = canonicalize(points);
  return finalize(best_of_restarts(canon, k, seed, options), canon, seed);
}

ClusterModel kmeans_refine(const Matrix& points, const Matrix& initial,
                           const KmeansOptions& options) {
  check_points(points, initial.rows());
  if (initial.cols() != points.cols()) {
    throw ArgumentError("k-means: initial centroids have the wrong dimension");
  }
  const auto canon = canonicalize(points);
  return finalize(lloyd(canon.points, initial, options), canon, 0);
}

SseCurve sse_curve(const Matrix& points, std::size_t k_min, std::size_t k_max,
                   std::uint64_t seed, const KmeansOptions& options) {
  if (k_min == 0 || k_min > k_max) {
    throw ArgumentError("sse_curve: need 1 <= k_min <= k_max");
  }
  check_points(points, k_max);
  const auto canon = canonicalize(points);
  SseCurve curve;
  ClusterModel prev;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    auto best = best_of_restarts(canon, k, derive_seed(seed, "sse-curve", k), options);
    if (k > k_min) {
      // Previous solution plus its worst-served point as a new centre.
      const auto lab = label_points(canon.points, prev.centroids);
      const auto far = static_cast<std::size_t>(
          std::max_element(lab.dist.begin(), lab.dist.end()) - lab.dist.begin());
      Matrix start(k, canon.points.cols());
      for (std::size_t c = 0; c + 1 < k; ++c) {
        std::copy_n(prev.centroids.row(c).begin(), start.cols(), start.row(c).begin());
      }
      std::copy_n(canon.points.row(far).begin(), start.cols(), start.row(k - 1).begin());
      auto warm = lloyd(canon.points, std::move(start), options);
      if (warm.sse <= best.sse) best = std::move(warm);
    }
    curve.points.push_back({k, best.sse});
    prev = std::move(best);
  }
  return curve;
}

}  // namespace rso
