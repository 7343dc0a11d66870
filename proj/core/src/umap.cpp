#include "rso/umap.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "rso/error.hpp"
#include "rso/random.hpp"

namespace rso {
namespace {

constexpr double kSigmaFloor = 1e-12;
constexpr double kClip = 4.0;

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

void check_finite(const Matrix& m, const char* what) {
  for (const double v : m.values()) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite value");
  }
}

double clip(double v) { return std::clamp(v, -kClip, kClip); }

// Top-two principal components scaled to a max absolute coordinate of 10.
Matrix pca_init(const Matrix& points, Rng& rng) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  Matrix out(n, 2);
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = points(i, j);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const auto& vecs = solver.eigenvectors();  // ascending eigenvalues
  for (std::size_t c = 0; c < 2; ++c) {
    if (c >= d) break;
    Eigen::VectorXd v = vecs.col(static_cast<Eigen::Index>(d - 1 - c));
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    const Eigen::VectorXd proj = x * v;
    for (std::size_t i = 0; i < n; ++i) out(i, c) = proj(static_cast<Eigen::Index>(i));
  }
  double max_abs = 0.0;
  for (const double v : out.values()) max_abs = std::max(max_abs, std::abs(v));
  const double scale = max_abs > 0.0 ? 10.0 / max_abs : 1.0;
  for (double& v : out.values()) v = v * scale + rng.normal(0.0, 1e-4);
  return out;
}

}  // namespace

void UmapConfig::validate() const {
  if (n_neighbors < 2) throw ValidationError("umap: n_neighbors must be >= 2");
  if (a < 0.0 || b < 0.0 || (a > 0.0) != (b > 0.0)) {
    throw ValidationError("umap: curve parameters a and b must both be positive");
  }
  if (!(spread > 0.0) || !(min_dist >= 0.0) || min_dist > spread) {
    throw ValidationError("umap: need 0 <= min_dist <= spread and spread > 0");
  }
  if (epochs == 0) throw ValidationError("umap: epochs must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("umap: learning rate must be positive");
}

CurveFit fit_curve_params(double min_dist, double spread) {
  constexpr std::size_t kSamples = 300;
  std::vector<double> xs(kSamples), ys(kSamples);
  for (std::size_t i = 0; i < kSamples; ++i) {
    xs[i] = 3.0 * spread * static_cast<double>(i) / static_cast<double>(kSamples - 1);
    ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
  }
  auto sse = [&](double a, double b) {
    double s = 0.0;
    for (std::size_t i = 0; i < kSamples; ++i) {
      const double r = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b)) - ys[i];
      s += r * r;
    }
    return s;
  };
  // Levenberg-Marquardt from a = b = 1.
  double a = 1.0, b = 1.0, lambda = 1e-3;
  double cost = sse(a, b);
  for (int iter = 0; iter < 500; ++iter) {
    double jtj00 = 0, jtj01 = 0, jtj11 = 0, g0 = 0, g1 = 0;
    for (std::size_t i = 0; i < kSamples; ++i) {
      const double x = xs[i];
      const double p = x > 0.0 ? std::pow(x, 2.0 * b) : 0.0;
      const double f = 1.0 / (1.0 + a * p);
      const double r = f - ys[i];
      const double da = -p * f * f;
      const double db = x > 0.0 ? -a * p * 2.0 * std::log(x) * f * f : 0.0;
      jtj00 += da * da;
      jtj01 += da * db;
      jtj11 += db * db;
      g0 += da * r;
      g1 += db * r;
    }
    bool improved = false;
    while (lambda < 1e12) {
      const double m00 = jtj00 * (1.0 + lambda), m11 = jtj11 * (1.0 + lambda);
      const double det = m00 * m11 - jtj01 * jtj01;
      if (det == 0.0) {
        lambda *= 10.0;
        continue;
      }
      const double step_a = -(m11 * g0 - jtj01 * g1) / det;
      const double step_b = -(m00 * g1 - jtj01 * g0) / det;
      const double na = a + step_a, nb = b + step_b;
      if (na > 0.0 && nb > 0.0) {
        const double c = sse(na, nb);
        if (c < cost) {
          const double rel = (cost - c) / std::max(cost, 1e-300);
          a = na;
          b = nb;
          cost = c;
          lambda = std::max(lambda / 10.0, 1e-12);
          improved = rel > 1e-15;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  double mean = 0.0;
  for (const double y : ys) mean += y;
  mean /= static_cast<double>(kSamples);
  double tot = 0.0;
  for (const double y : ys) tot += (y - mean) * (y - mean);
  return {a, b, 1.0 - cost / tot};
}

KnnGraph exact_knn(const Matrix& points, std::size_t k) {
  const std::size_t n = points.rows();
  if (k == 0 || k >= n) {
    throw ArgumentError("knn: need 1 <= k < n (k=" + std::to_string(k) +
                        ", n=" + std::to_string(n) + ")");
  }
  KnnGraph g;
  g.n = n;
  g.k = k;
  g.indices.resize(n * k);
  g.distances.resize(n * k);
  std::vector<std::pair<double, std::size_t>> row;
  row.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.emplace_back(euclidean(points.row(i), points.row(j)), j);
    }
    std::partial_sort(row.begin(), row.begin() + static_cast<long>(k), row.end());
    for (std::size_t t = 0; t < k; ++t) {
      g.distances[i * k + t] = row[t].first;
      g.indices[i * k + t] = row[t].second;
    }
  }
  return g;
}

SmoothKnn smooth_knn(const KnnGraph& knn, double target) {
  SmoothKnn s;
  s.rho.resize(knn.n);
  s.sigma.resize(knn.n);
  for (std::size_t i = 0; i < knn.n; ++i) {
    const double* d = &knn.distances[i * knn.k];
    const double rho = d[0];
    double lo = 0.0, hi = std::numeric_limits<double>::infinity(), mid = 1.0;
    for (int iter = 0; iter < 200; ++iter) {
      double psum = 0.0;
      for (std::size_t j = 0; j < knn.k; ++j) {
        const double gap = d[j] - rho;
        psum += gap > 0.0 ? std::exp(-gap / mid) : 1.0;
      }
      if (std::abs(psum - target) < 1e-5) break;
      if (psum > target) {
        hi = mid;
        mid = 0.5 * (lo + hi);
      } else {
        lo = mid;
        mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
      }
    }
    s.rho[i] = rho;
    s.sigma[i] = std::max(mid, kSigmaFloor);
  }
  return s;
}

std::vector<GraphEdge> directed_memberships(const KnnGraph& knn, const SmoothKnn& s) {
  std::vector<GraphEdge> edges;
  edges.reserve(knn.n * knn.k);
  for (std::size_t i = 0; i < knn.n; ++i) {
    for (std::size_t t = 0; t < knn.k; ++t) {
      const double gap = knn.distances[i * knn.k + t] - s.rho[i];
      const double w = gap > 0.0 ? std::exp(-gap / s.sigma[i]) : 1.0;
      if (w > 0.0) edges.push_back({i, knn.indices[i * knn.k + t], w});
    }
  }
  return edges;
}

std::vector<GraphEdge> fuzzy_graph(const Matrix& points, std::size_t n_neighbors) {
  if (n_neighbors < 2) throw ArgumentError("fuzzy_graph: n_neighbors must be >= 2");
  const auto knn = exact_knn(points, n_neighbors - 1);
  const auto smooth = smooth_knn(knn, std::log2(static_cast<double>(n_neighbors)));
  auto directed = directed_memberships(knn, smooth);
  auto key_less = [](const GraphEdge& x, const GraphEdge& y) {
    return std::tie(x.from, x.to) < std::tie(y.from, y.to);
  };
  std::sort(directed.begin(), directed.end(), key_less);
  auto weight_of = [&](std::size_t from, std::size_t to) {
    const GraphEdge probe{from, to, 0.0};
    const auto it = std::lower_bound(directed.begin(), directed.end(), probe, key_less);
    return (it != directed.end() && it->from == from && it->to == to) ? it->weight : 0.0;
  };
  std::vector<GraphEdge> out;
  out.reserve(directed.size() * 2);
  for (const auto& e : directed) {
    const double back = weight_of(e.to, e.from);
    const double w = e.weight + back - e.weight * back;
    out.push_back({e.from, e.to, w});
    if (back == 0.0) out.push_back({e.to, e.from, back + e.weight - back * e.weight});
  }
  std::sort(out.begin(), out.end(), key_less);
  return out;
}

UmapResult umap_fit(const Matrix& points, const UmapConfig& config) {
  config.validate();
  const std::size_t n = points.rows();
  if (n <= config.n_neighbors) {
    throw ArgumentError("umap: need more than n_neighbors=" +
                        std::to_string(config.n_neighbors) + " rows, got " +
                        std::to_string(n));
  }
  check_finite(points, "umap input");

  UmapResult result;
  if (config.a > 0.0) {
    result.curve = {config.a, config.b, std::numeric_limits<double>::quiet_NaN()};
  } else {
    result.curve = fit_curve_params(config.min_dist, config.spread);
  }
  const double a = result.curve.a;
  const double b = result.curve.b;

  auto graph = fuzzy_graph(points, config.n_neighbors);
  double max_w = 0.0;
  for (const auto& e : graph) max_w = std::max(max_w, e.weight);
  const double cutoff = max_w / static_cast<double>(config.epochs);
  std::erase_if(graph, [&](const GraphEdge& e) { return e.weight < cutoff; });

  Rng rng(derive_seed(config.seed, "umap"));
  Matrix y = pca_init(points, rng);

  const std::size_t m = graph.size();
  std::vector<double> per_sample(m), next_sample(m), per_negative(m), next_negative(m);
  const double neg_rate = static_cast<double>(config.negative_sample_rate);
  for (std::size_t e = 0; e < m; ++e) {
    per_sample[e] = max_w / graph[e].weight;
    next_sample[e] = per_sample[e];
    per_negative[e] = neg_rate > 0.0 ? per_sample[e] / neg_rate : 0.0;
    next_negative[e] = per_negative[e];
  }

  const double epochs = static_cast<double>(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double t = static_cast<double>(epoch);
    const double alpha = config.learning_rate * (1.0 - t / epochs);
    for (std::size_t e = 0; e < m; ++e) {
      if (next_sample[e] > t) continue;
      auto cur = y.row(graph[e].from);
      auto other = y.row(graph[e].to);
      double dist_sq = 0.0;
      for (int c = 0; c < 2; ++c) dist_sq += (cur[c] - other[c]) * (cur[c] - other[c]);
      double coeff = 0.0;
      if (dist_sq > 0.0) {
        coeff = -2.0 * a * b * std::pow(dist_sq, b - 1.0);
        coeff /= a * std::pow(dist_sq, b) + 1.0;
      }
      for (int c = 0; c < 2; ++c) {
        const double g = clip(coeff * (cur[c] - other[c]));
        cur[c] += g * alpha;
        other[c] -= g * alpha;
      }
      next_sample[e] += per_sample[e];

      if (per_negative[e] <= 0.0) continue;
      const auto n_neg =
          static_cast<std::size_t>((t - next_negative[e]) / per_negative[e]);
      for (std::size_t p = 0; p < n_neg; ++p) {
        const std::size_t k = rng.uniform_index(n);
        if (k == graph[e].from) continue;
        auto neg = y.row(k);
        double d2 = 0.0;
        for (int c = 0; c < 2; ++c) d2 += (cur[c] - neg[c]) * (cur[c] - neg[c]);
        double rc = 0.0;
        if (d2 > 0.0) {
          rc = 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0));
        }
        for (int c = 0; c < 2; ++c) {
          const double g = rc > 0.0 ? clip(rc * (cur[c] - neg[c])) : kClip;
          cur[c] += g * alpha;
        }
      }
      next_negative[e] += static_cast<double>(n_neg) * per_negative[e];
    }
  }
  check_finite(y, "umap layout");
  result.embedding = std::move(y);
  return result;
}

double trustworthiness(const Matrix& high, const Matrix& low, std::size_t k) {
  const std::size_t n = high.rows();
  if (low.rows() != n) {
    throw ArgumentError("trustworthiness: row counts differ (" + std::to_string(n) +
                        " vs " + std::to_string(low.rows()) + ")");
  }
  if (k == 0 || k >= n) {
    throw ArgumentError("trustworthiness: need 1 <= k < n");
  }
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  if (2.0 * nd - 3.0 * kd - 1.0 <= 0.0) {
    throw ArgumentError("trustworthiness: k too large for n (2n - 3k - 1 <= 0)");
  }
  const auto high_nn = exact_knn(high, k);
  const auto low_nn = exact_knn(low, k);
  double penalty = 0.0;
  std::vector<double> dist(n);
  std::vector<std::pair<double, std::size_t>> needed;
  std::vector<std::size_t> hist;
  for (std::size_t i = 0; i < n; ++i) {
    const auto hb = high_nn.indices.begin() + static_cast<long>(i * k);
    needed.clear();
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t j = low_nn.indices[i * k + t];
      if (std::find(hb, hb + static_cast<long>(k), j) == hb + static_cast<long>(k)) {
        needed.emplace_back(euclidean(high.row(i), high.row(j)), j);
      }
    }
    if (needed.empty()) continue;
    std::sort(needed.begin(), needed.end());
    // rank(j) = 1 + #{m != i : (d_im, m) < (d_ij, j)}.
    hist.assign(needed.size() + 1, 0);
    for (std::size_t m = 0; m < n; ++m) {
      if (m == i) continue;
      const std::pair<double, std::size_t> key{euclidean(high.row(i), high.row(m)), m};
      const auto pos = std::upper_bound(needed.begin(), needed.end(), key) - needed.begin();
      ++hist[static_cast<std::size_t>(pos)];
    }
    std::size_t below = 0;
    for (std::size_t q = 0; q < needed.size(); ++q) {
      below += hist[q];
      const double rank = static_cast<double>(below + 1);
      penalty += rank - kd;
    }
  }
  return 1.0 - 2.0 / (nd * kd * (2.0 * nd - 3.0 * kd - 1.0)) * penalty;
}

}  // namespace rso
