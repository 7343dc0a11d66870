#include "rso/nn.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rso/error.hpp"

namespace rso::nn {
namespace {

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw ArgumentError(std::string(what) + ": expected length " +
                        std::to_string(want) + ", got " + std::to_string(got));
  }
}

}  // namespace

AffineLayer::AffineLayer(std::size_t in_dim, std::size_t out_dim)
    : weight(out_dim, in_dim),
      bias(out_dim, 0.0),
      weight_grad(out_dim, in_dim),
      bias_grad(out_dim, 0.0) {}

void AffineLayer::init_glorot(Rng& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(in_dim() + out_dim()));
  for (double& w : weight.values()) w = rng.uniform(-limit, limit);
  std::fill(bias.begin(), bias.end(), 0.0);
}

void AffineLayer::forward(std::span<const double> x, std::span<double> y) const {
  check_size(x.size(), in_dim(), "affine_forward input");
  check_size(y.size(), out_dim(), "affine_forward output");
  for (std::size_t o = 0; o < out_dim(); ++o) {
    const auto w = weight.row(o);
    double acc = bias[o];
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
    y[o] = acc;
  }
}

std::vector<double> AffineLayer::forward(std::span<const double> x) const {
  std::vector<double> y(out_dim());
  forward(x, y);
  return y;
}

void AffineLayer::backward(std::span<const double> x, std::span<const double> dy,
                           std::span<double> dx) {
  check_size(x.size(), in_dim(), "affine_backward input");
  check_size(dy.size(), out_dim(), "affine_backward upstream gradient");
  if (!dx.empty()) {
    check_size(dx.size(), in_dim(), "affine_backward input gradient");
    std::fill(dx.begin(), dx.end(), 0.0);
  }
  for (std::size_t o = 0; o < out_dim(); ++o) {
    const double g = dy[o];
    if (g == 0.0) continue;
    bias_grad[o] += g;
    auto gw = weight_grad.row(o);
    const auto w = weight.row(o);
    for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += g * x[i];
    if (!dx.empty()) {
      for (std::size_t i = 0; i < w.size(); ++i) dx[i] += w[i] * g;
    }
  }
}

std::vector<double> AffineLayer::backward(std::span<const double> x,
                                          std::span<const double> dy) {
  std::vector<double> dx(in_dim());
  backward(x, dy, dx);
  return dx;
}

void AffineLayer::zero_grad() {
  weight_grad.fill(0.0);
  std::fill(bias_grad.begin(), bias_grad.end(), 0.0);
}

EmbeddingTable::EmbeddingTable(std::size_t vocabulary, std::size_t width)
    : table(vocabulary, width), grad(vocabulary, width) {}

void EmbeddingTable::init_normal(Rng& rng, double stddev) {
  for (double& v : table.values()) v = rng.normal(0.0, stddev);
}

std::span<const double> EmbeddingTable::lookup(std::size_t index) const {
  if (index >= rows()) {
    throw ArgumentError("embedding index " + std::to_string(index) +
                        " out of range for " + std::to_string(rows()) + " rows");
  }
  return table.row(index);
}

void EmbeddingTable::backward(std::size_t index, std::span<const double> dy) {
  if (index >= rows()) {
    throw ArgumentError("embedding index " + std::to_string(index) +
                        " out of range for " + std::to_string(rows()) + " rows");
  }
  check_size(dy.size(), width(), "embedding_backward gradient");
  auto g = grad.row(index);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += dy[i];
}

void EmbeddingTable::zero_grad() { grad.fill(0.0); }

LossResult masked_mse(std::span<const double> pred, std::span<const double> target,
                      std::span<const std::uint8_t> observed) {
  check_size(target.size(), pred.size(), "masked_mse target");
  check_size(observed.size(), pred.size(), "masked_mse mask");
  std::size_t count = 0;
  for (const auto m : observed) count += (m != 0);
  const double denom = static_cast<double>(std::max<std::size_t>(1, count));
  LossResult r;
  r.grad.assign(pred.size(), 0.0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!observed[i]) continue;
    const double d = pred[i] - target[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d / denom;
  }
  r.loss /= denom;
  return r;
}

LossResult softmax_cross_entropy(std::span<const double> logits,
                                 std::size_t true_index) {
  if (true_index >= logits.size()) {
    throw ArgumentError("cross-entropy target " + std::to_string(true_index) +
                        " out of range for " + std::to_string(logits.size()) +
                        " logits");
  }
  double max_logit = -INFINITY;
  for (const double z : logits) {
    if (!std::isfinite(z)) throw NumericError("cross-entropy: non-finite logit");
    max_logit = std::max(max_logit, z);
  }
  LossResult r;
  r.grad.resize(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    r.grad[i] = std::exp(logits[i] - max_logit);
    sum += r.grad[i];
  }
  for (double& g : r.grad) g /= sum;
  r.loss = -(logits[true_index] - max_logit - std::log(sum));
  r.grad[true_index] -= 1.0;
  return r;
}

AdamState::AdamState(const AdamConfig& cfg, std::span<const ParamBlock> params)
    : config(cfg) {
  for (const auto& p : params) {
    first_moment.emplace_back(p.value.size(), 0.0);
    second_moment.emplace_back(p.value.size(), 0.0);
  }
}

void adam_step(std::span<const ParamBlock> params, AdamState& state) {
  if (params.size() != state.first_moment.size()) {
    throw ArgumentError("adam_step: " + std::to_string(params.size()) +
                        " parameter blocks for state with " +
                        std::to_string(state.first_moment.size()));
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    check_size(params[b].grad.size(), params[b].value.size(), "adam_step gradient");
    check_size(state.first_moment[b].size(), params[b].value.size(),
               "adam_step moment");
    for (const double g : params[b].grad) {
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient in parameter block " +
                           std::to_string(b) + " at step " +
                           std::to_string(state.step + 1));
      }
    }
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.first_moment[b];
    auto& v = state.second_moment[b];
    auto value = params[b].value;
    auto grad = params[b].grad;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      value[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
      grad[i] = 0.0;
    }
  }
}

}  // namespace rso::nn
