#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rso/matrix.hpp"
#include "rso/random.hpp"

namespace rso::nn {

// y = W x + b with gradient accumulators of the same shapes.
struct AffineLayer {
  Matrix weight;  // out x in
  std::vector<double> bias;
  Matrix weight_grad;
  std::vector<double> bias_grad;

  AffineLayer() = default;
  AffineLayer(std::size_t in_dim, std::size_t out_dim);

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  // Glorot-uniform weights, zero bias.
  void init_glorot(Rng& rng);

  void forward(std::span<const double> x, std::span<double> y) const;
  std::vector<double> forward(std::span<const double> x) const;

  // dx = W^T dy; dW += dy x^T; db += dy. `dx` may be empty to skip it.
  void backward(std::span<const double> x, std::span<const double> dy,
                std::span<double> dx);
  std::vector<double> backward(std::span<const double> x,
                               std::span<const double> dy);

  void zero_grad();
};

// One d_model row per vocabulary entry (row 0 = MISSING).
struct EmbeddingTable {
  Matrix table;
  Matrix grad;

  EmbeddingTable() = default;
  EmbeddingTable(std::size_t vocabulary, std::size_t width);

  std::size_t rows() const { return table.rows(); }
  std::size_t width() const { return table.cols(); }

  // Normal(0, stddev) rows.
  void init_normal(Rng& rng, double stddev = 0.05);

  std::span<const double> lookup(std::size_t index) const;
  // Adds dy to the gradient row of `index` only.
  void backward(std::size_t index, std::span<const double> dy);

  void zero_grad();
};

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;
};

// Sum over observed slots of (pred - target)^2 divided by max(1, #observed).
// mask[i] != 0 marks slot i as observed. Gradient is 0 on unobserved slots.
LossResult masked_mse(std::span<const double> pred, std::span<const double> target,
                      std::span<const std::uint8_t> observed);

// -log softmax(logits)[true_index] with max-subtraction; gradient is
// softmax - onehot. Throws NumericError on non-finite logits.
LossResult softmax_cross_entropy(std::span<const double> logits,
                                 std::size_t true_index);

// View of one parameter tensor and its gradient accumulator.
struct ParamBlock {
  std::span<double> value;
  std::span<double> grad;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  AdamState() = default;
  AdamState(const AdamConfig& cfg, std::span<const ParamBlock> params);
};

// Bias-corrected Adam update followed by zeroing every gradient. If any
// gradient is non-finite the step is aborted (parameters, moments and the
// step counter untouched) and NumericError names the offending block.
void adam_step(std::span<const ParamBlock> params, AdamState& state);

}  // namespace rso::nn
