#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rso/features.hpp"
#include "rso/matrix.hpp"
#include "rso/nn.hpp"

namespace rso {

inline constexpr std::size_t kModelWidth = 16;

// Layer widths of the fused-vector autoencoder, e.g. [16, 4, 16]. The first
// width is the fused embedding width and the middle one the bottleneck.
struct ArchitectureSpec {
  std::vector<std::size_t> widths;

  // Throws ValidationError unless palindromic, odd length >= 3, all widths
  // positive and widths[0] == 16.
  void validate() const;
  std::size_t model_width() const { return widths.front(); }
  std::size_t bottleneck() const { return widths[widths.size() / 2]; }
  std::string to_string() const;
  // Accepts "[16, 4, 16]", "16,4,16" or "16-4-16".
  static ArchitectureSpec parse(std::string_view text);

  bool operator==(const ArchitectureSpec&) const = default;
};

// The six layouts compared in the architecture study, in table order.
std::vector<ArchitectureSpec> reference_architectures();

struct LossWeights {
  double real = 1.0;
  double categorical = 1.0;
};

// Per-feature input maps -> sum fusion -> encoder -> bottleneck -> decoder ->
// per-feature output heads. Hidden layers use ReLU; the bottleneck, the
// fusion map and the heads are linear.
struct AutoencoderModel {
  ArchitectureSpec architecture;
  std::size_t n_real = 0;
  std::vector<std::size_t> vocabulary_sizes;

  nn::AffineLayer input_map;  // (values ++ missing bits) -> model width
  std::vector<nn::EmbeddingTable> embeddings;
  std::vector<nn::AffineLayer> encoder;
  std::vector<nn::AffineLayer> decoder;
  nn::AffineLayer real_head;
  std::vector<nn::AffineLayer> categorical_heads;
  nn::AdamState optimizer;

  AutoencoderModel() = default;
  AutoencoderModel(const ArchitectureSpec& spec, std::size_t n_real,
                   std::vector<std::size_t> vocabulary_sizes, std::uint64_t seed,
                   const nn::AdamConfig& adam = {});

  std::size_t latent_dim() const { return architecture.bottleneck(); }

  // Every parameter tensor in a fixed order (the optimizer's order).
  std::vector<nn::ParamBlock> parameters();
  void zero_grad();
  std::size_t parameter_count() const;
};

// One row of a FeatureMatrix as seen by the model.
struct FeatureRow {
  std::span<const double> real;
  std::span<const std::uint8_t> missing;
  std::span<const std::int32_t> codes;
  std::size_t id = 0;
};
FeatureRow feature_row(const FeatureMatrix& m, std::size_t r);

struct LatentPoint {
  std::vector<double> values;
  std::size_t row = 0;
};

struct Reconstruction {
  std::vector<double> real;
  std::vector<std::vector<double>> logits;
};

struct LossBreakdown {
  double total = 0.0;
  double real = 0.0;
  double categorical = 0.0;
};

// affine(values with missing entries zeroed ++ missing bits) + sum of the
// categorical embeddings. Throws ArgumentError on a row/model shape mismatch.
std::vector<double> fuse_features(const AutoencoderModel& model,
                                  const FeatureRow& row);
// Throws NumericError naming the layer if an activation is non-finite.
LatentPoint encode(const AutoencoderModel& model, const FeatureRow& row);
Reconstruction decode(const AutoencoderModel& model,
                      std::span<const double> latent);

// w_real * masked_mse(real head, inputs, observed) +
// w_cat * mean_f cross_entropy(logits_f, code_f).
LossBreakdown composite_loss(const AutoencoderModel& model, const FeatureRow& row,
                             const LossWeights& weights = {});
// Same value; gradients are added (scaled by `scale`) to every parameter's
// accumulator, embeddings included.
LossBreakdown composite_loss_backward(AutoencoderModel& model,
                                      const FeatureRow& row,
                                      const LossWeights& weights = {},
                                      double scale = 1.0);

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  LossWeights weights;
  std::size_t patience = 20;
  double validation_fraction = 0.1;
  nn::AdamConfig adam;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  AutoencoderModel model;  // best-by-validation parameters
  std::vector<EpochRecord> history;  // epoch 0 = initial model
  std::size_t best_epoch = 0;
};

// Seeded 90/10 split (no validation rows below 10 rows; validation then uses
// the training rows), shuffled mini-batch Adam, early stopping on validation
// loss. Throws NumericError with the epoch index on divergence.
TrainResult train(const FeatureMatrix& matrix, const ArchitectureSpec& spec,
                  const TrainConfig& cfg);

struct ErrorSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

// Mean and population standard deviation of the per-row composite loss.
ErrorSummary reconstruction_error(const AutoencoderModel& model,
                                  const FeatureMatrix& matrix,
                                  const LossWeights& weights = {});

Matrix encode_all(const AutoencoderModel& model, const FeatureMatrix& matrix);

struct ArchitectureResult {
  ArchitectureSpec spec;
  std::vector<double> trial_errors;  // one reconstruction-error mean per trial
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<std::string> failure;
};

// Trains every architecture `trials` times with distinct derived seeds and reports
// mean +- std of the reconstruction error, sorted ascending by mean (failed
// specs last, in input order). A failing cell is recorded, not rethrown.
std::vector<ArchitectureResult> compare_architectures(
    const FeatureMatrix& matrix, std::span<const ArchitectureSpec> specs,
    std::size_t trials, const TrainConfig& base);

// Versioned JSON bundle with shapes and, optionally, the training history;
// loading checks shapes against `schema` when given.
std::string model_to_json(const AutoencoderModel& model,
                          std::string_view schema_fingerprint = {},
                          std::span<const EpochRecord> history = {});
AutoencoderModel model_from_json(std::string_view text,
                                 const FeatureSchema* schema = nullptr);
void save_model(const std::filesystem::path& path, const AutoencoderModel& model,
                std::string_view schema_fingerprint = {},
                std::span<const EpochRecord> history = {});
// History stored in a bundle (empty when none was saved).
std::vector<EpochRecord> history_from_json(std::string_view text);
AutoencoderModel load_model(const std::filesystem::path& path,
                            const FeatureSchema* schema = nullptr);

}  // namespace rso
