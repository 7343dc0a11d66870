#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rso/autoencoder.hpp"
#include "rso/error.hpp"

namespace {

using rso::testing::central_difference;

// A hand-built row with three reals (one missing) and two categoricals.
struct ToyRow {
  std::vector<double> real{0.7, -1.3, 0.0};
  std::vector<std::uint8_t> missing{0, 0, 1};
  std::vector<std::int32_t> codes{2, 0};
  rso::FeatureRow view() const { return {real, missing, codes, 0}; }
};

TEST(Architecture, ParseAcceptsThreeSpellings) {
  const rso::ArchitectureSpec want{{16, 4, 16}};
  EXPECT_EQ(rso::ArchitectureSpec::parse("[16, 4, 16]"), want);
  EXPECT_EQ(rso::ArchitectureSpec::parse("16,4,16"), want);
  EXPECT_EQ(rso::ArchitectureSpec::parse("16-4-16"), want);
  EXPECT_EQ(want.bottleneck(), 4u);
  EXPECT_EQ(rso::ArchitectureSpec::parse(want.to_string()), want);
}

TEST(Architecture, RejectsMalformedLayouts) {
  for (const char* bad : {"16,4", "16,4,8", "8,4,8", "16,0,16", "16,x,16", "", "16"}) {
    EXPECT_THROW(rso::ArchitectureSpec::parse(bad).validate(), rso::ValidationError) << bad;
  }
}

TEST(Architecture, ReferenceSetHasSixValidLayouts) {
  const auto specs = rso::reference_architectures();
  ASSERT_EQ(specs.size(), 6u);
  std::size_t four = 0, two = 0;
  for (const auto& s : specs) {
    EXPECT_NO_THROW(s.validate());
    four += s.bottleneck() == 4 ? 1 : 0;
    two += s.bottleneck() == 2 ? 1 : 0;
  }
  EXPECT_EQ(four, 2u);
  EXPECT_EQ(two, 4u);
}

TEST(Model, ShapesFollowArchitecture) {
  const rso::AutoencoderModel m({{16, 8, 4, 8, 16}}, 3, {3, 4}, 1);
  EXPECT_EQ(m.latent_dim(), 4u);
  EXPECT_EQ(m.input_map.in_dim(), 6u);
  EXPECT_EQ(m.input_map.out_dim(), 16u);
  ASSERT_EQ(m.embeddings.size(), 2u);
  EXPECT_EQ(m.embeddings[1].rows(), 4u);
  EXPECT_EQ(m.encoder.size(), 2u);
  EXPECT_EQ(m.decoder.size(), 2u);
  EXPECT_EQ(m.real_head.out_dim(), 3u);
  EXPECT_EQ(m.categorical_heads[0].out_dim(), 3u);
  const ToyRow row;
  EXPECT_EQ(rso::encode(m, row.view()).values.size(), 4u);
}

TEST(Model, FusionIgnoresValueOfMissingSlot) {
  const rso::AutoencoderModel m({{16, 4, 16}}, 3, {3, 4}, 2);
  ToyRow a, b;
  b.real[2] = 123.0;  // still flagged missing
  EXPECT_EQ(rso::fuse_features(m, a.view()), rso::fuse_features(m, b.view()));
  b.missing[2] = 0;
  EXPECT_NE(rso::fuse_features(m, a.view()), rso::fuse_features(m, b.view()));
}

TEST(Model, ShapeMismatchIsArgumentError) {
  const rso::AutoencoderModel m({{16, 4, 16}}, 3, {3, 4}, 3);
  ToyRow row;
  row.codes[1] = 9;
  EXPECT_THROW(rso::composite_loss(m, row.view()), rso::ArgumentError);
  row.codes = {1};
  EXPECT_THROW(rso::composite_loss(m, row.view()), rso::ArgumentError);
}

TEST(CompositeLoss, GradientMatchesFiniteDifferencesForEveryParameter) {
  for (const auto& spec : {rso::ArchitectureSpec{{16, 4, 16}},
                           rso::ArchitectureSpec{{16, 8, 2, 8, 16}}}) {
    rso::AutoencoderModel m(spec, 3, {3, 4}, 7);
    // Random biases keep pre-activations off the ReLU kink at exactly 0.
    rso::Rng rng(17);
    for (auto& block : m.parameters()) {
      for (auto& v : block.value) v = 0.5 * rng.normal();
    }
    const ToyRow row;
    const rso::LossWeights w{0.8, 1.3};
    m.zero_grad();
    const auto analytic = rso::composite_loss_backward(m, row.view(), w);
    EXPECT_NEAR(analytic.total, rso::composite_loss(m, row.view(), w).total, 1e-14);
    EXPECT_NEAR(analytic.total, 0.8 * analytic.real + 1.3 * analytic.categorical, 1e-12);
    const auto loss = [&] { return rso::composite_loss(m, row.view(), w).total; };
    std::size_t checked = 0;
    for (auto& block : m.parameters()) {
      for (std::size_t i = 0; i < block.value.size(); ++i) {
        ASSERT_NEAR(block.grad[i], central_difference(loss, block.value[i]), 1e-5)
            << spec.to_string() << " parameter " << checked;
        ++checked;
      }
    }
    EXPECT_EQ(checked, m.parameter_count());
  }
}

TEST(CompositeLoss, ScaleMultipliesGradient) {
  rso::AutoencoderModel m({{16, 4, 16}}, 3, {3, 4}, 8);
  const ToyRow row;
  m.zero_grad();
  rso::composite_loss_backward(m, row.view(), {}, 1.0);
  const std::vector<double> once(m.real_head.weight_grad.values().begin(),
                                 m.real_head.weight_grad.values().end());
  m.zero_grad();
  rso::composite_loss_backward(m, row.view(), {}, 0.25);
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_NEAR(m.real_head.weight_grad.values()[i], 0.25 * once[i], 1e-15);
  }
}

rso::TrainConfig quick(std::uint64_t seed, std::size_t epochs) {
  rso::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.seed = seed;
  cfg.adam.learning_rate = 1e-2;
  return cfg;
}

TEST(Train, LossDecreasesAndHistoryStartsAtEpochZero) {
  const auto d = rso::testing::fixture_dataset(400);
  const auto result = rso::train(d.matrix, {{16, 4, 16}}, quick(1, 20));
  ASSERT_GE(result.history.size(), 2u);
  EXPECT_EQ(result.history.front().epoch, 0u);
  EXPECT_LT(result.history.back().train_loss, result.history.front().train_loss);
  EXPECT_LE(result.best_epoch, result.history.back().epoch);
  const auto err = rso::reconstruction_error(result.model, d.matrix);
  EXPECT_GT(err.mean, 0.0);
  EXPECT_GE(err.stddev, 0.0);
  const auto latent = rso::encode_all(result.model, d.matrix);
  EXPECT_EQ(latent.rows(), d.matrix.n_rows);
  EXPECT_EQ(latent.cols(), 4u);
}

TEST(Train, SameSeedSameModel) {
  const auto d = rso::testing::fixture_dataset(200);
  const auto a = rso::train(d.matrix, {{16, 4, 16}}, quick(5, 5));
  const auto b = rso::train(d.matrix, {{16, 4, 16}}, quick(5, 5));
  const auto c = rso::train(d.matrix, {{16, 4, 16}}, quick(6, 5));
  EXPECT_EQ(rso::model_to_json(a.model), rso::model_to_json(b.model));
  EXPECT_NE(rso::model_to_json(a.model), rso::model_to_json(c.model));
}

TEST(Train, ConfigValidation) {
  auto cfg = quick(1, 0);
  EXPECT_THROW(cfg.validate(), rso::ValidationError);
  cfg = quick(1, 5);
  cfg.weights = {0.0, 0.0};
  EXPECT_THROW(cfg.validate(), rso::ValidationError);
  cfg = quick(1, 5);
  cfg.validation_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), rso::ValidationError);
}

TEST(Train, TinyMatrixUsesTrainingRowsForValidation) {
  const auto d = rso::testing::fixture_dataset(200);
  auto small = d.matrix;
  small.n_rows = 5;
  const auto result = rso::train(small, {{16, 4, 16}}, quick(1, 3));
  EXPECT_TRUE(std::isfinite(result.history.back().val_loss));
}

TEST(Compare, ResultsSortedAndOneErrorPerTrial) {
  const auto d = rso::testing::fixture_dataset(200);
  const std::vector<rso::ArchitectureSpec> specs = {{{16, 2, 16}}, {{16, 4, 16}}};
  const auto results = rso::compare_architectures(d.matrix, specs, 2, quick(3, 5));
  ASSERT_EQ(results.size(), 2u);
  EXPECT_LE(results[0].mean, results[1].mean);
  for (const auto& r : results) {
    EXPECT_FALSE(r.failure);
    ASSERT_EQ(r.trial_errors.size(), 2u);
    EXPECT_NEAR(r.mean, (r.trial_errors[0] + r.trial_errors[1]) / 2, 1e-12);
  }
  EXPECT_THROW(rso::compare_architectures(d.matrix, specs, 0, quick(3, 5)), rso::ValidationError);
}

TEST(Bundle, JsonRoundTripKeepsParametersOptimizerAndHistory) {
  const auto d = rso::testing::fixture_dataset(200);
  const auto result = rso::train(d.matrix, {{16, 4, 16}}, quick(2, 3));
  const auto fp = d.schema.fingerprint();
  const auto text = rso::model_to_json(result.model, fp, result.history);
  const auto back = rso::model_from_json(text, &d.schema);
  EXPECT_EQ(rso::model_to_json(back, fp, result.history), text);
  EXPECT_EQ(back.optimizer.step, result.model.optimizer.step);
  const auto history = rso::history_from_json(text);
  ASSERT_EQ(history.size(), result.history.size());
  for (std::size_t i = 0; i < history.size(); ++i) {
    EXPECT_EQ(history[i].epoch, result.history[i].epoch);
    EXPECT_EQ(history[i].train_loss, result.history[i].train_loss);
    EXPECT_EQ(history[i].val_loss, result.history[i].val_loss);
  }
  const auto r0 = rso::feature_row(d.matrix, 0);
  EXPECT_EQ(rso::encode(back, r0).values, rso::encode(result.model, r0).values);
  EXPECT_TRUE(rso::history_from_json(rso::model_to_json(back)).empty());
}

TEST(Bundle, RejectsForeignSchemaAndGarbage) {
  const auto d = rso::testing::fixture_dataset(200);
  const rso::AutoencoderModel m({{16, 4, 16}}, d.matrix.n_real, d.schema.vocabulary_sizes(), 1);
  auto other = d.schema;
  other.features[13].vocabulary.push_back("Dodecahedron");
  const auto text = rso::model_to_json(m, d.schema.fingerprint());
  EXPECT_THROW(rso::model_from_json(text, &other), rso::SchemaError);
  EXPECT_THROW(rso::model_from_json("{"), rso::SchemaError);
  EXPECT_THROW(rso::model_from_json(R"({"format": "other"})"), rso::SchemaError);
  EXPECT_THROW(rso::load_model("/nonexistent/model.json"), rso::ValidationError);
}

}  // namespace
