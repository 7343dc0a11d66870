#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "rso/error.hpp"
#include "rso/features.hpp"

namespace {

rso::CatalogObject object(std::optional<double> perigee, std::optional<std::string> shape) {
  rso::SatcatRecord r;
  r.intl_designator = "2000-001A";
  r.norad_id = 1;
  r.perigee_km = perigee;
  rso::CatalogObject o = rso::to_catalog_object(r);
  o.shape = std::move(shape);
  return o;
}

std::size_t column(const rso::FeatureMatrix& m, std::string_view name) {
  const auto reals = m.schema.real_features();
  for (std::size_t c = 0; c < reals.size(); ++c) {
    if (m.schema.features[reals[c]].name == name) return c;
  }
  const auto cats = m.schema.categorical_features();
  for (std::size_t c = 0; c < cats.size(); ++c) {
    if (m.schema.features[cats[c]].name == name) return c;
  }
  throw std::runtime_error("no column " + std::string(name));
}

TEST(Schema, EighteenFeaturesTwelveRealSixCategorical) {
  const auto d = rso::testing::fixture_dataset(200);
  EXPECT_EQ(d.schema.features.size(), 18u);
  EXPECT_EQ(d.schema.real_features().size(), 12u);
  EXPECT_EQ(d.schema.categorical_features().size(), 6u);
  for (const auto& f : d.schema.features) {
    if (f.kind == rso::FeatureKind::kCategorical) {
      ASSERT_FALSE(f.vocabulary.empty());
      EXPECT_EQ(f.vocabulary[0], rso::kMissingToken);
    } else {
      EXPECT_GE(f.stats.variance, 0.0);
    }
  }
  EXPECT_NO_THROW(d.schema.validate());
}

TEST(Schema, JsonRoundTripAndFingerprint) {
  const auto d = rso::testing::fixture_dataset(200);
  const auto again = rso::parse_schema(rso::schema_to_json(d.schema));
  EXPECT_EQ(again, d.schema);
  EXPECT_EQ(again.fingerprint(), d.schema.fingerprint());
  auto changed = d.schema;
  changed.features[13].vocabulary.push_back("Dodecahedron");
  EXPECT_NE(changed.fingerprint(), d.schema.fingerprint());
  auto stats_only = d.schema;
  stats_only.features[0].stats.mean += 1.0;
  EXPECT_EQ(stats_only.fingerprint(), d.schema.fingerprint());
}

TEST(Schema, ValidationRejectsBadSchemas) {
  const auto d = rso::testing::fixture_dataset(100);
  auto s = d.schema;
  s.features.pop_back();
  EXPECT_THROW(s.validate(), rso::SchemaError);
  s = d.schema;
  s.features[12].vocabulary[0] = "Payload";
  EXPECT_THROW(s.validate(), rso::SchemaError);
  s = d.schema;
  s.features[0].name = "colour";
  EXPECT_THROW(s.validate(), rso::SchemaError);
  s = d.schema;
  s.features[0].stats.variance = -1.0;
  EXPECT_THROW(s.validate(), rso::SchemaError);
  EXPECT_THROW(rso::parse_schema(R"({"version": 1, "features": "x"})"), rso::SchemaError);
}

TEST(Standardize, ClosedFormZScores) {
  const std::vector<rso::CatalogObject> objs = {object(1.0, std::nullopt), object(2.0, std::nullopt),
                                                object(3.0, std::nullopt)};
  const auto m = rso::build_feature_matrix(objs, rso::infer_schema(objs));
  const std::size_t c = column(m, "perigee_km");
  const double z = std::sqrt(1.5);  // (x - 2) / sqrt(2/3)
  EXPECT_NEAR(m.real_row(0)[c], -z, 1e-12);
  EXPECT_NEAR(m.real_row(1)[c], 0.0, 1e-12);
  EXPECT_NEAR(m.real_row(2)[c], z, 1e-12);
  EXPECT_NEAR(z, 1.2247, 1e-4);
}

TEST(Standardize, AllMissingColumnMaskedAndZero) {
  const std::vector<rso::CatalogObject> objs = {object(400.0, std::nullopt),
                                                object(500.0, std::nullopt)};
  const auto m = rso::build_feature_matrix(objs, rso::infer_schema(objs));
  const std::size_t c = column(m, "rcs_m2");
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    EXPECT_EQ(m.missing_row(r)[c], 1);
    EXPECT_EQ(m.real_row(r)[c], 0.0);
  }
}

TEST(Standardize, ZeroVarianceColumnReported) {
  const std::vector<rso::CatalogObject> objs = {object(400.0, std::nullopt),
                                                object(400.0, std::nullopt)};
  rso::FeatureMatrixReport report;
  const auto m = rso::build_feature_matrix(objs, rso::infer_schema(objs), &report);
  EXPECT_NE(std::find(report.zero_variance_columns.begin(), report.zero_variance_columns.end(),
                      "perigee_km"),
            report.zero_variance_columns.end());
  const std::size_t c = column(m, "perigee_km");
  EXPECT_EQ(m.real_row(0)[c], 0.0);
  EXPECT_FALSE(std::isnan(m.real_row(1)[c]));
}

TEST(Standardize, ObservedColumnsHaveZeroMeanUnitVariance) {
  const auto d = rso::testing::fixture_dataset(2000);
  const auto& m = d.matrix;
  for (std::size_t c = 0; c < m.n_real; ++c) {
    double sum = 0, sq = 0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      if (m.missing_row(r)[c]) {
        EXPECT_EQ(m.real_row(r)[c], 0.0);
        continue;
      }
      sum += m.real_row(r)[c];
      ++n;
    }
    if (n == 0) continue;
    const double mean = sum / static_cast<double>(n);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      if (!m.missing_row(r)[c]) sq += (m.real_row(r)[c] - mean) * (m.real_row(r)[c] - mean);
    }
    EXPECT_LT(std::abs(mean), 1e-6) << c;
    EXPECT_NEAR(sq / static_cast<double>(n), 1.0, 1e-6) << c;
  }
}

TEST(Standardize, InversionReproducesRawValues) {
  const auto d = rso::testing::fixture_dataset(2000);
  const auto& m = d.matrix;
  double worst = 0.0;
  for (std::size_t r = 0; r < m.n_rows; ++r) {
    for (std::size_t c = 0; c < m.n_real; ++c) {
      if (m.missing_row(r)[c]) continue;
      const double raw = m.raw_row(r)[c];
      const double back = m.destandardize(c, m.real_row(r)[c]);
      worst = std::max(worst, std::abs(back - raw) / std::max(std::abs(raw), 1e-300));
    }
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Encode, CategoryCodesFollowVocabulary) {
  const std::vector<rso::CatalogObject> objs = {object(1.0, "Box"), object(2.0, "Cyl"),
                                                object(3.0, "Box"), object(4.0, std::nullopt)};
  auto schema = rso::infer_schema(objs);
  // MISSING, Box (2 uses), Cyl (1 use)
  const auto& shape = schema.features[13];
  ASSERT_EQ(shape.name, "shape");
  EXPECT_EQ(shape.vocabulary, (std::vector<std::string>{"MISSING", "Box", "Cyl"}));
  schema.features[13].vocabulary = {"MISSING", "Cone", "Cyl", "Box"};
  const auto m = rso::build_feature_matrix(objs, schema);
  const std::size_t c = column(m, "shape");
  EXPECT_EQ(m.code_row(0)[c], 3);
  EXPECT_EQ(m.code_row(1)[c], 2);
  EXPECT_EQ(m.code_row(3)[c], 0);
}

TEST(Encode, UnknownCategoryMapsToMissingAndIsCounted) {
  const std::vector<rso::CatalogObject> train = {object(1.0, "Box"), object(2.0, "Box")};
  const std::vector<rso::CatalogObject> later = {object(1.0, "Box"), object(2.0, "Torus")};
  rso::FeatureMatrixReport report;
  const auto m = rso::build_feature_matrix(later, rso::infer_schema(train), &report);
  EXPECT_EQ(report.unknown_categories, 1u);
  EXPECT_EQ(m.code_row(1)[column(m, "shape")], 0);
}

TEST(Encode, EveryCodeInsideItsVocabulary) {
  const auto d = rso::testing::fixture_dataset(2000);
  const auto sizes = d.schema.vocabulary_sizes();
  for (std::size_t r = 0; r < d.matrix.n_rows; ++r) {
    for (std::size_t c = 0; c < d.matrix.n_categorical; ++c) {
      const auto code = d.matrix.code_row(r)[c];
      ASSERT_GE(code, 0);
      ASSERT_LT(static_cast<std::size_t>(code), sizes[c]);
    }
  }
}

TEST(Missingness, MatrixKeepsEveryMissingMarker) {
  const auto d = rso::testing::fixture_dataset(2000);
  std::size_t markers = 0;
  for (const auto code : d.matrix.codes) markers += code == 0 ? 1 : 0;
  for (const auto bit : d.matrix.missing) markers += bit;
  EXPECT_EQ(markers, rso::count_missing(d.objects, d.schema));
  EXPECT_EQ(d.matrix.missing_count(), markers);
  EXPECT_GT(d.matrix.missing_count(), 0u);
}

TEST(Features, LaunchYearDerivedFromDate) {
  rso::SatcatRecord r;
  r.intl_designator = "1998-067A";
  r.norad_id = 25544;
  r.launch_date = rso::parse_date("1998-11-20");
  const auto o = rso::to_catalog_object(r);
  EXPECT_EQ(*rso::real_feature_value(o, "launch_year"), 1998.0);
  EXPECT_FALSE(rso::real_feature_value(o, "mass_kg"));
}

}  // namespace
