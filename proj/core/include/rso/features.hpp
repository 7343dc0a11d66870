#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rso/catalog.hpp"

namespace rso {

enum class FeatureKind { kReal, kCategorical };

inline constexpr std::string_view kMissingToken = "MISSING";
inline constexpr std::size_t kSchemaFeatureCount = 18;
inline constexpr std::size_t kSchemaRealCount = 12;
inline constexpr std::size_t kSchemaCategoricalCount = 6;

struct RealStats {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t observed = 0;

  bool operator==(const RealStats&) const = default;
};

struct FeatureDescriptor {
  std::string name;
  FeatureKind kind = FeatureKind::kReal;
  // Categorical only; index 0 is always kMissingToken.
  std::vector<std::string> vocabulary;
  // Real only; filled by build_feature_matrix.
  RealStats stats;

  bool operator==(const FeatureDescriptor&) const = default;
};

// Ordered feature list. Real features come first in the matrix's real block
// and categorical features in the categorical block, each in schema order.
struct FeatureSchema {
  int version = 1;
  std::vector<FeatureDescriptor> features;

  std::vector<std::size_t> real_features() const;
  std::vector<std::size_t> categorical_features() const;
  std::vector<std::size_t> vocabulary_sizes() const;

  // Throws SchemaError unless: exactly 18 features (12 real, 6 categorical),
  // every name is a known object field, every vocabulary starts with
  // MISSING and has no duplicates, and every variance is >= 0.
  void validate() const;

  // Stable fingerprint of names, kinds and vocabularies (not stats).
  std::string fingerprint() const;

  bool operator==(const FeatureSchema&) const = default;
};

// Names of the fields a schema may reference.
std::span<const std::string_view> known_feature_names();
FeatureKind known_feature_kind(std::string_view name);

// Builds the 18-feature schema with vocabularies taken from `objects`
// (MISSING first, then values by descending frequency, ties alphabetical).
FeatureSchema infer_schema(std::span<const CatalogObject> objects);

// Reads/writes the sidecar JSON schema. Reading validates.
FeatureSchema read_schema(const std::filesystem::path& path);
FeatureSchema parse_schema(std::string_view json_text);
std::string schema_to_json(const FeatureSchema& schema);
void write_schema(const std::filesystem::path& path, const FeatureSchema& schema);

// Raw value of a real feature, or nullopt when missing.
std::optional<double> real_feature_value(const CatalogObject& o,
                                         std::string_view name);
// Raw category string, or nullopt when missing.
std::optional<std::string> categorical_feature_value(const CatalogObject& o,
                                                     std::string_view name);

struct FeatureMatrixReport {
  // Category strings absent from the vocabulary, mapped to MISSING.
  std::size_t unknown_categories = 0;
  // Real columns whose observed variance is 0 (standardized to all zeros).
  std::vector<std::string> zero_variance_columns;
};

// Model-ready matrix. The real block stores standardized values with a
// parallel missing mask (masked entries are 0); raw values are kept for
// consumers that work on the original scale.
struct FeatureMatrix {
  std::size_t n_rows = 0;
  std::size_t n_real = 0;
  std::size_t n_categorical = 0;
  std::vector<double> real;          // n_rows x n_real, standardized
  std::vector<double> raw;           // n_rows x n_real, original units
  std::vector<std::uint8_t> missing; // n_rows x n_real, 1 = missing
  std::vector<std::int32_t> codes;   // n_rows x n_categorical
  FeatureSchema schema;
  std::vector<std::string> designators;

  std::span<const double> real_row(std::size_t r) const {
    return {real.data() + r * n_real, n_real};
  }
  std::span<const double> raw_row(std::size_t r) const {
    return {raw.data() + r * n_real, n_real};
  }
  std::span<const std::uint8_t> missing_row(std::size_t r) const {
    return {missing.data() + r * n_real, n_real};
  }
  std::span<const std::int32_t> code_row(std::size_t r) const {
    return {codes.data() + r * n_categorical, n_categorical};
  }

  // Inverse of the standardization for column `c` of the real block.
  double destandardize(std::size_t c, double z) const;

  std::size_t missing_count() const;
};

// Standardizes reals with statistics over observed entries only (fixed
// accumulation order), masks missing reals and encodes categoricals. The
// returned matrix carries a copy of `schema` with stats filled in.
FeatureMatrix build_feature_matrix(std::span<const CatalogObject> objects,
                                   const FeatureSchema& schema,
                                   FeatureMatrixReport* report = nullptr);

// Missing markers across the schema's features in `objects`.
std::size_t count_missing(std::span<const CatalogObject> objects,
                          const FeatureSchema& schema);

}  // namespace rso
