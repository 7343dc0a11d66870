#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rso/catalog.hpp"

namespace rso {

inline constexpr std::string_view kUnknown = "Unknown";

// A numeric family split into consecutive bins by ascending cut points.
// owner_below[i] says whether a value equal to cuts[i] belongs to the bin
// below the cut (right-closed) or above it (left-closed).
struct NumericBins {
  std::string name;
  std::vector<std::string> labels;  // cuts.size() + 1 entries
  std::vector<double> cuts;
  std::vector<bool> owner_below;
  double domain_min = 0.0;
  std::optional<double> domain_max;

  // Throws ValidationError for NaN or values outside the domain.
  const std::string& bin(double value) const;
  void validate() const;
};

// Case-insensitive word-prefix rule: matches when any word of the text
// starts with `keyword`.
struct ShapeRule {
  std::string keyword;
  std::string label;
};

struct TaxonomyRules {
  int version = 1;
  NumericBins altitude;
  NumericBins inclination;
  NumericBins rcs;
  NumericBins mass;
  // Object class text (compared case-insensitively with collapsed blanks)
  // to taxonomy label; anything else is Unknown.
  std::vector<std::pair<std::string, std::string>> object_classes;
  std::vector<std::string> object_class_labels;
  // First matching rule wins; non-empty text without a match is `shape_fallback`.
  std::vector<ShapeRule> shape_rules;
  std::string shape_fallback = "Other";
  std::vector<std::string> shape_labels;

  void validate() const;
};

// Built-in rules; identical to data/taxonomy_rules.json.
const TaxonomyRules& default_rules();
TaxonomyRules parse_rules(std::string_view json_text);
TaxonomyRules load_rules(const std::filesystem::path& path);
std::string rules_to_json(const TaxonomyRules& rules);

enum class Status { kActive, kInactive, kUnknown };
enum class Constellation { kMember, kNonMember, kUnknown };
enum class Manoeuvrability { kManoeuvrable, kNonManoeuvrable, kUnknown };

std::string_view to_string(Status s);
std::string_view to_string(Constellation c);
std::string_view to_string(Manoeuvrability m);
std::optional<Status> parse_status(std::string_view text);
std::optional<Constellation> parse_constellation(std::string_view text);
std::optional<Manoeuvrability> parse_manoeuvrability(std::string_view text);

struct Annotations {
  Status status = Status::kUnknown;
  Constellation constellation = Constellation::kUnknown;
  Manoeuvrability manoeuvrability = Manoeuvrability::kUnknown;
};

inline constexpr std::array<std::string_view, 7> kCharLevels = {
    "status", "constellation", "manoeuvrability", "object_class", "shape", "rcs", "mass"};
inline constexpr std::array<std::string_view, 2> kOrbitLevels = {"altitude", "inclination"};

struct CharPath {
  std::array<std::string, 7> levels;
  bool operator==(const CharPath&) const = default;
};

struct OrbitPath {
  std::array<std::string, 2> levels;
  bool operator==(const OrbitPath&) const = default;
};

struct TaxonomyAssignment {
  std::string intl_designator;
  CharPath characteristics;
  OrbitPath orbit;
  bool operator==(const TaxonomyAssignment&) const = default;
};

// (perigee + apogee) / 2, or nullopt when either is missing.
std::optional<double> mean_altitude(std::optional<double> perigee_km,
                                    std::optional<double> apogee_km);

// Bin lookups; missing input gives "Unknown". Out-of-domain values throw
// ValidationError.
std::string sma_bin(std::optional<double> mean_alt_km,
                    const TaxonomyRules& rules = default_rules());
std::string inclination_bin(std::optional<double> inclination_deg,
                            const TaxonomyRules& rules = default_rules());
std::string rcs_bin(std::optional<double> rcs_m2, const TaxonomyRules& rules = default_rules());
std::string mass_bin(std::optional<double> mass_kg, const TaxonomyRules& rules = default_rules());

std::string object_class_bin(const std::optional<std::string>& object_class,
                             const TaxonomyRules& rules = default_rules());
std::string shape_bin(const std::optional<std::string>& shape,
                      const TaxonomyRules& rules = default_rules());

// Total functions: values that cannot be binned become Unknown.
CharPath characteristics_path(const CatalogObject& object, const Annotations& ann = {},
                              const TaxonomyRules& rules = default_rules());
OrbitPath orbit_path(const CatalogObject& object, const TaxonomyRules& rules = default_rules());
TaxonomyAssignment classify(const CatalogObject& object, const Annotations& ann = {},
                            const TaxonomyRules& rules = default_rules());

// Annotation table: intl_designator,status,constellation,manoeuvrability.
// Throws ParseError on unknown values or missing columns.
std::vector<std::pair<std::string, Annotations>> read_annotations(std::istream& in);

void write_assignments_csv(std::ostream& out, std::span<const TaxonomyAssignment> rows);
std::vector<TaxonomyAssignment> read_assignments_csv(std::istream& in);

// Markdown description of both trees and every bin.
std::string taxonomy_reference(const TaxonomyRules& rules);

}  // namespace rso
