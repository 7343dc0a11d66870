#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rso {

using Date = std::chrono::year_month_day;

std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& date);

// One row of a CelesTrak-style SATCAT export. Optional fields hold the
// explicit missing marker; nothing is defaulted.
struct SatcatRecord {
  std::string intl_designator;
  std::int64_t norad_id = 0;
  std::string name;
  std::optional<std::string> object_type;
  std::optional<std::string> ops_status_code;
  std::optional<std::string> owner;
  std::optional<Date> launch_date;
  std::optional<std::string> launch_site;
  std::optional<Date> decay_date;
  std::optional<double> period_min;
  std::optional<double> inclination_deg;
  std::optional<double> apogee_km;
  std::optional<double> perigee_km;
  std::optional<double> rcs_m2;
  std::optional<std::string> orbit_type;

  bool operator==(const SatcatRecord&) const = default;
};

struct SatcatParseReport {
  std::size_t rows = 0;
  // Numeric or date cells that failed to parse or violated their domain
  // (negative altitude, inclination outside [0, 180], apogee < perigee, ...)
  // and were replaced by the missing marker.
  std::size_t invalid_cells = 0;
};

// Columns that must be present in the header. ORBIT_TYPE and OBJECT_TYPE are
// read when available.
std::span<const std::string_view> satcat_required_columns();

// Throws ParseError on a header lacking required columns (the message lists
// them), on a malformed NORAD id, and on duplicate NORAD ids (the message
// names the id).
std::vector<SatcatRecord> parse_satcat(std::istream& in,
                                       SatcatParseReport* report = nullptr);
void write_satcat(std::ostream& out, std::span<const SatcatRecord> records);

// Physical-property record from ESA DISCOS.
struct DiscosRecord {
  std::string intl_designator;
  std::optional<std::int64_t> norad_id;
  std::optional<std::string> object_class;
  std::optional<std::string> shape;
  std::optional<double> mass_kg;
  std::optional<double> span_m;
  std::optional<double> height_m;
  std::optional<double> width_m;
  std::optional<double> depth_m;
  std::optional<double> diameter_m;

  bool operator==(const DiscosRecord&) const = default;
};

enum class Provenance : std::uint8_t { kAbsent, kSatcat, kDiscos };

// Fields of a merged object that carry provenance.
enum class Field : std::uint8_t {
  kObjectType,
  kOpsStatus,
  kOwner,
  kLaunchDate,
  kLaunchSite,
  kDecayDate,
  kPeriod,
  kInclination,
  kApogee,
  kPerigee,
  kRcs,
  kOrbitType,
  kObjectClass,
  kShape,
  kMass,
  kSpan,
  kHeight,
  kWidth,
  kDepth,
  kDiameter,
};
inline constexpr std::size_t kFieldCount = 20;

std::string_view field_name(Field f);

struct CatalogObject {
  std::string intl_designator;
  std::int64_t norad_id = 0;
  std::string name;

  std::optional<std::string> object_type;
  std::optional<std::string> ops_status_code;
  std::optional<std::string> owner;
  std::optional<Date> launch_date;
  std::optional<std::string> launch_site;
  std::optional<Date> decay_date;
  std::optional<double> period_min;
  std::optional<double> inclination_deg;
  std::optional<double> apogee_km;
  std::optional<double> perigee_km;
  std::optional<double> rcs_m2;
  std::optional<std::string> orbit_type;

  std::optional<std::string> object_class;
  std::optional<std::string> shape;
  std::optional<double> mass_kg;
  std::optional<double> span_m;
  std::optional<double> height_m;
  std::optional<double> width_m;
  std::optional<double> depth_m;
  std::optional<double> diameter_m;

  std::array<Provenance, kFieldCount> provenance{};

  Provenance source(Field f) const {
    return provenance[static_cast<std::size_t>(f)];
  }
  bool has(Field f) const;
  // Drops the value of `f` and marks it absent.
  void clear(Field f);

  bool operator==(const CatalogObject&) const = default;
};

// Upper-case with all whitespace removed: " 1998-067 a " -> "1998-067A".
std::string normalize_designator(std::string_view designator);

CatalogObject to_catalog_object(const SatcatRecord& record);

// Left join of DISCOS onto SATCAT by normalized international designator,
// NORAD id breaking ties. Every SATCAT record survives in input order.
// Throws ValidationError when either input repeats a designator (or NORAD id)
// and AmbiguityError when a DISCOS designator matches several SATCAT rows that
// its NORAD id cannot disambiguate.
std::vector<CatalogObject> merge_catalogs(std::span<const SatcatRecord> satcat,
                                          std::span<const DiscosRecord> discos);
// Same join applied to already-merged objects; DISCOS values overwrite.
std::vector<CatalogObject> merge_catalogs(std::vector<CatalogObject> objects,
                                          std::span<const DiscosRecord> discos);

inline constexpr double kLeoMaxMeanAltitudeKm = 2000.0;

struct LeoFilterReport {
  std::size_t kept = 0;
  std::size_t dropped_missing_orbit = 0;  // perigee or apogee absent
  std::size_t dropped_above_leo = 0;
};

// Keeps objects with both perigee and apogee present and mean altitude
// (perigee + apogee) / 2 <= 2000 km, preserving order.
std::vector<CatalogObject> filter_leo(std::span<const CatalogObject> objects,
                                      LeoFilterReport* report = nullptr);

// Columnar dataset file: one row per merged object, every field plus a
// provenance column (one character per field: 'S' SATCAT, 'D' DISCOS,
// '-' absent). Doubles are written in shortest round-trip form.
void write_objects_csv(std::ostream& out, std::span<const CatalogObject> objects);
std::vector<CatalogObject> read_objects_csv(std::istream& in);

}  // namespace rso
