#include "rso/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "rso/csv.hpp"
#include "rso/error.hpp"

namespace rso {
namespace {

constexpr std::string_view kRequiredColumns[] = {
    "OBJECT_NAME", "OBJECT_ID",   "NORAD_CAT_ID", "OPS_STATUS_CODE",
    "OWNER",       "LAUNCH_DATE", "LAUNCH_SITE",  "DECAY_DATE",
    "PERIOD",      "INCLINATION", "APOGEE",       "PERIGEE",
    "RCS"};

constexpr std::string_view kSatcatHeader[] = {
    "OBJECT_NAME",  "OBJECT_ID",   "NORAD_CAT_ID",     "OBJECT_TYPE",
    "OPS_STATUS_CODE", "OWNER",    "LAUNCH_DATE",      "LAUNCH_SITE",
    "DECAY_DATE",   "PERIOD",      "INCLINATION",      "APOGEE",
    "PERIGEE",      "RCS",         "DATA_STATUS_CODE", "ORBIT_CENTER",
    "ORBIT_TYPE"};

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::optional<std::string> text_cell(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  return std::string(cell);
}

std::string opt_text(const std::optional<std::string>& v) {
  return v ? *v : std::string();
}
std::string opt_num(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}
std::string opt_date(const std::optional<Date>& v) {
  return v ? format_date(*v) : std::string();
}

struct FieldRef {
  std::optional<std::string>* text = nullptr;
  std::optional<double>* number = nullptr;
  std::optional<Date>* date = nullptr;
};

FieldRef field_ref(CatalogObject& o, Field f) {
  switch (f) {
    case Field::kObjectType: return {.text = &o.object_type};
    case Field::kOpsStatus: return {.text = &o.ops_status_code};
    case Field::kOwner: return {.text = &o.owner};
    case Field::kLaunchDate: return {.date = &o.launch_date};
    case Field::kLaunchSite: return {.text = &o.launch_site};
    case Field::kDecayDate: return {.date = &o.decay_date};
    case Field::kPeriod: return {.number = &o.period_min};
    case Field::kInclination: return {.number = &o.inclination_deg};
    case Field::kApogee: return {.number = &o.apogee_km};
    case Field::kPerigee: return {.number = &o.perigee_km};
    case Field::kRcs: return {.number = &o.rcs_m2};
    case Field::kOrbitType: return {.text = &o.orbit_type};
    case Field::kObjectClass: return {.text = &o.object_class};
    case Field::kShape: return {.text = &o.shape};
    case Field::kMass: return {.number = &o.mass_kg};
    case Field::kSpan: return {.number = &o.span_m};
    case Field::kHeight: return {.number = &o.height_m};
    case Field::kWidth: return {.number = &o.width_m};
    case Field::kDepth: return {.number = &o.depth_m};
    case Field::kDiameter: return {.number = &o.diameter_m};
  }
  return {};
}

bool field_present(const FieldRef& r) {
  if (r.text) return r.text->has_value();
  if (r.number) return r.number->has_value();
  return r.date && r.date->has_value();
}

void set_provenance(CatalogObject& o, Field f, Provenance p) {
  o.provenance[static_cast<std::size_t>(f)] = p;
}

template <typename T>
void attach(CatalogObject& o, Field f, std::optional<T>& dst,
            const std::optional<T>& src) {
  if (!src) return;
  dst = src;
  set_provenance(o, f, Provenance::kDiscos);
}

constexpr std::string_view kObjectColumns[] = {
    "intl_designator", "norad_id",   "name",          "object_type",
    "ops_status_code", "owner",      "launch_date",   "launch_site",
    "decay_date",      "period_min", "inclination_deg", "apogee_km",
    "perigee_km",      "rcs_m2",     "orbit_type",    "object_class",
    "shape",           "mass_kg",    "span_m",        "height_m",
    "width_m",         "depth_m",    "diameter_m",    "provenance"};

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  text = trim(text);
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    return std::nullopt;
  }
  const auto y = parse_int(text.substr(0, 4));
  const auto m = parse_int(text.substr(5, 2));
  const auto d = parse_int(text.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  const Date date{std::chrono::year(static_cast<int>(*y)),
                  std::chrono::month(static_cast<unsigned>(*m)),
                  std::chrono::day(static_cast<unsigned>(*d))};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u",
                static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()),
                static_cast<unsigned>(date.day()));
  return buf;
}

std::span<const std::string_view> satcat_required_columns() {
  return kRequiredColumns;
}

std::vector<SatcatRecord> parse_satcat(std::istream& in,
                                       SatcatParseReport* report) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) {
    throw ParseError("SATCAT: empty input, expected a header row");
  }
  std::unordered_map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    columns.emplace(upper(trim(fields[i])), i);
  }
  std::vector<std::string> missing;
  for (const auto name : kRequiredColumns) {
    if (!columns.contains(std::string(name))) missing.emplace_back(name);
  }
  if (!missing.empty()) {
    std::string msg = "SATCAT header is missing columns:";
    for (const auto& m : missing) msg += " " + m;
    throw ParseError(msg);
  }
  auto col = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = columns.find(std::string(name));
    if (it == columns.end()) return std::nullopt;
    return it->second;
  };
  const std::size_t c_name = *col("OBJECT_NAME");
  const std::size_t c_id = *col("OBJECT_ID");
  const std::size_t c_norad = *col("NORAD_CAT_ID");
  const std::size_t c_status = *col("OPS_STATUS_CODE");
  const std::size_t c_owner = *col("OWNER");
  const std::size_t c_launch = *col("LAUNCH_DATE");
  const std::size_t c_site = *col("LAUNCH_SITE");
  const std::size_t c_decay = *col("DECAY_DATE");
  const std::size_t c_period = *col("PERIOD");
  const std::size_t c_inc = *col("INCLINATION");
  const std::size_t c_apo = *col("APOGEE");
  const std::size_t c_peri = *col("PERIGEE");
  const std::size_t c_rcs = *col("RCS");
  const auto c_type = col("OBJECT_TYPE");
  const auto c_orbit = col("ORBIT_TYPE");

  SatcatParseReport local;
  std::vector<SatcatRecord> records;
  std::unordered_set<std::int64_t> seen;

  while (reader.next(fields)) {
    auto cell = [&](std::size_t c) -> std::string_view {
      return c < fields.size() ? std::string_view(fields[c]) : std::string_view();
    };
    auto number = [&](std::size_t c, auto valid) -> std::optional<double> {
      const auto text = trim(cell(c));
      if (text.empty()) return std::nullopt;
      const auto v = parse_double(text);
      if (!v || !valid(*v)) {
        ++local.invalid_cells;
        return std::nullopt;
      }
      return v;
    };
    auto date = [&](std::size_t c) -> std::optional<Date> {
      const auto text = trim(cell(c));
      if (text.empty()) return std::nullopt;
      const auto d = parse_date(text);
      if (!d) ++local.invalid_cells;
      return d;
    };

    SatcatRecord r;
    const auto norad = parse_int(cell(c_norad));
    if (!norad || *norad <= 0) {
      throw ParseError("SATCAT line " + std::to_string(reader.line()) +
                       ": invalid NORAD_CAT_ID '" + std::string(cell(c_norad)) +
                       "'");
    }
    r.norad_id = *norad;
    if (!seen.insert(r.norad_id).second) {
      throw ParseError("SATCAT: duplicate NORAD_CAT_ID " +
                       std::to_string(r.norad_id) + " at line " +
                       std::to_string(reader.line()));
    }
    r.name = std::string(trim(cell(c_name)));
    r.intl_designator = std::string(trim(cell(c_id)));
    if (c_type) r.object_type = text_cell(cell(*c_type));
    r.ops_status_code = text_cell(cell(c_status));
    r.owner = text_cell(cell(c_owner));
    r.launch_date = date(c_launch);
    r.launch_site = text_cell(cell(c_site));
    r.decay_date = date(c_decay);
    const auto non_negative = [](double v) { return v >= 0.0; };
    r.period_min = number(c_period, non_negative);
    r.inclination_deg =
        number(c_inc, [](double v) { return v >= 0.0 && v <= 180.0; });
    r.apogee_km = number(c_apo, non_negative);
    r.perigee_km = number(c_peri, non_negative);
    r.rcs_m2 = number(c_rcs, [](double v) { return v > 0.0; });
    if (c_orbit) r.orbit_type = text_cell(cell(*c_orbit));
    if (r.apogee_km && r.perigee_km && *r.apogee_km < *r.perigee_km) {
      r.apogee_km.reset();
      r.perigee_km.reset();
      local.invalid_cells += 2;
    }
    records.push_back(std::move(r));
  }
  local.rows = records.size();
  if (report) *report = local;
  return records;
}

void write_satcat(std::ostream& out, std::span<const SatcatRecord> records) {
  std::vector<std::string> row(std::begin(kSatcatHeader), std::end(kSatcatHeader));
  write_csv_row(out, row);
  for (const auto& r : records) {
    row = {r.name,
           r.intl_designator,
           std::to_string(r.norad_id),
           opt_text(r.object_type),
           opt_text(r.ops_status_code),
           opt_text(r.owner),
           opt_date(r.launch_date),
           opt_text(r.launch_site),
           opt_date(r.decay_date),
           opt_num(r.period_min),
           opt_num(r.inclination_deg),
           opt_num(r.apogee_km),
           opt_num(r.perigee_km),
           opt_num(r.rcs_m2),
           "",
           "EA",
           opt_text(r.orbit_type)};
    write_csv_row(out, row);
  }
}

std::string_view field_name(Field f) {
  static constexpr std::string_view kNames[kFieldCount] = {
      "object_type", "ops_status_code", "owner",        "launch_date",
      "launch_site", "decay_date",      "period_min",   "inclination_deg",
      "apogee_km",   "perigee_km",      "rcs_m2",       "orbit_type",
      "object_class", "shape",          "mass_kg",      "span_m",
      "height_m",    "width_m",         "depth_m",      "diameter_m"};
  return kNames[static_cast<std::size_t>(f)];
}

bool CatalogObject::has(Field f) const {
  return field_present(field_ref(const_cast<CatalogObject&>(*this), f));
}

void CatalogObject::clear(Field f) {
  const FieldRef r = field_ref(*this, f);
  if (r.text) r.text->reset();
  if (r.number) r.number->reset();
  if (r.date) r.date->reset();
  set_provenance(*this, f, Provenance::kAbsent);
}

std::string normalize_designator(std::string_view designator) {
  std::string out;
  out.reserve(designator.size());
  for (const char c : designator) {
    if (std::isspace(static_cast<unsigned char>(c))) continue;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

CatalogObject to_catalog_object(const SatcatRecord& r) {
  CatalogObject o;
  o.intl_designator = normalize_designator(r.intl_designator);
  o.norad_id = r.norad_id;
  o.name = r.name;
  o.object_type = r.object_type;
  o.ops_status_code = r.ops_status_code;
  o.owner = r.owner;
  o.launch_date = r.launch_date;
  o.launch_site = r.launch_site;
  o.decay_date = r.decay_date;
  o.period_min = r.period_min;
  o.inclination_deg = r.inclination_deg;
  o.apogee_km = r.apogee_km;
  o.perigee_km = r.perigee_km;
  o.rcs_m2 = r.rcs_m2;
  o.orbit_type = r.orbit_type;
  for (std::size_t i = 0; i < kFieldCount; ++i) {
    const auto f = static_cast<Field>(i);
    set_provenance(o, f, o.has(f) ? Provenance::kSatcat : Provenance::kAbsent);
  }
  return o;
}

std::vector<CatalogObject> merge_catalogs(std::span<const SatcatRecord> satcat,
                                          std::span<const DiscosRecord> discos) {
  std::vector<CatalogObject> objects;
  objects.reserve(satcat.size());
  std::unordered_set<std::int64_t> norad_seen;
  for (const auto& r : satcat) {
    if (!norad_seen.insert(r.norad_id).second) {
      throw ValidationError("merge: SATCAT input repeats NORAD id " +
                            std::to_string(r.norad_id));
    }
    objects.push_back(to_catalog_object(r));
  }
  return merge_catalogs(std::move(objects), discos);
}

std::vector<CatalogObject> merge_catalogs(std::vector<CatalogObject> objects,
                                          std::span<const DiscosRecord> discos) {
  std::unordered_map<std::string, std::vector<std::size_t>> by_designator;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (!objects[i].intl_designator.empty()) {
      by_designator[objects[i].intl_designator].push_back(i);
    }
  }

  std::unordered_set<std::string> discos_seen;
  for (const auto& d : discos) {
    const std::string key = normalize_designator(d.intl_designator);
    if (key.empty()) continue;
    if (!discos_seen.insert(key).second) {
      throw ValidationError("merge: DISCOS input repeats designator " + key);
    }
    const auto it = by_designator.find(key);
    if (it == by_designator.end()) continue;

    std::size_t target = it->second.front();
    if (it->second.size() > 1) {
      std::optional<std::size_t> match;
      if (d.norad_id) {
        for (const std::size_t idx : it->second) {
          if (objects[idx].norad_id == *d.norad_id) {
            match = idx;
            break;
          }
        }
      }
      if (!match) {
        throw AmbiguityError("merge: DISCOS designator " + key + " matches " +
                             std::to_string(it->second.size()) +
                             " SATCAT rows and no NORAD id resolves it");
      }
      target = *match;
    }

    CatalogObject& o = objects[target];
    attach(o, Field::kObjectClass, o.object_class, d.object_class);
    attach(o, Field::kShape, o.shape, d.shape);
    attach(o, Field::kMass, o.mass_kg, d.mass_kg);
    attach(o, Field::kSpan, o.span_m, d.span_m);
    attach(o, Field::kHeight, o.height_m, d.height_m);
    attach(o, Field::kWidth, o.width_m, d.width_m);
    attach(o, Field::kDepth, o.depth_m, d.depth_m);
    attach(o, Field::kDiameter, o.diameter_m, d.diameter_m);
  }
  return objects;
}

std::vector<CatalogObject> filter_leo(std::span<const CatalogObject> objects,
                                      LeoFilterReport* report) {
  LeoFilterReport local;
  std::vector<CatalogObject> kept;
  for (const auto& o : objects) {
    if (!o.perigee_km || !o.apogee_km) {
      ++local.dropped_missing_orbit;
      continue;
    }
    const double mean_altitude = (*o.perigee_km + *o.apogee_km) / 2.0;
    if (mean_altitude > kLeoMaxMeanAltitudeKm) {
      ++local.dropped_above_leo;
      continue;
    }
    kept.push_back(o);
  }
  local.kept = kept.size();
  if (report) *report = local;
  return kept;
}

void write_objects_csv(std::ostream& out,
                       std::span<const CatalogObject> objects) {
  std::vector<std::string> row(std::begin(kObjectColumns), std::end(kObjectColumns));
  write_csv_row(out, row);
  for (const auto& o : objects) {
    std::string prov(kFieldCount, '-');
    for (std::size_t i = 0; i < kFieldCount; ++i) {
      switch (o.provenance[i]) {
        case Provenance::kSatcat: prov[i] = 'S'; break;
        case Provenance::kDiscos: prov[i] = 'D'; break;
        case Provenance::kAbsent: break;
      }
    }
    row = {o.intl_designator,
           std::to_string(o.norad_id),
           o.name,
           opt_text(o.object_type),
           opt_text(o.ops_status_code),
           opt_text(o.owner),
           opt_date(o.launch_date),
           opt_text(o.launch_site),
           opt_date(o.decay_date),
           opt_num(o.period_min),
           opt_num(o.inclination_deg),
           opt_num(o.apogee_km),
           opt_num(o.perigee_km),
           opt_num(o.rcs_m2),
           opt_text(o.orbit_type),
           opt_text(o.object_class),
           opt_text(o.shape),
           opt_num(o.mass_kg),
           opt_num(o.span_m),
           opt_num(o.height_m),
           opt_num(o.width_m),
           opt_num(o.depth_m),
           opt_num(o.diameter_m),
           prov};
    write_csv_row(out, row);
  }
}

std::vector<CatalogObject> read_objects_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw ParseError("dataset: empty input");
  const std::size_t n_cols = std::size(kObjectColumns);
  if (fields.size() != n_cols ||
      !std::equal(fields.begin(), fields.end(), std::begin(kObjectColumns))) {
    throw ParseError("dataset: unexpected header");
  }
  std::vector<CatalogObject> objects;
  while (reader.next(fields)) {
    if (fields.size() != n_cols) {
      throw ParseError("dataset line " + std::to_string(reader.line()) +
                       ": expected " + std::to_string(n_cols) + " fields");
    }
    auto fail = [&](std::string_view what) {
      throw ParseError("dataset line " + std::to_string(reader.line()) +
                       ": bad " + std::string(what));
    };
    auto num = [&](std::size_t c) -> std::optional<double> {
      if (trim(fields[c]).empty()) return std::nullopt;
      const auto v = parse_double(fields[c]);
      if (!v) fail(kObjectColumns[c]);
      return v;
    };
    auto date = [&](std::size_t c) -> std::optional<Date> {
      if (trim(fields[c]).empty()) return std::nullopt;
      const auto d = parse_date(fields[c]);
      if (!d) fail(kObjectColumns[c]);
      return d;
    };
    CatalogObject o;
    o.intl_designator = fields[0];
    const auto norad = parse_int(fields[1]);
    if (!norad) fail("norad_id");
    o.norad_id = *norad;
    o.name = fields[2];
    o.object_type = text_cell(fields[3]);
    o.ops_status_code = text_cell(fields[4]);
    o.owner = text_cell(fields[5]);
    o.launch_date = date(6);
    o.launch_site = text_cell(fields[7]);
    o.decay_date = date(8);
    o.period_min = num(9);
    o.inclination_deg = num(10);
    o.apogee_km = num(11);
    o.perigee_km = num(12);
    o.rcs_m2 = num(13);
    o.orbit_type = text_cell(fields[14]);
    o.object_class = text_cell(fields[15]);
    o.shape = text_cell(fields[16]);
    o.mass_kg = num(17);
    o.span_m = num(18);
    o.height_m = num(19);
    o.width_m = num(20);
    o.depth_m = num(21);
    o.diameter_m = num(22);
    const std::string& prov = fields[23];
    if (prov.size() != kFieldCount) fail("provenance");
    for (std::size_t i = 0; i < kFieldCount; ++i) {
      switch (prov[i]) {
        case 'S': o.provenance[i] = Provenance::kSatcat; break;
        case 'D': o.provenance[i] = Provenance::kDiscos; break;
        case '-': o.provenance[i] = Provenance::kAbsent; break;
        default: fail("provenance");
      }
      if ((o.provenance[i] != Provenance::kAbsent) != o.has(static_cast<Field>(i))) {
        fail("provenance");
      }
    }
    objects.push_back(std::move(o));
  }
  return objects;
}

}  // namespace rso
