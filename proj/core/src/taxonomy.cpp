#include "rso/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "default_rules.hpp"
#include "json.hpp"
#include "rso/csv.hpp"
#include "rso/error.hpp"

namespace rso {
namespace {

using nlohmann::json;

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Lower-case, trimmed, runs of blanks collapsed to one space.
std::string normalize_text(std::string_view s) {
  std::string out;
  bool space = false;
  for (const char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

void check_vocabulary(const std::vector<std::string>& labels, const std::string& what) {
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty()) throw ValidationError(what + ": empty label");
    if (!seen.insert(l).second) throw ValidationError(what + ": duplicate label " + l);
  }
  if (!seen.count(std::string(kUnknown))) {
    throw ValidationError(what + ": vocabulary must include Unknown");
  }
}

NumericBins parse_bins(const json& j, const std::string& name) {
  NumericBins b;
  b.name = name;
  b.labels = j.at("labels").get<std::vector<std::string>>();
  for (const auto& cut : j.at("cuts")) {
    b.cuts.push_back(cut.at("value").get<double>());
    const auto owner = cut.at("owner").get<std::string>();
    if (owner != "below" && owner != "above") {
      throw SchemaError("numeric." + name + ".cuts: owner must be 'below' or 'above'");
    }
    b.owner_below.push_back(owner == "below");
  }
  const auto& dom = j.at("domain");
  b.domain_min = dom.at("min").get<double>();
  if (!dom.at("max").is_null()) b.domain_max = dom.at("max").get<double>();
  return b;
}

json bins_to_json(const NumericBins& b, std::string_view unit) {
  json cuts = json::array();
  for (std::size_t i = 0; i < b.cuts.size(); ++i) {
    cuts.push_back({{"value", b.cuts[i]}, {"owner", b.owner_below[i] ? "below" : "above"}});
  }
  return {{"unit", unit},
          {"labels", b.labels},
          {"cuts", cuts},
          {"domain",
           {{"min", b.domain_min},
            {"max", b.domain_max ? json(*b.domain_max) : json(nullptr)}}}};
}

std::string fmt_bound(double v) { return format_double(v); }

std::string interval(const NumericBins& b, std::size_t i) {
  std::string lo = i == 0 ? "[" + fmt_bound(b.domain_min)
                          : (b.owner_below[i - 1] ? "(" : "[") + fmt_bound(b.cuts[i - 1]);
  std::string hi;
  if (i == b.cuts.size()) {
    hi = b.domain_max ? fmt_bound(*b.domain_max) + "]" : "inf)";
  } else {
    hi = fmt_bound(b.cuts[i]) + (b.owner_below[i] ? "]" : ")");
  }
  return lo + ", " + hi;
}

template <typename Fn>
std::string or_unknown(Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError&) {
    return std::string(kUnknown);
  }
}

}  // namespace

const std::string& NumericBins::bin(double value) const {
  if (std::isnan(value) || value < domain_min || (domain_max && value > *domain_max)) {
    throw ValidationError(name + " value " + format_double(value) + " is outside [" +
                          format_double(domain_min) + ", " +
                          (domain_max ? format_double(*domain_max) : std::string("inf")) + "]");
  }
  std::size_t i = 0;
  while (i < cuts.size() &&
         (value > cuts[i] || (value == cuts[i] && !owner_below[i]))) {
    ++i;
  }
  return labels[i];
}

void NumericBins::validate() const {
  if (labels.size() != cuts.size() + 1) {
    throw ValidationError(name + ": need exactly one more label than cut points");
  }
  if (owner_below.size() != cuts.size()) throw ValidationError(name + ": owner list mismatch");
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty() || l == kUnknown || !seen.insert(l).second) {
      throw ValidationError(name + ": labels must be unique, non-empty and not Unknown");
    }
  }
  double prev = domain_min;
  for (const double c : cuts) {
    if (!std::isfinite(c) || !(c > prev)) {
      throw ValidationError(name + ": cut points must be finite, ascending and inside the domain");
    }
    prev = c;
  }
  if (domain_max && !(*domain_max > prev)) {
    throw ValidationError(name + ": domain maximum must exceed the last cut point");
  }
}

void TaxonomyRules::validate() const {
  for (const auto* b : {&altitude, &inclination, &rcs, &mass}) b->validate();
  check_vocabulary(object_class_labels, "object_class");
  for (const auto& [text, label] : object_classes) {
    if (!contains(object_class_labels, label)) {
      throw ValidationError("object_class: '" + text + "' maps to unknown label " + label);
    }
  }
  check_vocabulary(shape_labels, "shape");
  for (const auto& r : shape_rules) {
    if (r.keyword.empty() || lower(r.keyword) != r.keyword) {
      throw ValidationError("shape: keywords must be non-empty lower-case text");
    }
    if (!contains(shape_labels, r.label)) {
      throw ValidationError("shape: rule '" + r.keyword + "' uses unknown label " + r.label);
    }
  }
  if (!contains(shape_labels, shape_fallback)) {
    throw ValidationError("shape: fallback label is not in the vocabulary");
  }
}

TaxonomyRules parse_rules(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("taxonomy rules: invalid JSON: ") + e.what());
  }
  TaxonomyRules r;
  try {
    if (doc.at("format").get<std::string>() != "rso-taxa.taxonomy-rules") {
      throw SchemaError("taxonomy rules: unexpected format tag");
    }
    r.version = doc.at("version").get<int>();
    if (r.version != 1) throw SchemaError("taxonomy rules: unsupported version");
    const auto& num = doc.at("numeric");
    r.altitude = parse_bins(num.at("altitude"), "altitude");
    r.inclination = parse_bins(num.at("inclination"), "inclination");
    r.rcs = parse_bins(num.at("rcs"), "rcs");
    r.mass = parse_bins(num.at("mass"), "mass");
    const auto& oc = doc.at("object_class");
    r.object_class_labels = oc.at("labels").get<std::vector<std::string>>();
    for (const auto& m : oc.at("map")) {
      r.object_classes.emplace_back(m.at("text").get<std::string>(),
                                    m.at("label").get<std::string>());
    }
    const auto& sh = doc.at("shape");
    r.shape_labels = sh.at("labels").get<std::vector<std::string>>();
    for (const auto& rule : sh.at("rules")) {
      r.shape_rules.push_back({rule.at("keyword").get<std::string>(),
                               rule.at("label").get<std::string>()});
    }
    r.shape_fallback = sh.at("fallback").get<std::string>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("taxonomy rules: ") + e.what());
  }
  try {
    r.validate();
  } catch (const ValidationError& e) {
    throw SchemaError(std::string("taxonomy rules: ") + e.what());
  }
  return r;
}

TaxonomyRules load_rules(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("taxonomy rules file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str());
}

const TaxonomyRules& default_rules() {
  static const TaxonomyRules rules = parse_rules(detail::kDefaultRulesJson);
  return rules;
}

std::string rules_to_json(const TaxonomyRules& r) {
  json classes = json::array();
  for (const auto& [text, label] : r.object_classes) {
    classes.push_back({{"text", text}, {"label", label}});
  }
  json shapes = json::array();
  for (const auto& s : r.shape_rules) shapes.push_back({{"keyword", s.keyword}, {"label", s.label}});
  const json doc = {
      {"format", "rso-taxa.taxonomy-rules"},
      {"version", r.version},
      {"numeric",
       {{"altitude", bins_to_json(r.altitude, "km")},
        {"inclination", bins_to_json(r.inclination, "deg")},
        {"rcs", bins_to_json(r.rcs, "m2")},
        {"mass", bins_to_json(r.mass, "kg")}}},
      {"object_class", {{"labels", r.object_class_labels}, {"map", classes}}},
      {"shape", {{"labels", r.shape_labels}, {"rules", shapes}, {"fallback", r.shape_fallback}}}};
  return doc.dump(2) + "\n";
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::kActive: return "Active";
    case Status::kInactive: return "Inactive";
    case Status::kUnknown: break;
  }
  return kUnknown;
}

std::string_view to_string(Constellation c) {
  switch (c) {
    case Constellation::kMember: return "Member";
    case Constellation::kNonMember: return "NonMember";
    case Constellation::kUnknown: break;
  }
  return kUnknown;
}

std::string_view to_string(Manoeuvrability m) {
  switch (m) {
    case Manoeuvrability::kManoeuvrable: return "Manoeuvrable";
    case Manoeuvrability::kNonManoeuvrable: return "NonManoeuvrable";
    case Manoeuvrability::kUnknown: break;
  }
  return kUnknown;
}

std::optional<Status> parse_status(std::string_view text) {
  const auto t = lower(trim(text));
  if (t.empty() || t == "unknown") return Status::kUnknown;
  if (t == "active") return Status::kActive;
  if (t == "inactive") return Status::kInactive;
  return std::nullopt;
}

std::optional<Constellation> parse_constellation(std::string_view text) {
  const auto t = lower(trim(text));
  if (t.empty() || t == "unknown") return Constellation::kUnknown;
  if (t == "member") return Constellation::kMember;
  if (t == "nonmember") return Constellation::kNonMember;
  return std::nullopt;
}

std::optional<Manoeuvrability> parse_manoeuvrability(std::string_view text) {
  const auto t = lower(trim(text));
  if (t.empty() || t == "unknown") return Manoeuvrability::kUnknown;
  if (t == "manoeuvrable") return Manoeuvrability::kManoeuvrable;
  if (t == "nonmanoeuvrable") return Manoeuvrability::kNonManoeuvrable;
  return std::nullopt;
}

std::optional<double> mean_altitude(std::optional<double> perigee_km,
                                    std::optional<double> apogee_km) {
  if (!perigee_km || !apogee_km) return std::nullopt;
  return (*perigee_km + *apogee_km) / 2.0;
}

std::string sma_bin(std::optional<double> mean_alt_km, const TaxonomyRules& rules) {
  return mean_alt_km ? rules.altitude.bin(*mean_alt_km) : std::string(kUnknown);
}

std::string inclination_bin(std::optional<double> inclination_deg, const TaxonomyRules& rules) {
  return inclination_deg ? rules.inclination.bin(*inclination_deg) : std::string(kUnknown);
}

std::string rcs_bin(std::optional<double> rcs_m2, const TaxonomyRules& rules) {
  return rcs_m2 ? rules.rcs.bin(*rcs_m2) : std::string(kUnknown);
}

std::string mass_bin(std::optional<double> mass_kg, const TaxonomyRules& rules) {
  return mass_kg ? rules.mass.bin(*mass_kg) : std::string(kUnknown);
}

std::string object_class_bin(const std::optional<std::string>& object_class,
                             const TaxonomyRules& rules) {
  if (!object_class) return std::string(kUnknown);
  const auto key = normalize_text(*object_class);
  for (const auto& [text, label] : rules.object_classes) {
    if (normalize_text(text) == key) return label;
  }
  return std::string(kUnknown);
}

std::string shape_bin(const std::optional<std::string>& shape, const TaxonomyRules& rules) {
  if (!shape) return std::string(kUnknown);
  const auto ws = words(*shape);
  if (ws.empty()) return std::string(kUnknown);
  for (const auto& rule : rules.shape_rules) {
    for (const auto& w : ws) {
      if (w.starts_with(rule.keyword)) return rule.label;
    }
  }
  return rules.shape_fallback;
}

CharPath characteristics_path(const CatalogObject& o, const Annotations& ann,
                              const TaxonomyRules& rules) {
  CharPath p;
  p.levels[0] = std::string(to_string(ann.status));
  p.levels[1] = std::string(to_string(ann.constellation));
  p.levels[2] = std::string(to_string(ann.manoeuvrability));
  p.levels[3] = object_class_bin(o.object_class, rules);
  p.levels[4] = shape_bin(o.shape, rules);
  p.levels[5] = or_unknown([&] { return rcs_bin(o.rcs_m2, rules); });
  p.levels[6] = or_unknown([&] { return mass_bin(o.mass_kg, rules); });
  return p;
}

OrbitPath orbit_path(const CatalogObject& o, const TaxonomyRules& rules) {
  OrbitPath p;
  p.levels[0] = or_unknown([&] { return sma_bin(mean_altitude(o.perigee_km, o.apogee_km), rules); });
  p.levels[1] = or_unknown([&] { return inclination_bin(o.inclination_deg, rules); });
  return p;
}

TaxonomyAssignment classify(const CatalogObject& o, const Annotations& ann,
                            const TaxonomyRules& rules) {
  return {o.intl_designator, characteristics_path(o, ann, rules), orbit_path(o, rules)};
}

std::vector<std::pair<std::string, Annotations>> read_annotations(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) return {};
  const std::vector<std::string> want = {"intl_designator", "status", "constellation",
                                         "manoeuvrability"};
  if (row != want) {
    throw ParseError("annotations: header must be intl_designator,status,constellation,manoeuvrability");
  }
  std::vector<std::pair<std::string, Annotations>> out;
  while (reader.next(row)) {
    const auto where = "annotations line " + std::to_string(reader.line());
    if (row.size() != 4) throw ParseError(where + ": expected 4 fields");
    const auto s = parse_status(row[1]);
    const auto c = parse_constellation(row[2]);
    const auto m = parse_manoeuvrability(row[3]);
    if (!s || !c || !m) throw ParseError(where + ": unknown annotation value");
    out.emplace_back(normalize_designator(row[0]), Annotations{*s, *c, *m});
  }
  return out;
}

void write_assignments_csv(std::ostream& out, std::span<const TaxonomyAssignment> rows) {
  std::vector<std::string> header = {"intl_designator"};
  for (const auto l : kCharLevels) header.emplace_back(l);
  for (const auto l : kOrbitLevels) header.emplace_back(l);
  write_csv_row(out, header);
  for (const auto& a : rows) {
    std::vector<std::string> f = {a.intl_designator};
    for (const auto& l : a.characteristics.levels) f.push_back(l);
    for (const auto& l : a.orbit.levels) f.push_back(l);
    write_csv_row(out, f);
  }
}

std::vector<TaxonomyAssignment> read_assignments_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row) || row.size() != 10 || row[0] != "intl_designator") {
    throw ParseError("taxonomy assignments: unexpected header");
  }
  std::vector<TaxonomyAssignment> out;
  while (reader.next(row)) {
    if (row.size() != 10) {
      throw ParseError("taxonomy assignments line " + std::to_string(reader.line()) +
                       ": expected 10 fields");
    }
    TaxonomyAssignment a;
    a.intl_designator = row[0];
    for (std::size_t i = 0; i < 7; ++i) a.characteristics.levels[i] = row[1 + i];
    for (std::size_t i = 0; i < 2; ++i) a.orbit.levels[i] = row[8 + i];
    out.push_back(std::move(a));
  }
  return out;
}

std::string taxonomy_reference(const TaxonomyRules& r) {
  std::ostringstream md;
  md << "# Taxonomy reference\n\n"
     << "Every object receives one leaf in each of two trees. Missing or unusable "
        "inputs fall into `Unknown` at the affected level only.\n\n"
     << "## Object characteristics\n\n"
     << "| Level | Field | Values |\n|---|---|---|\n"
     << "| 1 | status | Active, Inactive, Unknown |\n"
     << "| 2 | constellation | Member, NonMember, Unknown |\n"
     << "| 3 | manoeuvrability | Manoeuvrable, NonManoeuvrable, Unknown |\n";
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
    return s;
  };
  md << "| 4 | object class | " << join(r.object_class_labels) << " |\n"
     << "| 5 | shape | " << join(r.shape_labels) << " |\n"
     << "| 6 | radar cross-section | " << join(r.rcs.labels) << ", Unknown |\n"
     << "| 7 | mass | " << join(r.mass.labels) << ", Unknown |\n\n"
     << "Levels 1 to 3 come from the annotation table when one is supplied.\n\n"
     << "### Object class mapping\n\n| Catalogue text | Label |\n|---|---|\n";
  for (const auto& [text, label] : r.object_classes) md << "| " << text << " | " << label << " |\n";
  md << "\nOther text maps to Unknown.\n\n### Shape keywords\n\n"
     << "Rules apply in order; a rule matches when a word of the shape text starts with "
        "the keyword (case-insensitive).\n\n| Keyword | Label |\n|---|---|\n";
  for (const auto& s : r.shape_rules) md << "| " << s.keyword << " | " << s.label << " |\n";
  md << "\nNon-empty text without a match is " << r.shape_fallback << ".\n\n";
  md << "## Orbit localisation\n\n"
     << "Level 1 bins the mean altitude (perigee + apogee) / 2; level 2 the inclination.\n\n";
  const std::pair<const NumericBins*, const char*> families[] = {
      {&r.altitude, "Mean altitude (km)"},
      {&r.inclination, "Inclination (deg)"},
      {&r.rcs, "Radar cross-section (m2)"},
      {&r.mass, "Mass (kg)"}};
  md << "## Numeric bins\n";
  for (const auto& [bins, title] : families) {
    md << "\n### " << title << "\n\n| Label | Interval |\n|---|---|\n";
    for (std::size_t i = 0; i < bins->labels.size(); ++i) {
      md << "| " << bins->labels[i] << " | " << interval(*bins, i) << " |\n";
    }
  }
  return md.str();
}

}  // namespace rso
