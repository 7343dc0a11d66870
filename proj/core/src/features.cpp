#include "rso/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "rso/error.hpp"
#include "rso/hash.hpp"

namespace rso {
namespace {

using nlohmann::json;

constexpr std::string_view kRealNames[] = {
    "perigee_km", "apogee_km", "inclination_deg", "period_min",
    "rcs_m2",     "mass_kg",   "span_m",          "height_m",
    "width_m",    "depth_m",   "diameter_m",      "launch_year"};
constexpr std::string_view kCategoricalNames[] = {
    "object_class", "shape",       "ops_status_code",
    "owner",        "launch_site", "orbit_basis_code"};

constexpr std::string_view kAllNames[] = {
    "perigee_km",   "apogee_km",   "inclination_deg", "period_min",
    "rcs_m2",       "mass_kg",     "span_m",          "height_m",
    "width_m",      "depth_m",     "diameter_m",      "launch_year",
    "object_class", "shape",       "ops_status_code", "owner",
    "launch_site",  "orbit_basis_code"};

bool is_real_name(std::string_view name) {
  return std::find(std::begin(kRealNames), std::end(kRealNames), name) !=
         std::end(kRealNames);
}
bool is_categorical_name(std::string_view name) {
  return std::find(std::begin(kCategoricalNames), std::end(kCategoricalNames),
                   name) != std::end(kCategoricalNames);
}

json descriptor_to_json(const FeatureDescriptor& f, bool with_stats) {
  json j = {{"name", f.name},
            {"kind", f.kind == FeatureKind::kReal ? "real" : "categorical"}};
  if (f.kind == FeatureKind::kCategorical) {
    j["vocabulary"] = f.vocabulary;
  } else if (with_stats) {
    j["stats"] = {{"mean", f.stats.mean},
                  {"variance", f.stats.variance},
                  {"observed", f.stats.observed}};
  }
  return j;
}

}  // namespace

std::vector<std::size_t> FeatureSchema::real_features() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].kind == FeatureKind::kReal) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FeatureSchema::categorical_features() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].kind == FeatureKind::kCategorical) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FeatureSchema::vocabulary_sizes() const {
  std::vector<std::size_t> out;
  for (const auto i : categorical_features()) {
    out.push_back(features[i].vocabulary.size());
  }
  return out;
}

void FeatureSchema::validate() const {
  if (features.size() != kSchemaFeatureCount) {
    throw SchemaError("features: expected " + std::to_string(kSchemaFeatureCount) +
                      " entries, got " + std::to_string(features.size()));
  }
  std::set<std::string> names;
  std::size_t reals = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const std::string path = "features[" + std::to_string(i) + "]";
    if (!names.insert(f.name).second) {
      throw SchemaError(path + ".name: duplicate feature '" + f.name + "'");
    }
    if (f.kind == FeatureKind::kReal) {
      ++reals;
      if (!is_real_name(f.name)) {
        throw SchemaError(path + ".name: '" + f.name + "' is not a real feature");
      }
      if (!(f.stats.variance >= 0.0) || !std::isfinite(f.stats.mean)) {
        throw SchemaError(path + ".stats: invalid statistics");
      }
    } else {
      if (!is_categorical_name(f.name)) {
        throw SchemaError(path + ".name: '" + f.name +
                          "' is not a categorical feature");
      }
      if (f.vocabulary.empty() || f.vocabulary.front() != kMissingToken) {
        throw SchemaError(path + ".vocabulary: index 0 must be MISSING");
      }
      std::set<std::string> seen;
      for (const auto& v : f.vocabulary) {
        if (!seen.insert(v).second) {
          throw SchemaError(path + ".vocabulary: duplicate entry '" + v + "'");
        }
      }
    }
  }
  if (reals != kSchemaRealCount) {
    throw SchemaError("features: expected " + std::to_string(kSchemaRealCount) +
                      " real features, got " + std::to_string(reals));
  }
}

std::string FeatureSchema::fingerprint() const {
  json j = json::array();
  for (const auto& f : features) j.push_back(descriptor_to_json(f, false));
  return sha256_hex(j.dump());
}

std::span<const std::string_view> known_feature_names() { return kAllNames; }

FeatureKind known_feature_kind(std::string_view name) {
  if (is_real_name(name)) return FeatureKind::kReal;
  if (is_categorical_name(name)) return FeatureKind::kCategorical;
  throw SchemaError("unknown feature '" + std::string(name) + "'");
}

std::optional<double> real_feature_value(const CatalogObject& o,
                                         std::string_view name) {
  if (name == "perigee_km") return o.perigee_km;
  if (name == "apogee_km") return o.apogee_km;
  if (name == "inclination_deg") return o.inclination_deg;
  if (name == "period_min") return o.period_min;
  if (name == "rcs_m2") return o.rcs_m2;
  if (name == "mass_kg") return o.mass_kg;
  if (name == "span_m") return o.span_m;
  if (name == "height_m") return o.height_m;
  if (name == "width_m") return o.width_m;
  if (name == "depth_m") return o.depth_m;
  if (name == "diameter_m") return o.diameter_m;
  if (name == "launch_year") {
    if (!o.launch_date) return std::nullopt;
    return static_cast<double>(static_cast<int>(o.launch_date->year()));
  }
  throw SchemaError("unknown real feature '" + std::string(name) + "'");
}

std::optional<std::string> categorical_feature_value(const CatalogObject& o,
                                                     std::string_view name) {
  if (name == "object_class") return o.object_class;
  if (name == "shape") return o.shape;
  if (name == "ops_status_code") return o.ops_status_code;
  if (name == "owner") return o.owner;
  if (name == "launch_site") return o.launch_site;
  if (name == "orbit_basis_code") return o.orbit_type;
  throw SchemaError("unknown categorical feature '" + std::string(name) + "'");
}

FeatureSchema infer_schema(std::span<const CatalogObject> objects) {
  FeatureSchema schema;
  for (const auto name : kRealNames) {
    schema.features.push_back({std::string(name), FeatureKind::kReal, {}, {}});
  }
  for (const auto name : kCategoricalNames) {
    std::map<std::string, std::size_t> counts;
    for (const auto& o : objects) {
      if (auto v = categorical_feature_value(o, name)) ++counts[*v];
    }
    std::vector<std::pair<std::string, std::size_t>> sorted(counts.begin(),
                                                            counts.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    FeatureDescriptor d{std::string(name), FeatureKind::kCategorical, {}, {}};
    d.vocabulary.emplace_back(kMissingToken);
    for (auto& [value, count] : sorted) {
      if (value != kMissingToken) d.vocabulary.push_back(value);
    }
    schema.features.push_back(std::move(d));
  }
  return schema;
}

FeatureSchema parse_schema(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("$: invalid JSON: ") + e.what());
  }
  FeatureSchema schema;
  try {
    schema.version = doc.at("version").get<int>();
    const auto& features = doc.at("features");
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto& f = features.at(i);
      FeatureDescriptor d;
      d.name = f.at("name").get<std::string>();
      const auto kind = f.at("kind").get<std::string>();
      if (kind == "real") {
        d.kind = FeatureKind::kReal;
        if (const auto s = f.find("stats"); s != f.end()) {
          d.stats.mean = s->at("mean").get<double>();
          d.stats.variance = s->at("variance").get<double>();
          d.stats.observed = s->at("observed").get<std::size_t>();
        }
      } else if (kind == "categorical") {
        d.kind = FeatureKind::kCategorical;
        d.vocabulary = f.at("vocabulary").get<std::vector<std::string>>();
      } else {
        throw SchemaError("features[" + std::to_string(i) +
                          "].kind: expected 'real' or 'categorical'");
      }
      schema.features.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("feature schema: ") + e.what());
  }
  schema.validate();
  return schema;
}

FeatureSchema read_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("feature schema not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_schema(ss.str());
}

std::string schema_to_json(const FeatureSchema& schema) {
  json features = json::array();
  for (const auto& f : schema.features) {
    features.push_back(descriptor_to_json(f, true));
  }
  json doc = {{"version", schema.version}, {"features", std::move(features)}};
  return doc.dump(2) + "\n";
}

void write_schema(const std::filesystem::path& path, const FeatureSchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << schema_to_json(schema);
}

double FeatureMatrix::destandardize(std::size_t c, double z) const {
  const auto& stats = schema.features[schema.real_features()[c]].stats;
  if (stats.variance <= 0.0) return stats.mean;
  return z * std::sqrt(stats.variance) + stats.mean;
}

std::size_t FeatureMatrix::missing_count() const {
  std::size_t n = 0;
  for (const auto m : missing) n += m;
  for (const auto c : codes) n += (c == 0);
  return n;
}

FeatureMatrix build_feature_matrix(std::span<const CatalogObject> objects,
                                   const FeatureSchema& schema,
                                   FeatureMatrixReport* report) {
  schema.validate();
  FeatureMatrixReport local;
  FeatureMatrix m;
  m.schema = schema;
  m.n_rows = objects.size();
  const auto real_idx = schema.real_features();
  const auto cat_idx = schema.categorical_features();
  m.n_real = real_idx.size();
  m.n_categorical = cat_idx.size();
  m.real.assign(m.n_rows * m.n_real, 0.0);
  m.raw.assign(m.n_rows * m.n_real, 0.0);
  m.missing.assign(m.n_rows * m.n_real, 1);
  m.codes.assign(m.n_rows * m.n_categorical, 0);
  m.designators.reserve(m.n_rows);
  for (const auto& o : objects) m.designators.push_back(o.intl_designator);

  for (std::size_t c = 0; c < m.n_real; ++c) {
    auto& desc = m.schema.features[real_idx[c]];
    std::size_t observed = 0;
    double sum = 0.0;
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      if (const auto v = real_feature_value(objects[r], desc.name)) {
        m.raw[r * m.n_real + c] = *v;
        m.missing[r * m.n_real + c] = 0;
        sum += *v;
        ++observed;
      }
    }
    const double mean = observed ? sum / static_cast<double>(observed) : 0.0;
    double ss = 0.0;
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      if (!m.missing[r * m.n_real + c]) {
        const double d = m.raw[r * m.n_real + c] - mean;
        ss += d * d;
      }
    }
    const double variance = observed ? ss / static_cast<double>(observed) : 0.0;
    desc.stats = {mean, variance, observed};
    if (variance <= 0.0) {
      if (observed > 0) local.zero_variance_columns.push_back(desc.name);
      continue;  // standardized values stay 0
    }
    const double sd = std::sqrt(variance);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      if (!m.missing[r * m.n_real + c]) {
        m.real[r * m.n_real + c] = (m.raw[r * m.n_real + c] - mean) / sd;
      }
    }
  }

  for (std::size_t c = 0; c < m.n_categorical; ++c) {
    const auto& desc = schema.features[cat_idx[c]];
    std::unordered_map<std::string, std::int32_t> lookup;
    for (std::size_t i = 0; i < desc.vocabulary.size(); ++i) {
      lookup.emplace(desc.vocabulary[i], static_cast<std::int32_t>(i));
    }
    for (std::size_t r = 0; r < m.n_rows; ++r) {
      const auto v = categorical_feature_value(objects[r], desc.name);
      if (!v) continue;
      const auto it = lookup.find(*v);
      if (it == lookup.end()) {
        ++local.unknown_categories;
        continue;
      }
      m.codes[r * m.n_categorical + c] = it->second;
    }
  }
  if (report) *report = std::move(local);
  return m;
}

std::size_t count_missing(std::span<const CatalogObject> objects,
                          const FeatureSchema& schema) {
  std::size_t n = 0;
  for (const auto& o : objects) {
    for (const auto& f : schema.features) {
      if (f.kind == FeatureKind::kReal) {
        n += !real_feature_value(o, f.name).has_value();
      } else {
        n += !categorical_feature_value(o, f.name).has_value();
      }
    }
  }
  return n;
}

}  // namespace rso
