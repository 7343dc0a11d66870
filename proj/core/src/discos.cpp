#include "rso/discos.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "rso/csv.hpp"
#include "rso/error.hpp"

namespace rso {
namespace {

using nlohmann::json;

std::string type_name(const json& v) { return v.type_name(); }

std::optional<std::string> opt_string(const json& attrs, const char* key,
                                      const std::string& path) {
  const auto it = attrs.find(key);
  if (it == attrs.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw SchemaError(path + "." + key + ": expected string or null, got " +
                      type_name(*it));
  }
  auto s = it->get<std::string>();
  if (s.empty()) return std::nullopt;
  return s;
}

std::optional<double> opt_number(const json& attrs, const char* key,
                                 const std::string& path) {
  const auto it = attrs.find(key);
  if (it == attrs.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) {
    throw SchemaError(path + "." + key + ": expected number or null, got " +
                      type_name(*it));
  }
  return it->get<double>();
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("DISCOS fixture page not found: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void accumulate(DiscosFetchReport& report, std::vector<DiscosRecord>& out,
                DiscosPage& page) {
  ++report.pages;
  report.skipped_without_designator += page.skipped_without_designator;
  report.non_positive_dimensions += page.non_positive_dimensions;
  for (auto& r : page.records) out.push_back(std::move(r));
}

std::vector<DiscosRecord> fetch_fixture(const DiscosFixture& fx,
                                        DiscosFetchReport& report) {
  std::vector<DiscosRecord> out;
  const auto dir = fx.first_page.parent_path();
  std::set<std::filesystem::path> visited;
  std::optional<std::filesystem::path> next = fx.first_page;
  while (next) {
    const auto canonical = next->lexically_normal();
    if (!visited.insert(canonical).second) {
      throw SchemaError("links.next: pagination cycle at " + canonical.string());
    }
    auto page = parse_discos_page(read_file(canonical));
    next.reset();
    if (page.next) next = dir / *page.next;
    accumulate(report, out, page);
  }
  return out;
}

// Reduces an absolute next link to the path+query part so that it can be
// issued against the configured client.
std::string request_target(const std::string& link) {
  const auto scheme = link.find("://");
  if (scheme == std::string::npos) return link;
  const auto slash = link.find('/', scheme + 3);
  return slash == std::string::npos ? std::string("/") : link.substr(slash);
}

std::vector<DiscosRecord> fetch_live(const DiscosEndpoint& ep,
                                     DiscosFetchReport& report) {
  const char* token = std::getenv(ep.token_env.c_str());
  if (token == nullptr || *token == '\0') {
    throw CredentialError("DISCOS: environment variable " + ep.token_env +
                          " is not set");
  }
  httplib::Client client(ep.base_url);
  client.set_connection_timeout(ep.timeout);
  client.set_read_timeout(ep.timeout);
  const httplib::Headers headers = {
      {"Authorization", std::string("Bearer ") + token},
      {"DiscosWeb-Api-Version", "2"},
      {"Accept", "application/json"}};

  std::vector<DiscosRecord> out;
  std::optional<std::string> target =
      ep.path + "?page%5Bsize%5D=" + std::to_string(ep.page_size) +
      "&page%5Bnumber%5D=1";
  std::set<std::string> visited;
  while (target) {
    if (!visited.insert(*target).second) {
      throw SchemaError("links.next: pagination cycle at " + *target);
    }
    auto backoff = ep.initial_backoff;
    std::string body;
    for (int attempt = 0;; ++attempt) {
      auto res = client.Get(*target, headers);
      if (res && res->status == 200) {
        body = res->body;
        break;
      }
      if (res && (res->status == 401 || res->status == 403)) {
        throw CredentialError("DISCOS: authentication rejected (HTTP " +
                              std::to_string(res->status) + ")");
      }
      const bool retryable = !res || res->status == 429 || res->status >= 500;
      if (!retryable) {
        throw NetworkError("DISCOS: HTTP " + std::to_string(res->status) +
                           " for " + *target);
      }
      if (attempt >= ep.max_retries) {
        throw NetworkError(
            "DISCOS: giving up on " + *target + " after " +
            std::to_string(attempt + 1) + " attempts (" +
            (res ? "HTTP " + std::to_string(res->status)
                 : httplib::to_string(res.error())) +
            ")");
      }
      auto wait = backoff;
      if (res && res->has_header("Retry-After")) {
        if (const auto s = parse_int(res->get_header_value("Retry-After"))) {
          wait = std::max<std::chrono::milliseconds>(wait, std::chrono::seconds(*s));
        }
      }
      if (res && res->status == 429) ++report.rate_limit_retries;
      std::this_thread::sleep_for(wait);
      backoff *= 2;
    }
    auto page = parse_discos_page(body);
    target.reset();
    if (page.next) target = request_target(*page.next);
    accumulate(report, out, page);
  }
  return out;
}

json page_json(std::span<const DiscosRecord> records,
               const std::optional<std::string>& next) {
  json data = json::array();
  auto put = [](json& attrs, const char* key, const auto& v) {
    if (v) {
      attrs[key] = *v;
    } else {
      attrs[key] = nullptr;
    }
  };
  for (const auto& r : records) {
    json attrs = json::object();
    attrs["cosparId"] = r.intl_designator;
    put(attrs, "satno", r.norad_id);
    put(attrs, "objectClass", r.object_class);
    put(attrs, "shape", r.shape);
    put(attrs, "mass", r.mass_kg);
    put(attrs, "span", r.span_m);
    put(attrs, "height", r.height_m);
    put(attrs, "width", r.width_m);
    put(attrs, "depth", r.depth_m);
    put(attrs, "diameter", r.diameter_m);
    data.push_back({{"type", "object"}, {"attributes", std::move(attrs)}});
  }
  json links = json::object();
  if (next) {
    links["next"] = *next;
  } else {
    links["next"] = nullptr;
  }
  return {{"data", std::move(data)}, {"links", std::move(links)}};
}

}  // namespace

DiscosPage parse_discos_page(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("$: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw SchemaError("$: expected object, got " + type_name(doc));
  }
  const auto data = doc.find("data");
  if (data == doc.end()) throw SchemaError("data: missing key");
  if (!data->is_array()) {
    throw SchemaError("data: expected array, got " + type_name(*data));
  }

  DiscosPage page;
  for (std::size_t i = 0; i < data->size(); ++i) {
    const json& entry = (*data)[i];
    const std::string path = "data[" + std::to_string(i) + "]";
    if (!entry.is_object()) {
      throw SchemaError(path + ": expected object, got " + type_name(entry));
    }
    const auto attrs_it = entry.find("attributes");
    if (attrs_it == entry.end()) throw SchemaError(path + ".attributes: missing key");
    if (!attrs_it->is_object()) {
      throw SchemaError(path + ".attributes: expected object, got " +
                        type_name(*attrs_it));
    }
    const json& attrs = *attrs_it;
    const std::string apath = path + ".attributes";

    DiscosRecord r;
    const auto cospar = opt_string(attrs, "cosparId", apath);
    if (const auto it = attrs.find("satno"); it != attrs.end() && !it->is_null()) {
      if (!it->is_number_integer()) {
        throw SchemaError(apath + ".satno: expected integer or null, got " +
                          type_name(*it));
      }
      r.norad_id = it->get<std::int64_t>();
    }
    r.object_class = opt_string(attrs, "objectClass", apath);
    r.shape = opt_string(attrs, "shape", apath);
    const std::pair<const char*, std::optional<double>*> dims[] = {
        {"mass", &r.mass_kg},     {"span", &r.span_m},   {"height", &r.height_m},
        {"width", &r.width_m},    {"depth", &r.depth_m}, {"diameter", &r.diameter_m}};
    for (const auto& [key, dst] : dims) {
      auto v = opt_number(attrs, key, apath);
      if (v && !(*v > 0.0)) {
        ++page.non_positive_dimensions;
        v.reset();
      }
      *dst = v;
    }
    if (!cospar) {
      ++page.skipped_without_designator;
      continue;
    }
    r.intl_designator = *cospar;
    page.records.push_back(std::move(r));
  }

  if (const auto links = doc.find("links"); links != doc.end() && !links->is_null()) {
    if (!links->is_object()) {
      throw SchemaError("links: expected object, got " + type_name(*links));
    }
    page.next = opt_string(*links, "next", "links");
  }
  return page;
}

std::vector<DiscosRecord> fetch_discos(const DiscosSource& source,
                                       DiscosFetchReport* report) {
  DiscosFetchReport local;
  std::vector<DiscosRecord> records = std::visit(
      [&](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, DiscosFixture>) {
          return fetch_fixture(s, local);
        } else {
          return fetch_live(s, local);
        }
      },
      source);
  local.records = records.size();
  if (report) *report = local;
  return records;
}

std::filesystem::path write_discos_fixture(const std::filesystem::path& dir,
                                           const std::vector<DiscosRecord>& records,
                                           std::size_t page_size) {
  if (page_size == 0) throw ArgumentError("DISCOS fixture page size must be positive");
  std::filesystem::create_directories(dir);
  const std::size_t pages =
      records.empty() ? 1 : (records.size() + page_size - 1) / page_size;
  for (std::size_t p = 0; p < pages; ++p) {
    const std::size_t begin = p * page_size;
    const std::size_t end = std::min(records.size(), begin + page_size);
    std::optional<std::string> next;
    if (p + 1 < pages) next = "page-" + std::to_string(p + 2) + ".json";
    const auto doc = page_json(
        std::span<const DiscosRecord>(records).subspan(begin, end - begin), next);
    std::ofstream out(dir / ("page-" + std::to_string(p + 1) + ".json"),
                      std::ios::binary);
    out << doc.dump(1) << '\n';
  }
  return dir / "page-1.json";
}

}  // namespace rso
