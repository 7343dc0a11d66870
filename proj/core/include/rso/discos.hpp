#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rso/catalog.hpp"

namespace rso {

// Offline source: the first page of a paginated dump. `links.next` of each
// page names the following page file relative to the first page's directory.
struct DiscosFixture {
  std::filesystem::path first_page;
};

// Live DISCOSweb source. The bearer token is read from `token_env` at fetch
// time; requests are issued strictly one at a time.
struct DiscosEndpoint {
  std::string base_url = "https://discosweb.esoc.esa.int";
  std::string path = "/api/objects";
  std::string token_env = "DISCOS_TOKEN";
  std::size_t page_size = 100;
  int max_retries = 6;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::seconds timeout{60};
};

using DiscosSource = std::variant<DiscosFixture, DiscosEndpoint>;

struct DiscosPage {
  std::vector<DiscosRecord> records;
  std::optional<std::string> next;
  std::size_t skipped_without_designator = 0;
  std::size_t non_positive_dimensions = 0;
};

// Parses one page body:
//   {"data": [{"attributes": {"cosparId": str|null, "satno": int|null,
//              "objectClass": str|null, "shape": str|null,
//              "mass"|"span"|"height"|"width"|"depth"|"diameter": num|null}}],
//    "links": {"next": str|null}}
// Absent attribute keys are treated as null. Entries without a cosparId are
// skipped; non-positive dimensions become missing. Any type mismatch throws
// SchemaError whose message begins with the key path.
DiscosPage parse_discos_page(std::string_view json_text);

struct DiscosFetchReport {
  std::size_t pages = 0;
  std::size_t records = 0;
  std::size_t skipped_without_designator = 0;
  std::size_t non_positive_dimensions = 0;
  std::size_t rate_limit_retries = 0;
};

// Follows pagination to the end and returns every record in page order.
// Live mode retries 429 responses with exponential backoff (honouring
// Retry-After), throws CredentialError for a missing token or 401/403, and
// NetworkError once retries are exhausted.
std::vector<DiscosRecord> fetch_discos(const DiscosSource& source,
                                       DiscosFetchReport* report = nullptr);

// Writes `records` as a fixture of ceil(n / page_size) page files named
// page-1.json, page-2.json, ... in `dir` (an empty input still produces
// page-1.json). Returns the path of the first page.
std::filesystem::path write_discos_fixture(const std::filesystem::path& dir,
                                           const std::vector<DiscosRecord>& records,
                                           std::size_t page_size = 100);

}  // namespace rso
