#pragma once

#include <string_view>

namespace rso::detail {

// Contents of data/taxonomy_rules.json, embedded at configure time.
extern const std::string_view kDefaultRulesJson;

}  // namespace rso::detail
