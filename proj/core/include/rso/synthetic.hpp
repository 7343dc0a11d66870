#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "rso/catalog.hpp"

namespace rso {

// Populations resembling the low Earth orbit catalogue: broadband
// constellation shells, sun-synchronous payloads, cubesats, rocket bodies,
// fragmentation debris and mission-related objects, plus objects above LEO
// and objects with no orbit so that filtering has work to do.
struct SyntheticOptions {
  std::size_t leo_objects = 2000;
  std::size_t non_leo_objects = 300;
  std::size_t no_orbit_objects = 20;
  // Fraction of SATCAT objects that get a DISCOS record.
  double discos_coverage = 0.92;
  std::uint64_t seed = 20240501;
};

struct SyntheticCatalog {
  std::vector<SatcatRecord> satcat;
  std::vector<DiscosRecord> discos;
};

SyntheticCatalog make_synthetic_catalog(const SyntheticOptions& options = {});

// Writes <dir>/satcat.csv and <dir>/discos/page-N.json.
void write_fixture(const std::filesystem::path& dir, const SyntheticCatalog& catalog,
                   std::size_t page_size = 100);

}  // namespace rso
