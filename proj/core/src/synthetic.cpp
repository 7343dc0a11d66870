#include "rso/synthetic.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include "rso/discos.hpp"
#include "rso/error.hpp"
#include "rso/random.hpp"

namespace rso {
namespace {

constexpr double kMu = 398600.4418;
constexpr double kEarthRadius = 6378.137;

enum class Population {
  kStarlink,
  kSunSync,
  kCubesat,
  kRocketBody,
  kFragment,
  kOneWeb,
  kIridium,
  kMissionRelated,
  kGeo,
  kMeo,
  kTransfer,
  kNoOrbit,
};

double round_to(double v, double step) {
  const double inv = std::round(1.0 / step);
  return std::round(v * inv) / inv;
}

double period_minutes(double perigee, double apogee) {
  const double a = kEarthRadius + 0.5 * (perigee + apogee);
  return round_to(2.0 * std::numbers::pi * std::sqrt(a * a * a / kMu) / 60.0, 0.01);
}

std::string piece_letters(std::size_t index) {
  static constexpr std::string_view kAlphabet = "ABCDEFGHJKLMNPQRSTUVWXYZ";
  const std::size_t n = kAlphabet.size();
  std::string s;
  if (index < n) {
    s.push_back(kAlphabet[index]);
  } else {
    index -= n;
    s.push_back(kAlphabet[(index / n) % n]);
    s.push_back(kAlphabet[index % n]);
  }
  return s;
}

template <typename T, std::size_t N>
const T& pick(Rng& rng, const std::array<T, N>& options) {
  return options[rng.uniform_index(N)];
}

class Generator {
 public:
  explicit Generator(const SyntheticOptions& opt) : opt_(opt), rng_(opt.seed) {}

  void emit(Population pop, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) one(pop);
  }

  SyntheticCatalog take() { return std::move(out_); }

 private:
  struct Launch {
    int year = 0;
    int number = 0;
    std::size_t next_piece = 0;
    std::size_t remaining = 0;
  };

  std::string designator(Population pop, int year, std::size_t batch) {
    auto& l = launches_[{pop, year}];
    if (l.remaining == 0) {
      l.year = year;
      l.number = ++launch_numbers_[year];
      l.next_piece = 0;
      l.remaining = batch;
    }
    --l.remaining;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%03d", l.year, l.number);
    return buf + piece_letters(l.next_piece++);
  }

  Date date_in(int year) {
    const auto day = static_cast<unsigned>(1 + rng_.uniform_index(28));
    const auto month = static_cast<unsigned>(1 + rng_.uniform_index(12));
    return Date{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
  }

  int year_between(int lo, int hi) {
    return lo + static_cast<int>(rng_.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  std::optional<double> maybe(double p_missing, double value) {
    if (rng_.uniform() < p_missing) return std::nullopt;
    return value;
  }

  void set_orbit(SatcatRecord& s, double perigee, double apogee, double incl) {
    perigee = std::round(perigee);
    apogee = std::max(perigee, std::round(apogee));
    s.perigee_km = perigee;
    s.apogee_km = apogee;
    s.inclination_deg = round_to(std::clamp(incl, 0.0, 180.0), 0.01);
    s.period_min = period_minutes(perigee, apogee);
  }

  void one(Population pop) {
    SatcatRecord s;
    DiscosRecord d;
    s.norad_id = next_norad_++;
    s.orbit_type = "ORB";
    int year = 2000;
    std::size_t batch = 1;
    std::string name;
    const auto rcs_missing_recent = [&](int y) { return y >= 2019 ? 0.7 : 0.1; };

    switch (pop) {
      case Population::kStarlink: {
        year = year_between(2019, 2023);
        batch = 60;
        name = "STARLINK-" + std::to_string(1000 + s.norad_id % 9000);
        static constexpr std::array<std::array<double, 2>, 4> shells = {
            {{550, 53.05}, {540, 53.2}, {570, 70.0}, {560, 97.6}}};
        const auto& sh = shells[rng_.uniform_index(rng_.uniform() < 0.7 ? 1 : 4)];
        const double alt = sh[0] + rng_.normal(0, 3);
        set_orbit(s, alt - std::abs(rng_.normal(0, 2)), alt + std::abs(rng_.normal(0, 2)),
                  sh[1] + rng_.normal(0, 0.03));
        s.object_type = "PAY";
        s.ops_status_code = rng_.uniform() < 0.9 ? "+" : "-";
        s.owner = "US";
        s.launch_site = rng_.uniform() < 0.8 ? "AFETR" : "AFWTR";
        s.rcs_m2 = maybe(rcs_missing_recent(year), round_to(rng_.uniform(2.5, 6.0), 1e-4));
        d.object_class = "Payload";
        d.shape = "Box + 1 Pan";
        d.mass_kg = round_to(rng_.uniform(260, 310), 0.1);
        d.span_m = round_to(rng_.uniform(8.0, 11.0), 0.01);
        d.height_m = maybe(0.3, round_to(rng_.uniform(0.1, 0.3), 0.01));
        d.width_m = round_to(rng_.uniform(1.4, 1.6), 0.01);
        d.depth_m = round_to(rng_.uniform(2.7, 2.9), 0.01);
        break;
      }
      case Population::kSunSync: {
        year = year_between(1998, 2023);
        batch = 3;
        name = "SSO-SAT " + std::to_string(s.norad_id % 1000);
        const double alt = rng_.uniform(480, 820);
        set_orbit(s, alt - std::abs(rng_.normal(0, 5)), alt + std::abs(rng_.normal(0, 5)),
                  rng_.uniform(97.2, 98.8));
        s.object_type = "PAY";
        s.ops_status_code = rng_.uniform() < 0.6 ? "+" : "-";
        static constexpr std::array<const char*, 6> owners = {"PRC", "US", "ESA", "IND", "JPN", "FR"};
        s.owner = pick(rng_, owners);
        static constexpr std::array<const char*, 4> sites = {"TSC", "AFWTR", "SRILR", "PLMSC"};
        s.launch_site = pick(rng_, sites);
        s.rcs_m2 = maybe(0.15, round_to(rng_.uniform(0.8, 6.0), 1e-4));
        d.object_class = "Payload";
        static constexpr std::array<const char*, 4> shapes = {"Box", "Box + 2 Pan", "Cyl", "Hex Cyl"};
        d.shape = pick(rng_, shapes);
        d.mass_kg = maybe(0.05, round_to(std::exp(rng_.uniform(std::log(150.0), std::log(2500.0))), 0.1));
        d.height_m = maybe(0.3, round_to(rng_.uniform(1.0, 4.0), 0.01));
        d.width_m = maybe(0.2, round_to(rng_.uniform(1.0, 2.5), 0.01));
        d.depth_m = maybe(0.2, round_to(rng_.uniform(1.0, 2.5), 0.01));
        d.span_m = maybe(0.4, round_to(rng_.uniform(4.0, 15.0), 0.01));
        break;
      }
      case Population::kCubesat: {
        year = year_between(2013, 2023);
        batch = 12;
        name = "CUBESAT " + std::to_string(s.norad_id % 10000);
        const bool iss = rng_.uniform() < 0.4;
        const double alt = iss ? rng_.uniform(380, 420) : rng_.uniform(450, 560);
        set_orbit(s, alt - std::abs(rng_.normal(0, 3)), alt + std::abs(rng_.normal(0, 3)),
                  iss ? 51.64 + rng_.normal(0, 0.01) : 97.5 + rng_.normal(0, 0.2));
        s.object_type = "PAY";
        s.ops_status_code = rng_.uniform() < 0.5 ? "+" : "-";
        static constexpr std::array<const char*, 5> owners = {"US", "ESA", "JPN", "UK", "FR"};
        s.owner = pick(rng_, owners);
        s.launch_site = iss ? "AFETR" : "SRILR";
        s.rcs_m2 = maybe(0.3, round_to(rng_.uniform(0.01, 0.09), 1e-4));
        d.object_class = "Payload";
        d.shape = "Box";
        d.mass_kg = maybe(0.1, round_to(rng_.uniform(1.0, 9.5), 0.01));
        d.height_m = maybe(0.2, round_to(rng_.uniform(0.1, 0.35), 0.01));
        d.width_m = 0.1;
        d.depth_m = maybe(0.2, 0.1);
        break;
      }
      case Population::kRocketBody: {
        year = year_between(1970, 2023);
        name = "R/B " + std::to_string(s.norad_id % 1000);
        static constexpr std::array<double, 7> incls = {28.5, 51.6, 65.0, 71.0, 82.5, 98.2, 74.0};
        const double perigee = rng_.uniform(250, 950);
        set_orbit(s, perigee, perigee + std::abs(rng_.normal(0, 250)),
                  pick(rng_, incls) + rng_.normal(0, 0.1));
        s.object_type = "R/B";
        static constexpr std::array<const char*, 4> owners = {"CIS", "PRC", "US", "ESA"};
        s.owner = pick(rng_, owners);
        static constexpr std::array<const char*, 4> sites = {"PLMSC", "TYMSC", "JSC", "AFWTR"};
        s.launch_site = pick(rng_, sites);
        s.rcs_m2 = maybe(0.05, round_to(rng_.uniform(4.0, 20.0), 1e-4));
        d.object_class = "Rocket Body";
        d.shape = rng_.uniform() < 0.85 ? "Cyl" : "Cone Cyl";
        d.mass_kg = maybe(0.1, round_to(rng_.uniform(1000, 9000), 1.0));
        d.diameter_m = maybe(0.1, round_to(rng_.uniform(1.5, 4.0), 0.01));
        d.height_m = maybe(0.1, round_to(rng_.uniform(3.0, 12.0), 0.01));
        break;
      }
      case Population::kFragment: {
        static constexpr std::array<std::array<double, 3>, 4> events = {
            {{2007, 98.6, 850}, {2009, 86.4, 790}, {2021, 82.5, 480}, {1996, 74.0, 700}}};
        const auto& ev = events[rng_.uniform_index(events.size())];
        year = static_cast<int>(ev[0]);
        batch = 400;
        name = "DEB " + std::to_string(s.norad_id % 10000);
        const double centre = ev[2] + rng_.normal(0, 120);
        const double spread = std::abs(rng_.normal(0, 150));
        const double perigee = std::max(200.0, centre - spread);
        set_orbit(s, perigee, std::min(1900.0, centre + spread), ev[1] + rng_.normal(0, 0.4));
        s.object_type = "DEB";
        s.owner = ev[0] == 2007 ? "PRC" : (ev[0] == 2021 ? "CIS" : "US");
        s.launch_site = ev[0] == 2007 ? "TSC" : "PLMSC";
        s.rcs_m2 = maybe(0.15, round_to(std::exp(rng_.uniform(std::log(0.004), std::log(0.6))), 1e-4));
        d.object_class = rng_.uniform() < 0.75 ? "Payload Fragmentation Debris"
                                                : "Rocket Fragmentation Debris";
        if (rng_.uniform() < 0.2) d.shape = "Irregular";
        d.mass_kg = maybe(0.95, round_to(rng_.uniform(0.01, 2.0), 0.001));
        break;
      }
      case Population::kOneWeb: {
        year = year_between(2019, 2023);
        batch = 34;
        name = "ONEWEB-" + std::to_string(s.norad_id % 1000);
        const double alt = 1200 + rng_.normal(0, 4);
        set_orbit(s, alt - std::abs(rng_.normal(0, 3)), alt + std::abs(rng_.normal(0, 3)),
                  87.9 + rng_.normal(0, 0.02));
        s.object_type = "PAY";
        s.ops_status_code = "+";
        s.owner = "UK";
        s.launch_site = rng_.uniform() < 0.6 ? "TYMSC" : "FRGUI";
        s.rcs_m2 = maybe(rcs_missing_recent(year), round_to(rng_.uniform(1.0, 2.5), 1e-4));
        d.object_class = "Payload";
        d.shape = "Box + 2 Pan";
        d.mass_kg = round_to(rng_.uniform(145, 150), 0.1);
        d.height_m = maybe(0.3, 1.0);
        d.width_m = 1.0;
        d.depth_m = 1.3;
        d.span_m = maybe(0.2, 6.0);
        break;
      }
      case Population::kIridium: {
        const bool next = rng_.uniform() < 0.6;
        year = next ? year_between(2017, 2019) : year_between(1997, 2002);
        batch = 10;
        name = "IRIDIUM " + std::to_string(s.norad_id % 200);
        const double alt = next ? 780 + rng_.normal(0, 2) : 770 + rng_.normal(0, 25);
        set_orbit(s, alt - std::abs(rng_.normal(0, 2)), alt + std::abs(rng_.normal(0, 2)),
                  86.4 + rng_.normal(0, 0.03));
        s.object_type = "PAY";
        s.ops_status_code = next ? "+" : "-";
        s.owner = "US";
        s.launch_site = next ? "AFWTR" : "TYMSC";
        s.rcs_m2 = maybe(0.1, round_to(rng_.uniform(3.0, 8.0), 1e-4));
        d.object_class = "Payload";
        d.shape = "Box + 3 Pan";
        d.mass_kg = next ? 860.0 : 689.0;
        d.height_m = maybe(0.3, next ? 3.1 : 4.0);
        d.span_m = maybe(0.3, 9.4);
        break;
      }
      case Population::kMissionRelated: {
        year = year_between(1980, 2023);
        name = "OBJECT " + std::to_string(s.norad_id % 1000);
        const double perigee = rng_.uniform(300, 1400);
        set_orbit(s, perigee, perigee + std::abs(rng_.normal(0, 60)), rng_.uniform(0.0, 110.0));
        static constexpr std::array<const char*, 5> classes = {
            "Payload Mission Related Object", "Rocket Mission Related Object", "Other Debris",
            "Other Mission Related Object", "Unknown"};
        d.object_class = pick(rng_, classes);
        s.object_type = d.object_class->starts_with("Payload") ? "DEB" : "UNK";
        static constexpr std::array<const char*, 4> owners = {"US", "CIS", "PRC", "JPN"};
        s.owner = pick(rng_, owners);
        s.launch_site = rng_.uniform() < 0.5 ? "AFETR" : "PLMSC";
        s.rcs_m2 = maybe(0.2, round_to(rng_.uniform(0.02, 1.5), 1e-4));
        static constexpr std::array<const char*, 5> shapes = {"Sphere", "Cone", "Irregular",
                                                              "Flat Plate", "Box"};
        if (rng_.uniform() < 0.7) d.shape = pick(rng_, shapes);
        d.mass_kg = maybe(0.5, round_to(rng_.uniform(5.0, 300.0), 0.1));
        d.diameter_m = maybe(0.6, round_to(rng_.uniform(0.2, 1.5), 0.01));
        break;
      }
      case Population::kGeo: {
        year = year_between(1990, 2023);
        name = "GEOSAT " + std::to_string(s.norad_id % 1000);
        set_orbit(s, 35780 + rng_.normal(0, 5), 35795 + rng_.normal(0, 5), std::abs(rng_.normal(0, 2)));
        s.object_type = "PAY";
        s.ops_status_code = "+";
        s.owner = "US";
        s.launch_site = "FRGUI";
        s.rcs_m2 = maybe(0.3, round_to(rng_.uniform(10, 30), 1e-4));
        d.object_class = "Payload";
        d.shape = "Box + 2 Pan";
        d.mass_kg = round_to(rng_.uniform(2000, 6000), 1.0);
        break;
      }
      case Population::kMeo: {
        year = year_between(1995, 2023);
        name = "NAVSAT " + std::to_string(s.norad_id % 1000);
        set_orbit(s, 20150 + rng_.normal(0, 30), 20250 + rng_.normal(0, 30), 55 + rng_.normal(0, 1));
        s.object_type = "PAY";
        s.ops_status_code = "+";
        s.owner = "US";
        s.launch_site = "AFETR";
        d.object_class = "Payload";
        d.shape = "Box + 2 Pan";
        d.mass_kg = round_to(rng_.uniform(1500, 2200), 1.0);
        break;
      }
      case Population::kTransfer: {
        year = year_between(1985, 2023);
        name = "GTO R/B " + std::to_string(s.norad_id % 1000);
        set_orbit(s, rng_.uniform(180, 600), rng_.uniform(30000, 36000), rng_.uniform(5, 30));
        s.object_type = "R/B";
        s.owner = "FR";
        s.launch_site = "FRGUI";
        s.rcs_m2 = maybe(0.2, round_to(rng_.uniform(5, 15), 1e-4));
        d.object_class = "Rocket Body";
        d.shape = "Cyl";
        d.mass_kg = round_to(rng_.uniform(2000, 5000), 1.0);
        break;
      }
      case Population::kNoOrbit: {
        year = year_between(1960, 1990);
        name = "UNTRACKED " + std::to_string(s.norad_id % 1000);
        s.object_type = "UNK";
        s.orbit_type = std::nullopt;
        break;
      }
    }
    s.name = name;
    s.launch_date = date_in(year);
    s.intl_designator = designator(pop, year, batch);
    if (rng_.uniform() < opt_.discos_coverage && pop != Population::kNoOrbit) {
      d.intl_designator = s.intl_designator;
      d.norad_id = s.norad_id;
      out_.discos.push_back(std::move(d));
    }
    out_.satcat.push_back(std::move(s));
  }

  const SyntheticOptions& opt_;
  Rng rng_;
  std::int64_t next_norad_ = 10000;
  std::map<std::pair<Population, int>, Launch> launches_;
  std::map<int, int> launch_numbers_;
  SyntheticCatalog out_;
};

}  // namespace

SyntheticCatalog make_synthetic_catalog(const SyntheticOptions& options) {
  if (!(options.discos_coverage >= 0.0 && options.discos_coverage <= 1.0)) {
    throw ArgumentError("synthetic catalog: DISCOS coverage must be in [0, 1]");
  }
  Generator gen(options);
  const std::pair<Population, double> leo[] = {
      {Population::kStarlink, 0.30},  {Population::kSunSync, 0.12},
      {Population::kCubesat, 0.12},   {Population::kRocketBody, 0.10},
      {Population::kFragment, 0.20},  {Population::kOneWeb, 0.06},
      {Population::kIridium, 0.05},   {Population::kMissionRelated, 0.05}};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < std::size(leo); ++i) {
    const std::size_t count =
        i + 1 == std::size(leo)
            ? options.leo_objects - assigned
            : static_cast<std::size_t>(std::floor(leo[i].second * static_cast<double>(options.leo_objects)));
    gen.emit(leo[i].first, count);
    assigned += count;
  }
  const std::size_t geo = options.non_leo_objects / 2;
  const std::size_t meo = options.non_leo_objects / 4;
  gen.emit(Population::kGeo, geo);
  gen.emit(Population::kMeo, meo);
  gen.emit(Population::kTransfer, options.non_leo_objects - geo - meo);
  gen.emit(Population::kNoOrbit, options.no_orbit_objects);
  return gen.take();
}

void write_fixture(const std::filesystem::path& dir, const SyntheticCatalog& catalog,
                   std::size_t page_size) {
  std::filesystem::create_directories(dir / "discos");
  std::ofstream satcat(dir / "satcat.csv", std::ios::binary);
  if (!satcat) throw Error("cannot write " + (dir / "satcat.csv").string());
  write_satcat(satcat, catalog.satcat);
  write_discos_fixture(dir / "discos", catalog.discos, page_size);
}

}  // namespace rso
