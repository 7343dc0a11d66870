#include <gtest/gtest.h>

#include <cmath>

#include "rso/error.hpp"
#include "rso/svg.hpp"

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

bool well_formed(const std::string& svg) {
  return svg.rfind("<svg ", 0) == 0 && svg.ends_with("</svg>\n");
}

TEST(Svg, ScatterOneCirclePerPointAndLegend) {
  rso::Matrix xy(3, 2);
  xy(1, 0) = 1.0;
  xy(2, 1) = 2.0;
  const std::vector<std::size_t> labels{0, 1, 1};
  const auto svg = rso::svg::scatter(xy, labels, {"t", "x", "y"});
  EXPECT_TRUE(well_formed(svg));
  EXPECT_EQ(count(svg, "<circle"), 3u);
  EXPECT_NE(svg.find("cluster 1"), std::string::npos);
  const auto bare = rso::svg::scatter(xy, labels, {"t", "x", "y"}, "");
  EXPECT_EQ(bare.find("cluster"), std::string::npos);
  EXPECT_THROW(rso::svg::scatter(rso::Matrix(3, 3), labels, {}), rso::ArgumentError);
}

TEST(Svg, TextIsEscaped) {
  const rso::Matrix xy(1, 2);
  const std::vector<std::size_t> labels{0};
  const auto svg = rso::svg::scatter(xy, labels, {"a < b & \"c\"", "", ""});
  EXPECT_NE(svg.find("a &lt; b &amp; &quot;c&quot;"), std::string::npos);
}

TEST(Svg, LinesWithMarkerSkipNonFinite) {
  const std::vector<double> x{1, 2, 3};
  const std::vector<rso::svg::Series> series{{"train", {3, 2, 1}}, {"val", {3, NAN, 2}}};
  const auto svg = rso::svg::lines(x, series, {"loss", "epoch", ""}, 2.0);
  EXPECT_TRUE(well_formed(svg));
  EXPECT_EQ(count(svg, "<polyline"), 2u);
  EXPECT_EQ(count(svg, "<circle"), 5u);
  EXPECT_EQ(count(svg, "stroke-dasharray"), 1u);
  const std::vector<rso::svg::Series> bad{{"short", {1}}};
  EXPECT_THROW(rso::svg::lines(x, bad, {}), rso::ArgumentError);
}

TEST(Svg, BarsAndStackedBars) {
  const std::vector<std::string> names{"mass_kg", "rcs_m2"};
  const std::vector<double> values{3, 1};
  const auto bars = rso::svg::bars(names, values, {"importance", "", ""});
  EXPECT_TRUE(well_formed(bars));
  EXPECT_NE(bars.find("mass_kg"), std::string::npos);
  rso::Matrix parts(2, 3, 1.0);
  const std::vector<std::string> segs{"c0", "c1", "c2"};
  const auto stacked = rso::svg::stacked_bars(names, parts, segs, {"shap", "", ""});
  EXPECT_TRUE(well_formed(stacked));
  EXPECT_NE(stacked.find("c2"), std::string::npos);
}

TEST(Svg, Deterministic) {
  rso::Matrix xy(50, 2);
  for (std::size_t i = 0; i < 50; ++i) {
    xy(i, 0) = static_cast<double>(i) * 0.37;
    xy(i, 1) = static_cast<double>(i % 7);
  }
  const std::vector<std::size_t> labels(50, 2);
  EXPECT_EQ(rso::svg::scatter(xy, labels, {}), rso::svg::scatter(xy, labels, {}));
}

}  // namespace
