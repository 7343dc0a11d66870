#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rso/matrix.hpp"

namespace rso::svg {

struct Labels {
  std::string title;
  std::string x;
  std::string y;
};

// Points coloured by integer label, with a legend entry per label unless
// `legend_prefix` is empty.
std::string scatter(const Matrix& xy, std::span<const std::size_t> labels,
                    const Labels& text, const std::string& legend_prefix = "cluster ");

struct Series {
  std::string name;
  std::vector<double> y;
};

// Polylines sharing one x axis. `marker_x` draws a dashed vertical line.
std::string lines(std::span<const double> x, std::span<const Series> series,
                  const Labels& text, std::optional<double> marker_x = std::nullopt);

// Horizontal bars, drawn top to bottom in the given order.
std::string bars(std::span<const std::string> names, std::span<const double> values,
                 const Labels& text);

// Horizontal bars split into one segment per column of `parts`
// (rows x segments), with a legend naming the segments.
std::string stacked_bars(std::span<const std::string> names, const Matrix& parts,
                         std::span<const std::string> segment_names, const Labels& text);

}  // namespace rso::svg
