#ifndef KINON_ISOLINES_HPP
#define KINON_ISOLINES_HPP

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "kinon/engine.hpp"
#include "kinon/image.hpp"

namespace kinon {

/// Point in pixel coordinates; node (x, y) sits at (x + 0.5, y + 0.5).
struct Point {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

struct Polyline {
  std::vector<Point> points;
  bool closed = false;  // closed loops do not repeat their first point

  bool operator==(const Polyline&) const = default;
};

/// Isolines of one field at one level.
struct ContourSet {
  int width = 0;
  int height = 0;
  std::int64_t cycle = 0;
  double level = 0.0;
  std::vector<Polyline> lines;

  bool operator==(const ContourSet&) const = default;
};

/// Marching squares over the node-centered samples. A sample is inside when
/// v >= level; ambiguous saddles are resolved by the mean of the four
/// corners. Segments are oriented with the inside on the right, chained
/// into polylines, open chains (ending on the field border) first, in
/// row-major order of their first cell.
ContourSet extract_isolines(const Field& field, double level);
ContourSet extract_isolines(const FieldSnapshot& snapshot, double level);

/// Replicates `base` by `zoom` and draws every set on top, one palette color
/// per set. Throws std::invalid_argument if a set's size differs from base.
RgbImage overlay_contours(const GreyImage& base, std::span<const ContourSet> sets, int zoom = 1);

RgbImage to_rgb(const GreyImage& base, int zoom = 1);

nlohmann::json to_json(const ContourSet& set);

}  // namespace kinon

#endif  // KINON_ISOLINES_HPP
