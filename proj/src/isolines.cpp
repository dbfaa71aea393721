#include "kinon/isolines.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <unordered_map>

#include "kinon/errors.hpp"

namespace kinon {

namespace {

// Edge keys: horizontal edge (x,y)-(x+1,y) -> 2*(y*w+x), vertical (x,y)-(x,y+1) -> 2*(y*w+x)+1.
struct Segment {
  std::size_t from;
  std::size_t to;
};

class Marcher {
public:
  Marcher(const Field& f, double level) : f_(f), level_(level), w_(f.cols()), h_(f.rows()) {}

  bool inside(Eigen::Index x, Eigen::Index y) const { return f_(y, x) >= level_; }

  std::size_t h_key(Eigen::Index x, Eigen::Index y) const { return 2 * static_cast<std::size_t>(y * w_ + x); }
  std::size_t v_key(Eigen::Index x, Eigen::Index y) const { return 2 * static_cast<std::size_t>(y * w_ + x) + 1; }

  Point point(std::size_t key) const {
    const auto node = static_cast<Eigen::Index>(key / 2);
    const Eigen::Index x = node % w_;
    const Eigen::Index y = node / w_;
    const bool vertical = key % 2 == 1;
    const double v0 = f_(y, x);
    const double v1 = vertical ? f_(y + 1, x) : f_(y, x + 1);
    const double t = (level_ - v0) / (v1 - v0);
    const double px = static_cast<double>(x) + 0.5;
    const double py = static_cast<double>(y) + 0.5;
    return vertical ? Point{px, py + t} : Point{px + t, py};
  }

  std::vector<Segment> segments() const {
    std::vector<Segment> out;
    for (Eigen::Index y = 0; y + 1 < h_; ++y)
      for (Eigen::Index x = 0; x + 1 < w_; ++x) cell(x, y, out);
    return out;
  }

private:
  void cell(Eigen::Index x, Eigen::Index y, std::vector<Segment>& out) const {
    // Corners clockwise from top-left, and the edge leaving each corner.
    const std::array<bool, 4> in{inside(x, y), inside(x + 1, y), inside(x + 1, y + 1), inside(x, y + 1)};
    const std::array<std::size_t, 4> edge{h_key(x, y), v_key(x + 1, y), h_key(x, y + 1), v_key(x, y)};

    // Crossings in clockwise order; `exits` flags in->out transitions.
    std::array<std::size_t, 4> cross{};
    std::array<bool, 4> exits{};
    int n = 0;
    for (int c = 0; c < 4; ++c) {
      const bool a = in[static_cast<std::size_t>(c)];
      const bool b = in[static_cast<std::size_t>((c + 1) % 4)];
      if (a != b) {
        cross[static_cast<std::size_t>(n)] = edge[static_cast<std::size_t>(c)];
        exits[static_cast<std::size_t>(n)] = a;
        ++n;
      }
    }
    if (n == 0) return;

    if (n == 2) {
      const int e = exits[0] ? 0 : 1;
      out.push_back({cross[static_cast<std::size_t>(e)], cross[static_cast<std::size_t>(1 - e)]});
      return;
    }

    // Saddle: rotate so the sequence starts with an exit, then pair each exit
    // with the following entry (joined insides) or the preceding one.
    int s = exits[0] ? 0 : 1;
    std::array<std::size_t, 4> c{};
    for (int i = 0; i < 4; ++i) c[static_cast<std::size_t>(i)] = cross[static_cast<std::size_t>((s + i) % 4)];
    const double mean = 0.25 * (f_(y, x) + f_(y, x + 1) + f_(y + 1, x + 1) + f_(y + 1, x));
    if (mean >= level_) {
      out.push_back({c[0], c[1]});
      out.push_back({c[2], c[3]});
    } else {
      out.push_back({c[0], c[3]});
      out.push_back({c[2], c[1]});
    }
  }

  const Field& f_;
  double level_;
  Eigen::Index w_;
  Eigen::Index h_;
};

}  // namespace

ContourSet extract_isolines(const Field& field, double level) {
  if (!(level > 0.0)) throw ValidationError("level", "must be > 0");
  ContourSet set;
  set.width = static_cast<int>(field.cols());
  set.height = static_cast<int>(field.rows());
  set.level = level;

  const Marcher m(field, level);
  const std::vector<Segment> segs = m.segments();
  std::unordered_map<std::size_t, std::size_t> by_start;
  std::unordered_map<std::size_t, std::size_t> by_end;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    by_start.emplace(segs[i].from, i);
    by_end.emplace(segs[i].to, i);
  }

  std::vector<char> used(segs.size(), 0);
  auto trace = [&](std::size_t first, bool closed) {
    Polyline line;
    line.closed = closed;
    std::size_t i = first;
    line.points.push_back(m.point(segs[i].from));
    while (true) {
      used[i] = 1;
      const std::size_t to = segs[i].to;
      auto next = by_start.find(to);
      if (closed && next != by_start.end() && next->second == first) break;
      line.points.push_back(m.point(to));
      if (next == by_start.end() || used[next->second]) break;
      i = next->second;
    }
    set.lines.push_back(std::move(line));
  };

  for (std::size_t i = 0; i < segs.size(); ++i)
    if (!used[i] && !by_end.contains(segs[i].from)) trace(i, false);
  for (std::size_t i = 0; i < segs.size(); ++i)
    if (!used[i]) trace(i, true);
  return set;
}

ContourSet extract_isolines(const FieldSnapshot& snapshot, double level) {
  ContourSet set = extract_isolines(snapshot.mass, level);
  set.cycle = snapshot.cycle;
  return set;
}

RgbImage to_rgb(const GreyImage& base, int zoom) {
  if (zoom < 1) throw std::invalid_argument("to_rgb: zoom must be >= 1");
  const int w = static_cast<int>(base.cols());
  const int h = static_cast<int>(base.rows());
  RgbImage out(w * zoom, h * zoom);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      const std::uint8_t g = base(y / zoom, x / zoom);
      out.at(x, y) = {g, g, g};
    }
  return out;
}

namespace {

constexpr std::array<std::array<std::uint8_t, 3>, 6> kPalette{{
    {230, 57, 70}, {69, 123, 157}, {42, 157, 143}, {233, 196, 106}, {244, 162, 97}, {131, 56, 236}}};

void draw_line(RgbImage& img, double x0, double y0, double x1, double y1, const std::array<std::uint8_t, 3>& color) {
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(dx), std::abs(dy)))));
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    const auto px = static_cast<int>(std::floor(x0 + t * dx));
    const auto py = static_cast<int>(std::floor(y0 + t * dy));
    if (px >= 0 && px < img.width && py >= 0 && py < img.height) img.at(px, py) = color;
  }
}

}  // namespace

RgbImage overlay_contours(const GreyImage& base, std::span<const ContourSet> sets, int zoom) {
  RgbImage out = to_rgb(base, zoom);
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const ContourSet& set = sets[k];
    if (set.width != base.cols() || set.height != base.rows())
      throw std::invalid_argument("overlay_contours: contour set does not match the base frame");
    const auto& color = kPalette[k % kPalette.size()];
    for (const Polyline& line : set.lines) {
      const std::size_t n = line.points.size();
      const std::size_t segs = line.closed ? n : (n == 0 ? 0 : n - 1);
      for (std::size_t i = 0; i < segs; ++i) {
        const Point& a = line.points[i];
        const Point& b = line.points[(i + 1) % n];
        draw_line(out, a.x * zoom, a.y * zoom, b.x * zoom, b.y * zoom, color);
      }
    }
  }
  return out;
}

nlohmann::json to_json(const ContourSet& set) {
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& line : set.lines) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : line.points) pts.push_back({p.x, p.y});
    lines.push_back({{"closed", line.closed}, {"points", pts}});
  }
  return {{"width", set.width}, {"height", set.height}, {"cycle", set.cycle}, {"level", set.level}, {"lines", lines}};
}

}  // namespace kinon
