#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "kinon/config.hpp"
#include "kinon/errors.hpp"
#include "kinon/image.hpp"
#include "kinon/isolines.hpp"
#include "kinon/persist.hpp"

using namespace kinon;

namespace {

std::vector<Point> all_vertices(const ContourSet& set) {
  std::vector<Point> pts;
  for (const auto& line : set.lines) pts.insert(pts.end(), line.points.begin(), line.points.end());
  return pts;
}

bool near(const Point& a, const Point& b, double tol) { return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol; }

// every sign change along a sample-grid edge, interpolated linearly
std::vector<Point> edge_scan(const Field& f, double level) {
  std::vector<Point> pts;
  auto cross = [&](double x0, double y0, double v0, double x1, double y1, double v1) {
    if ((v0 >= level) == (v1 >= level)) return;
    const double t = (level - v0) / (v1 - v0);
    pts.push_back({x0 + t * (x1 - x0), y0 + t * (y1 - y0)});
  };
  for (Eigen::Index y = 0; y < f.rows(); ++y)
    for (Eigen::Index x = 0; x < f.cols(); ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      if (x + 1 < f.cols()) cross(cx, cy, f(y, x), cx + 1, cy, f(y, x + 1));
      if (y + 1 < f.rows()) cross(cx, cy, f(y, x), cx, cy + 1, f(y + 1, x));
    }
  return pts;
}

}  // namespace

TEST_CASE("config round trip of a published regime") {
  RunConfig c;
  c.topology = {Lattice::d4, 64, 64, Boundary::periodic};
  c.params.kappa = 6;
  c.params.lambda = 0.8;
  c.params.theta = 0.4;
  c.params.eta = 0.5;
  c.schedule.changes.push_back({150, ParamPatch{.kappa = 7.0, .lambda = {}, .eta = {}, .theta = {}, .psi = {}}});
  c.render.contour_level = 0.75;
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config(text);
  CHECK(back == c);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("minimal config gives the basic model") {
  const RunConfig c = parse_config(R"({"params": {}})");
  CHECK(c.params.lambda == 0.0);
  CHECK(c.params.eta == 0.0);
  CHECK(c.params.theta == 0.0);
  CHECK(c.params.psi == PsiSpec::identity());
  CHECK(c.omega == 2048.0);
  CHECK(c.seed_index() == c.topology.index(32, 32));
  CHECK(parse_config("{}") == RunConfig{});
}

TEST_CASE("config rejections carry the field path") {
  auto path_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ValidationError& e) {
      return e.path();
    }
    return std::string("<accepted>");
  };
  CHECK(path_of(R"({"omega": 2048, "params": {"theta": 2048}})") == "params.theta");
  CHECK(path_of(R"({"params": {"kappa": -1}})") == "params.kappa");
  CHECK(path_of(R"({"params": {"psi": {"kind": "power", "gamma": 0}}})") == "params.psi.gamma");
  CHECK(path_of(R"({"bogus": 1})") == "bogus");
  CHECK(path_of(R"({"topology": {"degree": 6}})") == "topology.degree");
  CHECK(path_of(R"({"omega": 0})") == "omega");
  CHECK(path_of(R"({"omega": "many"})") == "omega");
  CHECK(path_of(R"({"seed": {"x": 64, "y": 0}})") == "seed.x");
  CHECK(path_of(R"({"schedule": {"changes": [{"cycle": 3, "params": {"eta": 2}}]}})") ==
        "schedule.changes[0].params.eta");
  CHECK_THROWS_AS(parse_config("{not json"), ValidationError);
}

TEST_CASE("frame rendering") {
  CHECK(render_frame(Field::Constant(3, 4, 0.5), 1.0).cast<int>().isConstant(128));
  CHECK(render_frame(Field::Zero(3, 4), 1.0).cast<int>().isConstant(0));
  Field f = Field::Zero(5, 5);
  f(1, 3) = 20000.0;
  const GreyImage img = render_frame(f, 1.0);
  CHECK((img != 0).count() == 1);
  CHECK(img(1, 3) == 255);
  CHECK(grey_level(0.25, 2.0) == 128);
  CHECK(grey_level(-1.0, 1.0) == 0);
}

TEST_CASE("pgm encoding round trips") {
  GreyImage img(2, 3);
  img << 0, 1, 2, 3, 254, 255;
  const auto bytes = encode_pgm(img);
  const std::string header(bytes.begin(), bytes.begin() + 11);
  CHECK(header == "P5\n3 2\n255\n");
  CHECK(bytes.size() == 11 + 6);
  CHECK((decode_pgm(bytes) == img).all());
  CHECK_THROWS(decode_pgm({'P', '2', '\n'}));
  std::vector<std::uint8_t> cut = bytes;
  cut.pop_back();
  CHECK_THROWS(decode_pgm(cut));
}

TEST_CASE("png encoding is deterministic") {
  const GreyImage img = render_frame(Field::Constant(8, 8, 0.3), 1.0);
  const auto a = encode_png(img), b = encode_png(img);
  CHECK(a == b);
  REQUIRE(a.size() > 8);
  CHECK(a[1] == 'P');
  CHECK(a[2] == 'N');
}

TEST_CASE("isolines") {
  SUBCASE("field below the level has none") {
    CHECK(extract_isolines(Field::Constant(6, 6, 0.2), 0.5).lines.empty());
  }
  SUBCASE("single raised cell gives one closed quad") {
    Field f = Field::Zero(3, 3);
    f(1, 1) = 1.0;
    const ContourSet set = extract_isolines(f, 0.5);
    REQUIRE(set.lines.size() == 1);
    const Polyline& loop = set.lines[0];
    CHECK(loop.closed);
    REQUIRE(loop.points.size() == 4);
    for (Point p : {Point{1.5, 1.0}, Point{2.0, 1.5}, Point{1.5, 2.0}, Point{1.0, 1.5}})
      CHECK(std::any_of(loop.points.begin(), loop.points.end(), [&](Point q) { return near(p, q, 1e-15); }));
    // inside on the right with y pointing down: positive shoelace sum
    double area2 = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const Point a = loop.points[i], b = loop.points[(i + 1) % 4];
      area2 += a.x * b.y - b.x * a.y;
    }
    CHECK(area2 > 0.0);
  }
  SUBCASE("plateau touching the border gives open chains") {
    Field f = Field::Zero(4, 4);
    f.col(0).setConstant(1.0);
    const ContourSet set = extract_isolines(f, 0.5);
    REQUIRE(set.lines.size() == 1);
    CHECK_FALSE(set.lines[0].closed);
    CHECK(set.lines[0].points.size() == 4);
  }
  SUBCASE("vertices match a brute-force edge scan") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      Field f(6, 7);
      for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = u(rng);
      const double level = 0.2 + 0.6 * u(rng);
      auto got = all_vertices(extract_isolines(f, level));
      auto want = edge_scan(f, level);
      REQUIRE(got.size() == want.size());
      for (const Point& p : want)
        CHECK(std::count_if(got.begin(), got.end(), [&](Point q) { return near(p, q, 1e-12); }) == 1);
    }
  }
  SUBCASE("deterministic") {
    Field f(9, 9);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = u(rng);
    CHECK(extract_isolines(f, 0.5) == extract_isolines(f, 0.5));
  }
  SUBCASE("level must be positive") {
    CHECK_THROWS_AS(extract_isolines(Field::Zero(3, 3), 0.0), ValidationError);
  }
}

TEST_CASE("isolines of an engine blob share its symmetry") {
  const Network net = build_grid(Lattice::d4, 15, 15, Boundary::bordered);
  ModelParams p;
  p.kappa = 3;
  p.lambda = 1;
  NetworkState s = init_singularity(net, 112.5, net.geometry()->index(7, 7));
  for (int c = 0; c < 25; ++c) step(net, s, p);
  const FieldSnapshot snap = make_snapshot(net, s, 25, 112.5);
  const ContourSet set = extract_isolines(snap, 0.5);
  const auto pts = all_vertices(set);
  REQUIRE(!pts.empty());
  // rotate by 90 degrees and mirror about the grid center (7.5, 7.5)
  for (auto map : {+[](Point q) { return Point{15.0 - q.y, q.x}; }, +[](Point q) { return Point{15.0 - q.x, q.y}; },
                   +[](Point q) { return Point{q.y, q.x}; }}) {
    for (const Point& q : pts) {
      const Point r = map(q);
      CHECK(std::any_of(pts.begin(), pts.end(), [&](Point o) { return near(o, r, 1e-9); }));
    }
  }
}

TEST_CASE("contour overlay") {
  const GreyImage base = render_frame(Field::Constant(4, 5, 0.5), 1.0);
  const RgbImage plain = overlay_contours(base, {}, 1);
  CHECK(plain.width == 5);
  CHECK(plain.height == 4);
  for (const auto& px : plain.pixels) CHECK(px == std::array<std::uint8_t, 3>{128, 128, 128});

  Field f = Field::Zero(4, 5);
  f(2, 2) = 1.0;
  const ContourSet set = extract_isolines(f, 0.5);
  const RgbImage drawn = overlay_contours(base, std::span(&set, 1), 4);
  CHECK(drawn.width == 20);
  CHECK(std::any_of(drawn.pixels.begin(), drawn.pixels.end(), [](const auto& px) { return px[0] != px[1]; }));

  const ContourSet wrong = extract_isolines(Field::Zero(3, 3) + 1.0, 0.5);
  CHECK_THROWS_AS(overlay_contours(base, std::span(&wrong, 1), 1), std::invalid_argument);
}

TEST_CASE("series csv") {
  CHECK(series_csv({}) == "cycle,Ke,Kt,drift\n");
  std::vector<MacroRecord> recs{{1, 0.1, 1.0 / 3.0, 1e-17}, {2, 0.0, 0.0, 0.0}};
  const std::string text = series_csv(recs);
  CHECK(text.rfind("cycle,Ke,Kt,drift\n1,", 0) == 0);
  const auto back = parse_series(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].turnover == 1.0 / 3.0);
  CHECK(back[0].exchange == 0.1);
  CHECK(back[0].drift == 1e-17);
  CHECK(back[1].cycle == 2);
  CHECK_THROWS(parse_series("cycle,Ke\n"));
  CHECK_THROWS(parse_series("cycle,Ke,Kt,drift\n1,0.5\n"));
  CHECK_THROWS(parse_series("cycle,Ke,Kt,drift\n1,x,0,0\n"));
}

TEST_CASE("state persistence round trips") {
  const GridGeometry g{Lattice::d8, 6, 5, Boundary::bordered};
  const Network net = build_grid(g);
  NetworkState s = init_singularity(net, 15.0, g.index(3, 2));
  ModelParams p;
  p.kappa = 4;
  p.lambda = 0.7;
  for (int c = 0; c < 7; ++c) step(net, s, p);
  const auto bytes = encode_state(g, s, 7, 15.0);
  CHECK(std::string(bytes.begin(), bytes.begin() + 8) == "KINSNAP1");
  const StoredState back = decode_state(bytes);
  CHECK(back.geometry == g);
  CHECK(back.cycle == 7);
  CHECK(back.omega == 15.0);
  CHECK(identical(back.state, s));
  CHECK(encode_state(back.geometry, back.state, back.cycle, back.omega) == bytes);

  auto cut = bytes;
  cut.pop_back();
  CHECK_THROWS(decode_state(cut));
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS(decode_state(extra));
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS(decode_state(bad));
}
