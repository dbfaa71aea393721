#include "kinon/network.hpp"

#include <array>
#include <cassert>

#include "kinon/errors.hpp"

namespace kinon {

namespace {

constexpr std::array<Direction, 2> kD2{Direction::E, Direction::W};
constexpr std::array<Direction, 4> kD4{Direction::N, Direction::E, Direction::S, Direction::W};
constexpr std::array<Direction, 8> kD8{Direction::N,  Direction::E,  Direction::S,  Direction::W,
                                       Direction::NE, Direction::SE, Direction::SW, Direction::NW};

}  // namespace

Direction opposite(Direction d) noexcept {
  switch (d) {
    case Direction::N: return Direction::S;
    case Direction::E: return Direction::W;
    case Direction::S: return Direction::N;
    case Direction::W: return Direction::E;
    case Direction::NE: return Direction::SW;
    case Direction::SE: return Direction::NW;
    case Direction::SW: return Direction::NE;
    case Direction::NW: return Direction::SE;
  }
  return d;
}

std::pair<int, int> offset(Direction d) noexcept {
  switch (d) {
    case Direction::N: return {0, -1};
    case Direction::E: return {1, 0};
    case Direction::S: return {0, 1};
    case Direction::W: return {-1, 0};
    case Direction::NE: return {1, -1};
    case Direction::SE: return {1, 1};
    case Direction::SW: return {-1, 1};
    case Direction::NW: return {-1, -1};
  }
  return {0, 0};
}

std::span<const Direction> directions(Lattice lattice) noexcept {
  switch (lattice) {
    case Lattice::d2: return kD2;
    case Lattice::d4: return kD4;
    case Lattice::d8: return kD8;
  }
  return {};
}

std::string_view to_string(Lattice l) noexcept {
  switch (l) {
    case Lattice::d2: return "d2";
    case Lattice::d4: return "d4";
    case Lattice::d8: return "d8";
  }
  return "?";
}

std::string_view to_string(Boundary b) noexcept {
  return b == Boundary::periodic ? "periodic" : "bordered";
}

Lattice lattice_from_degree(int degree) {
  switch (degree) {
    case 2: return Lattice::d2;
    case 4: return Lattice::d4;
    case 8: return Lattice::d8;
    default: throw ValidationError("degree", "unsupported lattice degree " + std::to_string(degree) + " (expected 2, 4 or 8)");
  }
}

Network::Network(std::vector<std::size_t> offsets, std::vector<std::size_t> targets,
                 std::vector<std::size_t> reciprocals, std::optional<GridGeometry> geometry,
                 std::vector<Direction> link_directions)
    : offsets_(std::move(offsets)),
      targets_(std::move(targets)),
      reciprocals_(std::move(reciprocals)),
      geometry_(geometry),
      directions_(std::move(link_directions)) {
  assert(!offsets_.empty() && offsets_.back() == targets_.size());
  assert(reciprocals_.size() == targets_.size());
  sources_.resize(targets_.size());
  for (std::size_t i = 0; i + 1 < offsets_.size(); ++i)
    for (std::size_t l = offsets_[i]; l < offsets_[i + 1]; ++l) sources_[l] = i;
}

Network Network::from_edges(std::size_t nodes, std::span<const std::pair<std::size_t, std::size_t>> edges) {
  std::vector<std::vector<std::size_t>> adjacency(nodes);
  for (const auto& [s, t] : edges) {
    if (s >= nodes || t >= nodes) throw ValidationError("edges", "node index out of range");
    adjacency[s].push_back(t);
  }
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> targets;
  for (const auto& adj : adjacency) {
    targets.insert(targets.end(), adj.begin(), adj.end());
    offsets.push_back(targets.size());
  }

  std::vector<std::size_t> reciprocals(targets.size(), kNoLink);
  for (std::size_t s = 0; s < nodes; ++s) {
    for (std::size_t l = offsets[s]; l < offsets[s + 1]; ++l) {
      if (reciprocals[l] != kNoLink) continue;
      const std::size_t t = targets[l];
      for (std::size_t r = offsets[t]; r < offsets[t + 1]; ++r) {
        if (targets[r] == s && reciprocals[r] == kNoLink && r != l) {
          reciprocals[l] = r;
          reciprocals[r] = l;
          break;
        }
      }
    }
  }
  return Network(std::move(offsets), std::move(targets), std::move(reciprocals));
}

std::size_t Network::max_degree() const noexcept {
  std::size_t m = 0;
  for (std::size_t i = 0; i < node_count(); ++i) m = std::max(m, degree(i));
  return m;
}

Network build_grid(const GridGeometry& geometry) {
  return build_grid(geometry.lattice, geometry.width, geometry.height, geometry.boundary);
}

Network build_grid(Lattice lattice, int width, int height, Boundary boundary) {
  if (lattice != Lattice::d2 && lattice != Lattice::d4 && lattice != Lattice::d8)
    throw ValidationError("degree", "unsupported lattice");
  if (lattice == Lattice::d2) height = 1;
  if (width < 3) throw ValidationError("width", "must be >= 3");
  if (lattice != Lattice::d2 && height < 3) throw ValidationError("height", "must be >= 3");

  const GridGeometry geom{lattice, width, height, boundary};
  const auto dirs = directions(lattice);
  const std::size_t n = geom.node_count();

  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> targets;
  std::vector<Direction> link_dirs;
  targets.reserve(n * dirs.size());
  link_dirs.reserve(n * dirs.size());

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (Direction d : dirs) {
        auto [dx, dy] = offset(d);
        int nx = x + dx;
        int ny = y + dy;
        if (boundary == Boundary::periodic) {
          nx = (nx + width) % width;
          ny = (ny + height) % height;
        } else if (nx < 0 || nx >= width || ny < 0 || ny >= height) {
          continue;
        }
        targets.push_back(geom.index(nx, ny));
        link_dirs.push_back(d);
      }
      offsets.push_back(targets.size());
    }
  }

  std::vector<std::size_t> reciprocals(targets.size(), Network::kNoLink);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = offsets[i]; l < offsets[i + 1]; ++l) {
      const std::size_t t = targets[l];
      const Direction back = opposite(link_dirs[l]);
      for (std::size_t r = offsets[t]; r < offsets[t + 1]; ++r) {
        if (link_dirs[r] == back && targets[r] == i) {
          reciprocals[l] = r;
          break;
        }
      }
    }
  }
  return Network(std::move(offsets), std::move(targets), std::move(reciprocals), geom, std::move(link_dirs));
}

BalanceReport validate_balanced(const Network& network) {
  BalanceReport report;
  const std::size_t n = network.node_count();
  std::vector<std::size_t> in_degree(n, 0);
  for (std::size_t l = 0; l < network.link_count(); ++l) {
    ++in_degree[network.target(l)];
    const std::size_t r = network.reciprocal(l);
    const bool ok = r != Network::kNoLink && r < network.link_count() && network.reciprocal(r) == l &&
                    network.source(r) == network.target(l) && network.target(r) == network.source(l);
    if (!ok) report.broken_links.push_back(l);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (in_degree[i] != network.degree(i)) report.unbalanced_nodes.push_back(i);
  return report;
}

}  // namespace kinon
