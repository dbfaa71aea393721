#ifndef KINON_NETWORK_HPP
#define KINON_NETWORK_HPP

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kinon {

enum class Lattice : int { d2 = 2, d4 = 4, d8 = 8 };
enum class Boundary { periodic, bordered };

/// Link direction on a regular grid. Links of a node are stored in this
/// order: d4 = (N, E, S, W), d8 appends (NE, SE, SW, NW), d2 uses (E, W).
/// North is -y (image row above).
enum class Direction : std::uint8_t { N, E, S, W, NE, SE, SW, NW };

Direction opposite(Direction d) noexcept;
std::pair<int, int> offset(Direction d) noexcept;  // (dx, dy)
std::span<const Direction> directions(Lattice lattice) noexcept;

std::string_view to_string(Lattice l) noexcept;
std::string_view to_string(Boundary b) noexcept;
/// Throws ValidationError for anything but 2, 4 or 8.
Lattice lattice_from_degree(int degree);

struct GridGeometry {
  Lattice lattice = Lattice::d4;
  int width = 0;
  int height = 1;
  Boundary boundary = Boundary::periodic;

  std::size_t node_count() const noexcept { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width + x; }

  bool operator==(const GridGeometry&) const = default;
};

/// Balanced digraph in compressed adjacency form. Every directed link knows
/// its reciprocal (the link running the other way), so propagation is a
/// permutation of link buffers.
class Network {
public:
  static constexpr std::size_t kNoLink = std::numeric_limits<std::size_t>::max();

  Network() = default;
  Network(std::vector<std::size_t> offsets, std::vector<std::size_t> targets,
          std::vector<std::size_t> reciprocals, std::optional<GridGeometry> geometry = std::nullopt,
          std::vector<Direction> link_directions = {});

  /// Builds a network from explicit directed edges (source, target). Each edge
  /// is paired with the first unpaired edge running the other way; edges left
  /// without a partner get kNoLink as reciprocal.
  static Network from_edges(std::size_t nodes, std::span<const std::pair<std::size_t, std::size_t>> edges);

  std::size_t node_count() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t link_count() const noexcept { return targets_.size(); }

  std::size_t degree(std::size_t node) const noexcept { return offsets_[node + 1] - offsets_[node]; }
  std::size_t first_link(std::size_t node) const noexcept { return offsets_[node]; }
  std::size_t target(std::size_t link) const noexcept { return targets_[link]; }
  std::size_t reciprocal(std::size_t link) const noexcept { return reciprocals_[link]; }
  std::size_t source(std::size_t link) const noexcept { return sources_[link]; }

  std::span<const std::size_t> offsets() const noexcept { return offsets_; }
  std::span<const std::size_t> targets() const noexcept { return targets_; }
  std::span<const std::size_t> reciprocals() const noexcept { return reciprocals_; }

  const std::optional<GridGeometry>& geometry() const noexcept { return geometry_; }
  /// Direction of a grid link; only meaningful when geometry() is set.
  Direction direction(std::size_t link) const noexcept { return directions_[link]; }

  std::size_t max_degree() const noexcept;

private:
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> targets_;
  std::vector<std::size_t> reciprocals_;
  std::vector<std::size_t> sources_;
  std::optional<GridGeometry> geometry_;
  std::vector<Direction> directions_;
};

/// Regular grid. d2 is a ring (periodic) or segment (bordered) of `width`
/// nodes and ignores `height`. Bordered grids drop the links that would
/// leave the lattice.
Network build_grid(Lattice lattice, int width, int height, Boundary boundary);
Network build_grid(const GridGeometry& geometry);

struct BalanceReport {
  std::vector<std::size_t> unbalanced_nodes;  // in-degree != out-degree
  std::vector<std::size_t> broken_links;      // no consistent reciprocal

  bool valid() const noexcept { return unbalanced_nodes.empty() && broken_links.empty(); }
};

BalanceReport validate_balanced(const Network& network);

}  // namespace kinon

#endif  // KINON_NETWORK_HPP
