#ifndef KINON_PERSIST_HPP
#define KINON_PERSIST_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kinon/analysis.hpp"
#include "kinon/engine.hpp"
#include "kinon/network.hpp"

namespace kinon {

/// CSV with header `cycle,Ke,Kt,drift`; reals use 17 significant digits so
/// every value reads back bit-identically.
std::string series_csv(const std::vector<MacroRecord>& records);
void write_series(const std::string& path, const std::vector<MacroRecord>& records);
/// Throws std::runtime_error on a wrong header or malformed row.
std::vector<MacroRecord> parse_series(const std::string& text);
std::vector<MacroRecord> read_series(const std::string& path);

/// Saved network state.
///
/// Layout (little-endian):
///   char[8]  magic "KINSNAP1"
///   u64      degree (2, 4, 8), width, height, boundary (0 periodic, 1 bordered)
///   i64      cycle
///   f64      omega
///   u64      node count N, link count L
///   f64[N]   storage
///   f64[L]   outputs
///   f64[L]   inflow
///   f64[N]   storage potentials
///   f64[L]   link potentials
struct StoredState {
  GridGeometry geometry;
  std::int64_t cycle = 0;
  double omega = 0.0;
  NetworkState state;
};

std::vector<std::uint8_t> encode_state(const GridGeometry& geometry, const NetworkState& state, std::int64_t cycle,
                                       double omega);
/// Rebuilds the grid from the header and checks the buffer sizes against it.
StoredState decode_state(const std::vector<std::uint8_t>& bytes);

}  // namespace kinon

#endif  // KINON_PERSIST_HPP
