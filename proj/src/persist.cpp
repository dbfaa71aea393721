#include "kinon/persist.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "kinon/image.hpp"

static_assert(std::endian::native == std::endian::little, "snapshot format assumes a little-endian host");

namespace kinon {

namespace {

constexpr char kMagic[8] = {'K', 'I', 'N', 'S', 'N', 'A', 'P', '1'};
constexpr const char* kSeriesHeader = "cycle,Ke,Kt,drift";

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

void put_array(std::vector<std::uint8_t>& out, const Eigen::ArrayXd& a) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(a.data());
  out.insert(out.end(), p, p + sizeof(double) * static_cast<std::size_t>(a.size()));
}

class Cursor {
public:
  explicit Cursor(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  Eigen::ArrayXd array(std::size_t n) {
    need(n * sizeof(double));
    Eigen::ArrayXd a(static_cast<Eigen::Index>(n));
    if (n) std::memcpy(a.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return a;
  }

  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  bool done() const noexcept { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("state file truncated");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string series_csv(const std::vector<MacroRecord>& records) {
  std::string out = std::string(kSeriesHeader) + "\n";
  for (const auto& r : records)
    out += std::to_string(r.cycle) + "," + real(r.exchange) + "," + real(r.turnover) + "," + real(r.drift) + "\n";
  return out;
}

void write_series(const std::string& path, const std::vector<MacroRecord>& records) {
  const std::string text = series_csv(records);
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<MacroRecord> parse_series(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSeriesHeader)
    throw std::runtime_error("series: expected header '" + std::string(kSeriesHeader) + "'");
  std::vector<MacroRecord> records;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    MacroRecord r;
    long long cycle = 0;
    int consumed = 0;
    if (std::sscanf(line.c_str(), "%lld,%lf,%lf,%lf%n", &cycle, &r.exchange, &r.turnover, &r.drift, &consumed) != 4 ||
        static_cast<std::size_t>(consumed) != line.size())
      throw std::runtime_error("series: malformed row " + std::to_string(row));
    if (!std::isfinite(r.exchange) || !std::isfinite(r.turnover) || !std::isfinite(r.drift))
      throw std::runtime_error("series: non-finite value in row " + std::to_string(row));
    r.cycle = cycle;
    records.push_back(r);
  }
  return records;
}

std::vector<MacroRecord> read_series(const std::string& path) {
  const auto bytes = read_file(path);
  return parse_series(std::string(bytes.begin(), bytes.end()));
}

std::vector<std::uint8_t> encode_state(const GridGeometry& geometry, const NetworkState& state, std::int64_t cycle,
                                       double omega) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(geometry.lattice));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(geometry.width));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(geometry.height));
  put<std::uint64_t>(out, geometry.boundary == Boundary::periodic ? 0 : 1);
  put<std::int64_t>(out, cycle);
  put<double>(out, omega);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(state.storage.size()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(state.outputs.size()));
  put_array(out, state.storage);
  put_array(out, state.outputs);
  put_array(out, state.inflow);
  put_array(out, state.storage_potential);
  put_array(out, state.link_potential);
  return out;
}

StoredState decode_state(const std::vector<std::uint8_t>& bytes) {
  Cursor in(bytes);
  char magic[8];
  in.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("not a kinon state file");

  StoredState s;
  const auto degree = in.get<std::uint64_t>();
  const auto width = in.get<std::uint64_t>();
  const auto height = in.get<std::uint64_t>();
  const auto boundary = in.get<std::uint64_t>();
  if (degree != 2 && degree != 4 && degree != 8) throw std::runtime_error("state file: bad degree");
  if (width < 3 || width > 16384 || height < 1 || height > 16384 || boundary > 1)
    throw std::runtime_error("state file: bad geometry");
  s.geometry = GridGeometry{static_cast<Lattice>(degree), static_cast<int>(width), static_cast<int>(height),
                            boundary == 0 ? Boundary::periodic : Boundary::bordered};
  s.cycle = in.get<std::int64_t>();
  s.omega = in.get<double>();
  if (!(std::isfinite(s.omega) && s.omega > 0.0)) throw std::runtime_error("state file: bad omega");

  const Network network = build_grid(s.geometry);
  const auto nodes = in.get<std::uint64_t>();
  const auto links = in.get<std::uint64_t>();
  if (nodes != network.node_count() || links != network.link_count())
    throw std::runtime_error("state file: buffer sizes do not match the grid");
  s.state.storage = in.array(nodes);
  s.state.outputs = in.array(links);
  s.state.inflow = in.array(links);
  s.state.storage_potential = in.array(nodes);
  s.state.link_potential = in.array(links);
  if (!in.done()) throw std::runtime_error("state file: trailing bytes");
  return s;
}

}  // namespace kinon
