#ifndef KINON_IMAGE_HPP
#define KINON_IMAGE_HPP

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kinon/engine.hpp"

namespace kinon {

/// 8-bit greyscale raster, row-major: pixel (x, y) is image(y, x).
using GreyImage = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::array<std::uint8_t, 3>> pixels;  // row-major

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h) {}

  std::array<std::uint8_t, 3>& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const std::array<std::uint8_t, 3>& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const RgbImage&) const = default;
};

/// intensity = round(255 * clamp(v * scale, 0, 1)); with scale 1 a mass of
/// 0.5 is mid-grey (128) and anything >= 1 is white.
inline std::uint8_t grey_level(double v, double scale) noexcept {
  const double t = std::clamp(v * scale, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(255.0 * t));
}

template <typename Derived>
GreyImage render_frame(const Eigen::ArrayBase<Derived>& field, double scale = 1.0) {
  return field.derived().unaryExpr([scale](double v) { return grey_level(v, scale); });
}

inline GreyImage render_frame(const FieldSnapshot& snapshot, double scale = 1.0) {
  return render_frame(snapshot.mass, scale);
}

/// Binary PGM (P5) bytes.
std::vector<std::uint8_t> encode_pgm(const GreyImage& image);
GreyImage decode_pgm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_png(const GreyImage& image);
std::vector<std::uint8_t> encode_png(const RgbImage& image);

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_file(const std::string& path);

}  // namespace kinon

#endif  // KINON_IMAGE_HPP
