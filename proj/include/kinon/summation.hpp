#ifndef KINON_SUMMATION_HPP
#define KINON_SUMMATION_HPP

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>

namespace kinon {

/// Neumaier (improved Kahan-Babuska) running sum.
class CompensatedSum {
public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  double value() const noexcept { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Compensated sum in the order given.
inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

/// Largest number of channels a node can carry (d8 links + storage).
inline constexpr std::size_t kMaxChannels = 9;

/// Compensated sum of a small multiset, independent of element order.
///
/// Values are sorted ascending before accumulation, so any permutation of
/// the same values yields the same bits. Per-node sums use this so that the
/// update commutes with lattice symmetries (channel relabeling).
inline double multiset_sum(std::span<const double> xs) noexcept {
  assert(xs.size() <= kMaxChannels);
  std::array<double, kMaxChannels> buf{};
  const std::size_t n = std::min(xs.size(), kMaxChannels);
  std::copy_n(xs.begin(), n, buf.begin());
  // insertion sort: n <= 9
  for (std::size_t i = 1; i < n; ++i) {
    const double v = buf[i];
    std::size_t j = i;
    while (j > 0 && buf[j - 1] > v) {
      buf[j] = buf[j - 1];
      --j;
    }
    buf[j] = v;
  }
  CompensatedSum s;
  for (std::size_t i = 0; i < n; ++i) s.add(buf[i]);
  return s.value();
}

}  // namespace kinon

#endif  // KINON_SUMMATION_HPP
