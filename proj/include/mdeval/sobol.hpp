#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace mdeval {

/// Unscrambled 4-dimensional Sobol sequence (Joe-Kuo direction numbers,
/// 32-bit resolution) in Gray-code order, starting at the origin. Matches
/// the first points of scipy.stats.qmc.Sobol(d=4, scramble=False).
class SobolSequence {
 public:
  static constexpr int kDims = 4;
  using Point = std::array<double, kDims>;

  explicit SobolSequence(std::uint64_t start = 0);

  /// Returns point `index()` and advances.
  Point next();
  std::uint64_t index() const { return index_; }

  /// Direct evaluation of point n.
  static Point point(std::uint64_t n);

 private:
  std::uint64_t index_ = 0;
  std::array<std::uint32_t, kDims> state_{};
};

struct PairSample {
  int i_row = 0;
  int i_col = 0;
  int j_row = 0;
  int j_col = 0;
  bool operator==(const PairSample&) const = default;
};

/// Neighborhood mapping. Dims 0 and 1 pick I uniformly over rows and columns
/// (floor(u * size)); dims 2 and 3 pick the offset of J uniformly in the
/// (2r+1) x (2r+1) box centered on I (L-infinity neighborhood, J = I allowed).
/// Offsets landing outside the image yield no pair; the sample is dropped,
/// not redrawn.
std::optional<PairSample> map_neighborhood_pair(const SobolSequence::Point& u, int height,
                                                int width, int radius);

/// Whole-image mapping for ordinal metrics: I from dims 0-1, J from dims 2-3,
/// both uniform over the image; I == J yields no pair.
std::optional<PairSample> map_global_pair(const SobolSequence::Point& u, int height, int width);

/// In-bounds neighborhood pairs among the first m Sobol points, in order.
std::vector<PairSample> sobol_pairs(int height, int width, int radius, std::uint64_t m);

}  // namespace mdeval
