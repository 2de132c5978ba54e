#include "mdeval/sobol.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "mdeval/types.hpp"

namespace mdeval {

namespace {

constexpr int kBits = 32;
using Directions = std::array<std::array<std::uint32_t, kBits>, SobolSequence::kDims>;

struct Primitive {
  int degree;
  std::uint32_t coeffs;
  std::array<std::uint32_t, 3> m;
};

// new-joe-kuo-6.21201, dimensions 2..4 (dimension 1 is van der Corput).
constexpr std::array<Primitive, 3> kPrimitives{{
    {1, 0, {1, 0, 0}},
    {2, 1, {1, 3, 0}},
    {3, 1, {1, 3, 1}},
}};

Directions build_directions() {
  Directions v{};
  for (int k = 0; k < kBits; ++k) v[0][k] = 1u << (kBits - 1 - k);
  for (int d = 1; d < SobolSequence::kDims; ++d) {
    const Primitive& p = kPrimitives[d - 1];
    const int s = p.degree;
    for (int k = 0; k < s; ++k) v[d][k] = p.m[k] << (kBits - 1 - k);
    for (int k = s; k < kBits; ++k) {
      std::uint32_t value = v[d][k - s] ^ (v[d][k - s] >> s);
      for (int j = 1; j < s; ++j) {
        if ((p.coeffs >> (s - 1 - j)) & 1u) value ^= v[d][k - j];
      }
      v[d][k] = value;
    }
  }
  return v;
}

const Directions& directions() {
  static const Directions v = build_directions();
  return v;
}

constexpr double kScale = 1.0 / 4294967296.0;

int clamp_index(double u, int size) {
  return std::min(size - 1, static_cast<int>(u * size));
}

}  // namespace

SobolSequence::SobolSequence(std::uint64_t start) : index_(start) {
  if (start >= (1ull << kBits)) throw InvalidInput("Sobol index exceeds 2^32");
  const std::uint64_t gray = start ^ (start >> 1);
  const auto& v = directions();
  for (int d = 0; d < kDims; ++d) {
    std::uint32_t x = 0;
    for (int k = 0; k < kBits; ++k) {
      if ((gray >> k) & 1u) x ^= v[d][k];
    }
    state_[d] = x;
  }
}

SobolSequence::Point SobolSequence::next() {
  Point out;
  for (int d = 0; d < kDims; ++d) out[d] = state_[d] * kScale;
  // Gray-code step: flip the direction of the lowest zero bit of the index.
  const int c = std::countr_one(index_);
  if (c >= kBits) throw InvalidInput("Sobol sequence exhausted");
  const auto& v = directions();
  for (int d = 0; d < kDims; ++d) state_[d] ^= v[d][c];
  ++index_;
  return out;
}

SobolSequence::Point SobolSequence::point(std::uint64_t n) { return SobolSequence(n).next(); }

std::optional<PairSample> map_neighborhood_pair(const SobolSequence::Point& u, int height,
                                                int width, int radius) {
  const int box = 2 * radius + 1;
  PairSample p;
  p.i_row = clamp_index(u[0], height);
  p.i_col = clamp_index(u[1], width);
  p.j_row = p.i_row + clamp_index(u[2], box) - radius;
  p.j_col = p.i_col + clamp_index(u[3], box) - radius;
  if (p.j_row < 0 || p.j_col < 0 || p.j_row >= height || p.j_col >= width) return std::nullopt;
  return p;
}

std::optional<PairSample> map_global_pair(const SobolSequence::Point& u, int height, int width) {
  PairSample p;
  p.i_row = clamp_index(u[0], height);
  p.i_col = clamp_index(u[1], width);
  p.j_row = clamp_index(u[2], height);
  p.j_col = clamp_index(u[3], width);
  if (p.i_row == p.j_row && p.i_col == p.j_col) return std::nullopt;
  return p;
}

std::vector<PairSample> sobol_pairs(int height, int width, int radius, std::uint64_t m) {
  if (height < 1 || width < 1) throw InvalidInput("sobol_pairs needs a non-empty grid");
  if (radius < 1) throw InvalidInput("neighborhood radius must be >= 1");
  std::vector<PairSample> out;
  out.reserve(static_cast<std::size_t>(m));
  SobolSequence seq;
  for (std::uint64_t k = 0; k < m; ++k) {
    if (auto p = map_neighborhood_pair(seq.next(), height, width, radius)) out.push_back(*p);
  }
  return out;
}

}  // namespace mdeval
