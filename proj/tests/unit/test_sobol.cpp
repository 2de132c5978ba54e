#include <gtest/gtest.h>

#include "mdeval/sobol.hpp"

namespace mdeval {
namespace {

// Reference points of the unscrambled 4-d Joe-Kuo Sobol sequence.
const std::vector<std::pair<std::uint64_t, SobolSequence::Point>> kFrozen = {
    {0, {0.0, 0.0, 0.0, 0.0}},
    {1, {0.5, 0.5, 0.5, 0.5}},
    {2, {0.75, 0.25, 0.25, 0.25}},
    {3, {0.25, 0.75, 0.75, 0.75}},
    {4, {0.375, 0.375, 0.625, 0.875}},
    {5, {0.875, 0.875, 0.125, 0.375}},
    {6, {0.625, 0.125, 0.875, 0.625}},
    {7, {0.125, 0.625, 0.375, 0.125}},
    {8, {0.1875, 0.3125, 0.9375, 0.4375}},
    {15, {0.0625, 0.9375, 0.5625, 0.3125}},
    {1000, {0.2197265625, 0.0966796875, 0.5185546875, 0.6767578125}},
    {123456, {0.02649688720703125, 0.18274688720703125, 0.30725860595703125, 0.45030975341796875}},
    {131071, {7.62939453125e-06, 0.5000076293945312, 0.9082107543945312, 0.12718963623046875}},
};

TEST(Sobol, FrozenValues) {
  for (const auto& [n, p] : kFrozen) EXPECT_EQ(SobolSequence::point(n), p) << n;
}

TEST(Sobol, IncrementalMatchesDirect) {
  SobolSequence seq;
  for (std::uint64_t n = 0; n < 5000; ++n) ASSERT_EQ(seq.next(), SobolSequence::point(n)) << n;
  SobolSequence mid(123450);
  for (std::uint64_t n = 123450; n < 123460; ++n) ASSERT_EQ(mid.next(), SobolSequence::point(n));
  EXPECT_EQ(mid.index(), 123460u);
}

TEST(Sobol, StratifiedPrefix) {
  // Each dyadic interval of length 1/16 holds exactly one of the first 16 points.
  for (int d = 0; d < 4; ++d) {
    std::vector<int> bins(16, 0);
    for (std::uint64_t n = 0; n < 16; ++n) ++bins[static_cast<int>(SobolSequence::point(n)[d] * 16)];
    for (int b : bins) EXPECT_EQ(b, 1);
  }
}

TEST(PairMapping, NeighborhoodBoundsAndOffsets) {
  const int h = 9, w = 11, r = 3;
  SobolSequence seq;
  int kept = 0;
  for (int k = 0; k < 4096; ++k) {
    const auto u = seq.next();
    const auto p = map_neighborhood_pair(u, h, w, r);
    const int ir = static_cast<int>(u[0] * h), ic = static_cast<int>(u[1] * w);
    const int dr = static_cast<int>(u[2] * (2 * r + 1)) - r, dc = static_cast<int>(u[3] * (2 * r + 1)) - r;
    const bool inside = ir + dr >= 0 && ir + dr < h && ic + dc >= 0 && ic + dc < w;
    ASSERT_EQ(p.has_value(), inside);
    if (!p) continue;
    ++kept;
    EXPECT_EQ(*p, (PairSample{ir, ic, ir + dr, ic + dc}));
  }
  EXPECT_GT(kept, 2000);
  EXPECT_EQ(sobol_pairs(h, w, r, 4096).size(), static_cast<std::size_t>(kept));
}

TEST(PairMapping, GlobalSkipsIdenticalPixels) {
  EXPECT_FALSE(map_global_pair({0.0, 0.0, 0.0, 0.0}, 4, 4).has_value());
  const auto p = map_global_pair({0.1, 0.9, 0.6, 0.3}, 4, 4);
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(*p, (PairSample{0, 3, 2, 1}));
}

}  // namespace
}  // namespace mdeval
