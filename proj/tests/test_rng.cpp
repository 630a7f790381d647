#include <cmath>
#include <set>

#include "demr/rng.hpp"
#include "test_util.hpp"

namespace {

TEST(Rng, SameSeedSameStream) {
  demr::Rng a(99), b(99);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  demr::Rng c(99), d(99);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(c.gaussian(), d.gaussian());
}

TEST(Rng, DifferentSeedsDiffer) {
  demr::Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += a.next_u64() == b.next_u64();
  EXPECT_EQ(equal, 0);
}

TEST(Rng, SplitIgnoresParentDraws) {
  demr::Rng a(5);
  const demr::Rng fresh(5);
  for (int i = 0; i < 17; ++i) a.gaussian();
  demr::Rng c1 = a.split(3), c2 = fresh.split(3);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(c1.next_u64(), c2.next_u64());
  demr::Rng s0 = fresh.split(0), s1 = fresh.split(1);
  EXPECT_NE(s0.next_u64(), s1.next_u64());
}

TEST(Rng, UniformRangeAndMoments) {
  demr::Rng rng(7);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12, 2e-3);
}

TEST(Rng, GaussianMoments) {
  demr::Rng rng(8);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sq += g * g;
  }
  EXPECT_NEAR(sum / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(Rng, BelowCoversRange) {
  demr::Rng rng(9);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Rng, SplitMixReferenceValues) {
  // Published splitmix64 outputs for state 0.
  std::uint64_t s = 0;
  EXPECT_EQ(demr::splitmix64(s), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(demr::splitmix64(s), 0x6e789e6aa1b965f4ULL);
}

}  // namespace
