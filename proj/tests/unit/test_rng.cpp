#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dtscr/parallel.hpp"
#include "dtscr/rng.hpp"

namespace dtscr {
namespace {

// Known-answer vectors published with the Random123 reference implementation.
TEST(Philox, KnownAnswerVectors) {
  EXPECT_EQ(Philox4x32::block({0, 0, 0, 0}, {0, 0}),
            (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                              {0xffffffffu, 0xffffffffu}),
            (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              {0xa4093822u, 0x299f31d0u}),
            (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RandomStream, StreamsAreReproducibleAndDistinct) {
  RandomStream a(42, 7);
  RandomStream b(42, 7);
  RandomStream c(42, 8);
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    if (x == c.next_u64()) ++same;
  }
  EXPECT_EQ(same, 0);
}

TEST(RandomStream, UniformAndNormalMoments) {
  RandomStream rng(2025);
  const int n = 200000;
  double sum = 0.0;
  double nsum = 0.0;
  double nsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    const double z = rng.normal();
    nsum += z;
    nsq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(nsum / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(nsq / n, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(RandomStream, IndexIsUnbiasedOverSmallRange) {
  RandomStream rng(3);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[rng.index(7)];
  for (const int c : counts) EXPECT_NEAR(c, n / 7.0, 5 * std::sqrt(n / 7.0));
}

TEST(RandomPermutation, IsAPermutation) {
  RandomStream rng(11);
  auto perm = random_permutation(50, rng);
  std::sort(perm.begin(), perm.end());
  std::vector<int> expected(50);
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(perm, expected);
}

TEST(DeriveSeed, DependsOnBothArguments) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  for (const int workers : {1, 4}) {
    try {
      parallel_for(100, workers, [](std::size_t i) {
        if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
      });
      FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "17");
    }
  }
}

TEST(ResolveWorkers, ExplicitRequestWins) {
  EXPECT_EQ(resolve_workers(3), 3);
  setenv("DTSCR_WORKERS", "5", 1);
  EXPECT_EQ(resolve_workers(0), 5);
  EXPECT_EQ(resolve_workers(2), 2);
  unsetenv("DTSCR_WORKERS");
  EXPECT_EQ(resolve_workers(0), 1);
}

}  // namespace
}  // namespace dtscr
