#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "epsis/rng.hpp"

using namespace epsis;

// Published known-answer vectors for Philox4x32-10.
TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                     {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                     {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(ReplicationStream, Reproducible) {
  ReplicationStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(ReplicationStream, DistinctReplicationsAndSeedsDiffer) {
  std::set<std::uint64_t> first;
  for (std::uint64_t seed : {1ull, 2ull, 1ull << 40})
    for (std::uint64_t rep : {0ull, 1ull, 1ull << 32, 12345ull}) {
      ReplicationStream s(seed, rep);
      first.insert(s());
    }
  EXPECT_EQ(first.size(), 12u);
}

TEST(ReplicationStream, UniformInOpenInterval) {
  ReplicationStream s(3, 0);
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5 * std::sqrt(1.0 / 12.0 / n));
}

TEST(ReplicationStream, UniformHistogramChiSquare) {
  ReplicationStream s(11, 3);
  const int bins = 20, n = 100000;
  std::vector<int> count(bins, 0);
  for (int i = 0; i < n; ++i) ++count[static_cast<int>(s.uniform() * bins)];
  double chi2 = 0.0;
  const double e = static_cast<double>(n) / bins;
  for (int c : count) chi2 += (c - e) * (c - e) / e;
  EXPECT_LT(chi2, 43.8);  // 0.999 quantile, 19 degrees of freedom
}

TEST(ReplicationStream, ExponentialMoments) {
  ReplicationStream s(5, 9);
  const double rate = 2.5;
  const int n = 200000;
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = s.exponential(rate);
    ASSERT_GT(x, 0.0);
    m1 += x;
    m2 += x * x;
  }
  m1 /= n;
  m2 /= n;
  EXPECT_NEAR(m1, 1.0 / rate, 5.0 / rate / std::sqrt(n));
  EXPECT_NEAR(m2, 2.0 / (rate * rate), 0.02 * 2.0 / (rate * rate));
}

TEST(ReplicationStream, SatisfiesBitGeneratorBounds) {
  static_assert(ReplicationStream::min() == 0);
  static_assert(ReplicationStream::max() == ~std::uint64_t{0});
  ReplicationStream s(0, 0);
  std::uint64_t acc_or = 0, acc_and = ~std::uint64_t{0};
  for (int i = 0; i < 256; ++i) {
    const auto v = s();
    acc_or |= v;
    acc_and &= v;
  }
  EXPECT_EQ(acc_or, ~std::uint64_t{0});
  EXPECT_EQ(acc_and, 0u);
}
