#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "epsis/stats.hpp"

using namespace epsis;

TEST(Wilson, KnownInterval) {
  // 8 successes in 10 trials.
  const auto p = wilson(8, 10);
  EXPECT_DOUBLE_EQ(p.estimate, 0.8);
  EXPECT_NEAR(p.lower, 0.4902, 1e-4);
  EXPECT_NEAR(p.upper, 0.9433, 1e-4);
}

TEST(Wilson, ExtremesStayInUnitInterval) {
  const auto zero = wilson(0, 100);
  EXPECT_DOUBLE_EQ(zero.lower, 0.0);
  EXPECT_GT(zero.upper, 0.0);
  EXPECT_NEAR(zero.upper, 0.0370, 1e-4);
  const auto all = wilson(100, 100);
  EXPECT_DOUBLE_EQ(all.upper, 1.0);
  EXPECT_LT(all.lower, 1.0);
  const auto none = wilson(0, 0);
  EXPECT_EQ(none.trials, 0u);
  EXPECT_DOUBLE_EQ(none.lower, 0.0);
  EXPECT_DOUBLE_EQ(none.upper, 1.0);
}

TEST(Wilson, ContainsEstimate) {
  for (std::size_t s = 0; s <= 50; ++s) {
    const auto p = wilson(s, 50);
    EXPECT_LE(p.lower, p.estimate);
    EXPECT_GE(p.upper, p.estimate);
  }
}

TEST(Quantile, LinearInterpolation) {
  const std::vector<double> xs{5, 1, 4, 2, 3};
  EXPECT_DOUBLE_EQ(quantile(xs, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile(xs, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(quantile(xs, 0.95), 4.8);
  EXPECT_THROW(quantile({}, 0.5), std::domain_error);
}

TEST(MeanWithSe, Values) {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto m = mean_with_se(xs);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.standard_error, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
}

TEST(LeastSquares, ExactLine) {
  const std::vector<double> x{1, 2, 3, 4}, y{3, 5, 7, 9};
  const auto f = least_squares(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.slope_se, 0.0, 1e-14);
}

TEST(LeastSquares, StandardError) {
  const std::vector<double> x{0, 1, 2}, y{0, 2, 1};
  const auto f = least_squares(x, y);
  EXPECT_DOUBLE_EQ(f.slope, 0.5);
  // residuals -0.5, 1, -0.5: rss = 1.5, s^2 = 1.5, sxx = 2
  EXPECT_NEAR(f.slope_se, std::sqrt(1.5 / 2.0), 1e-14);
}

TEST(LeastSquares, Degenerate) {
  const std::vector<double> x{1, 1}, y{1, 2};
  EXPECT_THROW(least_squares(x, y), std::domain_error);
  EXPECT_THROW(least_squares(std::vector<double>{1}, std::vector<double>{1}), std::domain_error);
}
