#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fastsync/error.hpp"
#include "fastsync/stats.hpp"

using namespace fastsync;
using namespace fastsync::stats;

namespace {

// Bisection on the erfc-based CDF; independent of the rational approximation.
double oracle_z(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Quantile, MedianOfSymmetric) { EXPECT_DOUBLE_EQ(gaussian_quantile({25, 4}, 0.5), 25.0); }

TEST(Quantile, StandardNormalOneSigma) { EXPECT_NEAR(gaussian_quantile({0, 1}, 0.8413), 1.0, 1e-3); }

TEST(Quantile, NinetiethPercentile) {
  EXPECT_NEAR(gaussian_quantile({25, 4}, 0.9), 25.0 + 2.0 * oracle_z(0.9), 1e-9);
  EXPECT_NEAR(gaussian_quantile({25, 4}, 0.9), 27.563, 1e-3);
}

TEST(Quantile, MatchesBisectionAcrossRange) {
  for (double p = 1e-6; p < 1.0; p += 0.0137) EXPECT_NEAR(standard_normal_quantile(p), oracle_z(p), 1e-9) << p;
  for (double p : {1e-10, 1e-4, 0.02425, 0.97575, 0.9999})
    EXPECT_NEAR(standard_normal_quantile(p), oracle_z(p), 1e-8) << p;
}

TEST(Quantile, SymmetricTails) {
  for (double p : {1e-10, 1e-6, 1e-3, 0.1, 0.3})
    EXPECT_NEAR(standard_normal_quantile(1.0 - p), -standard_normal_quantile(p), 1e-6) << p;
}

TEST(Quantile, ZeroVarianceReturnsMean) {
  for (double p : {0.01, 0.5, 0.999}) EXPECT_EQ(gaussian_quantile({17.5, 0}, p), 17.5);
}

TEST(Quantile, RejectsProbabilityOutsideOpenInterval) {
  for (double p : {0.0, 1.0, -0.1, 1.5, std::nan("")}) EXPECT_THROW(gaussian_quantile({25, 4}, p), DomainError) << p;
  EXPECT_THROW(gaussian_quantile({25, 0}, 0.0), DomainError);
  EXPECT_THROW(gaussian_quantile({25, -1}, 0.5), DomainError);
}

TEST(Quantile, CdfRoundTrip) {
  const Gaussian g{42.0, 9.0};
  for (int i = 1; i <= 99; ++i) {
    const double p = i / 100.0;
    EXPECT_NEAR(gaussian_cdf(g, gaussian_quantile(g, p)), p, 1e-6);
  }
}

TEST(Quantile, StrictlyIncreasing) {
  const Gaussian g{10.0, 0.25};
  double prev = -INFINITY;
  for (int i = 1; i < 1000; ++i) {
    const double q = gaussian_quantile(g, i / 1000.0);
    EXPECT_GT(q, prev);
    prev = q;
  }
}

TEST(Sum, Examples) {
  EXPECT_EQ(sum_gaussians({25, 4}, {5, 1}), (Gaussian{30, 5}));
  EXPECT_EQ(sum_gaussians({80, 9}, {10, 16}), (Gaussian{90, 25}));
  EXPECT_EQ(sum_gaussians({12.5, 3.25}, {0, 0}), (Gaussian{12.5, 3.25}));
}

TEST(Sum, EmpiricalMomentsMatch) {
  const Gaussian a{25, 4}, b{5, 1};
  const Gaussian z = sum_gaussians(a, b);
  Rng rng(7);
  std::normal_distribution<double> da(a.mean, a.stddev()), db(b.mean, b.stddev());
  const int n = 100000;
  double s = 0, ss = 0;
  for (int i = 0; i < n; ++i) {
    const double x = da(rng) + db(rng);
    s += x;
    ss += x * x;
  }
  const double mean = s / n, var = ss / n - mean * mean;
  EXPECT_NEAR(mean, z.mean, 3.0 * std::sqrt(z.variance / n));
  // var of the sample variance for a normal: 2 sigma^4 / (n-1)
  EXPECT_NEAR(var, z.variance, 3.0 * std::sqrt(2.0 * z.variance * z.variance / (n - 1)));
}

TEST(Mixture, NamedComponentQuantile) {
  MixtureModel m;
  m.early = {25, 4};
  m.late = {40, 9};
  EXPECT_DOUBLE_EQ(mixture_quantile(m, Component::early, 0.5), 25.0);
  EXPECT_NEAR(mixture_quantile(m, Component::late, 0.8413), 43.0, 1e-2);
  EXPECT_THROW(mixture_quantile(m, Component::local_early, 0.5), MissingComponentError);
  EXPECT_THROW(mixture_quantile(m, Component::local_late, 0.5), MissingComponentError);
  m.local_early = Gaussian{5, 1};
  m.local_late = Gaussian{8, 2};
  EXPECT_DOUBLE_EQ(mixture_quantile(m, Component::local_late, 0.5), 8.0);
}

TEST(Mixture, ValidationRule) {
  MixtureModel m;
  m.early = {25, 4};
  m.late = {40, 9};
  EXPECT_NO_THROW(m.validate());
  m.late = {20, 9};
  EXPECT_THROW(m.validate(), ValidationError);
  m.late = {40, 1};
  EXPECT_THROW(m.validate(), ValidationError);
  EXPECT_NO_THROW(with_dominant_late(m).validate());
}

TEST(Fit, SeparatesTwoComponents) {
  Rng rng(11);
  std::normal_distribution<double> a(25, 1), b(40, 1);
  std::vector<double> xs;
  for (int i = 0; i < 5000; ++i) {
    xs.push_back(a(rng));
    xs.push_back(b(rng));
  }
  const auto m = fit_mixture(xs);
  EXPECT_GE(m.early.mean, 24.5);
  EXPECT_LE(m.early.mean, 25.5);
  EXPECT_GE(m.late.mean, 39.5);
  EXPECT_LE(m.late.mean, 40.5);
  EXPECT_NEAR(m.weight_early, 0.5, 0.02);
}

TEST(Fit, IdenticalSamplesDegenerate) {
  const std::vector<double> xs(12, 7.25);
  const auto m = fit_mixture(xs);
  EXPECT_EQ(m.early.mean, 7.25);
  EXPECT_EQ(m.late.mean, 7.25);
  EXPECT_EQ(m.early.variance, 0.0);
  EXPECT_EQ(m.late.variance, 0.0);
}

TEST(Fit, NeedsFourSamples) {
  const std::vector<double> xs{1, 2, 3};
  EXPECT_THROW(fit_mixture(xs), InsufficientDataError);
}

TEST(Fit, EarlyHasSmallerMean) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::normal_distribution<double> d(30, 5);
    std::vector<double> xs;
    for (int i = 0; i < 40; ++i) xs.push_back(d(rng));
    const auto m = fit_mixture(xs);
    EXPECT_LE(m.early.mean, m.late.mean);
  }
}

TEST(Sample, ZeroVarianceIsMean) {
  Rng rng(123);
  EXPECT_EQ(sample({25, 0}, rng), 25.0);
}

TEST(Sample, SameSeedSameDraw) {
  Rng a(99), b(99);
  EXPECT_EQ(sample({25, 4}, a), sample({25, 4}, b));
}

TEST(Sample, ClampedAtZero) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) EXPECT_GE(sample({0.1, 100}, rng), 0.0);
}
