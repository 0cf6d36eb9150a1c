#pragma once

// Gaussian and two-component mixture algebra used to model execution times.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fastsync/error.hpp"

namespace fastsync::stats {

using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;

struct Gaussian {
  double mean = 0.0;      // ms
  double variance = 0.0;  // ms^2

  double stddev() const { return std::sqrt(variance); }

  void validate() const {
    if (!(variance >= 0.0) || !std::isfinite(variance) || !std::isfinite(mean))
      throw DomainError("gaussian variance must be finite and >= 0");
  }

  friend bool operator==(const Gaussian&, const Gaussian&) = default;
};

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double standard_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

// Acklam's rational approximation followed by one Halley step against erfc.
// Absolute error is far below 1e-9 on (0,1).
inline double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile probability must lie in (0,1), got " + std::to_string(p));

  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  const double e = standard_normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * kPi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

inline double gaussian_cdf(const Gaussian& g, double t) {
  g.validate();
  if (g.variance == 0.0) return t < g.mean ? 0.0 : 1.0;
  return standard_normal_cdf((t - g.mean) / g.stddev());
}

inline double gaussian_quantile(const Gaussian& g, double p) {
  g.validate();
  const double z = standard_normal_quantile(p);
  if (g.variance == 0.0) return g.mean;
  return g.mean + z * g.stddev();
}

// Sum of two independent Gaussians.
inline Gaussian sum_gaussians(const Gaussian& a, const Gaussian& b) {
  return Gaussian{a.mean + b.mean, a.variance + b.variance};
}

// One draw; durations are non-negative so the lower tail is clamped at 0.
inline double sample(const Gaussian& g, Rng& rng) {
  if (g.variance <= 0.0) return std::max(0.0, g.mean);
  std::normal_distribution<double> dist(g.mean, g.stddev());
  return std::max(0.0, dist(rng));
}

enum class Component { early, late, local_early, local_late };

inline const char* to_string(Component c) {
  switch (c) {
    case Component::early: return "early";
    case Component::late: return "late";
    case Component::local_early: return "local_early";
    case Component::local_late: return "local_late";
  }
  return "?";
}

// Execution-time law of one cluster: early/late task components plus the
// optional local-task components.
struct MixtureModel {
  Gaussian early;
  Gaussian late;
  double weight_early = 0.5;
  std::optional<Gaussian> local_early;
  std::optional<Gaussian> local_late;
  double local_weight_early = 0.5;

  const Gaussian& component(Component c) const {
    switch (c) {
      case Component::early: return early;
      case Component::late: return late;
      case Component::local_early:
        if (!local_early) throw MissingComponentError("mixture has no local_early component");
        return *local_early;
      case Component::local_late:
        if (!local_late) throw MissingComponentError("mixture has no local_late component");
        return *local_late;
    }
    throw MissingComponentError("unknown component");
  }

  bool has_local() const { return local_early.has_value() && local_late.has_value(); }

  // late must dominate early in mean and variance; weights are probabilities.
  void validate() const {
    early.validate();
    late.validate();
    auto prob = [](double w) { return w >= 0.0 && w <= 1.0; };
    if (!prob(weight_early) || !prob(local_weight_early)) throw ValidationError("mixture weights must lie in [0,1]");
    if (late.mean < early.mean || late.variance < early.variance)
      throw ValidationError("late component must have mean and variance >= the early component");
    if (local_early) local_early->validate();
    if (local_late) local_late->validate();
    if (local_early && local_late &&
        (local_late->mean < local_early->mean || local_late->variance < local_early->variance))
      throw ValidationError("local_late must have mean and variance >= local_early");
  }

  friend bool operator==(const MixtureModel&, const MixtureModel&) = default;
};

// Raises the late variances to at least the early ones so a fitted model
// passes validate(). Means are left untouched since fitting orders them.
inline MixtureModel with_dominant_late(MixtureModel m) {
  m.late.variance = std::max(m.late.variance, m.early.variance);
  m.late.mean = std::max(m.late.mean, m.early.mean);
  if (m.local_early && m.local_late) {
    m.local_late->variance = std::max(m.local_late->variance, m.local_early->variance);
    m.local_late->mean = std::max(m.local_late->mean, m.local_early->mean);
  }
  return m;
}

inline double mixture_quantile(const MixtureModel& m, Component c, double p) {
  return gaussian_quantile(m.component(c), p);
}

struct FitOptions {
  int max_iterations = 100;
  double relative_tolerance = 1e-8;
};

namespace detail {

inline Gaussian moments(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, ss / n};
}

inline double log_normal_pdf(double x, double mean, double var) {
  return -0.5 * std::log(2.0 * kPi * var) - 0.5 * (x - mean) * (x - mean) / var;
}

}  // namespace detail

// Two-component EM fit started from a median split. The component with the
// smaller mean (then smaller variance) is labelled early.
inline MixtureModel fit_mixture(std::span<const double> samples, FitOptions options = {}) {
  if (samples.size() < 4) throw InsufficientDataError("fit_mixture needs at least 4 samples, got " + std::to_string(samples.size()));
  for (double x : samples)
    if (!std::isfinite(x)) throw DomainError("fit_mixture samples must be finite");

  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const Gaussian total = detail::moments(xs);

  MixtureModel out;
  if (total.variance == 0.0) {
    out.early = out.late = Gaussian{xs.front(), 0.0};
    out.weight_early = 0.5;
    return out;
  }

  const std::size_t n = xs.size();
  const std::size_t half = n / 2;
  Gaussian g0 = detail::moments(std::span<const double>(xs.data(), half));
  Gaussian g1 = detail::moments(std::span<const double>(xs.data() + half, n - half));
  double w0 = static_cast<double>(half) / static_cast<double>(n);

  // Keeps a component from collapsing onto a single point.
  const double floor = std::max(1e-12, 1e-6 * total.variance);
  g0.variance = std::max(g0.variance, floor);
  g1.variance = std::max(g1.variance, floor);

  std::vector<double> resp(n);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < options.max_iterations; ++it) {
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double l0 = std::log(w0) + detail::log_normal_pdf(xs[i], g0.mean, g0.variance);
      const double l1 = std::log1p(-w0) + detail::log_normal_pdf(xs[i], g1.mean, g1.variance);
      const double m = std::max(l0, l1);
      const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
      resp[i] = std::exp(l0 - lse);
      ll += lse;
    }

    double n0 = 0.0, s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      n0 += resp[i];
      s0 += resp[i] * xs[i];
      s1 += (1.0 - resp[i]) * xs[i];
    }
    const double n1 = static_cast<double>(n) - n0;
    if (n0 < 1e-9 || n1 < 1e-9) break;
    const double m0 = s0 / n0, m1 = s1 / n1;
    double v0 = 0.0, v1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v0 += resp[i] * (xs[i] - m0) * (xs[i] - m0);
      v1 += (1.0 - resp[i]) * (xs[i] - m1) * (xs[i] - m1);
    }
    g0 = {m0, std::max(v0 / n0, floor)};
    g1 = {m1, std::max(v1 / n1, floor)};
    w0 = std::clamp(n0 / static_cast<double>(n), 1e-9, 1.0 - 1e-9);

    if (std::isfinite(prev_ll) && std::abs(ll - prev_ll) <= options.relative_tolerance * std::abs(ll)) break;
    prev_ll = ll;
  }

  const bool swap = g1.mean < g0.mean || (g1.mean == g0.mean && g1.variance < g0.variance);
  out.early = swap ? g1 : g0;
  out.late = swap ? g0 : g1;
  out.weight_early = swap ? 1.0 - w0 : w0;
  return out;
}

}  // namespace fastsync::stats
