#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/normal.hpp>

namespace dualsprt {

enum class Hypothesis { H0, H1 };

inline const char* to_string(Hypothesis h) { return h == Hypothesis::H1 ? "H1" : "H0"; }

inline Hypothesis other(Hypothesis h) { return h == Hypothesis::H1 ? Hypothesis::H0 : Hypothesis::H1; }

struct GaussianSpec {
  double mean = 0.0;
  double variance = 1.0;

  void validate(const char* what = "GaussianSpec") const {
    if (!(variance > 0.0) || !std::isfinite(variance) || !std::isfinite(mean))
      throw std::invalid_argument(std::string(what) + ": variance must be finite and > 0");
  }
  double stddev() const { return std::sqrt(variance); }

  friend bool operator==(const GaussianSpec&, const GaussianSpec&) = default;
};

struct ExponentialSpec {
  double rate = 1.0;

  void validate() const {
    if (!(rate > 0.0) || !std::isfinite(rate))
      throw std::invalid_argument("ExponentialSpec: rate must be finite and > 0");
  }
  double mean() const { return 1.0 / rate; }
  double median() const { return std::numbers::ln2 / rate; }

  friend bool operator==(const ExponentialSpec&, const ExponentialSpec&) = default;
};

// Standard normal helpers.
inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }
inline double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>{}, p);
}

inline double cdf(const GaussianSpec& g, double x) { return normal_cdf((x - g.mean) / g.stddev()); }
inline double pdf(const GaussianSpec& g, double x) {
  return normal_pdf((x - g.mean) / g.stddev()) / g.stddev();
}

/// log f1(x) - log f0(x) in closed form. Valid for unequal variances; avoids forming
/// density quotients, which underflow for large |x|.
inline double gaussian_llr(double x, const GaussianSpec& f0, const GaussianSpec& f1) {
  if (!std::isfinite(x)) throw std::invalid_argument("gaussian_llr: non-finite observation");
  const double d1 = x - f1.mean;
  const double d0 = x - f0.mean;
  if (f0.variance == f1.variance)
    return (d0 * d0 - d1 * d1) / (2.0 * f0.variance);
  return -0.5 * std::log(f1.variance / f0.variance) - d1 * d1 / (2.0 * f1.variance) +
         d0 * d0 / (2.0 * f0.variance);
}

struct LlrMoments {
  double drift = 0.0;
  double variance = 0.0;
};

/// Mean and variance of one LLR increment when X ~ f0 (H0) or f1 (H1).
///
/// The LLR is the quadratic a*x^2 + b*x + c; for X = m + sqrt(v) Z the random
/// part is (2am + b) sqrt(v) Z + a v Z^2, whose variance is (2am+b)^2 v + 2 a^2 v^2.
inline LlrMoments llr_drift_and_variance(const GaussianSpec& f0, const GaussianSpec& f1, Hypothesis under) {
  f0.validate("f0");
  f1.validate("f1");
  const double a = 0.5 / f0.variance - 0.5 / f1.variance;
  const double b = f1.mean / f1.variance - f0.mean / f0.variance;
  const double c = -0.5 * std::log(f1.variance / f0.variance) - f1.mean * f1.mean / (2.0 * f1.variance) +
                   f0.mean * f0.mean / (2.0 * f0.variance);
  const GaussianSpec& x = under == Hypothesis::H1 ? f1 : f0;
  const double m = x.mean;
  const double v = x.variance;
  LlrMoments out;
  out.drift = a * (m * m + v) + b * m + c;
  const double lin = 2.0 * a * m + b;
  out.variance = lin * lin * v + 2.0 * a * a * v * v;
  return out;
}

/// Kullback-Leibler number I(theta, lambda) within the equal-variance Gaussian family.
inline double kl_number(double theta, double lambda, double variance) {
  if (!(variance > 0.0)) throw std::invalid_argument("kl_number: variance must be > 0");
  const double d = theta - lambda;
  return d * d / (2.0 * variance);
}

/// theta* with I(theta*, theta0) = I(theta*, theta1). Quadratic KL makes this the midpoint.
inline double kl_balance_point(double theta0, double theta1, double variance) {
  if (theta0 == theta1) throw std::invalid_argument("kl_balance_point: theta0 == theta1");
  if (!(variance > 0.0)) throw std::invalid_argument("kl_balance_point: variance must be > 0");
  return 0.5 * (theta0 + theta1);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream id for one (trial, channel) pair. Node indices 0..L-1 are observation
/// streams; the trial runner reserves further indices for MAC noise and fading.
inline std::uint64_t stream_id(std::uint64_t trial_index, std::uint64_t node_index) {
  return splitmix64(trial_index * 0x100000001b3ULL ^ splitmix64(node_index + 0x51ed27ULL));
}

/// Deterministic random stream: equal (seed, stream) give identical sequences.
/// Single owner; never share one instance between concurrent trials.
class RandomSource {
 public:
  RandomSource(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream), engine_(splitmix64(seed ^ splitmix64(stream))) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  double normal(const GaussianSpec& g) { return g.mean + g.stddev() * gauss_(engine_); }
  double standard_normal() { return gauss_(engine_); }
  double exponential(const ExponentialSpec& e) { return std::exponential_distribution<double>{e.rate}(engine_); }
  double uniform() { return std::uniform_real_distribution<double>{}(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> gauss_;
};

}  // namespace dualsprt
