#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "dualsprt/stats.hpp"

namespace dualsprt {

/// Decision held by a local node once its test has stopped.
enum class Latch { none, decided_h1, decided_h0 };

struct SprtNodeConfig {
  double gamma1 = 10.0;
  double gamma0 = -10.0;
  double b1 = 1.0;
  double b0 = -1.0;
  GaussianSpec f0{0.0, 1.0};
  GaussianSpec f1{1.0, 1.0};

  void validate() const {
    if (!(gamma0 < 0.0 && 0.0 < gamma1)) throw std::invalid_argument("SprtNodeConfig: need gamma0 < 0 < gamma1");
    if (b1 == b0) throw std::invalid_argument("SprtNodeConfig: b1 must differ from b0");
    f0.validate("SprtNodeConfig.f0");
    f1.validate("SprtNodeConfig.f1");
  }
};

struct SprtNodeState {
  double w = 0.0;
  Latch latch = Latch::none;
};

template <class State>
struct NodeStep {
  State state;
  double transmit = 0.0;
};

inline double latched_level(Latch latch, double b1, double b0) {
  switch (latch) {
    case Latch::decided_h1: return b1;
    case Latch::decided_h0: return b0;
    case Latch::none: break;
  }
  return 0.0;
}

/// One slot of the local SPRT. The first threshold crossing latches the node; a
/// latched node keeps W frozen and repeats its level in every later slot.
inline NodeStep<SprtNodeState> sprt_step(SprtNodeState state, double x, const SprtNodeConfig& cfg) {
  if (!std::isfinite(x)) throw std::invalid_argument("sprt_step: non-finite observation");
  if (state.latch == Latch::none) {
    state.w += gaussian_llr(x, cfg.f0, cfg.f1);
    if (state.w >= cfg.gamma1)
      state.latch = Latch::decided_h1;
    else if (state.w <= cfg.gamma0)
      state.latch = Latch::decided_h0;
  }
  return {state, latched_level(state.latch, cfg.b1, cfg.b0)};
}

/// Leading-order form of Lai's time-varying boundary: g(t) = log(1/t) on (0,1), 0 afterwards.
inline double lai_boundary(double t) {
  if (t <= 0.0) throw std::invalid_argument("lai_boundary: t must be > 0");
  return t < 1.0 ? -std::log(t) : 0.0;
}

/// Lai's sequential GLR node for the equal-variance Gaussian mean family with unknown mean.
struct GlrNodeConfig {
  double theta0 = 0.0;
  double theta1 = 0.5;
  double theta_star = 0.25;
  double clip_lo = 0.0;
  double clip_hi = 10.0;
  double cost = 0.01;
  double noise_variance = 1.0;
  double b1 = 1.0;
  double b0 = -1.0;
  std::function<double(double)> threshold_fn = lai_boundary;

  void validate() const {
    if (!(theta1 > theta0)) throw std::invalid_argument("GlrNodeConfig: need theta1 > theta0");
    if (!(clip_lo <= theta0 && theta0 < theta_star && theta_star < theta1 && theta1 <= clip_hi))
      throw std::invalid_argument("GlrNodeConfig: need clip_lo <= theta0 < theta* < theta1 <= clip_hi");
    if (!(cost > 0.0)) throw std::invalid_argument("GlrNodeConfig: cost must be > 0");
    if (!(noise_variance > 0.0)) throw std::invalid_argument("GlrNodeConfig: noise variance must be > 0");
    if (b1 == b0) throw std::invalid_argument("GlrNodeConfig: b1 must differ from b0");
    if (!threshold_fn) throw std::invalid_argument("GlrNodeConfig: missing threshold function");
  }

  /// Builds the configuration used for unknown received power: theta0 = a1 = 0 and theta* from KL balance.
  static GlrNodeConfig for_unknown_power(double theta1, double clip_hi, double cost, double noise_variance,
                                         double b1 = 1.0, double b0 = -1.0) {
    GlrNodeConfig cfg;
    cfg.theta0 = 0.0;
    cfg.theta1 = theta1;
    cfg.theta_star = kl_balance_point(0.0, theta1, noise_variance);
    cfg.clip_lo = 0.0;
    cfg.clip_hi = clip_hi;
    cfg.cost = cost;
    cfg.noise_variance = noise_variance;
    cfg.b1 = b1;
    cfg.b0 = b0;
    cfg.validate();
    return cfg;
  }
};

struct GlrNodeState {
  long n = 0;
  double s = 0.0;
  Latch latch = Latch::none;
};

inline double glr_estimate(long n, double s, const GlrNodeConfig& cfg) {
  if (n < 1) throw std::invalid_argument("glr_estimate: n must be >= 1");
  return std::clamp(s / static_cast<double>(n), cfg.clip_lo, cfg.clip_hi);
}

/// W_n = max over {theta0, theta1} of sum_k log f_hat(x_k) / f_theta(x_k).
///
/// Each sum depends on the data only through s = sum x_k:
///   [(hat - theta) s - n (hat^2 - theta^2) / 2] / var,
/// which collapses to n (hat - theta)^2 / (2 var) when hat = s/n is not clipped.
inline double glr_statistic(long n, double s, const GlrNodeConfig& cfg) {
  const double hat = glr_estimate(n, s, cfg);
  const double dn = static_cast<double>(n);
  auto log_ratio = [&](double theta) {
    return ((hat - theta) * s - 0.5 * dn * (hat * hat - theta * theta)) / cfg.noise_variance;
  };
  return std::max(log_ratio(cfg.theta0), log_ratio(cfg.theta1));
}

/// One slot of the GLR node: stop when W_n >= g(n c), then decide by comparing
/// the clipped estimate with theta* (ties go to H1).
inline NodeStep<GlrNodeState> glr_step(GlrNodeState state, double x, const GlrNodeConfig& cfg) {
  if (!std::isfinite(x)) throw std::invalid_argument("glr_step: non-finite observation");
  if (state.latch == Latch::none) {
    state.n += 1;
    state.s += x;
    const double w = glr_statistic(state.n, state.s, cfg);
    if (w >= cfg.threshold_fn(static_cast<double>(state.n) * cfg.cost)) {
      const double hat = glr_estimate(state.n, state.s, cfg);
      state.latch = hat >= cfg.theta_star ? Latch::decided_h1 : Latch::decided_h0;
    }
  }
  return {state, latched_level(state.latch, cfg.b1, cfg.b0)};
}

/// theta1 = (P_high - P_low) / 2 for a known received-power range.
inline double choose_theta1_known_range(double p_low, double p_high) {
  if (!(0.0 <= p_low && p_low < p_high))
    throw std::invalid_argument("choose_theta1_known_range: need 0 <= p_low < p_high");
  return 0.5 * (p_high - p_low);
}

/// theta1 = median of the exponential received-power law (Rayleigh fading).
inline double choose_theta1_fading(const ExponentialSpec& power) {
  power.validate();
  return power.median();
}

}  // namespace dualsprt
