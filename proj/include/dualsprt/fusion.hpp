#pragma once

#include <numeric>
#include <span>
#include <stdexcept>

#include "dualsprt/stats.hpp"

namespace dualsprt {

struct FusionConfig {
  double beta1 = 5.0;
  double beta0 = -5.0;
  double mu1 = 1.0;
  double mu0 = -1.0;
  GaussianSpec mac_noise{0.0, 1.0};

  void validate() const {
    if (!(beta0 < 0.0 && 0.0 < beta1)) throw std::invalid_argument("FusionConfig: need beta0 < 0 < beta1");
    if (!(mu0 < mu1)) throw std::invalid_argument("FusionConfig: need mu0 < mu1");
    mac_noise.validate("FusionConfig.mac_noise");
    if (mac_noise.mean != 0.0) throw std::invalid_argument("FusionConfig: MAC noise must be zero mean");
  }

  bool symmetric() const { return beta1 == -beta0 && mu1 == -mu0; }

  static FusionConfig symmetric_config(double beta, double mu = 1.0, double noise_variance = 1.0) {
    return FusionConfig{beta, -beta, mu, -mu, GaussianSpec{0.0, noise_variance}};
  }
};

enum class FusionDecision { pending, h1, h0 };

struct FusionState {
  double f = 0.0;
  long k = 0;
  FusionDecision decision = FusionDecision::pending;

  bool decided() const { return decision != FusionDecision::pending; }
};

/// Physical-layer fusion: synchronous superposition of node levels plus receiver noise.
inline double mac_combine(std::span<const double> transmissions, double noise_draw) {
  return std::accumulate(transmissions.begin(), transmissions.end(), 0.0) + noise_draw;
}

/// log g1(y) - log g0(y) with g_i the density of Z + mu_i.
inline double fusion_llr(double y, const FusionConfig& cfg) {
  return (cfg.mu1 - cfg.mu0) * (2.0 * y - cfg.mu1 - cfg.mu0) / (2.0 * cfg.mac_noise.variance);
}

inline FusionState fusion_step(FusionState state, double y, const FusionConfig& cfg) {
  if (state.decided()) throw std::logic_error("fusion_step: fusion center has already decided");
  state.f += fusion_llr(y, cfg);
  state.k += 1;
  if (state.f >= cfg.beta1)
    state.decision = FusionDecision::h1;
  else if (state.f <= cfg.beta0)
    state.decision = FusionDecision::h0;
  return state;
}

/// Symmetric design: F_k <= -beta iff sum_{i<=k} Y_i <= -beta * var / (2 mu).
inline double reduced_threshold(const FusionConfig& cfg) {
  if (!cfg.symmetric()) throw std::invalid_argument("reduced_threshold: needs mu1 = -mu0 and beta1 = -beta0");
  return cfg.beta1 * cfg.mac_noise.variance / (2.0 * cfg.mu1);
}

}  // namespace dualsprt
