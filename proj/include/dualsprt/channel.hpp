#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "dualsprt/stats.hpp"

namespace dualsprt {

inline double db_to_power(double db) { return std::pow(10.0, db / 10.0); }
inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }
inline double power_to_db(double p) { return 10.0 * std::log10(p); }

// Per-node signal level models. The level is the post-change mean of the
// (centered) sensing statistic.

/// Every node sees the same level.
struct EqualSnr {
  double level = 1.0;
  friend bool operator==(const EqualSnr&, const EqualSnr&) = default;
};

/// Fixed per-node channel gains in dB relative to `reference_level`. With direct
/// Gaussian statistics the gain scales the mean as an amplitude (0, -1.5, -2.5,
/// -4, -6 dB -> 1, 0.84, 0.75, 0.63, 0.5); with energy statistics it scales power.
struct FixedGains {
  std::vector<double> gain_db;
  double reference_level = 1.0;
  friend bool operator==(const FixedGains&, const FixedGains&) = default;
};

/// Slow Rayleigh fading: the received power is exponential, drawn once per trial.
struct Fading {
  ExponentialSpec power{1.0};
  friend bool operator==(const Fading&, const Fading&) = default;
};

using SnrModel = std::variant<EqualSnr, FixedGains, Fading>;

/// Observations are N(0, v) under H0 and N(level, v) under H1.
struct DirectGaussian {
  double noise_variance = 1.0;
  friend bool operator==(const DirectGaussian&, const DirectGaussian&) = default;
};

/// Sum-of-energy statistic over `samples` samples with noise variance sigma2,
/// Gaussian-approximated and centered by sigma2 before detection.
struct EnergyDetector {
  int samples = 100;
  double noise_variance = 1.0;
  friend bool operator==(const EnergyDetector&, const EnergyDetector&) = default;
};

using ObservationModel = std::variant<DirectGaussian, EnergyDetector>;

enum class Knowledge { known_at_node, unknown_at_node };

struct ScenarioSpec {
  Hypothesis hypothesis = Hypothesis::H1;
  int nodes = 5;
  SnrModel snr = EqualSnr{};
  ObservationModel observation = DirectGaussian{};
  Knowledge knowledge = Knowledge::known_at_node;

  void validate() const {
    if (nodes < 1) throw std::invalid_argument("ScenarioSpec: need at least one node");
    if (const auto* g = std::get_if<FixedGains>(&snr)) {
      if (static_cast<int>(g->gain_db.size()) != nodes)
        throw std::invalid_argument("ScenarioSpec: gain list has " + std::to_string(g->gain_db.size()) +
                                    " entries for " + std::to_string(nodes) + " nodes");
      for (double db : g->gain_db)
        if (!std::isfinite(db)) throw std::invalid_argument("ScenarioSpec: non-finite gain");
      if (!(g->reference_level > 0.0)) throw std::invalid_argument("ScenarioSpec: reference level must be > 0");
    }
    if (const auto* f = std::get_if<Fading>(&snr)) f->power.validate();
    if (const auto* e = std::get_if<EqualSnr>(&snr))
      if (!(e->level >= 0.0)) throw std::invalid_argument("ScenarioSpec: level must be >= 0");
    if (const auto* d = std::get_if<DirectGaussian>(&observation))
      if (!(d->noise_variance > 0.0)) throw std::invalid_argument("ScenarioSpec: noise variance must be > 0");
    if (const auto* e = std::get_if<EnergyDetector>(&observation)) {
      if (e->samples < 1) throw std::invalid_argument("ScenarioSpec: energy statistic needs samples >= 1");
      if (!(e->noise_variance > 0.0)) throw std::invalid_argument("ScenarioSpec: noise variance must be > 0");
    }
  }

  bool is_fading() const { return std::holds_alternative<Fading>(snr); }
};

struct NodeObservationParams {
  GaussianSpec f0;
  GaussianSpec f1;
  double signal_level = 0.0;
};

struct EnergyStatisticParams {
  GaussianSpec f0;
  GaussianSpec f1;
  double variance_ratio = 1.0;  // (P + sigma2)^2 / sigma2^2
  bool low_snr_ok = true;
};

/// Gaussian approximations N(s2, 2 s2^2/N) and N(P + s2, 2 (P + s2)^2/N) of an
/// N-sample energy sum, plus whether the equal-variance reduction holds within `tolerance`.
inline EnergyStatisticParams energy_statistic_params(double power, double sigma2, int samples,
                                                     double tolerance = 0.25) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("energy_statistic_params: sigma2 must be > 0");
  if (samples < 1) throw std::invalid_argument("energy_statistic_params: samples must be >= 1");
  if (!(power >= 0.0)) throw std::invalid_argument("energy_statistic_params: power must be >= 0");
  const double n = static_cast<double>(samples);
  const double total = power + sigma2;
  EnergyStatisticParams out;
  out.f0 = GaussianSpec{sigma2, 2.0 * sigma2 * sigma2 / n};
  out.f1 = GaussianSpec{total, 2.0 * total * total / n};
  out.variance_ratio = (total * total) / (sigma2 * sigma2);
  out.low_snr_ok = out.variance_ratio - 1.0 <= tolerance + 1e-12;
  return out;
}

/// Signal level of every node before any per-trial draw (fading levels are drawn in draw_channel_gains).
inline double level_from_gain(const ScenarioSpec& spec, double reference, double gain_db) {
  return std::holds_alternative<EnergyDetector>(spec.observation) ? reference * db_to_power(gain_db)
                                                                   : reference * db_to_amplitude(gain_db);
}

inline NodeObservationParams node_params_for_level(const ScenarioSpec& spec, double level) {
  NodeObservationParams p;
  p.signal_level = level;
  if (const auto* d = std::get_if<DirectGaussian>(&spec.observation)) {
    p.f0 = GaussianSpec{0.0, d->noise_variance};
    p.f1 = GaussianSpec{level, d->noise_variance};
  } else {
    const auto& e = std::get<EnergyDetector>(spec.observation);
    const auto raw = energy_statistic_params(level, e.noise_variance, e.samples);
    p.f0 = GaussianSpec{raw.f0.mean - e.noise_variance, raw.f0.variance};
    p.f1 = GaussianSpec{raw.f1.mean - e.noise_variance, raw.f1.variance};
  }
  return p;
}

/// Per-node observation laws for one trial. Fading powers are drawn here, once,
/// and stay fixed for the whole trial.
inline std::vector<NodeObservationParams> draw_channel_gains(const ScenarioSpec& spec, RandomSource& rng) {
  spec.validate();
  std::vector<NodeObservationParams> out;
  out.reserve(static_cast<std::size_t>(spec.nodes));
  for (int l = 0; l < spec.nodes; ++l) {
    double level = 0.0;
    if (const auto* e = std::get_if<EqualSnr>(&spec.snr))
      level = e->level;
    else if (const auto* g = std::get_if<FixedGains>(&spec.snr))
      level = level_from_gain(spec, g->reference_level, g->gain_db[static_cast<std::size_t>(l)]);
    else
      level = rng.exponential(std::get<Fading>(spec.snr).power);
    out.push_back(node_params_for_level(spec, level));
  }
  return out;
}

inline double generate_observation(const NodeObservationParams& params, Hypothesis h, RandomSource& rng) {
  return rng.normal(h == Hypothesis::H1 ? params.f1 : params.f0);
}

/// Variance a GLR node assumes for its data: the low-SNR equal-variance model.
inline double glr_model_variance(const ScenarioSpec& spec) {
  if (const auto* d = std::get_if<DirectGaussian>(&spec.observation)) return d->noise_variance;
  const auto& e = std::get<EnergyDetector>(spec.observation);
  return 2.0 * e.noise_variance * e.noise_variance / static_cast<double>(e.samples);
}

}  // namespace dualsprt
