#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <thread>
#include <variant>
#include <vector>

#include "dualsprt/channel.hpp"
#include "dualsprt/errors.hpp"
#include "dualsprt/fusion.hpp"
#include "dualsprt/local_detector.hpp"
#include "dualsprt/stats.hpp"

namespace dualsprt {

enum class DetectorKind { dualsprt, glrsprt };

inline const char* to_string(DetectorKind d) { return d == DetectorKind::dualsprt ? "dualsprt" : "glrsprt"; }

/// Local-node parameters shared by every node of an experiment.
struct LocalParams {
  double gamma1 = 10.0;
  double gamma0 = -10.0;
  double b1 = 1.0;
  double b0 = -1.0;
  // GLR-SPRT only.
  double glr_cost = 0.01;
  std::optional<double> glr_theta1;
  std::optional<double> glr_clip_hi;

  friend bool operator==(const LocalParams&, const LocalParams&) = default;
};

struct ExperimentSpec {
  ScenarioSpec scenario;
  DetectorKind detector = DetectorKind::dualsprt;
  LocalParams local;
  FusionConfig fusion;
  long n_trials = 1000;
  std::uint64_t master_seed = 1;
  long slot_cap = 10000;
  bool record_trace = false;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const {
    scenario.validate();
    fusion.validate();
    if (n_trials < 1) throw ConfigError("experiment: n_trials must be >= 1");
    if (slot_cap < 1) throw ConfigError("experiment: slot_cap must be >= 1");
    if (detector == DetectorKind::dualsprt && scenario.knowledge == Knowledge::unknown_at_node)
      throw ConfigError("experiment: dualsprt nodes need the post-change density; use glrsprt for unknown power");
  }
};

/// GLR theta1 for a scenario: explicit override, else the known-range rule for
/// fixed gains or the fading median.
inline double glr_theta1_for(const ExperimentSpec& spec) {
  if (spec.local.glr_theta1) return *spec.local.glr_theta1;
  const auto& sc = spec.scenario;
  if (const auto* g = std::get_if<FixedGains>(&sc.snr)) {
    const auto [lo, hi] = std::minmax_element(g->gain_db.begin(), g->gain_db.end());
    return choose_theta1_known_range(level_from_gain(sc, g->reference_level, *lo),
                                     level_from_gain(sc, g->reference_level, *hi));
  }
  if (const auto* f = std::get_if<Fading>(&sc.snr)) return choose_theta1_fading(f->power);
  throw ConfigError("experiment: equal-SNR GLR scenario needs an explicit theta1");
}

inline double glr_clip_hi_for(const ExperimentSpec& spec) {
  if (spec.local.glr_clip_hi) return *spec.local.glr_clip_hi;
  const auto& sc = spec.scenario;
  if (const auto* f = std::get_if<Fading>(&sc.snr)) return 10.0 * f->power.mean();
  if (const auto* g = std::get_if<FixedGains>(&sc.snr))
    return 10.0 * level_from_gain(sc, g->reference_level, *std::max_element(g->gain_db.begin(), g->gain_db.end()));
  return 10.0 * std::max(std::get<EqualSnr>(sc.snr).level, glr_theta1_for(spec));
}

inline GlrNodeConfig glr_config_for(const ExperimentSpec& spec) {
  return GlrNodeConfig::for_unknown_power(glr_theta1_for(spec), glr_clip_hi_for(spec), spec.local.glr_cost,
                                          glr_model_variance(spec.scenario), spec.local.b1, spec.local.b0);
}

inline SprtNodeConfig sprt_config_for(const LocalParams& local, const NodeObservationParams& params) {
  return SprtNodeConfig{local.gamma1, local.gamma0, local.b1, local.b0, params.f0, params.f1};
}

struct TrialResult {
  std::optional<Hypothesis> decision;  // empty when censored
  long stop_slot = 0;
  std::vector<std::optional<long>> latch_slots;
  std::vector<double> signal_levels;
  std::optional<std::vector<double>> fusion_trace;

  bool censored() const { return !decision.has_value(); }

  /// First slot in which any node latched, if one did before the fusion decision.
  std::optional<long> first_latch_slot() const {
    std::optional<long> best;
    for (const auto& s : latch_slots)
      if (s && (!best || *s < *best)) best = s;
    return best;
  }
};

/// One end-to-end trial: gains drawn once, then observation -> node step -> MAC
/// -> fusion step per slot. Deterministic in (master_seed, trial_index).
inline TrialResult run_trial(const ExperimentSpec& spec, std::uint64_t trial_index) {
  const auto& sc = spec.scenario;
  const auto nodes = static_cast<std::size_t>(sc.nodes);

  RandomSource fading_rng(spec.master_seed, stream_id(trial_index, nodes + 1));
  RandomSource mac_rng(spec.master_seed, stream_id(trial_index, nodes));
  std::vector<RandomSource> node_rng;
  node_rng.reserve(nodes);
  for (std::size_t l = 0; l < nodes; ++l) node_rng.emplace_back(spec.master_seed, stream_id(trial_index, l));

  const auto params = draw_channel_gains(sc, fading_rng);

  TrialResult result;
  result.latch_slots.assign(nodes, std::nullopt);
  result.signal_levels.reserve(nodes);
  for (const auto& p : params) result.signal_levels.push_back(p.signal_level);
  if (spec.record_trace) result.fusion_trace.emplace();

  std::vector<SprtNodeConfig> sprt_cfg;
  std::vector<SprtNodeState> sprt_state;
  GlrNodeConfig glr_cfg;
  std::vector<GlrNodeState> glr_state;
  if (spec.detector == DetectorKind::dualsprt) {
    for (const auto& p : params) sprt_cfg.push_back(sprt_config_for(spec.local, p));
    sprt_state.assign(nodes, SprtNodeState{});
  } else {
    glr_cfg = glr_config_for(spec);
    glr_state.assign(nodes, GlrNodeState{});
  }

  std::vector<double> transmit(nodes, 0.0);
  FusionState fusion;
  for (long k = 1; k <= spec.slot_cap; ++k) {
    for (std::size_t l = 0; l < nodes; ++l) {
      const double x = generate_observation(params[l], sc.hypothesis, node_rng[l]);
      Latch latch = Latch::none;
      if (spec.detector == DetectorKind::dualsprt) {
        const auto step = sprt_step(sprt_state[l], x, sprt_cfg[l]);
        sprt_state[l] = step.state;
        transmit[l] = step.transmit;
        latch = step.state.latch;
      } else {
        const auto step = glr_step(glr_state[l], x, glr_cfg);
        glr_state[l] = step.state;
        transmit[l] = step.transmit;
        latch = step.state.latch;
      }
      if (latch != Latch::none && !result.latch_slots[l]) result.latch_slots[l] = k;
    }
    const double y = mac_combine(transmit, mac_rng.normal(spec.fusion.mac_noise));
    fusion = fusion_step(fusion, y, spec.fusion);
    if (result.fusion_trace) result.fusion_trace->push_back(fusion.f);
    if (fusion.decided()) {
      result.decision = fusion.decision == FusionDecision::h1 ? Hypothesis::H1 : Hypothesis::H0;
      result.stop_slot = k;
      return result;
    }
  }
  result.stop_slot = spec.slot_cap;
  return result;
}

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  long n = 0;

  double ci_low() const { return mean - 1.96 * stderr_; }
  double ci_high() const { return mean + 1.96 * stderr_; }
};

/// Running mean/variance accumulated in a fixed order.
class MomentAccumulator {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  Estimate estimate() const {
    Estimate e;
    e.n = n_;
    e.mean = mean_;
    if (n_ > 1) e.stderr_ = std::sqrt(m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_));
    return e;
  }

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct TrialSummary {
  std::int8_t outcome = -1;  // -1 censored, 0 H0, 1 H1
  long stop_slot = 0;
  long first_latch = 0;  // 0: no latch before the decision
};

struct Performance {
  Estimate pfa;
  Estimate edd;
  long n_trials = 0;
  long censored = 0;
  long false_alarms = 0;
  long false_alarms_before_first_latch = 0;

  double censoring_rate() const { return n_trials ? static_cast<double>(censored) / static_cast<double>(n_trials) : 0.0; }
};

inline unsigned worker_count(unsigned requested, long n_trials) {
  unsigned t = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<long>(t, std::max(1L, n_trials)));
}

/// Runs every trial of `spec` and summarises them. Trials execute in parallel
/// chunks; the reduction walks trials in index order, so results do not depend
/// on the thread count.
inline std::vector<TrialSummary> run_trials(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<TrialSummary> out(static_cast<std::size_t>(spec.n_trials));
  ExperimentSpec local = spec;
  local.record_trace = false;
  auto work = [&](long begin, long end) {
    for (long i = begin; i < end; ++i) {
      const auto r = run_trial(local, static_cast<std::uint64_t>(i));
      auto& s = out[static_cast<std::size_t>(i)];
      s.stop_slot = r.stop_slot;
      if (r.decision) s.outcome = *r.decision == Hypothesis::H1 ? 1 : 0;
      if (auto f = r.first_latch_slot()) s.first_latch = *f;
    }
  };
  const unsigned workers = worker_count(spec.threads, spec.n_trials);
  if (workers == 1) {
    work(0, spec.n_trials);
    return out;
  }
  std::vector<std::jthread> pool;
  const long chunk = (spec.n_trials + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const long begin = static_cast<long>(w) * chunk;
    const long end = std::min(spec.n_trials, begin + chunk);
    if (begin < end) pool.emplace_back(work, begin, end);
  }
  pool.clear();
  return out;
}

inline Performance summarize(const std::vector<TrialSummary>& trials, Hypothesis truth) {
  Performance perf;
  perf.n_trials = static_cast<long>(trials.size());
  MomentAccumulator pfa;
  MomentAccumulator edd;
  const int wrong = truth == Hypothesis::H1 ? 0 : 1;
  for (const auto& t : trials) {
    if (t.outcome < 0) {
      ++perf.censored;
      continue;
    }
    const bool false_alarm = t.outcome == wrong;
    pfa.add(false_alarm ? 1.0 : 0.0);
    edd.add(static_cast<double>(t.stop_slot));
    if (false_alarm) {
      ++perf.false_alarms;
      if (t.first_latch == 0 || t.stop_slot < t.first_latch) ++perf.false_alarms_before_first_latch;
    }
  }
  perf.pfa = pfa.estimate();
  perf.edd = edd.estimate();
  return perf;
}

/// P_FA is the fraction of decided trials that chose the wrong hypothesis; E_DD
/// averages the stopping slot over all decided trials, correct or not.
inline Performance estimate_performance(const ExperimentSpec& spec) {
  if (spec.n_trials < 100) throw ConfigError("estimate_performance: need at least 100 trials");
  return summarize(run_trials(spec), spec.scenario.hypothesis);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Bisection on a threshold whose false-alarm estimate decreases in it. Stops
/// once the estimate is within two standard errors of the target, or after
/// `max_iter` halvings. `pfa_at` maps a threshold to an Estimate.
template <class PfaAt>
double calibrate_by_bisection(PfaAt&& pfa_at, double target, Interval range, int max_iter = 20) {
  if (!(target > 0.0 && target < 1.0)) throw ConfigError("calibrate: target must be in (0,1)");
  if (!(range.lo > 0.0 && range.lo < range.hi)) throw ConfigError("calibrate: need 0 < lo < hi");
  const Estimate at_lo = pfa_at(range.lo);
  const Estimate at_hi = pfa_at(range.hi);
  if (at_lo.mean < at_hi.mean) {
    std::ostringstream msg;
    msg << "calibrate: P_FA not decreasing over [" << range.lo << ", " << range.hi << "] (" << at_lo.mean << " < "
        << at_hi.mean << ")";
    throw CalibrationError(msg.str(), at_lo.mean, at_hi.mean);
  }
  if (target > at_lo.mean + 2.0 * at_lo.stderr_ || target < at_hi.mean - 2.0 * at_hi.stderr_) {
    std::ostringstream msg;
    msg << "calibrate: target " << target << " unreachable; P_FA spans [" << at_hi.mean << ", " << at_lo.mean
        << "] over threshold range [" << range.lo << ", " << range.hi << "]";
    throw CalibrationError(msg.str(), at_lo.mean, at_hi.mean);
  }
  double lo = range.lo;
  double hi = range.hi;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    mid = 0.5 * (lo + hi);
    const Estimate e = pfa_at(mid);
    if (std::abs(e.mean - target) < 2.0 * e.stderr_) return mid;
    if (e.mean > target)
      lo = mid;
    else
      hi = mid;
  }
  return mid;
}

/// Wrong-decision rate of one isolated SPRT node fed by `observation`.
inline Estimate sprt_local_error(const SprtNodeConfig& cfg, const GaussianSpec& observation, Hypothesis truth,
                                 long n_trials, std::uint64_t seed, long slot_cap = 100000) {
  cfg.validate();
  MomentAccumulator acc;
  const Latch wrong = truth == Hypothesis::H1 ? Latch::decided_h0 : Latch::decided_h1;
  for (long i = 0; i < n_trials; ++i) {
    RandomSource rng(seed, stream_id(static_cast<std::uint64_t>(i), 0));
    SprtNodeState st;
    for (long k = 0; k < slot_cap && st.latch == Latch::none; ++k) st = sprt_step(st, rng.normal(observation), cfg).state;
    acc.add(st.latch == wrong ? 1.0 : 0.0);
  }
  return acc.estimate();
}

/// Wrong-decision rate of one isolated GLR node fed by `observation`.
inline Estimate glr_local_error(const GlrNodeConfig& cfg, const GaussianSpec& observation, Hypothesis truth,
                                long n_trials, std::uint64_t seed, long slot_cap = 100000) {
  cfg.validate();
  MomentAccumulator acc;
  const Latch wrong = truth == Hypothesis::H1 ? Latch::decided_h0 : Latch::decided_h1;
  for (long i = 0; i < n_trials; ++i) {
    RandomSource rng(seed, stream_id(static_cast<std::uint64_t>(i), 0));
    GlrNodeState st;
    for (long k = 0; k < slot_cap && st.latch == Latch::none; ++k) st = glr_step(st, rng.normal(observation), cfg).state;
    acc.add(st.latch == wrong ? 1.0 : 0.0);
  }
  return acc.estimate();
}

/// Calibrates the GLR cost c so an isolated node errs with probability `target`
/// when no signal is present. Bisection runs on log(1/c).
inline double calibrate_glr_cost(GlrNodeConfig cfg, const GaussianSpec& h0_observation, double target,
                                 long n_trials, std::uint64_t seed, Interval log_inv_cost = {0.05, 40.0}) {
  const double v = calibrate_by_bisection(
      [&](double log_inv) {
        cfg.cost = std::exp(-log_inv);
        return glr_local_error(cfg, h0_observation, Hypothesis::H0, n_trials, seed);
      },
      target, log_inv_cost);
  return std::exp(-v);
}

inline ExperimentSpec with_fusion_beta(ExperimentSpec spec, double beta) {
  spec.fusion.beta1 = beta;
  spec.fusion.beta0 = -beta;
  return spec;
}

/// Calibrates the symmetric fusion threshold beta (beta1 = -beta0) to `target_pfa`.
inline double calibrate_threshold(const ExperimentSpec& spec, double target_pfa, Interval beta_range) {
  return calibrate_by_bisection(
      [&](double beta) { return estimate_performance(with_fusion_beta(spec, beta)).pfa; }, target_pfa, beta_range);
}

}  // namespace dualsprt
