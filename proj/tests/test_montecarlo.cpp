#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dualsprt/montecarlo.hpp"

using namespace dualsprt;

namespace {

ExperimentSpec small_spec(Hypothesis h = Hypothesis::H1) {
  ExperimentSpec s;
  s.scenario.hypothesis = h;
  s.local.gamma1 = 4;
  s.local.gamma0 = -4;
  s.fusion = FusionConfig::symmetric_config(6);
  s.n_trials = 2000;
  s.master_seed = 42;
  s.threads = 1;
  return s;
}

}  // namespace

TEST(RunTrial, DeterministicInSeedAndIndex) {
  auto spec = small_spec();
  spec.record_trace = true;
  const auto a = run_trial(spec, 17), b = run_trial(spec, 17);
  EXPECT_EQ(a.decision, b.decision);
  EXPECT_EQ(a.stop_slot, b.stop_slot);
  EXPECT_EQ(a.latch_slots, b.latch_slots);
  ASSERT_TRUE(a.fusion_trace);
  EXPECT_EQ(*a.fusion_trace, *b.fusion_trace);
  EXPECT_EQ(static_cast<long>(a.fusion_trace->size()), a.stop_slot);
}

TEST(RunTrials, ThreadCountDoesNotChangeResults) {
  auto spec = small_spec();
  const auto one = run_trials(spec);
  spec.threads = 3;
  const auto three = run_trials(spec);
  ASSERT_EQ(one.size(), three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].outcome, three[i].outcome);
    EXPECT_EQ(one[i].stop_slot, three[i].stop_slot);
    EXPECT_EQ(one[i].first_latch, three[i].first_latch);
  }
}

TEST(Summarize, HandBuiltList) {
  // truth H1: outcomes 1,1,0,censored,1 with stops 4,6,2,cap,8
  const std::vector<TrialSummary> t = {{1, 4, 3}, {1, 6, 5}, {0, 2, 0}, {-1, 100, 7}, {1, 8, 2}};
  const auto p = summarize(t, Hypothesis::H1);
  EXPECT_EQ(p.n_trials, 5);
  EXPECT_EQ(p.censored, 1);
  EXPECT_DOUBLE_EQ(p.censoring_rate(), 0.2);
  EXPECT_EQ(p.false_alarms, 1);
  EXPECT_EQ(p.false_alarms_before_first_latch, 1);
  EXPECT_DOUBLE_EQ(p.pfa.mean, 0.25);
  EXPECT_EQ(p.pfa.n, 4);
  EXPECT_DOUBLE_EQ(p.edd.mean, 5.0);
  EXPECT_NEAR(p.edd.stderr_, std::sqrt(20.0 / 3.0 / 4.0), 1e-12);

  const auto q = summarize(t, Hypothesis::H0);
  EXPECT_EQ(q.false_alarms, 3);
  EXPECT_DOUBLE_EQ(q.pfa.mean, 0.75);
}

TEST(Estimate, ConfidenceInterval) {
  const Estimate e{0.5, 0.01, 100};
  EXPECT_DOUBLE_EQ(e.ci_low(), 0.5 - 0.0196);
  EXPECT_DOUBLE_EQ(e.ci_high(), 0.5 + 0.0196);
}

TEST(EstimatePerformance, ZeroNoiseLimit) {
  // One very strong node latches in slot 1 and the near-silent MAC passes it straight through.
  ExperimentSpec s;
  s.scenario.nodes = 1;
  s.scenario.snr = EqualSnr{20.0};
  s.local.gamma1 = 8;
  s.local.gamma0 = -8;
  s.fusion = FusionConfig::symmetric_config(1.0, 1.0, 1e-6);
  s.n_trials = 500;
  s.threads = 1;
  const auto p = estimate_performance(s);
  EXPECT_EQ(p.pfa.mean, 0.0);
  EXPECT_EQ(p.edd.mean, 1.0);
  EXPECT_EQ(p.censored, 0);
}

TEST(EstimatePerformance, CensoringCounted) {
  auto s = small_spec();
  s.fusion = FusionConfig::symmetric_config(500);
  s.slot_cap = 5;
  s.n_trials = 200;
  const auto p = estimate_performance(s);
  EXPECT_EQ(p.censored, 200);
  EXPECT_DOUBLE_EQ(p.censoring_rate(), 1.0);
  EXPECT_EQ(p.pfa.n, 0);
}

TEST(EstimatePerformance, RejectsBadConfigs) {
  auto s = small_spec();
  s.n_trials = 99;
  EXPECT_THROW(estimate_performance(s), ConfigError);
  s = small_spec();
  s.scenario.knowledge = Knowledge::unknown_at_node;
  EXPECT_THROW(estimate_performance(s), ConfigError);
  s = small_spec();
  s.slot_cap = 0;
  EXPECT_THROW(estimate_performance(s), ConfigError);
}

TEST(EstimatePerformance, StderrShrinksWithTrials) {
  auto s = small_spec();
  s.n_trials = 4000;
  const auto a = estimate_performance(s);
  s.n_trials = 8000;
  const auto b = estimate_performance(s);
  EXPECT_NEAR(a.edd.stderr_ / b.edd.stderr_, std::sqrt(2.0), 0.1);
}

TEST(Calibration, BisectionOnStub) {
  // P_FA(beta) = exp(-beta) with a fixed standard error
  auto stub = [](double beta) { return Estimate{std::exp(-beta), 1e-4, 1000}; };
  const double b = calibrate_by_bisection(stub, 0.01, Interval{0.5, 20});
  EXPECT_NEAR(std::exp(-b), 0.01, 2e-4);
}

TEST(Calibration, IterationCapReturnsMidpoint) {
  auto stub = [](double beta) { return Estimate{std::exp(-beta), 0.0, 1000}; };
  const double b = calibrate_by_bisection(stub, 0.01, Interval{0.5, 20}, 3);
  EXPECT_GT(b, 0.5);
  EXPECT_LT(b, 20);
}

TEST(Calibration, FailuresThrow) {
  auto rising = [](double beta) { return Estimate{beta / 100, 1e-4, 1000}; };
  EXPECT_THROW(calibrate_by_bisection(rising, 0.1, Interval{1, 50}), CalibrationError);
  auto falling = [](double beta) { return Estimate{std::exp(-beta), 1e-4, 1000}; };
  EXPECT_THROW(calibrate_by_bisection(falling, 0.9, Interval{1, 50}), CalibrationError);
  EXPECT_THROW(calibrate_by_bisection(falling, 0.0, Interval{1, 50}), ConfigError);
  EXPECT_THROW(calibrate_by_bisection(falling, 0.1, Interval{5, 1}), ConfigError);
  auto exact = [](double beta) { return Estimate{std::exp(-beta), 0.0, 1000}; };
  try {
    calibrate_by_bisection(exact, 1e-30, Interval{1, 20});
    FAIL();
  } catch (const CalibrationError& e) {
    EXPECT_NEAR(e.lo_value(), std::exp(-1.0), 1e-12);
    EXPECT_NEAR(e.hi_value(), std::exp(-20.0), 1e-12);
  }
}

TEST(Calibration, ThresholdHitsTargetOnSmallScenario) {
  auto s = small_spec();
  s.n_trials = 4000;
  const double beta = calibrate_threshold(s, 0.05, Interval{0.5, 20});
  const auto p = estimate_performance(with_fusion_beta(s, beta));
  EXPECT_NEAR(p.pfa.mean, 0.05, 2.5 * p.pfa.stderr_);
}

TEST(Calibration, GlrCostForLoneNode) {
  const auto cfg = GlrNodeConfig::for_unknown_power(1.0, 10, 0.01, 1.0);
  const double c = calibrate_glr_cost(cfg, GaussianSpec{0, 1}, 0.05, 4000, 5);
  auto tuned = cfg;
  tuned.cost = c;
  const auto e = glr_local_error(tuned, GaussianSpec{0, 1}, Hypothesis::H0, 4000, 5);
  EXPECT_NEAR(e.mean, 0.05, 2.5 * e.stderr_);
}

TEST(GlrHelpers, Theta1AndClipFromScenario) {
  ExperimentSpec s;
  s.detector = DetectorKind::glrsprt;
  s.scenario.knowledge = Knowledge::unknown_at_node;
  s.scenario.snr = FixedGains{{0, -1.5, -2.5, -4, -6}, 1.0};
  EXPECT_NEAR(glr_theta1_for(s), (1 - db_to_amplitude(-6)) / 2, 1e-12);
  EXPECT_NEAR(glr_theta1_for(s), 0.2494, 1e-4);
  s.local.glr_theta1 = 0.3;
  EXPECT_DOUBLE_EQ(glr_theta1_for(s), 0.3);
  s.scenario.snr = Fading{ExponentialSpec{1.0}};
  s.local.glr_theta1.reset();
  EXPECT_NEAR(glr_theta1_for(s), std::log(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(glr_clip_hi_for(s), 10.0);
  s.scenario.snr = EqualSnr{};
  EXPECT_THROW(glr_theta1_for(s), ConfigError);
}
