// Randomised invariants. Each test sweeps a few hundred generated cases from a fixed seed.
#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "dualsprt/dualsprt.hpp"

using namespace dualsprt;

namespace {

struct Gen {
  RandomSource r{2024, 0};
  double uniform(double lo, double hi) { return lo + (hi - lo) * r.uniform(); }
  GaussianSpec gaussian() { return {uniform(-3, 3), uniform(0.2, 4)}; }
};

ExperimentSpec equal_spec(Hypothesis h, double beta, long trials, std::uint64_t seed = 5) {
  ExperimentSpec s;
  s.scenario.hypothesis = h;
  s.local.gamma1 = 8;
  s.local.gamma0 = -8;
  s.fusion = FusionConfig::symmetric_config(beta);
  s.n_trials = trials;
  s.master_seed = seed;
  s.threads = 1;
  return s;
}

}  // namespace

TEST(Property, LlrAntisymmetricAndDriftSigned) {
  Gen g;
  for (int i = 0; i < 500; ++i) {
    const auto f0 = g.gaussian(), f1 = g.gaussian();
    const double x = g.uniform(-10, 10);
    EXPECT_NEAR(gaussian_llr(x, f0, f1), -gaussian_llr(x, f1, f0), 1e-9 * (1 + std::abs(gaussian_llr(x, f0, f1))));
    if (f0 == f1) continue;
    // E_1 log f1/f0 = KL(f1||f0) > 0 and E_0 log f1/f0 = -KL(f0||f1) < 0
    EXPECT_GT(llr_drift_and_variance(f0, f1, Hypothesis::H1).drift, 0.0);
    EXPECT_LT(llr_drift_and_variance(f0, f1, Hypothesis::H0).drift, 0.0);
  }
}

TEST(Property, LatchIsPermanent) {
  Gen g;
  SprtNodeConfig cfg;
  cfg.gamma1 = 3;
  cfg.gamma0 = -3;
  for (int run = 0; run < 200; ++run) {
    SprtNodeState st;
    double latched_tx = 0;
    bool latched = false;
    for (int k = 0; k < 200; ++k) {
      const auto step = sprt_step(st, g.uniform(-4, 5), cfg);
      if (latched) {
        EXPECT_EQ(step.transmit, latched_tx);
        EXPECT_EQ(step.state.w, st.w);
        EXPECT_EQ(step.state.latch, st.latch);
      } else if (step.state.latch != Latch::none) {
        latched = true;
        latched_tx = step.transmit;
        EXPECT_EQ(latched_tx, step.state.latch == Latch::decided_h1 ? cfg.b1 : cfg.b0);
      } else {
        EXPECT_EQ(step.transmit, 0.0);
      }
      st = step.state;
    }
  }
}

TEST(Property, GlrStatisticNonNegative) {
  Gen g;
  for (int i = 0; i < 1000; ++i) {
    GlrNodeConfig cfg = GlrNodeConfig::for_unknown_power(g.uniform(0.05, 3), 10 * 3, 0.01, g.uniform(0.1, 3));
    const long n = 1 + static_cast<long>(g.uniform(0, 500));
    const double s = n * g.uniform(-5, 8);
    EXPECT_GE(glr_statistic(n, s, cfg), -1e-12);
  }
}

TEST(Property, Theta1MonotoneInRange) {
  Gen g;
  for (int i = 0; i < 300; ++i) {
    const double lo = g.uniform(0, 2), w1 = g.uniform(0.01, 2), w2 = w1 + g.uniform(0.01, 2);
    EXPECT_LT(choose_theta1_known_range(lo, lo + w1), choose_theta1_known_range(lo, lo + w2));
    const double r1 = g.uniform(0.1, 5), r2 = r1 + g.uniform(0.01, 5);
    EXPECT_GT(choose_theta1_fading(ExponentialSpec{r1}), choose_theta1_fading(ExponentialSpec{r2}));
  }
}

TEST(Property, ReducedThresholdEquivalentOnTraces) {
  // With mu1 = -mu0 the fusion LLR is a rescaled running sum of y, so the stopping
  // slot and decision match a sum-of-y test against theta = beta var / (2 mu).
  Gen g;
  for (int run = 0; run < 300; ++run) {
    const auto cfg = FusionConfig::symmetric_config(g.uniform(0.5, 20), g.uniform(0.2, 3), g.uniform(0.2, 3));
    const double theta = reduced_threshold(cfg);
    FusionState st;
    double sum = 0;
    for (int k = 1; k <= 400 && !st.decided(); ++k) {
      const double y = g.uniform(-2, 2.2);
      st = fusion_step(st, y, cfg);
      sum += y;
      const bool by_sum = sum >= theta * (1 + 1e-12) || sum <= -theta * (1 + 1e-12);
      const bool by_sum_loose = sum >= theta * (1 - 1e-12) || sum <= -theta * (1 - 1e-12);
      if (by_sum) {
        EXPECT_TRUE(st.decided());
      }
      if (!by_sum_loose) {
        EXPECT_FALSE(st.decided());
      }
      if (st.decided()) {
        EXPECT_EQ(st.decision == FusionDecision::h1, sum > 0);
      }
    }
  }
}

TEST(Property, FadingLevelConstantWithinTrial) {
  ExperimentSpec s = equal_spec(Hypothesis::H1, 10, 100);
  s.scenario.snr = Fading{ExponentialSpec{1.0}};
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto a = run_trial(s, i);
    RandomSource rng(s.master_seed, stream_id(i, static_cast<std::uint64_t>(s.scenario.nodes) + 1));
    const auto params = draw_channel_gains(s.scenario, rng);
    ASSERT_EQ(a.signal_levels.size(), params.size());
    for (std::size_t l = 0; l < params.size(); ++l) EXPECT_EQ(a.signal_levels[l], params[l].signal_level);
    EXPECT_EQ(run_trial(s, i).signal_levels, a.signal_levels);
  }
}

TEST(Property, BoundsOrderedAndProbabilities) {
  Gen g;
  for (int i = 0; i < 40; ++i) {
    ScenarioSpec sc;
    sc.nodes = 1 + static_cast<int>(g.uniform(0, 6));
    sc.snr = EqualSnr{g.uniform(0.4, 2)};
    LocalParams lp;
    lp.gamma1 = g.uniform(2, 15);
    lp.gamma0 = -lp.gamma1;
    const auto cfg = FusionConfig::symmetric_config(g.uniform(1, 30));
    const auto b = pfa_bounds(sc, lp, cfg);
    EXPECT_GE(b.lower, 0.0);
    EXPECT_LE(b.lower, b.upper);
    EXPECT_LE(b.upper, 1.0);
  }
}

TEST(Property, PfaFallsAndEddRisesWithBeta) {
  double prev_pfa = 1, prev_edd = 0;
  for (double beta : {3.0, 8.0, 14.0}) {
    const auto p = estimate_performance(equal_spec(Hypothesis::H1, beta, 4000));
    EXPECT_LT(p.pfa.mean, prev_pfa);
    EXPECT_GT(p.edd.mean, prev_edd);
    EXPECT_GE(p.pfa.mean, 0.0);
    EXPECT_LE(p.pfa.mean, 1.0);
    prev_pfa = p.pfa.mean;
    prev_edd = p.edd.mean;
  }
}

TEST(Property, SymmetricDesignTreatsHypothesesAlike) {
  const auto h1 = estimate_performance(equal_spec(Hypothesis::H1, 8, 20000, 1));
  const auto h0 = estimate_performance(equal_spec(Hypothesis::H0, 8, 20000, 2));
  EXPECT_LT(std::abs(h1.pfa.mean - h0.pfa.mean), 3 * std::hypot(h1.pfa.stderr_, h0.pfa.stderr_));
  EXPECT_LT(std::abs(h1.edd.mean - h0.edd.mean), 3 * std::hypot(h1.edd.stderr_, h0.edd.stderr_));
}

TEST(Property, DriftChangePredictionTracksSimulation) {
  for (double beta : {6.0, 12.0, 20.0}) {
    const auto s = equal_spec(Hypothesis::H1, beta, 4000);
    const auto pred = predict_edd_iid(s.scenario, s.local, s.fusion);
    const auto sim = estimate_performance(s);
    EXPECT_NEAR(pred.predicted_edd / sim.edd.mean, 1.0, 0.2) << beta;
  }
}
