#pragma once

// Scenario-level operations shared by the command line tool and the acceptance
// runner: simulate, analyze, calibrate to a P_FA target, paired comparison.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "dualsprt/analysis.hpp"
#include "dualsprt/errors.hpp"
#include "dualsprt/montecarlo.hpp"
#include "dualsprt/scenario_file.hpp"

namespace dualsprt {

struct RunOptions {
  std::optional<long> trials;
  std::optional<std::uint64_t> seed;
  std::optional<long> slot_cap;
  unsigned threads = 0;
  double max_censoring = 0.001;
};

inline ExperimentSpec apply_options(ExperimentSpec spec, const RunOptions& opt) {
  if (opt.trials) spec.n_trials = *opt.trials;
  if (opt.seed) spec.master_seed = *opt.seed;
  if (opt.slot_cap) spec.slot_cap = *opt.slot_cap;
  spec.threads = opt.threads;
  spec.validate();
  return spec;
}

inline void check_censoring(const Performance& p, double limit, const std::string& id) {
  if (p.censoring_rate() > limit) {
    std::ostringstream m;
    m << id << ": " << p.censored << " of " << p.n_trials << " trials hit the slot cap (limit " << limit * 100.0
      << "%); raise --slot-cap or the thresholds";
    throw CensoringError(m.str());
  }
}

inline void add_performance_rows(ResultTable& t, const std::string& id, Hypothesis h, const Performance& p,
                                 const std::string& source = "simulation") {
  t.add_estimate(id, h, "pfa", source, p.pfa);
  t.add_estimate(id, h, "edd", source, p.edd);
  t.add_value(id, h, "censored_fraction", source, p.censoring_rate());
  const double pre = p.false_alarms ? static_cast<double>(p.false_alarms_before_first_latch) / p.false_alarms : 0.0;
  t.add_value(id, h, "pfa_before_t1_share", source, p.false_alarms ? std::optional<double>(pre) : std::nullopt);
}

inline Performance simulate(const ScenarioFile& f, const RunOptions& opt) {
  const auto spec = apply_options(f.spec, opt);
  const auto p = estimate_performance(spec);
  check_censoring(p, opt.max_censoring, f.id);
  return p;
}

inline ResultTable simulate_table(const ScenarioFile& f, const RunOptions& opt) {
  ResultTable t;
  add_performance_rows(t, f.id, f.spec.scenario.hypothesis, simulate(f, opt));
  return t;
}

/// Which analytical path a scenario takes, or empty when analysis does not apply.
inline std::optional<std::string> analysis_method(const ExperimentSpec& s) {
  if (s.detector != DetectorKind::dualsprt || s.scenario.is_fading()) return std::nullopt;
  RandomSource unused(0, 0);
  const auto params = draw_channel_gains(s.scenario, unused);
  for (const auto& p : params)
    if (!(p.f0 == params.front().f0 && p.f1 == params.front().f1)) return "heterogeneous";
  return "iid";
}

/// Analytical E_DD and P_FA bounds. GLR and fading scenarios get NA rows.
inline ResultTable analyze_table(const ScenarioFile& f, double eps = 1e-6) {
  ResultTable t;
  const auto& s = f.spec;
  const auto h = s.scenario.hypothesis;
  const auto method = analysis_method(s);
  if (!method) {
    for (const char* m : {"edd", "pfa_lower", "pfa_upper"}) t.add_value(f.id, h, m, "analysis:NA", std::nullopt);
    return t;
  }
  require_symmetric(s.local, s.fusion);
  const auto edd = *method == "iid" ? predict_edd_iid(s.scenario, s.local, s.fusion)
                                    : predict_edd_heterogeneous(s.scenario, s.local, s.fusion);
  PfaBoundOptions po;
  po.truncation_eps = eps;
  const auto b = pfa_bounds(s.scenario, s.local, s.fusion, po);
  const std::string src = "analysis:" + *method;
  t.add_value(f.id, h, "edd", src, edd.predicted_edd);
  if (edd.alternative_edd) t.add_value(f.id, h, "edd_j_rule", src, edd.alternative_edd);
  t.add_value(f.id, h, "pfa_lower", src, b.lower);
  t.add_value(f.id, h, "pfa_upper", src, b.upper);
  return t;
}

// ---------------------------------------------------------------------------
// Calibration

struct CalibratedPoint {
  double target = 0.0;
  LocalParams local;
  double beta = 0.0;
  Performance performance;
};

/// Local parameters for one P_FA target under the file's local rule.
inline LocalParams local_for_target(const ScenarioFile& f, double target) {
  LocalParams lp = f.spec.local;
  if (!f.calibration || f.calibration->local_rule == LocalRule::fixed) return lp;
  ExperimentSpec g = f.spec;
  g.detector = DetectorKind::glrsprt;
  const auto cfg = glr_config_for(g);
  const double c = calibrate_glr_cost(cfg, GaussianSpec{0.0, glr_model_variance(f.spec.scenario)}, target,
                                      f.calibration->local_trials, f.spec.master_seed ^ 0x5bd1e995ULL);
  lp.glr_cost = c;
  lp.gamma1 = std::log(1.0 / c);
  lp.gamma0 = -lp.gamma1;
  return lp;
}

/// Calibrates beta to `target` with the plan's trial budget, then measures at the
/// full trial count. The calibrated beta is the one reported.
inline CalibratedPoint calibrate_point(const ScenarioFile& f, double target, const RunOptions& opt) {
  if (!f.calibration) throw ConfigError(f.id + ": no [calibration] section");
  CalibratedPoint out;
  out.target = target;
  out.local = local_for_target(f, target);
  ExperimentSpec spec = apply_options(f.spec, opt);
  spec.local = out.local;
  ExperimentSpec probe = spec;
  probe.n_trials = f.calibration->trials;
  out.beta = calibrate_threshold(probe, target, f.calibration->beta_range);
  out.performance = estimate_performance(with_fusion_beta(spec, out.beta));
  check_censoring(out.performance, opt.max_censoring, f.id);
  return out;
}

inline void add_calibration_rows(ResultTable& t, const std::string& id, Hypothesis h, const CalibratedPoint& p,
                                 DetectorKind d) {
  const std::string src = "calibration:" + format_number(p.target);
  t.add_value(id, h, "beta", src, p.beta);
  if (d == DetectorKind::dualsprt)
    t.add_value(id, h, "gamma", src, p.local.gamma1);
  else
    t.add_value(id, h, "glr_cost", src, p.local.glr_cost);
  add_performance_rows(t, id, h, p.performance, "simulation:" + format_number(p.target));
}

inline ResultTable calibrate_table(const ScenarioFile& f, const RunOptions& opt) {
  if (!f.calibration) throw ConfigError(f.id + ": calibrate needs a [calibration] section");
  ResultTable t;
  for (double target : f.calibration->targets(f.spec.scenario.hypothesis))
    add_calibration_rows(t, f.id, f.spec.scenario.hypothesis, calibrate_point(f, target, opt), f.spec.detector);
  return t;
}

/// Paired comparison at matched P_FA: for each hypothesis and each target both
/// files are calibrated (beta per hypothesis, locals per the file's rule) and
/// measured. Rows come out grouped by hypothesis, then target, then file.
inline ResultTable compare_table(const ScenarioFile& a, const ScenarioFile& b, const RunOptions& opt) {
  if (!a.calibration || !b.calibration) throw ConfigError("compare: both files need a [calibration] section");
  ResultTable t;
  for (Hypothesis h : {Hypothesis::H1, Hypothesis::H0}) {
    if (a.calibration->targets(h) != b.calibration->targets(h))
      throw ConfigError(std::string("compare: files list different ") + to_string(h) + " targets");
    for (double target : a.calibration->targets(h))
      for (const auto* f : {&a, &b}) {
        ScenarioFile run = *f;
        run.spec.scenario.hypothesis = h;
        add_calibration_rows(t, f->id, h, calibrate_point(run, target, opt), f->spec.detector);
      }
  }
  return t;
}

}  // namespace dualsprt
