// dualsprt: simulate / analyze / compare / calibrate scenario files.
//
// exit codes: 0 ok, 2 bad scenario or arguments, 3 calibration or censoring failure

#include <fstream>
#include <iomanip>
#include <iostream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "dualsprt/dualsprt.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRunFailure = 3;

struct Common {
  long trials = 0;
  std::uint64_t seed = 0;
  long slot_cap = 0;
  unsigned threads = 0;
  std::string out = "-";
};

void add_run_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--trials", c.trials, "Monte Carlo trials (overrides the file)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", c.seed, "master seed (overrides the file)");
  cmd->add_option("--slot-cap", c.slot_cap, "per-trial slot cap (overrides the file)")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", c.threads, "worker threads, 0 = all cores; never changes results");
}

dualsprt::RunOptions run_options(const CLI::App* cmd, const Common& c) {
  dualsprt::RunOptions o;
  if (cmd->count("--trials")) o.trials = c.trials;
  if (cmd->count("--seed")) o.seed = c.seed;
  if (cmd->count("--slot-cap")) o.slot_cap = c.slot_cap;
  o.threads = c.threads;
  return o;
}

// CSV to stdout for "-"; otherwise CSV to the file and an aligned table on stdout.
void emit(const dualsprt::ResultTable& t, const std::string& out) {
  if (out == "-") {
    std::cout << t.to_csv();
    return;
  }
  std::ofstream f(out);
  if (!f) throw dualsprt::ConfigError("cannot write " + out);
  f << t.to_csv();
  if (!f) throw dualsprt::ConfigError("write failed: " + out);
  std::cout << t.to_text();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed sequential detection over a Gaussian MAC (DualSPRT / GLR-SPRT)"};
  app.require_subcommand(1);

  Common sim_opt, cmp_opt, cal_opt;
  std::string sim_file, ana_file, cmp_a, cmp_b, cal_file, ana_out = "-", cal_write;
  double eps = 1e-6;

  auto* sim = app.add_subcommand("simulate", "Monte Carlo P_FA and E_DD for one scenario");
  sim->add_option("scenario", sim_file, "scenario file")->required();
  add_run_flags(sim, sim_opt);
  sim->add_option("--out", sim_opt.out, "CSV destination, - for stdout");

  auto* ana = app.add_subcommand("analyze", "analytical E_DD and P_FA bounds");
  ana->add_option("scenario", ana_file, "scenario file")->required();
  ana->add_option("--eps", eps, "truncation tolerance of the P_FA series")->check(CLI::Range(1e-15, 0.5));
  ana->add_option("--out", ana_out, "CSV destination, - for stdout");

  auto* cmp = app.add_subcommand("compare", "two detectors at matched calibrated P_FA targets");
  cmp->add_option("first", cmp_a, "scenario file")->required();
  cmp->add_option("second", cmp_b, "scenario file")->required();
  add_run_flags(cmp, cmp_opt);
  cmp->add_option("--out", cmp_opt.out, "CSV destination, - for stdout");

  auto* cal = app.add_subcommand("calibrate", "fit the fusion threshold to each P_FA target");
  cal->add_option("scenario", cal_file, "scenario file")->required();
  add_run_flags(cal, cal_opt);
  cal->add_option("--out", cal_opt.out, "CSV destination, - for stdout");
  cal->add_option("--write-scenario", cal_write, "write the scenario back with the first target's calibrated values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }

  try {
    if (*sim) {
      emit(dualsprt::simulate_table(dualsprt::load_scenario(sim_file), run_options(sim, sim_opt)), sim_opt.out);
    } else if (*ana) {
      emit(dualsprt::analyze_table(dualsprt::load_scenario(ana_file), eps), ana_out);
    } else if (*cmp) {
      emit(dualsprt::compare_table(dualsprt::load_scenario(cmp_a), dualsprt::load_scenario(cmp_b),
                                   run_options(cmp, cmp_opt)),
           cmp_opt.out);
    } else if (*cal) {
      auto file = dualsprt::load_scenario(cal_file);
      const auto opt = run_options(cal, cal_opt);
      if (!file.calibration) throw dualsprt::ConfigError(cal_file + ": calibrate needs a [calibration] section");
      const auto h = file.spec.scenario.hypothesis;
      dualsprt::ResultTable t;
      bool first = true;
      for (double target : file.calibration->targets(h)) {
        const auto p = dualsprt::calibrate_point(file, target, opt);
        dualsprt::add_calibration_rows(t, file.id, h, p, file.spec.detector);
        if (first && !cal_write.empty()) {
          auto updated = file;
          updated.spec.local = p.local;
          updated.spec.fusion = dualsprt::with_fusion_beta(updated.spec, p.beta).fusion;
          std::ofstream w(cal_write);
          if (!w) throw dualsprt::ConfigError("cannot write " + cal_write);
          w << "# beta fitted to P_FA " << dualsprt::format_number(target) << std::setprecision(4) << " (simulated "
            << p.performance.pfa.mean << ", E_DD " << p.performance.edd.mean
            << ", " << p.performance.n_trials << " trials)\n";
          w << dualsprt::serialize_scenario(updated);
        }
        first = false;
      }
      emit(t, cal_opt.out);
    }
  } catch (const dualsprt::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const dualsprt::CalibrationError& e) {
    std::cerr << "calibration failed: " << e.what() << "\n";
    return kRunFailure;
  } catch (const dualsprt::CensoringError& e) {
    std::cerr << "censoring: " << e.what() << "\n";
    return kRunFailure;
  }
  return 0;
}
