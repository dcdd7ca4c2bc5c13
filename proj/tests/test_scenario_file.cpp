#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "dualsprt/scenario_file.hpp"

using namespace dualsprt;

namespace {

const char* kMinimal = R"(# minimal
[scenario]
id = demo
hypothesis = H0
nodes = 3
snr_model = equal
signal_level = 1
observation = direct
noise_variance = 1

[local]
detector = dualsprt
gamma1 = 8
gamma0 = -8
b1 = 1
b0 = -1

[fusion]
beta1 = 10
beta0 = -10
mu1 = 1
mu0 = -1
mac_noise_variance = 1

[experiment]
trials = 500
seed = 3
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return s.replace(at, from.size(), to);
}

std::string parse_error(const std::string& text) {
  try {
    parse_scenario_text(text, "t.scn");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(ScenarioFile, ParsesMinimal) {
  const auto f = parse_scenario_text(kMinimal);
  EXPECT_EQ(f.id, "demo");
  EXPECT_EQ(f.spec.scenario.hypothesis, Hypothesis::H0);
  EXPECT_EQ(f.spec.scenario.nodes, 3);
  EXPECT_EQ(f.spec.local.gamma1, 8);
  EXPECT_EQ(f.spec.fusion.beta0, -10);
  EXPECT_EQ(f.spec.n_trials, 500);
  EXPECT_EQ(f.spec.master_seed, 3u);
  EXPECT_EQ(f.spec.slot_cap, 10000);
  EXPECT_FALSE(f.calibration);
}

TEST(ScenarioFile, RoundTripIdentity) {
  const auto f = parse_scenario_text(kMinimal);
  const auto text = serialize_scenario(f);
  EXPECT_EQ(parse_scenario_text(text), f);
  EXPECT_EQ(serialize_scenario(parse_scenario_text(text)), text);
}

TEST(ScenarioFile, ShippedScenariosRoundTrip) {
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(DUALSPRT_SCENARIO_DIR)) {
    if (entry.path().extension() != ".scn") continue;
    ++seen;
    const auto f = load_scenario(entry.path().string());
    EXPECT_EQ(parse_scenario_text(serialize_scenario(f)), f) << entry.path();
    EXPECT_TRUE(f.calibration) << entry.path();
    EXPECT_NO_THROW(f.spec.validate()) << entry.path();
  }
  EXPECT_GE(seen, 11);
}

TEST(ScenarioFile, CalibrationSection) {
  auto text = std::string(kMinimal) + "\n[calibration]\ntargets_h0 = 0.1, 0.05\ntargets_h1 = 0.2, 0.1\nlocal_rule = glr_boundary\n";
  const auto f = parse_scenario_text(text);
  ASSERT_TRUE(f.calibration);
  EXPECT_EQ(f.calibration->targets(Hypothesis::H0), (std::vector<double>{0.1, 0.05}));
  EXPECT_EQ(f.calibration->targets(Hypothesis::H1), (std::vector<double>{0.2, 0.1}));
  EXPECT_EQ(f.calibration->local_rule, LocalRule::glr_boundary);
  EXPECT_EQ(parse_scenario_text(serialize_scenario(f)), f);

  auto both = std::string(kMinimal) + "\n[calibration]\ntargets = 0.1\ntargets_h0 = 0.1\n";
  EXPECT_NE(parse_error(both).find("not both"), std::string::npos);
  auto bad = std::string(kMinimal) + "\n[calibration]\ntargets = 1.5\n";
  EXPECT_NE(parse_error(bad).find("(0,1)"), std::string::npos);
}

TEST(ScenarioFile, SideSuffixHint) {
  const auto msg = parse_error(replace(kMinimal, "gamma1 = 8", "gamma = 8"));
  EXPECT_NE(msg.find("t.scn:13:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("'gamma'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("gamma1/gamma0"), std::string::npos) << msg;
}

TEST(ScenarioFile, ErrorsCarryLineNumbers) {
  EXPECT_NE(parse_error(replace(kMinimal, "nodes = 3", "nodes = three")).find("t.scn:5:"), std::string::npos);
  EXPECT_NE(parse_error(replace(kMinimal, "beta1 = 10", "beta1 = ten")).find("t.scn:19:"), std::string::npos);
  EXPECT_NE(parse_error(replace(kMinimal, "[fusion]", "[fusoin]")).find("unknown section"), std::string::npos);
  EXPECT_NE(parse_error(replace(kMinimal, "seed = 3", "seed = 3\nseed = 4")).find("duplicate key"), std::string::npos);
  EXPECT_NE(parse_error(replace(kMinimal, "hypothesis = H0", "hypothesis = H2")).find("H0|H1"), std::string::npos);
  EXPECT_NE(parse_error(replace(kMinimal, "hypothesis = H0\n", "")).find("missing key 'hypothesis'"),
            std::string::npos);
  EXPECT_NE(parse_error(replace(kMinimal, "mu0 = -1\n", "")).find("missing key 'mu0'"), std::string::npos);
  EXPECT_NE(parse_error(replace(kMinimal, "trials = 500", "trials = 500\ncolour = red")).find("unknown key 'colour'"),
            std::string::npos);
  EXPECT_NE(parse_error(replace(kMinimal, "gamma0 = -8", "gamma0 = 8")).find("gamma0 < 0 < gamma1"), std::string::npos);
}

TEST(ScenarioFile, KeysOfTheOtherModelAreRejected) {
  // glr_cost does not apply to dualsprt nodes
  const auto msg = parse_error(replace(kMinimal, "b1 = 1", "b1 = 1\nglr_cost = 0.01"));
  EXPECT_NE(msg.find("unknown key 'glr_cost'"), std::string::npos) << msg;
}

TEST(ScenarioFile, LoadMissingFile) {
  EXPECT_THROW(load_scenario("/nonexistent/x.scn"), ConfigError);
}

TEST(ResultTable, CsvRoundTripWithNa) {
  ResultTable t;
  t.add_estimate("a", Hypothesis::H1, "pfa", "simulation", Estimate{0.01, 0.001, 1000});
  t.add_value("a", Hypothesis::H0, "edd", "analysis:NA", std::nullopt);
  t.add_value("b", Hypothesis::H1, "beta", "calibration:0.1", 12.375);
  const auto csv = t.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
  EXPECT_NE(csv.find("a,H0,edd,analysis:NA,NA,,\n"), std::string::npos) << csv;
  const auto back = ResultTable::from_csv(csv);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.to_csv(), csv);
}

TEST(ResultTable, HeaderIsFixed) {
  EXPECT_EQ(kCsvHeader, "scenario_id,hypothesis,metric,source,value,ci_low,ci_high");
  EXPECT_EQ(ResultTable{}.to_csv(), std::string(kCsvHeader) + "\n");
  EXPECT_THROW(ResultTable::from_csv("id,h,m\n"), ConfigError);
  EXPECT_THROW(ResultTable::from_csv(std::string(kCsvHeader) + "\na,H1,pfa,sim,x,,\n"), ConfigError);
}

TEST(ResultTable, TextRendering) {
  ResultTable t;
  t.add_value("a", Hypothesis::H0, "edd", "analysis:NA", std::nullopt);
  const auto text = t.to_text();
  EXPECT_NE(text.find("scenario_id"), std::string::npos);
  EXPECT_NE(text.find("NA"), std::string::npos);
}

TEST(FormatNumber, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12.375, -7.0}) EXPECT_EQ(std::stod(format_number(v)), v);
  EXPECT_EQ(format_number(0.1), "0.1");
}
