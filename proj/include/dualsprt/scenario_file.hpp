#pragma once

// Sectioned key = value scenario files and the fixed-schema CSV result table.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dualsprt/errors.hpp"
#include "dualsprt/montecarlo.hpp"

namespace dualsprt {

/// How local thresholds are set when calibrating to a P_FA target.
///   fixed:        use gamma / glr_cost from the file as-is
///   glr_boundary: c is calibrated so a lone GLR node errs under H0 with
///                 probability equal to the target; GLR nodes use c and SPRT
///                 nodes use gamma = ln(1/c), the GLR boundary height at n = 1
enum class LocalRule { fixed, glr_boundary };

inline const char* to_string(LocalRule r) { return r == LocalRule::fixed ? "fixed" : "glr_boundary"; }

struct CalibrationPlan {
  std::vector<double> targets_h0;
  std::vector<double> targets_h1;
  Interval beta_range{0.01, 200.0};
  long trials = 20000;  // per bisection step
  LocalRule local_rule = LocalRule::fixed;
  long local_trials = 20000;

  const std::vector<double>& targets(Hypothesis h) const { return h == Hypothesis::H1 ? targets_h1 : targets_h0; }

  friend bool operator==(const CalibrationPlan& a, const CalibrationPlan& b) {
    return a.targets_h0 == b.targets_h0 && a.targets_h1 == b.targets_h1 && a.beta_range.lo == b.beta_range.lo && a.beta_range.hi == b.beta_range.hi &&
           a.trials == b.trials && a.local_rule == b.local_rule && a.local_trials == b.local_trials;
  }
};

struct ScenarioFile {
  std::string id = "scenario";
  ExperimentSpec spec;
  std::optional<CalibrationPlan> calibration;

  friend bool operator==(const ScenarioFile& a, const ScenarioFile& b) {
    const auto& x = a.spec;
    const auto& y = b.spec;
    return a.id == b.id && a.calibration == b.calibration && x.scenario.hypothesis == y.scenario.hypothesis &&
           x.scenario.nodes == y.scenario.nodes && x.scenario.snr == y.scenario.snr &&
           x.scenario.observation == y.scenario.observation && x.scenario.knowledge == y.scenario.knowledge &&
           x.detector == y.detector && x.local == y.local && x.fusion.beta1 == y.fusion.beta1 &&
           x.fusion.beta0 == y.fusion.beta0 && x.fusion.mu1 == y.fusion.mu1 && x.fusion.mu0 == y.fusion.mu0 &&
           x.fusion.mac_noise == y.fusion.mac_noise && x.n_trials == y.n_trials &&
           x.master_seed == y.master_seed && x.slot_cap == y.slot_cap;
  }
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

class Document {
 public:
  explicit Document(std::string origin) : origin_(std::move(origin)) {}

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(origin_ + ": " + msg); }

  void parse(std::istream& in) {
    static const std::vector<std::string> known = {"scenario", "local", "fusion", "experiment", "calibration"};
    std::string raw;
    std::string section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      const std::string text = trim(std::string_view(raw).substr(0, hash));
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']') fail(line, "unterminated section header '" + text + "'");
        section = trim(std::string_view(text).substr(1, text.size() - 2));
        if (std::find(known.begin(), known.end(), section) == known.end()) fail(line, "unknown section [" + section + "]");
        if (!sections_seen_.insert({section, line}).second) fail(line, "duplicate section [" + section + "]");
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos) fail(line, "expected 'key = value', got '" + text + "'");
      if (section.empty()) fail(line, "key outside of any section");
      const std::string key = trim(std::string_view(text).substr(0, eq));
      const std::string value = trim(std::string_view(text).substr(eq + 1));
      if (key.empty()) fail(line, "empty key");
      auto [it, fresh] = entries_.insert({{section, key}, Entry{value, line}});
      if (!fresh) fail(line, "duplicate key '" + key + "' in [" + section + "] (first at line " +
                                 std::to_string(it->second.line) + ")");
    }
  }

  bool has_section(const std::string& s) const { return sections_seen_.count(s) > 0; }

  Entry* find(const std::string& section, const std::string& key) {
    auto it = entries_.find({section, key});
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  std::string text(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    if (!e) fail("missing key '" + key + "' in [" + section + "]");
    return e->value;
  }

  std::optional<std::string> text_opt(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    return e->value;
  }

  double number(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    if (!e) missing(section, key);
    return to_number(*e, key);
  }

  std::optional<double> number_opt(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    if (!e) return std::nullopt;
    return to_number(*e, key);
  }

  template <class Int>
  Int integer(const std::string& section, const std::string& key, Int fallback) {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    Int v{};
    const auto& s = e->value;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail(e->line, "'" + key + "' expects an integer, got '" + s + "'");
    return v;
  }

  std::vector<double> list(const std::string& section, const std::string& key) {
    const Entry* e = find(section, key);
    if (!e) fail("missing key '" + key + "' in [" + section + "]");
    std::vector<double> out;
    std::stringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      Entry tmp{trim(item), e->line};
      out.push_back(to_number(tmp, key));
    }
    if (out.empty()) fail(e->line, "'" + key + "' expects a comma separated list");
    return out;
  }

  std::string choice(const std::string& section, const std::string& key, const std::vector<std::string>& allowed,
                     const std::string& fallback) {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    if (std::find(allowed.begin(), allowed.end(), e->value) == allowed.end()) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
      fail(e->line, "'" + key + "' must be one of " + opts + ", got '" + e->value + "'");
    }
    return e->value;
  }

  /// Missing gamma1 next to a bare `gamma` points at the bare key instead.
  [[noreturn]] void missing(const std::string& section, const std::string& key) const {
    if (key.size() > 1 && (key.back() == '1' || key.back() == '0')) {
      const std::string bare = key.substr(0, key.size() - 1);
      if (auto it = entries_.find({section, bare}); it != entries_.end())
        fail(it->second.line, "unknown key '" + bare + "' in [" + section +
                                  "]; thresholds and levels take a side suffix: " + bare + "1/" + bare + "0");
    }
    fail("missing key '" + key + "' in [" + section + "]");
  }

  /// Anything left unread is an unknown key (or one that does not apply to the chosen model).
  void reject_unused() const {
    const Entry* worst = nullptr;
    std::string name;
    std::string sec;
    for (const auto& [k, e] : entries_)
      if (!e.used && (!worst || e.line < worst->line)) {
        worst = &e;
        sec = k.first;
        name = k.second;
      }
    if (!worst) return;
    std::string msg = "unknown key '" + name + "' in [" + sec + "]";
    static const std::map<std::string, std::string> sided = {
        {"gamma", "gamma1/gamma0"}, {"b", "b1/b0"}, {"beta", "beta1/beta0"}, {"mu", "mu1/mu0"}};
    if (auto it = sided.find(name); it != sided.end()) msg += "; thresholds and levels take a side suffix: " + it->second;
    fail(worst->line, msg + " (or it does not apply to the selected model)");
  }

 private:
  double to_number(const Entry& e, const std::string& key) const {
    double v = 0.0;
    const auto& s = e.value;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
      fail(e.line, "'" + key + "' expects a finite number, got '" + s + "'");
    return v;
  }

  std::string origin_;
  std::map<std::pair<std::string, std::string>, Entry> entries_;
  std::map<std::string, int> sections_seen_;
};

}  // namespace detail

inline ScenarioFile parse_scenario(std::istream& in, const std::string& origin = "<input>") {
  detail::Document doc(origin);
  doc.parse(in);
  for (const char* s : {"scenario", "local", "fusion", "experiment"})
    if (!doc.has_section(s)) doc.fail(std::string("missing section [") + s + "]");

  ScenarioFile f;
  auto& sc = f.spec.scenario;
  f.id = doc.text("scenario", "id");
  if (f.id.empty() || f.id.find_first_of(",\"\n") != std::string::npos) doc.fail("scenario id must be non-empty without commas or quotes");
  if (!doc.find("scenario", "hypothesis")) doc.fail("missing key 'hypothesis' in [scenario]");
  sc.hypothesis = doc.choice("scenario", "hypothesis", {"H0", "H1"}, "H1") == "H1" ? Hypothesis::H1 : Hypothesis::H0;
  sc.nodes = doc.integer<int>("scenario", "nodes", 0);
  if (sc.nodes < 1) doc.fail("[scenario] nodes must be given and >= 1");

  const auto snr = doc.choice("scenario", "snr_model", {"equal", "gains", "fading"}, "equal");
  if (snr == "equal") {
    sc.snr = EqualSnr{doc.number("scenario", "signal_level")};
  } else if (snr == "gains") {
    sc.snr = FixedGains{doc.list("scenario", "gain_db"), doc.number_opt("scenario", "reference_level").value_or(1.0)};
  } else {
    const double mean = doc.number("scenario", "fading_mean_power");
    if (!(mean > 0.0)) doc.fail("[scenario] fading_mean_power must be > 0");
    sc.snr = Fading{ExponentialSpec{1.0 / mean}};
  }

  const auto obs = doc.choice("scenario", "observation", {"direct", "energy"}, "direct");
  const double nv = doc.number("scenario", "noise_variance");
  if (obs == "direct")
    sc.observation = DirectGaussian{nv};
  else
    sc.observation = EnergyDetector{doc.integer<int>("scenario", "energy_samples", 0), nv};
  sc.knowledge = doc.choice("scenario", "node_knowledge", {"known", "unknown"}, "known") == "known"
                     ? Knowledge::known_at_node
                     : Knowledge::unknown_at_node;

  auto& lp = f.spec.local;
  f.spec.detector =
      doc.choice("local", "detector", {"dualsprt", "glrsprt"}, "dualsprt") == "dualsprt" ? DetectorKind::dualsprt
                                                                                          : DetectorKind::glrsprt;
  lp.b1 = doc.number("local", "b1");
  lp.b0 = doc.number("local", "b0");
  if (f.spec.detector == DetectorKind::dualsprt) {
    lp.gamma1 = doc.number("local", "gamma1");
    lp.gamma0 = doc.number("local", "gamma0");
  } else {
    lp.glr_cost = doc.number("local", "glr_cost");
    lp.glr_theta1 = doc.number_opt("local", "glr_theta1");
    lp.glr_clip_hi = doc.number_opt("local", "glr_clip_hi");
  }

  auto& fu = f.spec.fusion;
  fu.beta1 = doc.number("fusion", "beta1");
  fu.beta0 = doc.number("fusion", "beta0");
  fu.mu1 = doc.number("fusion", "mu1");
  fu.mu0 = doc.number("fusion", "mu0");
  fu.mac_noise = GaussianSpec{0.0, doc.number("fusion", "mac_noise_variance")};

  f.spec.n_trials = doc.integer<long>("experiment", "trials", 10000);
  f.spec.master_seed = doc.integer<std::uint64_t>("experiment", "seed", 1);
  f.spec.slot_cap = doc.integer<long>("experiment", "slot_cap", 10000);

  if (doc.has_section("calibration")) {
    CalibrationPlan c;
    // `targets` applies to both hypotheses unless a per-hypothesis list is given.
    const bool shared = doc.find("calibration", "targets") != nullptr;
    const bool h0 = doc.find("calibration", "targets_h0") != nullptr;
    const bool h1 = doc.find("calibration", "targets_h1") != nullptr;
    if (shared && (h0 || h1)) doc.fail("[calibration] give either targets or targets_h0/targets_h1, not both");
    if (shared) {
      c.targets_h0 = c.targets_h1 = doc.list("calibration", "targets");
    } else {
      c.targets_h0 = doc.list("calibration", "targets_h0");
      c.targets_h1 = doc.list("calibration", "targets_h1");
    }
    for (const auto* list : {&c.targets_h0, &c.targets_h1})
      for (double t : *list)
        if (!(t > 0.0 && t < 1.0)) doc.fail("[calibration] targets must lie in (0,1)");
    c.beta_range.lo = doc.number_opt("calibration", "beta_lo").value_or(c.beta_range.lo);
    c.beta_range.hi = doc.number_opt("calibration", "beta_hi").value_or(c.beta_range.hi);
    c.trials = doc.integer<long>("calibration", "trials", c.trials);
    c.local_rule = doc.choice("calibration", "local_rule", {"fixed", "glr_boundary"}, "fixed") == "fixed"
                       ? LocalRule::fixed
                       : LocalRule::glr_boundary;
    c.local_trials = doc.integer<long>("calibration", "local_trials", c.local_trials);
    if (!(0.0 < c.beta_range.lo && c.beta_range.lo < c.beta_range.hi)) doc.fail("[calibration] need 0 < beta_lo < beta_hi");
    if (c.trials < 100 || c.local_trials < 100) doc.fail("[calibration] trial counts must be >= 100");
    f.calibration = c;
  }

  doc.reject_unused();
  try {
    f.spec.validate();
    if (!(f.spec.local.gamma0 < 0.0 && 0.0 < f.spec.local.gamma1)) doc.fail("[local] need gamma0 < 0 < gamma1");
    if (f.spec.detector == DetectorKind::glrsprt) glr_config_for(f.spec).validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    doc.fail(e.what());
  }
  return f;
}

inline ScenarioFile parse_scenario_text(const std::string& text, const std::string& origin = "<text>") {
  std::istringstream in(text);
  return parse_scenario(in, origin);
}

inline ScenarioFile load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  return parse_scenario(in, path);
}

inline std::string serialize_scenario(const ScenarioFile& f) {
  const auto& s = f.spec;
  const auto& sc = s.scenario;
  std::ostringstream o;
  auto num = [](double v) { return format_number(v); };
  o << "[scenario]\n";
  o << "id = " << f.id << "\n";
  o << "hypothesis = " << to_string(sc.hypothesis) << "\n";
  o << "nodes = " << sc.nodes << "\n";
  if (const auto* e = std::get_if<EqualSnr>(&sc.snr)) {
    o << "snr_model = equal\nsignal_level = " << num(e->level) << "\n";
  } else if (const auto* g = std::get_if<FixedGains>(&sc.snr)) {
    o << "snr_model = gains\ngain_db = ";
    for (std::size_t i = 0; i < g->gain_db.size(); ++i) o << (i ? ", " : "") << num(g->gain_db[i]);
    o << "\nreference_level = " << num(g->reference_level) << "\n";
  } else {
    o << "snr_model = fading\nfading_mean_power = " << num(std::get<Fading>(sc.snr).power.mean()) << "\n";
  }
  if (const auto* d = std::get_if<DirectGaussian>(&sc.observation)) {
    o << "observation = direct\nnoise_variance = " << num(d->noise_variance) << "\n";
  } else {
    const auto& e = std::get<EnergyDetector>(sc.observation);
    o << "observation = energy\nnoise_variance = " << num(e.noise_variance) << "\nenergy_samples = " << e.samples
      << "\n";
  }
  o << "node_knowledge = " << (sc.knowledge == Knowledge::known_at_node ? "known" : "unknown") << "\n";

  o << "\n[local]\ndetector = " << to_string(s.detector) << "\n";
  if (s.detector == DetectorKind::dualsprt) {
    o << "gamma1 = " << num(s.local.gamma1) << "\ngamma0 = " << num(s.local.gamma0) << "\n";
  } else {
    o << "glr_cost = " << num(s.local.glr_cost) << "\n";
    if (s.local.glr_theta1) o << "glr_theta1 = " << num(*s.local.glr_theta1) << "\n";
    if (s.local.glr_clip_hi) o << "glr_clip_hi = " << num(*s.local.glr_clip_hi) << "\n";
  }
  o << "b1 = " << num(s.local.b1) << "\nb0 = " << num(s.local.b0) << "\n";

  o << "\n[fusion]\nbeta1 = " << num(s.fusion.beta1) << "\nbeta0 = " << num(s.fusion.beta0) << "\nmu1 = "
    << num(s.fusion.mu1) << "\nmu0 = " << num(s.fusion.mu0) << "\nmac_noise_variance = "
    << num(s.fusion.mac_noise.variance) << "\n";

  o << "\n[experiment]\ntrials = " << s.n_trials << "\nseed = " << s.master_seed << "\nslot_cap = " << s.slot_cap
    << "\n";

  if (f.calibration) {
    const auto& c = *f.calibration;
    auto list = [&](const std::vector<double>& v) {
      for (std::size_t i = 0; i < v.size(); ++i) o << (i ? ", " : "") << num(v[i]);
      o << "\n";
    };
    o << "\n[calibration]\n";
    if (c.targets_h0 == c.targets_h1) {
      o << "targets = ";
      list(c.targets_h0);
    } else {
      o << "targets_h0 = ";
      list(c.targets_h0);
      o << "targets_h1 = ";
      list(c.targets_h1);
    }
    o << "beta_lo = " << num(c.beta_range.lo) << "\nbeta_hi = " << num(c.beta_range.hi) << "\ntrials = " << c.trials
      << "\nlocal_rule = " << to_string(c.local_rule) << "\nlocal_trials = " << c.local_trials << "\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Result table

struct ResultRow {
  std::string scenario_id;
  std::string hypothesis;
  std::string metric;
  std::string source;
  std::optional<double> value;  // empty -> NA
  std::optional<double> ci_low;
  std::optional<double> ci_high;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline constexpr std::string_view kCsvHeader = "scenario_id,hypothesis,metric,source,value,ci_low,ci_high";

class ResultTable {
 public:
  std::vector<ResultRow> rows;

  void add(ResultRow r) { rows.push_back(std::move(r)); }

  void add_estimate(const std::string& id, Hypothesis h, const std::string& metric, const std::string& source,
                    const Estimate& e) {
    add({id, to_string(h), metric, source, e.mean, e.ci_low(), e.ci_high()});
  }

  void add_value(const std::string& id, Hypothesis h, const std::string& metric, const std::string& source,
                 std::optional<double> v) {
    add({id, to_string(h), metric, source, v, std::nullopt, std::nullopt});
  }

  std::string to_csv() const {
    std::ostringstream o;
    o << kCsvHeader << "\n";
    auto cell = [](const std::optional<double>& v, const char* none) { return v ? format_number(*v) : std::string(none); };
    for (const auto& r : rows)
      o << r.scenario_id << "," << r.hypothesis << "," << r.metric << "," << r.source << "," << cell(r.value, "NA")
        << "," << cell(r.ci_low, "") << "," << cell(r.ci_high, "") << "\n";
    return o.str();
  }

  /// Aligned plain-text rendering of the same rows.
  std::string to_text() const {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({"scenario_id", "hypothesis", "metric", "source", "value", "ci_low", "ci_high"});
    auto fmt = [](const std::optional<double>& v) {
      if (!v) return std::string("-");
      std::ostringstream s;
      s.precision(5);
      s << *v;
      return s.str();
    };
    for (const auto& r : rows)
      cells.push_back({r.scenario_id, r.hypothesis, r.metric, r.source, r.value ? fmt(r.value) : "NA", fmt(r.ci_low),
                       fmt(r.ci_high)});
    std::vector<std::size_t> width(7, 0);
    for (const auto& row : cells)
      for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
    std::ostringstream o;
    for (const auto& row : cells) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        o << row[i];
        if (i + 1 < row.size()) o << std::string(width[i] - row[i].size() + 2, ' ');
      }
      o << "\n";
    }
    return o.str();
  }

  static ResultTable from_csv(std::istream& in) {
    ResultTable t;
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != kCsvHeader) throw ConfigError("csv: bad or missing header");
    int n = 1;
    while (std::getline(in, line)) {
      ++n;
      if (detail::trim(line).empty()) continue;
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string item;
      while (std::getline(ss, item, ',')) f.push_back(item);
      if (!line.empty() && line.back() == ',') f.emplace_back();
      if (f.size() != 7) throw ConfigError("csv:" + std::to_string(n) + ": expected 7 fields");
      auto num = [&](const std::string& s) -> std::optional<double> {
        if (s.empty() || s == "NA") return std::nullopt;
        double v = 0.0;
        auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
          throw ConfigError("csv:" + std::to_string(n) + ": bad number '" + s + "'");
        return v;
      };
      t.add({f[0], f[1], f[2], f[3], num(f[4]), num(f[5]), num(f[6])});
    }
    return t;
  }

  static ResultTable from_csv(const std::string& text) {
    std::istringstream in(text);
    return from_csv(in);
  }
};

}  // namespace dualsprt
