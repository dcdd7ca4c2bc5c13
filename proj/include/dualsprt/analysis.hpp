#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dualsprt/channel.hpp"
#include "dualsprt/errors.hpp"
#include "dualsprt/fusion.hpp"
#include "dualsprt/montecarlo.hpp"
#include "dualsprt/stats.hpp"

namespace dualsprt {

namespace detail {

template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-9) {
  if (!(b > a)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, rel_tol);
}

}  // namespace detail

/// Gaussian (CLT) law of a local first-passage time, in slots.
struct FirstPassageSpec {
  double mean = 0.0;
  double variance = 0.0;

  double stddev() const { return std::sqrt(variance); }
  double cdf(double t) const { return normal_cdf((t - mean) / stddev()); }
  double sf(double t) const { return normal_sf((t - mean) / stddev()); }
};

/// tau_gamma ~ N(gamma/delta, sigma2 gamma / delta^3).
inline FirstPassageSpec tau_gamma_distribution(double gamma, double delta, double sigma2) {
  if (!(delta > 0.0)) throw std::invalid_argument("tau_gamma_distribution: drift must be > 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("tau_gamma_distribution: gamma must be > 0");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("tau_gamma_distribution: sigma2 must be > 0");
  return {gamma / delta, sigma2 * gamma / (delta * delta * delta)};
}

/// Mean fusion LLR increment when j nodes transmit `level` each.
inline double fusion_drift(int j, double level, const FusionConfig& cfg) {
  return (cfg.mu1 - cfg.mu0) * (2.0 * j * level - cfg.mu1 - cfg.mu0) / (2.0 * cfg.mac_noise.variance);
}

/// E[t_(1)], ..., E[t_(L)] for L iid Gaussian first-passage times.
///
/// E[Y] = a + int_a^b P(Y > x) dx over a window carrying all of the mass, with
/// P(t_(i) > x) = P(Binomial(L, F(x)) < i).
inline std::vector<double> order_stat_means_iid(int L, const FirstPassageSpec& fp) {
  if (L < 1) throw std::invalid_argument("order_stat_means_iid: L must be >= 1");
  const double a = fp.mean - 12.0 * fp.stddev();
  const double b = fp.mean + 12.0 * fp.stddev();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(L));
  for (int i = 1; i <= L; ++i) {
    auto survival = [&](double x) {
      const double F = fp.cdf(x);
      double sum = 0.0;
      double binom = 1.0;
      for (int m = 0; m < i; ++m) {
        sum += binom * std::pow(F, m) * std::pow(1.0 - F, L - m);
        binom = binom * (L - m) / (m + 1);
      }
      return std::min(1.0, sum);
    };
    out.push_back(a + detail::integrate(survival, a, b));
  }
  return out;
}

/// P(fewer than i of the independent times are <= x): Poisson-binomial count of crossings.
inline double order_stat_survival(const std::vector<FirstPassageSpec>& fps, int i, double x) {
  std::vector<double> count(fps.size() + 1, 0.0);
  count[0] = 1.0;
  for (std::size_t l = 0; l < fps.size(); ++l) {
    const double p = fps[l].cdf(x);
    for (std::size_t m = l + 1; m > 0; --m) count[m] = count[m] * (1.0 - p) + count[m - 1] * p;
    count[0] *= 1.0 - p;
  }
  double s = 0.0;
  for (int m = 0; m < i; ++m) s += count[static_cast<std::size_t>(m)];
  return std::clamp(s, 0.0, 1.0);
}

/// E[t_(i)] for independent, non-identical Gaussian first-passage times.
inline double order_stat_mean_heterogeneous(const std::vector<FirstPassageSpec>& fps, int i) {
  if (i < 1 || i > static_cast<int>(fps.size()))
    throw std::invalid_argument("order_stat_mean_heterogeneous: need 1 <= i <= number of nodes");
  double a = std::numeric_limits<double>::infinity();
  double b = -a;
  for (const auto& fp : fps) {
    a = std::min(a, fp.mean - 12.0 * fp.stddev());
    b = std::max(b, fp.mean + 12.0 * fp.stddev());
  }
  return a + detail::integrate([&](double x) { return order_stat_survival(fps, i, x); }, a, b);
}

/// Survival P(t_1 > t) of the earliest first-passage time.
inline double first_latch_survival(const std::vector<FirstPassageSpec>& fps, double t) {
  double s = 1.0;
  for (const auto& fp : fps) s *= fp.sf(t);
  return s;
}

/// Piecewise-linear mean path of the fusion statistic: drift delta_j between t_j and t_{j+1}.
struct DriftProfile {
  std::vector<double> deltas;            // j = 0..L
  std::vector<double> order_stat_means;  // E[t_j], j = 0..L with E[t_0] = 0
  std::vector<double> fbar;              // F̄_j, j = 0..L

  int nodes() const { return static_cast<int>(deltas.size()) - 1; }
};

/// F̄_0 = 0 and F̄_j = F̄_{j-1} + delta_{j-1} (E[t_j] - E[t_{j-1}]).
inline DriftProfile make_drift_profile(std::vector<double> deltas, const std::vector<double>& order_stat_means) {
  if (deltas.size() != order_stat_means.size() + 1)
    throw std::invalid_argument("make_drift_profile: need L+1 drifts for L order statistics");
  DriftProfile p;
  p.deltas = std::move(deltas);
  p.order_stat_means.push_back(0.0);
  p.order_stat_means.insert(p.order_stat_means.end(), order_stat_means.begin(), order_stat_means.end());
  p.fbar.assign(p.deltas.size(), 0.0);
  for (std::size_t j = 1; j < p.deltas.size(); ++j)
    p.fbar[j] = p.fbar[j - 1] + p.deltas[j - 1] * (p.order_stat_means[j] - p.order_stat_means[j - 1]);
  return p;
}

struct EddPrediction {
  int j_star = 0;
  double predicted_edd = 0.0;
  std::string method;
  // Heterogeneous path only: the j-rule / F̄ prediction over the same order statistics.
  std::optional<double> alternative_edd;
  bool methods_disagree = false;
};

/// E_DD ~ E[t_j] + (beta - F̄_j) / delta_j with
/// j = min{i : delta_i > 0 and (beta - F̄_i)/delta_i < E[t_{i+1}] - E[t_i]}.
inline EddPrediction predict_edd_from_profile(const DriftProfile& p, double beta) {
  const int L = p.nodes();
  for (int i = 1; i <= L; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!(p.deltas[ui] > 0.0)) continue;
    const double remaining = (beta - p.fbar[ui]) / p.deltas[ui];
    const double gap = i < L ? p.order_stat_means[ui + 1] - p.order_stat_means[ui]
                             : std::numeric_limits<double>::infinity();
    if (remaining < gap) return {i, p.order_stat_means[ui] + remaining, "drift-change", std::nullopt, false};
  }
  throw ConfigError("analysis: no number of transmitting nodes gives a positive fusion drift");
}

/// Local and fusion quantities of a symmetric scenario, oriented toward the true hypothesis.
struct SymmetricSetup {
  std::vector<FirstPassageSpec> first_passage;
  std::vector<double> deltas;  // fusion drift magnitude with j = 0..L correct nodes
  double beta = 0.0;
};

inline void require_symmetric(const LocalParams& local, const FusionConfig& fusion) {
  if (local.gamma1 != -local.gamma0 || local.b1 != -local.b0 || !fusion.symmetric())
    throw ConfigError("analysis: unsupported asymmetric configuration (needs gamma1=-gamma0, b1=-b0, "
                      "beta1=-beta0, mu1=-mu0)");
}

inline SymmetricSetup symmetric_setup(const ScenarioSpec& scenario, const LocalParams& local,
                                      const FusionConfig& fusion) {
  scenario.validate();
  fusion.validate();
  require_symmetric(local, fusion);
  if (scenario.is_fading()) throw ConfigError("analysis: not available for fading scenarios");
  RandomSource unused(0, 0);
  const auto params = draw_channel_gains(scenario, unused);
  SymmetricSetup s;
  for (const auto& p : params) {
    const auto m = llr_drift_and_variance(p.f0, p.f1, scenario.hypothesis);
    s.first_passage.push_back(tau_gamma_distribution(local.gamma1, std::abs(m.drift), m.variance));
  }
  for (int j = 0; j <= scenario.nodes; ++j) s.deltas.push_back(std::abs(fusion_drift(j, local.b1, fusion)));
  s.beta = fusion.beta1;
  return s;
}

inline bool all_identical(const std::vector<FirstPassageSpec>& fps) {
  return std::all_of(fps.begin(), fps.end(), [&](const FirstPassageSpec& f) {
    return f.mean == fps.front().mean && f.variance == fps.front().variance;
  });
}

inline EddPrediction predict_edd_iid(const ScenarioSpec& scenario, const LocalParams& local,
                                     const FusionConfig& fusion) {
  const auto s = symmetric_setup(scenario, local, fusion);
  if (!all_identical(s.first_passage)) throw ConfigError("predict_edd_iid: node laws differ; use the heterogeneous predictor");
  const auto means = order_stat_means_iid(scenario.nodes, s.first_passage.front());
  return predict_edd_from_profile(make_drift_profile(s.deltas, means), s.beta);
}

/// Heterogeneous-SNR predictor with i* the fewest transmitting nodes giving positive drift:
///   E[t_i*] + (beta - (E[t_i*] - E[t_{i*-1}]) / delta_{i*-1}) / delta_i*,
/// The correction term is taken as 0 when delta_{i*-1} <= 0, which by the choice
/// of i* is always (no drift toward the boundary before t_i*).
inline EddPrediction predict_edd_heterogeneous(const std::vector<FirstPassageSpec>& fps,
                                               const std::vector<double>& deltas, double beta) {
  const int L = static_cast<int>(fps.size());
  if (static_cast<int>(deltas.size()) != L + 1)
    throw std::invalid_argument("predict_edd_heterogeneous: need L+1 drifts");
  std::vector<double> means;
  for (int i = 1; i <= L; ++i) means.push_back(order_stat_mean_heterogeneous(fps, i));
  int i_star = 0;
  for (int i = 1; i <= L; ++i)
    if (deltas[static_cast<std::size_t>(i)] > 0.0) {
      i_star = i;
      break;
    }
  if (i_star == 0) throw ConfigError("analysis: no number of transmitting nodes gives a positive fusion drift");
  const auto ui = static_cast<std::size_t>(i_star);
  const double t_i = means[ui - 1];
  const double t_prev = i_star > 1 ? means[ui - 2] : 0.0;
  const double prev_drift = deltas[ui - 1];
  const double correction = prev_drift > 0.0 ? (t_i - t_prev) / prev_drift : 0.0;
  EddPrediction out;
  out.j_star = i_star;
  out.predicted_edd = t_i + (beta - correction) / deltas[ui];
  out.method = "heterogeneous";
  out.alternative_edd = predict_edd_from_profile(make_drift_profile(deltas, means), beta).predicted_edd;
  out.methods_disagree = std::abs(*out.alternative_edd - out.predicted_edd) > 0.1 * std::abs(out.predicted_edd);
  return out;
}

inline EddPrediction predict_edd_heterogeneous(const ScenarioSpec& scenario, const LocalParams& local,
                                               const FusionConfig& fusion) {
  const auto s = symmetric_setup(scenario, local, fusion);
  return predict_edd_heterogeneous(s.first_passage, s.deltas, s.beta);
}

struct PfaBound {
  double lower = 0.0;
  double upper = 0.0;
  int terms_used = 0;
  // Opt-in refinement: false alarms between t_1 and t_2 (lower-bound style), not part of lower/upper.
  std::optional<double> second_term;
};

struct PfaBoundOptions {
  double truncation_eps = 1e-6;
  bool include_second_term = false;
  int max_terms = 1000000;
};

namespace detail {

/// int_0^{2 beta} P[S < -c] f_prev(-beta + c) dc, S ~ N(inc_mean, inc_var), F_prev ~ N(prev_mean, prev_var).
inline double crossing_integral(double beta, double inc_mean, double inc_var, double prev_mean, double prev_var) {
  const double inc_sd = std::sqrt(inc_var);
  const double prev_sd = std::sqrt(prev_var);
  auto f = [&](double c) {
    return normal_cdf((-c - inc_mean) / inc_sd) * normal_pdf((-beta + c - prev_mean) / prev_sd) / prev_sd;
  };
  // The integrand is concentrated near c = 0 when prev_sd is small; split there.
  const double knee = std::min(2.0 * beta, std::max(8.0 * inc_sd, 1e-12));
  return integrate(f, 0.0, knee, 1e-10) + integrate(f, knee, 2.0 * beta, 1e-10);
}

}  // namespace detail

/// Bounds on the probability of a fusion false alarm before the first local latch t_1.
///
/// In the symmetric design the fusion increments before t_1 are S = 2 mu Z / var,
/// zero mean with variance 4 mu^2 / var, and the fusion statistic before slot k
/// is treated as an unconditioned Gaussian walk F_{k-1} ~ N(0, (k-1) Var S).
/// Term k is
///   int_0^{2 beta} P[S_k < -c] f_{F_{k-1}}(-beta + c) dc * R_k * P(t_1 > k),
/// with R_k = max(0, 1 - 2 P[F_{k-1} < -beta]) for the lower bound (reflection
/// inequality) and R_k = P[F_{k-1} > -beta] for the upper bound. The series stops
/// once P(t_1 > k) < truncation_eps.
inline PfaBound pfa_bounds(const std::vector<FirstPassageSpec>& fps, const FusionConfig& fusion,
                           const PfaBoundOptions& opt = {}) {
  if (!fusion.symmetric()) throw ConfigError("pfa_bounds: unsupported asymmetric fusion configuration");
  if (!(opt.truncation_eps > 0.0 && opt.truncation_eps < 1.0))
    throw std::invalid_argument("pfa_bounds: truncation_eps must be in (0,1)");
  if (fps.empty()) throw std::invalid_argument("pfa_bounds: need at least one node");
  const double beta = fusion.beta1;
  const double scale = (fusion.mu1 - fusion.mu0) / fusion.mac_noise.variance;  // S = scale * Z when silent
  const double inc_var = scale * scale * fusion.mac_noise.variance;
  const double inc_sd = std::sqrt(inc_var);

  PfaBound out;
  for (int k = 1; k <= opt.max_terms; ++k) {
    const double tail = first_latch_survival(fps, static_cast<double>(k));
    if (tail < opt.truncation_eps) break;
    double cross = 0.0;
    double lower_factor = 1.0;
    double upper_factor = 1.0;
    if (k == 1) {
      cross = normal_cdf(-beta / inc_sd);
    } else {
      const double prev_var = (k - 1) * inc_var;
      cross = detail::crossing_integral(beta, 0.0, inc_var, 0.0, prev_var);
      const double below = normal_cdf(-beta / std::sqrt(prev_var));
      lower_factor = std::max(0.0, 1.0 - 2.0 * below);
      upper_factor = 1.0 - below;
    }
    out.lower += cross * lower_factor * tail;
    out.upper += cross * upper_factor * tail;
    out.terms_used = k;
  }
  out.lower = std::clamp(out.lower, 0.0, 1.0);
  out.upper = std::clamp(out.upper, out.lower, 1.0);

  if (opt.include_second_term && fps.size() >= 2) {
    // Between t_1 and t_2 one node transmits, giving drift delta_1 toward the
    // correct decision. F at t_1 is taken as N(0, E[t_1] Var S); the gap t_2 - t_1
    // uses the remaining nodes' survival conditioned on exceeding E[t_1].
    const double delta1 = std::abs(fusion_drift(1, 1.0, fusion));
    double t1_mean = order_stat_mean_heterogeneous(fps, 1);
    t1_mean = std::max(t1_mean, 0.0);
    std::vector<double> first_weight(fps.size(), 0.0);
    {
      double total = 0.0;
      for (std::size_t l = 0; l < fps.size(); ++l) {
        first_weight[l] = detail::integrate(
            [&](double x) {
              double others = 1.0;
              for (std::size_t j = 0; j < fps.size(); ++j)
                if (j != l) others *= fps[j].sf(x);
              return normal_pdf((x - fps[l].mean) / fps[l].stddev()) / fps[l].stddev() * others;
            },
            fps[l].mean - 12.0 * fps[l].stddev(), fps[l].mean + 12.0 * fps[l].stddev());
        total += first_weight[l];
      }
      for (auto& w : first_weight) w /= total;
    }
    auto gap_survival = [&](double m) {
      double s = 0.0;
      for (std::size_t l = 0; l < fps.size(); ++l) {
        double prod = 1.0;
        for (std::size_t j = 0; j < fps.size(); ++j)
          if (j != l) prod *= fps[j].sf(t1_mean + m) / std::max(fps[j].sf(t1_mean), 1e-300);
        s += first_weight[l] * prod;
      }
      return s;
    };
    double second = 0.0;
    for (int m = 1; m <= opt.max_terms; ++m) {
      const double tail = gap_survival(static_cast<double>(m));
      if (tail < opt.truncation_eps) break;
      const double prev_mean = delta1 * (m - 1);
      const double prev_var = (t1_mean + (m - 1)) * inc_var;
      if (!(prev_var > 0.0)) continue;
      const double cross = detail::crossing_integral(beta, delta1, inc_var, prev_mean, prev_var);
      const double below = normal_cdf((-beta - prev_mean) / std::sqrt(prev_var));
      second += cross * std::max(0.0, 1.0 - 2.0 * below) * tail;
    }
    out.second_term = std::clamp(second, 0.0, 1.0);
  }
  return out;
}

inline PfaBound pfa_bounds(const ScenarioSpec& scenario, const LocalParams& local, const FusionConfig& fusion,
                           const PfaBoundOptions& opt = {}) {
  const auto s = symmetric_setup(scenario, local, fusion);
  return pfa_bounds(s.first_passage, fusion, opt);
}

/// Wald threshold ln((1 - p) / p) for a symmetric SPRT with error p.
inline double wald_threshold(double target_error) {
  if (!(target_error > 0.0 && target_error < 1.0))
    throw std::invalid_argument("wald_threshold: target error must be in (0,1)");
  return std::log((1.0 - target_error) / target_error);
}

}  // namespace dualsprt
