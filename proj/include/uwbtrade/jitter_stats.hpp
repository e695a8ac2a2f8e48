// Copyright 2026 The uwbtrade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "uwbtrade/errors.hpp"
#include "uwbtrade/pulse_model.hpp"
#include "uwbtrade/quadrature.hpp"
#include "uwbtrade/rng.hpp"

namespace uwbtrade {

// ---------------------------------------------------------------------------
// Jitter families
// ---------------------------------------------------------------------------

/// Degenerate jitter: every pulse is offset by exactly `mean`.
struct NoJitter {
  double mean = 0.0;
};

/// Uniform on [mean - half_width, mean + half_width].
struct UniformJitter {
  double half_width = 0.0;
  double mean = 0.0;
};

/// Gaussian truncated to [mean - t, mean + t] and renormalized. When
/// `truncation` is unset, t = min(3.999 std_dev, 0.999 T_c).
struct TruncatedGaussianJitter {
  double std_dev = 0.0;
  double mean = 0.0;
  std::optional<double> truncation;
};

using JitterSpec = std::variant<NoJitter, UniformJitter, TruncatedGaussianJitter>;

inline constexpr int kDefaultQuadratureNodes = 128;

inline double jitter_mean(const JitterSpec& spec) {
  return std::visit([](const auto& s) { return s.mean; }, spec);
}

inline double truncation_bound(const TruncatedGaussianJitter& g, const PulseModel& pulse) {
  if (g.truncation) return *g.truncation;
  return std::min(3.999 * g.std_dev, 0.999 * pulse.chip_duration());
}

/// Largest |epsilon| the family can produce.
inline double support_radius(const JitterSpec& spec, const PulseModel& pulse) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NoJitter>) {
          return std::abs(s.mean);
        } else if constexpr (std::is_same_v<T, UniformJitter>) {
          return std::abs(s.mean) + s.half_width;
        } else {
          return std::abs(s.mean) + truncation_bound(s, pulse);
        }
      },
      spec);
}

inline void validate_jitter(const JitterSpec& spec, const PulseModel& pulse) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if (!std::isfinite(s.mean)) throw ConfigError("jitter: mean must be finite");
        if constexpr (std::is_same_v<T, UniformJitter>) {
          if (!(s.half_width > 0.0)) throw ConfigError("jitter: uniform half_width must be > 0");
        } else if constexpr (std::is_same_v<T, TruncatedGaussianJitter>) {
          if (!(s.std_dev > 0.0)) throw ConfigError("jitter: gaussian std must be > 0");
          if (s.truncation && !(*s.truncation > 0.0)) {
            throw ConfigError("jitter: gaussian truncation must be > 0");
          }
        }
      },
      spec);
  if (!(support_radius(spec, pulse) < pulse.chip_duration())) {
    throw ConfigError("jitter: support must lie strictly inside (-T_c, T_c)");
  }
}

inline std::string describe(const JitterSpec& spec) {
  std::ostringstream os;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NoJitter>) {
          os << "none";
        } else if constexpr (std::is_same_v<T, UniformJitter>) {
          os << "uniform(" << s.half_width << ")";
        } else {
          os << "truncated_gaussian(" << s.std_dev << ")";
        }
        if (s.mean != 0.0) os << "+" << s.mean;
      },
      spec);
  return os.str();
}

/// Draws one jitter value.
inline double sample_jitter(const JitterSpec& spec, const PulseModel& pulse, Engine& eng) {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NoJitter>) {
          return s.mean;
        } else if constexpr (std::is_same_v<T, UniformJitter>) {
          return s.mean + s.half_width * (2.0 * uniform01(eng) - 1.0);
        } else {
          const double t = truncation_bound(s, pulse);
          for (;;) {
            const double z = s.std_dev * standard_normal(eng);
            if (std::abs(z) <= t) return s.mean + z;
          }
        }
      },
      spec);
}

/// Fills `out` with independent draws; same sequence as repeated sample_jitter.
inline void fill_jitter(const JitterSpec& spec, const PulseModel& pulse, Engine& eng,
                        std::span<double> out) {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NoJitter>) {
          std::fill(out.begin(), out.end(), s.mean);
        } else if constexpr (std::is_same_v<T, UniformJitter>) {
          for (double& x : out) x = s.mean + s.half_width * (2.0 * uniform01(eng) - 1.0);
        } else {
          const double t = truncation_bound(s, pulse);
          for (double& x : out) {
            double z = 0.0;
            do {
              z = s.std_dev * standard_normal(eng);
            } while (std::abs(z) > t);
            x = s.mean + z;
          }
        }
      },
      spec);
}

// ---------------------------------------------------------------------------
// Discrete quadrature representation of a jitter density
// ---------------------------------------------------------------------------

/// Nodes and probability weights such that E{f(eps)} ~ sum_i weights[i] f(nodes[i]).
/// No node sits exactly at 0 unless the family is degenerate there.
struct JitterRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <class F>
  double expect(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

namespace detail {

// Gauss-Legendre on [lo, hi], split at 0 when 0 is interior.
template <class Density>
void append_split_rule(JitterRule& rule, double lo, double hi, int n, Density density) {
  const GaussLegendre gl = gauss_legendre(n);
  auto add = [&](double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int i = 0; i < n; ++i) {
      const double x = mid + half * gl.nodes[i];
      rule.nodes.push_back(x);
      rule.weights.push_back(half * gl.weights[i] * density(x));
    }
  };
  if (lo < 0.0 && hi > 0.0) {
    add(lo, 0.0);
    add(0.0, hi);
  } else {
    add(lo, hi);
  }
}

}  // namespace detail

inline JitterRule make_rule(const JitterSpec& spec, const PulseModel& pulse,
                            int nodes_per_interval = kDefaultQuadratureNodes) {
  validate_jitter(spec, pulse);
  JitterRule rule;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NoJitter>) {
          rule.nodes = {s.mean};
          rule.weights = {1.0};
        } else if constexpr (std::is_same_v<T, UniformJitter>) {
          const double density = 0.5 / s.half_width;
          detail::append_split_rule(rule, s.mean - s.half_width, s.mean + s.half_width,
                                    nodes_per_interval, [&](double) { return density; });
        } else {
          const double t = truncation_bound(s, pulse);
          const double inv_var = 1.0 / (s.std_dev * s.std_dev);
          detail::append_split_rule(rule, s.mean - t, s.mean + t, nodes_per_interval,
                                    [&](double x) {
                                      const double d = x - s.mean;
                                      return std::exp(-0.5 * d * d * inv_var);
                                    });
          double total = 0.0;
          for (double w : rule.weights) total += w;
          for (double& w : rule.weights) w /= total;
        }
      },
      spec);
  return rule;
}

/// Variance of the jitter itself (not of phi_w).
inline double jitter_variance(const JitterSpec& spec, const PulseModel& pulse) {
  const JitterRule rule = make_rule(spec, pulse);
  const double m = rule.expect([](double x) { return x; });
  return rule.expect([&](double x) { return (x - m) * (x - m); });
}

// ---------------------------------------------------------------------------
// AWGN jitter moments
// ---------------------------------------------------------------------------

/// Expectations of the pulse autocorrelation over one pulse's jitter:
///   mu     = E{R(eps)}                 var    = Var{R(eps)}
///   gamma1 = E{R(eps)} + E{R(T_c - |eps|)}
///   gamma2 = E{R^2(eps)} + E{R^2(T_c - |eps|)}
///   beta1  = 2 E{R(T_c-|eps|) R(eps)} - 2 E{R(T_c-|eps|)}^2
///            + 4 E{R(T_c+eps) 1[eps<0]} E{R(T_c-eps) 1[eps>0]}
///   beta2  = 2 E{R(T_c - |eps|)}^2
struct JitterMoments {
  double mu = 1.0;
  double var = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
};

inline JitterMoments compute_moments(const JitterRule& rule, const PulseModel& pulse) {
  const double tc = pulse.chip_duration();
  double mu = 0.0, e_edge = 0.0, e_sq = 0.0, e_edge_sq = 0.0, e_cross = 0.0;
  double left = 0.0, right = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i];
    const double w = rule.weights[i];
    const double r = autocorr(pulse, x);
    const double r_edge = autocorr(pulse, tc - std::abs(x));
    mu += w * r;
    e_edge += w * r_edge;
    e_sq += w * r * r;
    e_edge_sq += w * r_edge * r_edge;
    e_cross += w * r_edge * r;
    // One-sided partial-overlap integrals; the indicators are strict.
    if (x < 0.0) left += w * autocorr(pulse, tc + x);
    if (x > 0.0) right += w * autocorr(pulse, tc - x);
  }
  JitterMoments m;
  m.mu = mu;
  double var = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double d = autocorr(pulse, rule.nodes[i]) - mu;
    var += rule.weights[i] * d * d;
  }
  m.var = var;
  m.gamma1 = mu + e_edge;
  m.gamma2 = e_sq + e_edge_sq;
  m.beta1 = 2.0 * e_cross - 2.0 * e_edge * e_edge + 4.0 * left * right;
  m.beta2 = 2.0 * e_edge * e_edge;
  return m;
}

inline JitterMoments compute_moments(const JitterSpec& spec, const PulseModel& pulse,
                                     int nodes_per_interval = kDefaultQuadratureNodes) {
  return compute_moments(make_rule(spec, pulse, nodes_per_interval), pulse);
}

// ---------------------------------------------------------------------------
// Template jitter and multipath expectations
// ---------------------------------------------------------------------------

/// How Rake-template finger jitter is shared.
///   case1: i.i.d. across frames and fingers
///   case2: one value per frame shared by all fingers
///   case3: one value per finger shared by all frames
enum class TemplateCase { case1, case2, case3 };

struct TemplateJitterCase {
  TemplateCase id = TemplateCase::case2;
  JitterSpec spec = NoJitter{};
};

inline const char* to_string(TemplateCase c) {
  switch (c) {
    case TemplateCase::case1: return "case1";
    case TemplateCase::case2: return "case2";
    case TemplateCase::case3: return "case3";
  }
  return "?";
}

/// Mean template energy per frame, E-bar_v, averaged over finger jitter.
inline double expected_template_energy(const PulseModel& pulse, const MultipathChannel& channel,
                                       std::span<const double> weights,
                                       const TemplateJitterCase& tcase,
                                       int nodes_per_interval = kDefaultQuadratureNodes) {
  const std::size_t fingers = weights.size();
  if (tcase.id == TemplateCase::case2 || std::holds_alternative<NoJitter>(tcase.spec)) {
    const std::vector<double> zeros(fingers, 0.0);
    return template_energy(pulse, channel, weights, zeros);
  }
  const JitterRule rule = make_rule(tcase.spec, pulse, nodes_per_interval);
  double e = 0.0;
  for (std::size_t p = 0; p < fingers; ++p) {
    e += weights[p] * weights[p];
    for (std::size_t q = 0; q < fingers; ++q) {
      if (p == q || weights[p] * weights[q] == 0.0) continue;
      const double base = channel.delays[p] - channel.delays[q];
      double acc = 0.0;
      for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
        for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
          acc += rule.weights[a] * rule.weights[b] *
                 autocorr(pulse, base + rule.nodes[a] - rule.nodes[b]);
        }
      }
      e += weights[p] * weights[q] * acc;
    }
  }
  return e;
}

/// MRC Rake whose template energy is averaged over the given template jitter.
inline RakeWeights make_mrc_rake(const PulseModel& pulse, const MultipathChannel& channel,
                                 const TemplateJitterCase& tcase) {
  RakeWeights rake;
  rake.weights = channel.gains;
  rake.template_energy = expected_template_energy(pulse, channel, rake.weights, tcase);
  return rake;
}

/// Jitter functionals of phi_uv entering the multipath BEP:
///   mean_phi   = E{phi_uv(eps)}
///   var_phi    = Var{phi_uv(eps)}
///   sigma2_ifi = sum_{j=1}^{M} j E{[phi_uv(j T_c + eps_a) + phi_uv(-j T_c + eps_b)]^2}
///   sigma2_mai = sum_{j=-M}^{M} E{phi_uv(j T_c + eps)^2}
/// with eps, eps_a, eps_b independent transmitter jitters and the template
/// jitter of a single frame shared across each expectation.
struct MultipathExpectations {
  double mean_phi = 0.0;
  double var_phi = 0.0;
  double sigma2_ifi = 0.0;
  double sigma2_mai = 0.0;
};

namespace detail {

// phi_uv(shift + eps - ehat) decomposed into independent template groups:
// case1 has one group per finger (own jitter), case2 a single group holding
// all fingers (shared jitter). For group g, h_g(i, k) is its correlation at
// transmitter node i and template node k.
class ShiftGrid {
 public:
  struct Group {
    double weight;                // beta_g
    std::vector<double> row_mean;  // m_g(i) = E_k h_g(i, k)
    std::vector<double> row_var;   // Var_k h_g(i, k)
    std::vector<double> col_mean;  // G_g(k) = E_i h_g(i, k)
    double mean = 0.0;             // E_{i,k} h_g
  };

  ShiftGrid(const JitterRule& tx, const JitterRule& tmpl, std::size_t groups,
            const std::function<double(std::size_t, double)>& corr, std::span<const double> betas,
            double shift)
      : tx_(tx) {
    const std::size_t ni = tx.nodes.size();
    const std::size_t nk = tmpl.nodes.size();
    std::vector<double> h(nk);
    groups_.reserve(groups);
    for (std::size_t g = 0; g < groups; ++g) {
      Group grp{betas[g], std::vector<double>(ni), std::vector<double>(ni),
                std::vector<double>(nk, 0.0), 0.0};
      for (std::size_t i = 0; i < ni; ++i) {
        double m = 0.0;
        for (std::size_t k = 0; k < nk; ++k) {
          h[k] = corr(g, shift + tx.nodes[i] - tmpl.nodes[k]);
          m += tmpl.weights[k] * h[k];
          grp.col_mean[k] += tx.weights[i] * h[k];
        }
        double v = 0.0;
        for (std::size_t k = 0; k < nk; ++k) v += tmpl.weights[k] * (h[k] - m) * (h[k] - m);
        grp.row_mean[i] = m;
        grp.row_var[i] = v;
        grp.mean += tx.weights[i] * m;
      }
      groups_.push_back(std::move(grp));
    }
  }

  double mean() const {
    double acc = 0.0;
    for (const auto& g : groups_) acc += g.weight * g.mean;
    return acc;
  }

  double variance() const {
    const double mu = mean();
    double acc = 0.0;
    for (std::size_t i = 0; i < tx_.nodes.size(); ++i) {
      double cond_mean = 0.0;
      double cond_var = 0.0;
      for (const auto& g : groups_) {
        cond_mean += g.weight * g.row_mean[i];
        cond_var += g.weight * g.weight * g.row_var[i];
      }
      acc += tx_.weights[i] * ((cond_mean - mu) * (cond_mean - mu) + cond_var);
    }
    return acc;
  }

  double second_moment() const {
    const double mu = mean();
    return variance() + mu * mu;
  }

  // E{A B} where A, B use independent transmitter jitters and shared template jitter.
  static double cross_moment(const ShiftGrid& a, const ShiftGrid& b, const JitterRule& tmpl) {
    double ma = 0.0, mb = 0.0, corr = 0.0;
    for (std::size_t g = 0; g < a.groups_.size(); ++g) {
      const auto& ga = a.groups_[g];
      const auto& gb = b.groups_[g];
      ma += ga.weight * ga.mean;
      mb += gb.weight * gb.mean;
      double c = 0.0;
      for (std::size_t k = 0; k < tmpl.nodes.size(); ++k) {
        c += tmpl.weights[k] * ga.col_mean[k] * gb.col_mean[k];
      }
      corr += ga.weight * ga.weight * (c - ga.mean * gb.mean);
    }
    return ma * mb + corr;
  }

 private:
  const JitterRule& tx_;
  std::vector<Group> groups_;
};

}  // namespace detail

inline MultipathExpectations multipath_expectations(
    const JitterSpec& tx_jitter, const PulseModel& pulse, const MultipathChannel& channel,
    const RakeWeights& rake, const TemplateJitterCase& tcase,
    int nodes_per_interval = kDefaultQuadratureNodes) {
  if (tcase.id == TemplateCase::case3) {
    throw UnsupportedAnalytic(
        "multipath_expectations: template-jitter case3 has no closed form; use Monte Carlo");
  }
  if (rake.fingers() != channel.paths()) {
    throw ConfigError("RakeWeights: one weight per channel path is required");
  }
  const JitterRule tx = make_rule(tx_jitter, pulse, nodes_per_interval);
  const JitterRule tmpl = make_rule(tcase.spec, pulse, nodes_per_interval);

  // Group correlation at offset x = shift + eps - ehat.
  std::function<double(std::size_t, double)> corr;
  std::vector<double> betas;
  std::size_t groups = 0;
  const std::vector<double> zeros(rake.fingers(), 0.0);
  if (tcase.id == TemplateCase::case2) {
    groups = 1;
    betas = {1.0};
    corr = [&](std::size_t, double x) { return cross_corr_uv(pulse, channel, rake, zeros, x); };
  } else {
    groups = rake.fingers();
    betas = rake.weights;
    corr = [&](std::size_t p, double x) {
      return detail::path_sum(pulse, channel, x - channel.delays[p]);
    };
  }

  auto grid = [&](double shift) {
    return detail::ShiftGrid(tx, tmpl, groups, corr, betas, shift);
  };

  const double tc = pulse.chip_duration();
  const int span = channel.span_chips;
  MultipathExpectations out;
  {
    const auto g0 = grid(0.0);
    out.mean_phi = g0.mean();
    out.var_phi = g0.variance();
    out.sigma2_mai += g0.second_moment();
  }
  for (int j = 1; j <= span; ++j) {
    const auto plus = grid(j * tc);
    const auto minus = grid(-j * tc);
    const double e_pp = plus.second_moment();
    const double e_mm = minus.second_moment();
    out.sigma2_mai += e_pp + e_mm;
    out.sigma2_ifi +=
        j * (e_pp + e_mm + 2.0 * detail::ShiftGrid::cross_moment(plus, minus, tmpl));
  }
  return out;
}

}  // namespace uwbtrade
