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

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uwbtrade/errors.hpp"
#include "uwbtrade/jitter_stats.hpp"
#include "uwbtrade/pulse_model.hpp"

namespace uwbtrade {

enum class Coding { coded, uncoded };
enum class Sync { symbol, chip };

inline const char* to_string(Coding c) { return c == Coding::coded ? "coded" : "uncoded"; }
inline const char* to_string(Sync s) { return s == Sync::symbol ? "symbol" : "chip"; }

/// Link parameters for one (N_f, N_c) split of the total processing gain.
/// User 1 is the user of interest; interferer_energies holds E_2..E_{N_u}.
struct SystemConfig {
  int total_gain = 512;         // N
  int frames_per_symbol = 1;    // N_f
  int chips_per_frame = 512;    // N_c
  double desired_energy = 1.0;  // E_1
  std::vector<double> interferer_energies;
  double noise_psd = 0.0;  // sigma_n^2
  Coding coding = Coding::coded;
  Sync sync = Sync::symbol;
  JitterSpec tx_jitter = NoJitter{};

  int num_users() const noexcept { return static_cast<int>(interferer_energies.size()) + 1; }

  void validate() const {
    if (total_gain < 1) throw ConfigError("SystemConfig: N must be a positive integer");
    if (frames_per_symbol < 1) throw ConfigError("SystemConfig: N_f must be a positive integer");
    if (chips_per_frame < 1) throw ConfigError("SystemConfig: N_c must be a positive integer");
    if (static_cast<long long>(frames_per_symbol) * chips_per_frame != total_gain) {
      throw ConfigError("SystemConfig: N = N_f * N_c violated");
    }
    if (!(desired_energy >= 0.0)) throw ConfigError("SystemConfig: energies must be >= 0");
    for (double e : interferer_energies) {
      if (!(e >= 0.0)) throw ConfigError("SystemConfig: energies must be >= 0");
    }
    if (!(noise_psd >= 0.0)) throw ConfigError("SystemConfig: sigma_n^2 must be >= 0");
  }

  /// Same link with total gain split as (n_f, N / n_f).
  SystemConfig with_frames(int n_f) const {
    SystemConfig c = *this;
    if (n_f < 1 || total_gain % n_f != 0) {
      throw ConfigError("SystemConfig: N = N_f * N_c violated");
    }
    c.frames_per_symbol = n_f;
    c.chips_per_frame = total_gain / n_f;
    return c;
  }

  /// Common interferer energy, or nullopt when interferers differ.
  std::optional<double> equal_interferer_energy() const {
    if (interferer_energies.empty()) return 0.0;
    for (double e : interferer_energies) {
      if (e != interferer_energies.front()) return std::nullopt;
    }
    return interferer_energies.front();
  }
};

/// Squared-denominator contributions of a Q(numerator / denominator) approximation.
struct BepTerms {
  double jitter_term = 0.0;
  double mai_term = 0.0;
  double noise_term = 0.0;
  std::optional<double> ifi_term;

  double total() const noexcept {
    return jitter_term + mai_term + noise_term + ifi_term.value_or(0.0);
  }
};

struct BepResult {
  double bep = 0.5;
  BepTerms terms;
};

/// Gaussian tail Q(x) = P(Z > x).
inline double q_function(double x) noexcept { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

namespace detail {

inline double q_ratio(double numerator, double denominator_sq) {
  if (denominator_sq > 0.0) return q_function(numerator / std::sqrt(denominator_sq));
  if (numerator > 0.0) return 0.0;
  return numerator < 0.0 ? 1.0 : 0.5;
}

inline void require_equal_energies(const SystemConfig& cfg, const char* who) {
  if (!cfg.equal_interferer_energy()) {
    throw UnsupportedAnalytic(std::string(who) +
                              ": interferers must share one energy; use Monte Carlo");
  }
}

}  // namespace detail

/// Coded (polarity-randomized) AWGN link, either synchronization mode:
///   Q( sqrt(E1) mu / sqrt(E1 var / N_f + (1/N) sum_k E_k gamma2_k + sigma_n^2) ).
/// `interferers` holds one moment set per interferer, or a single shared set.
inline BepResult bep_coded_awgn(const SystemConfig& cfg, const JitterMoments& desired,
                                std::span<const JitterMoments> interferers) {
  cfg.validate();
  const auto n = static_cast<double>(cfg.total_gain);
  double mai = 0.0;
  for (std::size_t k = 0; k < cfg.interferer_energies.size(); ++k) {
    const JitterMoments& m = interferers.size() == 1 ? interferers[0] : interferers[k];
    mai += cfg.interferer_energies[k] * m.gamma2;
  }
  BepResult r;
  r.terms.jitter_term = cfg.desired_energy * desired.var / cfg.frames_per_symbol;
  r.terms.mai_term = mai / n;
  r.terms.noise_term = cfg.noise_psd;
  r.bep = detail::q_ratio(std::sqrt(cfg.desired_energy) * desired.mu, r.terms.total());
  return r;
}

inline BepResult bep_coded_awgn(const SystemConfig& cfg, const JitterMoments& moments) {
  return bep_coded_awgn(cfg, moments, std::span<const JitterMoments>(&moments, 1));
}

/// Symbol-synchronous uncoded MAI power,
///   (E (N_u - 1) / N_c) [gamma2 + (N_f - 1) gamma1^2 / N_c].
inline double sigma2_mai_symbol(const SystemConfig& cfg, double energy, const JitterMoments& m) {
  const double nc = cfg.chips_per_frame;
  const double nf = cfg.frames_per_symbol;
  return energy * (cfg.num_users() - 1) / nc * (m.gamma2 + (nf - 1.0) / nc * m.gamma1 * m.gamma1);
}

/// Chip-synchronous uncoded MAI power,
///   (E (N_u - 1) / N_c) [gamma2 + (N_f - 1)(2 N_c^2 (N_f - 1) + 1) / (3 N N_c^2) gamma1^2].
inline double sigma2_mai_chip(const SystemConfig& cfg, double energy, const JitterMoments& m) {
  const double nc = cfg.chips_per_frame;
  const double nf = cfg.frames_per_symbol;
  const double n = cfg.total_gain;
  const double coherent = (nf - 1.0) * (2.0 * nc * nc * (nf - 1.0) + 1.0) / (3.0 * n * nc * nc);
  return energy * (cfg.num_users() - 1) / nc * (m.gamma2 + coherent * m.gamma1 * m.gamma1);
}

/// Uncoded, symbol-synchronous, equal-energy interferers:
///   Q( sqrt(E1) mu / sqrt(E1 var N_c / N
///        + (N_u - 1) E (gamma2 / N + gamma1^2 / N_c^2 - gamma1^2 / (N N_c)) + sigma_n^2) ).
/// The beta1/beta2 corrections of the per-interferer distribution are not
/// part of this multiuser approximation.
inline BepResult bep_uncoded_symbol_sync(const SystemConfig& cfg, const JitterMoments& m) {
  cfg.validate();
  detail::require_equal_energies(cfg, "bep_uncoded_symbol_sync");
  const double e = *cfg.equal_interferer_energy();
  const double n = cfg.total_gain;
  const double nc = cfg.chips_per_frame;
  const double g1sq = m.gamma1 * m.gamma1;
  BepResult r;
  r.terms.jitter_term = cfg.desired_energy * m.var * nc / n;
  r.terms.mai_term =
      (cfg.num_users() - 1) * e * (m.gamma2 / n + g1sq / (nc * nc) - g1sq / (n * nc));
  r.terms.noise_term = cfg.noise_psd;
  r.bep = detail::q_ratio(std::sqrt(cfg.desired_energy) * m.mu, r.terms.total());
  return r;
}

/// Two-user uncoded symbol-synchronous link: average over the interferer bit
/// of Q((sqrt(E1) mu +/- sqrt(E2) gamma1 / N_c) / D), with
///   D^2 = E1 var N_c / N + (E2 / N)(gamma2 - gamma1^2 / N_c) + sigma_n^2.
inline BepResult bep_uncoded_two_user(const SystemConfig& cfg, const JitterMoments& desired,
                                      const JitterMoments& interferer) {
  cfg.validate();
  if (cfg.num_users() != 2) {
    throw UnsupportedAnalytic("bep_uncoded_two_user: exactly two users are required");
  }
  const double n = cfg.total_gain;
  const double nc = cfg.chips_per_frame;
  const double e2 = cfg.interferer_energies[0];
  BepResult r;
  r.terms.jitter_term = cfg.desired_energy * desired.var * nc / n;
  r.terms.mai_term = e2 / n * (interferer.gamma2 - interferer.gamma1 * interferer.gamma1 / nc);
  r.terms.noise_term = cfg.noise_psd;
  const double base = std::sqrt(cfg.desired_energy) * desired.mu;
  const double shift = std::sqrt(e2) / nc * interferer.gamma1;
  const double d2 = r.terms.total();
  r.bep = 0.5 * detail::q_ratio(base + shift, d2) + 0.5 * detail::q_ratio(base - shift, d2);
  return r;
}

inline BepResult bep_uncoded_two_user(const SystemConfig& cfg, const JitterMoments& m) {
  return bep_uncoded_two_user(cfg, m, m);
}

/// Uncoded, chip-synchronous, equal-energy interferers:
///   Q( sqrt(E1) mu / sqrt(E1 var N_c / N
///        + (N_u - 1) E [gamma2 / N + (N - N_c)(2 N_c (N - N_c) + 1) / (3 N^2 N_c^3) gamma1^2]
///        + sigma_n^2) ).
inline BepResult bep_uncoded_chip_sync(const SystemConfig& cfg, const JitterMoments& m) {
  cfg.validate();
  detail::require_equal_energies(cfg, "bep_uncoded_chip_sync");
  const double e = *cfg.equal_interferer_energy();
  const double n = cfg.total_gain;
  const double nc = cfg.chips_per_frame;
  const double coherent = (n - nc) * (2.0 * nc * (n - nc) + 1.0) / (3.0 * n * n * nc * nc * nc);
  BepResult r;
  r.terms.jitter_term = cfg.desired_energy * m.var * nc / n;
  r.terms.mai_term = (cfg.num_users() - 1) * e * (m.gamma2 / n + coherent * m.gamma1 * m.gamma1);
  r.terms.noise_term = cfg.noise_psd;
  r.bep = detail::q_ratio(std::sqrt(cfg.desired_energy) * m.mu, r.terms.total());
  return r;
}

/// Coded symbol-synchronous downlink over a multipath channel with a Rake:
///   Q( sqrt(E1) E{phi_uv} / sqrt((E1 N_c / N) Var{phi_uv} + (E1 / (N_c N)) sigma2_ifi
///        + (1/N) sum_k E_k sigma2_mai + E-bar_v sigma_n^2) ).
inline BepResult bep_multipath_coded(const SystemConfig& cfg, const MultipathChannel& channel,
                                     const RakeWeights& rake, const TemplateJitterCase& tcase,
                                     const MultipathExpectations& ex) {
  cfg.validate();
  if (cfg.coding != Coding::coded) {
    throw UnsupportedAnalytic("bep_multipath_coded: uncoded multipath has no closed form");
  }
  if (cfg.sync != Sync::symbol) {
    throw UnsupportedAnalytic("bep_multipath_coded: multipath analysis is symbol-synchronous");
  }
  if (tcase.id == TemplateCase::case3) {
    throw UnsupportedAnalytic("bep_multipath_coded: case3 has no closed form; use Monte Carlo");
  }
  if (channel.span_chips > cfg.chips_per_frame) {
    throw ConfigError("bep_multipath_coded: M <= N_c violated (delay spread exceeds the frame)");
  }
  const double n = cfg.total_gain;
  const double nc = cfg.chips_per_frame;
  double energy_sum = 0.0;
  for (double e : cfg.interferer_energies) energy_sum += e;
  BepResult r;
  r.terms.jitter_term = cfg.desired_energy * nc / n * ex.var_phi;
  r.terms.ifi_term = cfg.desired_energy / (nc * n) * ex.sigma2_ifi;
  r.terms.mai_term = energy_sum * ex.sigma2_mai / n;
  r.terms.noise_term = rake.template_energy * cfg.noise_psd;
  r.bep = detail::q_ratio(std::sqrt(cfg.desired_energy) * ex.mean_phi, r.terms.total());
  return r;
}

}  // namespace uwbtrade
