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
#include <cstdint>
#include <optional>
#include <vector>

#include "uwbtrade/analytic_bep.hpp"
#include "uwbtrade/errors.hpp"
#include "uwbtrade/jitter_stats.hpp"
#include "uwbtrade/mc_engine.hpp"
#include "uwbtrade/pulse_model.hpp"
#include "uwbtrade/rng.hpp"

namespace uwbtrade {

struct Factorization {
  int frames_per_symbol = 1;  // N_f
  int chips_per_frame = 1;    // N_c

  friend bool operator==(const Factorization&, const Factorization&) = default;
};

/// (N_f, N / N_f) for N_f = 1, 2, 4, ... up to N, keeping N_c >= min_chips.
inline std::vector<Factorization> power_of_two_factorizations(int total_gain, int min_chips = 1) {
  if (total_gain < 1) throw ConfigError("power_of_two_factorizations: N must be positive");
  std::vector<Factorization> out;
  for (int nf = 1; nf <= total_gain; nf *= 2) {
    if (total_gain % nf != 0) break;
    const int nc = total_gain / nf;
    if (nc >= min_chips) out.push_back({nf, nc});
    if (nf > total_gain / 2) break;
  }
  return out;
}

/// Multipath link evaluated by a sweep. The Rake is MRC unless weights are given.
struct MultipathSpec {
  MultipathChannel channel;
  TemplateJitterCase template_case;
  std::optional<std::vector<double>> rake_weights;
};

struct SweepRequest {
  SystemConfig base_cfg;
  PulseModel pulse{0.125e-9, 0.25e-9};
  std::optional<MultipathSpec> multipath;
  std::vector<Factorization> factorizations;
  bool analytic = true;
  bool monte_carlo = false;
  std::int64_t mc_symbols = 0;
  std::uint64_t seed = 0;
  int num_partitions = 16;
  int workers = 1;
  int quadrature_nodes = kDefaultQuadratureNodes;
};

struct CurvePoint {
  Factorization split;
  std::optional<BepResult> analytic;
  std::optional<McEstimate> mc;
  std::uint64_t mc_seed = 0;
};

struct BepCurve {
  std::vector<CurvePoint> points;  // ascending N_f
  std::optional<Factorization> argmin_analytic;
  std::optional<Factorization> argmin_mc;
};

/// Rake used for a multipath sweep, with E-bar_v averaged over template jitter.
inline RakeWeights resolve_rake(const PulseModel& pulse, const MultipathSpec& mp) {
  if (!mp.rake_weights) return make_mrc_rake(pulse, mp.channel, mp.template_case);
  if (mp.rake_weights->size() != mp.channel.paths()) {
    throw ConfigError("RakeWeights: one weight per channel path is required");
  }
  RakeWeights rake;
  rake.weights = *mp.rake_weights;
  rake.template_energy =
      expected_template_energy(pulse, mp.channel, rake.weights, mp.template_case);
  return rake;
}

/// Analytic BEP for one configuration. Uncoded links with two users use the
/// two-user expression; larger uncoded systems use the equal-energy forms.
inline BepResult analytic_bep(const SystemConfig& cfg, const JitterMoments& moments) {
  if (cfg.coding == Coding::coded) return bep_coded_awgn(cfg, moments);
  if (cfg.sync == Sync::symbol) {
    if (cfg.num_users() == 2) return bep_uncoded_two_user(cfg, moments);
    return bep_uncoded_symbol_sync(cfg, moments);
  }
  return bep_uncoded_chip_sync(cfg, moments);
}

namespace detail {

inline std::optional<Factorization> argmin(const std::vector<CurvePoint>& pts, bool use_mc) {
  std::optional<Factorization> best;
  double best_value = 0.0;
  for (const auto& p : pts) {
    std::optional<double> v;
    if (use_mc && p.mc) v = p.mc->bep_hat;
    if (!use_mc && p.analytic) v = p.analytic->bep;
    if (!v) continue;
    // Points ascend in N_f, so <= keeps the larger N_f on ties.
    if (!best || *v <= best_value) {
      best = p.split;
      best_value = *v;
    }
  }
  return best;
}

}  // namespace detail

/// Evaluates every factorization with the requested evaluators. The request
/// order of factorizations does not matter; points come back ascending in N_f.
inline BepCurve sweep(const SweepRequest& req) {
  if (req.factorizations.empty()) throw ConfigError("SweepRequest: factorization list is empty");
  if (!req.analytic && !req.monte_carlo) {
    throw ConfigError("SweepRequest: at least one evaluator is required");
  }
  if (req.monte_carlo && req.mc_symbols < 1) {
    throw ConfigError("SweepRequest: mc_symbols must be >= 1");
  }
  std::vector<Factorization> splits = req.factorizations;
  std::sort(splits.begin(), splits.end(), [](const auto& a, const auto& b) {
    return a.frames_per_symbol < b.frames_per_symbol;
  });
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const auto& f = splits[i];
    if (static_cast<long long>(f.frames_per_symbol) * f.chips_per_frame != req.base_cfg.total_gain) {
      throw ConfigError("SweepRequest: N = N_f * N_c violated");
    }
    if (i > 0 && splits[i - 1].frames_per_symbol == f.frames_per_symbol) {
      throw ConfigError("SweepRequest: N_f values must be distinct");
    }
  }
  req.base_cfg.with_frames(splits.front().frames_per_symbol).validate();
  validate_jitter(req.base_cfg.tx_jitter, req.pulse);

  std::optional<RakeWeights> rake;
  std::optional<MultipathExpectations> expectations;
  std::optional<JitterMoments> moments;
  if (req.multipath) {
    rake = resolve_rake(req.pulse, *req.multipath);
    if (req.analytic) {
      if (req.base_cfg.coding != Coding::coded) {
        throw UnsupportedAnalytic("sweep: uncoded multipath has no closed form; use Monte Carlo");
      }
      if (req.multipath->template_case.id == TemplateCase::case3) {
        throw UnsupportedAnalytic("sweep: case3 has no closed form; use Monte Carlo");
      }
      expectations = multipath_expectations(req.base_cfg.tx_jitter, req.pulse,
                                            req.multipath->channel, *rake,
                                            req.multipath->template_case, req.quadrature_nodes);
    }
  } else if (req.analytic) {
    moments = compute_moments(req.base_cfg.tx_jitter, req.pulse, req.quadrature_nodes);
  }

  BepCurve curve;
  for (const auto& split : splits) {
    const SystemConfig cfg = req.base_cfg.with_frames(split.frames_per_symbol);
    CurvePoint pt;
    pt.split = split;
    if (req.analytic) {
      if (req.multipath) {
        pt.analytic = bep_multipath_coded(cfg, req.multipath->channel, *rake,
                                          req.multipath->template_case, *expectations);
      } else {
        pt.analytic = analytic_bep(cfg, *moments);
      }
    }
    if (req.monte_carlo) {
      TrialPlan plan;
      plan.cfg = cfg;
      plan.pulse = req.pulse;
      if (req.multipath) {
        plan.multipath = MultipathSetup{req.multipath->channel, *rake, req.multipath->template_case};
      }
      plan.num_symbols = req.mc_symbols;
      plan.seed = derive_seed(req.seed, static_cast<std::uint64_t>(split.frames_per_symbol));
      plan.num_partitions = req.num_partitions;
      pt.mc_seed = plan.seed;
      pt.mc = run(plan, req.workers);
    }
    curve.points.push_back(std::move(pt));
  }
  curve.argmin_analytic = detail::argmin(curve.points, false);
  curve.argmin_mc = detail::argmin(curve.points, true);
  return curve;
}

}  // namespace uwbtrade
