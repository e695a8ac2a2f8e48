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
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "uwbtrade/analytic_bep.hpp"
#include "uwbtrade/errors.hpp"
#include "uwbtrade/jitter_stats.hpp"
#include "uwbtrade/pulse_model.hpp"
#include "uwbtrade/rng.hpp"

namespace uwbtrade {

/// Channel, Rake and template-jitter model for a multipath run.
struct MultipathSetup {
  MultipathChannel channel;
  RakeWeights rake;
  TemplateJitterCase template_case;
};

struct TrialPlan {
  SystemConfig cfg;
  PulseModel pulse{0.125e-9, 0.25e-9};
  std::optional<MultipathSetup> multipath;
  std::int64_t num_symbols = 0;
  std::uint64_t seed = 0;
  int num_partitions = 16;
  int symbols_per_block = 0;  // 0 picks a block of about kFramesPerBlock frames

  static constexpr int kFramesPerBlock = 8192;

  /// Chip-synchronous multiuser links draw Delta_2 per block, so each block
  /// holds one symbol and symbols stay independent.
  int block_symbols() const noexcept {
    if (symbols_per_block > 0) return symbols_per_block;
    if (cfg.sync == Sync::chip && cfg.num_users() > 1) return 1;
    return std::max(1, kFramesPerBlock / cfg.frames_per_symbol);
  }

  void validate() const {
    cfg.validate();
    validate_jitter(cfg.tx_jitter, pulse);
    if (num_symbols < 1) throw ConfigError("TrialPlan: num_symbols must be >= 1");
    if (num_partitions < 1) throw ConfigError("TrialPlan: num_partitions must be >= 1");
    if (symbols_per_block < 0) throw ConfigError("TrialPlan: symbols_per_block must be >= 0");
    if (multipath) {
      const auto& mp = *multipath;
      if (mp.rake.fingers() != mp.channel.paths()) {
        throw ConfigError("RakeWeights: one weight per channel path is required");
      }
      if (mp.channel.span_chips > cfg.chips_per_frame) {
        throw ConfigError("TrialPlan: M <= N_c violated (delay spread exceeds the frame)");
      }
      validate_jitter(mp.template_case.spec, pulse);
    }
  }
};

struct McEstimate {
  std::int64_t errors = 0;
  std::int64_t symbols = 0;
  double bep_hat = 0.0;
  double std_err = 0.0;

  static McEstimate from_counts(std::int64_t errors, std::int64_t symbols) {
    McEstimate e;
    e.errors = errors;
    e.symbols = symbols;
    if (symbols > 0) {
      e.bep_hat = static_cast<double>(errors) / static_cast<double>(symbols);
      e.std_err = std::sqrt(e.bep_hat * (1.0 - e.bep_hat) / static_cast<double>(symbols));
    }
    return e;
  }
};

/// Per-frame draws of one user over a block, including guard frames.
/// Entry f corresponds to absolute frame f - guard_frames.
struct UserFrames {
  std::vector<std::int64_t> position;  // j N_c + c_j + Delta_2, in chips
  std::vector<int> th_code;            // c_j
  std::vector<int> polarity;           // d_j
  std::vector<int> sign;               // d_j b_floor(j/N_f)
  std::vector<double> jitter;          // eps_j
  std::vector<int> bits;               // b, entry s is symbol s + first_symbol
  std::int64_t first_symbol = 0;
  std::int64_t offset_chips = 0;  // Delta_2
};

/// All randomness of a block of symbols. Symbols 0..num_symbols-1 are
/// evaluated; the guard frames on both sides carry real pulses.
struct SymbolDraw {
  int num_symbols = 0;
  int frames_per_symbol = 1;
  int guard_frames = 0;
  std::vector<UserFrames> users;  // users[0] is the user of interest
  // Template finger jitter: per frame and finger (case1), per frame (case2)
  // or per finger for the whole block (case3). Empty without multipath.
  std::vector<double> template_jitter;
  std::vector<double> noise;  // standard normal per symbol

  std::size_t frame_slot(std::int64_t absolute_frame) const noexcept {
    return static_cast<std::size_t>(absolute_frame + guard_frames);
  }
  int bit(std::size_t user, std::int64_t symbol) const noexcept {
    const UserFrames& u = users[user];
    return u.bits[static_cast<std::size_t>(symbol - u.first_symbol)];
  }
};

/// Decision statistic of one symbol split into its physical parts.
/// `self_interference` is the user-of-interest contribution from frames other
/// than the matched one (IFI in multipath). `mai` holds the unscaled a^(k).
struct SymbolComponents {
  int bit = 1;
  double desired = 0.0;
  double self_interference = 0.0;
  double noise = 0.0;
  double total = 0.0;
  std::vector<double> mai;
  std::vector<int> interferer_bits;
  std::vector<std::size_t> cursor;  // scratch: per-user frame cursor

  int decision() const noexcept { return total >= 0.0 ? 1 : -1; }
};

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) noexcept {
  const std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) noexcept {
  return -floor_div(-a, b);
}

// phi_uv(x) for a template with one jitter shared by all fingers, as
// sum_i coef_i R(delta_i + x - ehat) over merged delay differences.
struct CompositeKernel {
  std::vector<double> delta;
  std::vector<double> coef;

  CompositeKernel() = default;
  CompositeKernel(const PulseModel& pulse, const MultipathChannel& ch, const RakeWeights& rake) {
    std::vector<std::pair<double, double>> terms;
    for (std::size_t p = 0; p < rake.fingers(); ++p) {
      if (rake.weights[p] == 0.0) continue;
      for (std::size_t l = 0; l < ch.paths(); ++l) {
        if (ch.gains[l] == 0.0) continue;
        terms.emplace_back(ch.delays[l] - ch.delays[p], ch.gains[l] * rake.weights[p]);
      }
    }
    std::sort(terms.begin(), terms.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const double tol = 1e-9 * pulse.chip_duration();
    for (const auto& [d, c] : terms) {
      if (!delta.empty() && d - delta.back() <= tol) {
        coef.back() += c;
      } else {
        delta.push_back(d);
        coef.push_back(c);
      }
    }
  }

  double operator()(const PulseModel& pulse, double x) const {
    const double reach = pulse.cutoff();
    auto it = std::lower_bound(delta.begin(), delta.end(), -x - reach);
    double acc = 0.0;
    for (; it != delta.end() && *it < -x + reach; ++it) {
      const auto i = static_cast<std::size_t>(it - delta.begin());
      acc += coef[i] * autocorr(pulse, *it + x);
    }
    return acc;
  }
};

}  // namespace detail

/// Correlation-level simulator for one TrialPlan.
class Simulator {
 public:
  explicit Simulator(TrialPlan plan) : plan_(std::move(plan)) {
    plan_.validate();
    const SystemConfig& cfg = plan_.cfg;
    const PulseModel& pulse = plan_.pulse;
    const double tc = pulse.chip_duration();
    double reach = pulse.cutoff() + support_radius(cfg.tx_jitter, pulse);
    if (plan_.multipath) {
      const auto& mp = *plan_.multipath;
      reach += mp.channel.delay_spread() + support_radius(mp.template_case.spec, pulse);
      fingers_ = static_cast<int>(mp.rake.fingers());
      shared_template_ = mp.template_case.id == TemplateCase::case2 ||
                         std::holds_alternative<NoJitter>(mp.template_case.spec);
      if (shared_template_) kernel_ = detail::CompositeKernel(pulse, mp.channel, mp.rake);
    }
    reach_chips_ = static_cast<std::int64_t>(std::ceil(reach / tc));
    const std::int64_t nc = cfg.chips_per_frame;
    const std::int64_t max_offset = cfg.sync == Sync::chip ? cfg.total_gain - 1 : 0;
    guard_frames_ = static_cast<int>(detail::ceil_div(reach_chips_ + max_offset + nc - 1, nc) + 1);
    const double nf = cfg.frames_per_symbol;
    double noise_var = nf * cfg.noise_psd;
    if (plan_.multipath) noise_var *= plan_.multipath->rake.template_energy;
    noise_sd_ = std::sqrt(noise_var);
  }

  const TrialPlan& plan() const noexcept { return plan_; }
  int guard_frames() const noexcept { return guard_frames_; }

  /// Draws every random quantity for a block of `symbols` symbols.
  void draw(StreamSet& streams, int symbols, SymbolDraw& d) const {
    const SystemConfig& cfg = plan_.cfg;
    const int nf = cfg.frames_per_symbol;
    const int nc = cfg.chips_per_frame;
    const int nu = cfg.num_users();
    const int guard = guard_frames_;
    const std::size_t frames = static_cast<std::size_t>(symbols) * nf + 2 * guard;
    const std::int64_t first_symbol = detail::floor_div(-guard, nf);
    const std::int64_t last_symbol = detail::floor_div(static_cast<std::int64_t>(symbols) * nf + guard - 1, nf);
    const auto nsym = static_cast<std::size_t>(last_symbol - first_symbol + 1);
    d.num_symbols = symbols;
    d.frames_per_symbol = nf;
    d.guard_frames = guard;
    d.users.resize(static_cast<std::size_t>(nu));

    SignSource bit_src(streams[Stream::bits]);
    SignSource pol_src(streams[Stream::polarity]);
    Engine& th_eng = streams[Stream::time_hopping];
    Engine& jit_eng = streams[Stream::tx_jitter];
    Engine& off_eng = streams[Stream::user_offset];
    for (int k = 0; k < nu; ++k) {
      UserFrames& u = d.users[static_cast<std::size_t>(k)];
      u.offset_chips = (k > 0 && cfg.sync == Sync::chip)
                           ? static_cast<std::int64_t>(uniform_below(off_eng, cfg.total_gain))
                           : 0;
      u.first_symbol = first_symbol;
      u.th_code.resize(frames);
      u.position.resize(frames);
      u.polarity.resize(frames);
      u.sign.resize(frames);
      u.jitter.resize(frames);
      u.bits.resize(nsym);
      std::int64_t pos = -static_cast<std::int64_t>(guard) * nc + u.offset_chips;
      for (std::size_t f = 0; f < frames; ++f, pos += nc) {
        u.th_code[f] = static_cast<int>(uniform_below(th_eng, static_cast<std::uint64_t>(nc)));
        u.position[f] = pos + u.th_code[f];
      }
      for (std::size_t f = 0; f < frames; ++f) {
        u.polarity[f] = cfg.coding == Coding::coded ? pol_src.next() : 1;
      }
      for (std::size_t s = 0; s < nsym; ++s) u.bits[s] = bit_src.next();
      std::int64_t frame = -guard;
      for (std::size_t f = 0; f < frames; ++f, ++frame) {
        u.sign[f] = u.polarity[f] * u.bits[static_cast<std::size_t>(detail::floor_div(frame, nf) - first_symbol)];
      }
      fill_jitter(cfg.tx_jitter, plan_.pulse, jit_eng, u.jitter);
    }

    d.template_jitter.clear();
    if (plan_.multipath) {
      const auto& tcase = plan_.multipath->template_case;
      std::size_t count = 0;
      const std::size_t tframes = static_cast<std::size_t>(symbols) * nf;
      switch (tcase.id) {
        case TemplateCase::case1: count = tframes * static_cast<std::size_t>(fingers_); break;
        case TemplateCase::case2: count = tframes; break;
        case TemplateCase::case3: count = static_cast<std::size_t>(fingers_); break;
      }
      d.template_jitter.resize(count);
      fill_jitter(tcase.spec, plan_.pulse, streams[Stream::template_jitter], d.template_jitter);
    }

    d.noise.resize(static_cast<std::size_t>(symbols));
    Engine& noise_eng = streams[Stream::noise];
    for (double& n : d.noise) n = standard_normal(noise_eng);
  }

  /// Decision statistic of symbol `i` of a drawn block.
  void evaluate(const SymbolDraw& d, int i, SymbolComponents& out) const {
    const SystemConfig& cfg = plan_.cfg;
    const PulseModel& pulse = plan_.pulse;
    const int nf = cfg.frames_per_symbol;
    const std::int64_t nc = cfg.chips_per_frame;
    const std::size_t nu = d.users.size();
    const double tc = pulse.chip_duration();
    const std::int64_t reach = reach_chips_;

    out.bit = d.bit(0, i);
    out.mai.assign(nu - 1, 0.0);
    out.interferer_bits.resize(nu - 1);
    for (std::size_t k = 1; k < nu; ++k) out.interferer_bits[k - 1] = d.bit(k, i);

    // Positions increase strictly with the frame index, so one cursor per user
    // tracks the first frame within reach of the current template pulse.
    const std::int64_t m_begin = static_cast<std::int64_t>(i) * nf;
    const std::int64_t m_end = m_begin + nf;
    out.cursor.resize(nu);
    for (std::size_t k = 0; k < nu; ++k) {
      const std::int64_t lo = detail::ceil_div(-reach - d.users[k].offset_chips - (nc - 1), nc);
      out.cursor[k] = d.frame_slot(m_begin + lo);
    }

    double desired = 0.0;
    double self = 0.0;
    const UserFrames& u1 = d.users[0];
    for (std::int64_t m = m_begin; m < m_end; ++m) {
      const std::size_t fm = d.frame_slot(m);
      const std::int64_t p = u1.position[fm];
      const int dm = u1.polarity[fm];
      for (std::size_t k = 0; k < nu; ++k) {
        const UserFrames& u = d.users[k];
        const std::int64_t* pos = u.position.data();
        const int* sign = u.sign.data();
        const double* jit = u.jitter.data();
        std::size_t fj = out.cursor[k];
        while (pos[fj] < p - reach) ++fj;
        out.cursor[k] = fj;
        double acc = 0.0;
        for (; pos[fj] <= p + reach; ++fj) {
          const double x = static_cast<double>(pos[fj] - p) * tc + jit[fj];
          const double c = dm * sign[fj] * correlate(d, m, x);
          if (k == 0 && fj == fm) {
            desired += c;
          } else {
            acc += c;
          }
        }
        if (k == 0) {
          self += acc;
        } else {
          out.mai[k - 1] += acc;
        }
      }
    }

    const double scale1 = std::sqrt(cfg.desired_energy / nf);
    out.desired = scale1 * desired;
    out.self_interference = scale1 * self;
    out.noise = noise_sd_ * d.noise[static_cast<std::size_t>(i)];
    double total = out.desired + out.self_interference + out.noise;
    for (std::size_t k = 1; k < nu; ++k) {
      total += std::sqrt(cfg.interferer_energies[k - 1] / nf) * out.mai[k - 1];
    }
    out.total = total;
  }

  /// Bit errors over `symbols` symbols of partition `partition`.
  std::int64_t count_errors(std::uint64_t partition, std::int64_t symbols) const {
    StreamSet streams(plan_.seed, partition);
    SymbolDraw d;
    SymbolComponents c;
    const int block = plan_.block_symbols();
    std::int64_t errors = 0;
    for (std::int64_t done = 0; done < symbols;) {
      const int n = static_cast<int>(std::min<std::int64_t>(block, symbols - done));
      draw(streams, n, d);
      for (int i = 0; i < n; ++i) {
        evaluate(d, i, c);
        if (c.decision() != c.bit) ++errors;
      }
      done += n;
    }
    return errors;
  }

  /// Symbols assigned to a partition; the first num_symbols % P get one extra.
  std::int64_t partition_symbols(int partition) const noexcept {
    const std::int64_t p = plan_.num_partitions;
    return plan_.num_symbols / p + (partition < plan_.num_symbols % p ? 1 : 0);
  }

 private:
  // Correlation of template frame m with a received pulse at offset x.
  double correlate(const SymbolDraw& d, std::int64_t m, double x) const {
    const PulseModel& pulse = plan_.pulse;
    if (!plan_.multipath) return autocorr(pulse, x);
    const auto& mp = *plan_.multipath;
    const auto& tj = d.template_jitter;
    const auto frame = static_cast<std::size_t>(m);
    if (shared_template_) {
      double ehat = 0.0;
      if (mp.template_case.id == TemplateCase::case2) {
        ehat = tj[frame];
      } else {
        ehat = jitter_mean(mp.template_case.spec);
      }
      return kernel_(pulse, x - ehat);
    }
    const auto fingers = static_cast<std::size_t>(fingers_);
    std::span<const double> ehat = mp.template_case.id == TemplateCase::case1
                                       ? std::span<const double>(tj).subspan(frame * fingers, fingers)
                                       : std::span<const double>(tj);
    return cross_corr_uv(pulse, mp.channel, mp.rake, ehat, x);
  }

  TrialPlan plan_;
  std::int64_t reach_chips_ = 0;
  int guard_frames_ = 0;
  int fingers_ = 0;
  bool shared_template_ = false;
  detail::CompositeKernel kernel_;
  double noise_sd_ = 0.0;
};

/// One-symbol convenience: MF output of symbol `i` in an AWGN draw.
inline SymbolComponents mf_output_awgn(const SymbolDraw& d, int i, const TrialPlan& plan) {
  if (plan.multipath) throw ConfigError("mf_output_awgn: plan has a multipath channel");
  Simulator sim(plan);
  SymbolComponents c;
  sim.evaluate(d, i, c);
  return c;
}

/// One-symbol convenience: Rake output of symbol `i` in a multipath draw.
inline SymbolComponents rake_output_multipath(const SymbolDraw& d, int i, const TrialPlan& plan) {
  if (!plan.multipath) throw ConfigError("rake_output_multipath: plan has no multipath channel");
  Simulator sim(plan);
  SymbolComponents c;
  sim.evaluate(d, i, c);
  return c;
}

/// Error-counting Monte Carlo. The result depends only on the plan; `workers`
/// only sets how many threads process the fixed set of partitions.
inline McEstimate run(const TrialPlan& plan, int workers = 1) {
  const Simulator sim(plan);
  const int parts = plan.num_partitions;
  std::vector<std::int64_t> errors(static_cast<std::size_t>(parts), 0);
  auto work = [&](int p) {
    errors[static_cast<std::size_t>(p)] =
        sim.count_errors(static_cast<std::uint64_t>(p), sim.partition_symbols(p));
  };
  workers = std::clamp(workers, 1, parts);
  if (workers == 1) {
    for (int p = 0; p < parts; ++p) work(p);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int p = next++; p < parts; p = next++) work(p);
        } catch (...) {
          failures[static_cast<std::size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
      if (f) std::rethrow_exception(f);
    }
  }
  std::int64_t total = 0;
  for (auto e : errors) total += e;
  return McEstimate::from_counts(total, plan.num_symbols);
}

}  // namespace uwbtrade
