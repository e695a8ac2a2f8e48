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
#include <cstdint>
#include <string>
#include <vector>

#include "uwbtrade/analytic_bep.hpp"
#include "uwbtrade/errors.hpp"
#include "uwbtrade/mc_engine.hpp"
#include "uwbtrade/pulse_model.hpp"

namespace uwbtrade {

inline constexpr std::uint64_t kMaxEnumerationOutcomes = std::uint64_t{1} << 24;

/// Exact statistics of the unscaled MAI a^(2) of a two-user link, where b is
/// the interferer's bit in the evaluated symbol.
struct EnumerationResult {
  std::uint64_t outcomes = 0;
  double mai_mean_given_bit = 0.0;  // E{a | b = +1}
  double mai_var_given_bit = 0.0;   // Var{a | b = +1}
  double mai_mean = 0.0;
  double mai_var = 0.0;
  /// Error probability with Gaussian noise of variance N_f sigma_n^2, averaged
  /// over both bits of user 1. User 1's own neighbouring frames are not modelled.
  double exact_bep = 0.0;
};

/// Sums over every equiprobable outcome of TH codes, polarity codes, bits and
/// (chip sync) the offset Delta_2. Requires two users and NoJitter.
inline EnumerationResult enumerate_exact(const SystemConfig& cfg, const PulseModel& pulse) {
  cfg.validate();
  if (cfg.num_users() != 2) throw ConfigError("enumerate_exact: exactly two users are required");
  const auto* nj = std::get_if<NoJitter>(&cfg.tx_jitter);
  if (nj == nullptr) throw ConfigError("enumerate_exact: jitter family must be none");
  const double eps = nj->mean;
  validate_jitter(cfg.tx_jitter, pulse);

  const std::int64_t nf = cfg.frames_per_symbol;
  const std::int64_t nc = cfg.chips_per_frame;
  const std::int64_t n = cfg.total_gain;
  const double tc = pulse.chip_duration();
  const bool coded = cfg.coding == Coding::coded;
  const std::int64_t max_off = cfg.sync == Sync::chip ? n - 1 : 0;
  const auto reach =
      static_cast<std::int64_t>(std::ceil((pulse.cutoff() + std::abs(eps)) / tc));
  const std::int64_t jlo = detail::ceil_div(-reach - max_off - (nc - 1), nc);
  const std::int64_t jhi = detail::floor_div(n - 1 + reach, nc);
  const std::int64_t frames = jhi - jlo + 1;
  const std::int64_t slo = detail::floor_div(jlo, nf);
  const std::int64_t shi = detail::floor_div(jhi, nf);
  const std::int64_t symbols = shi - slo + 1;

  // Digits: user-1 TH codes, user-1 polarity, offset, interferer TH codes,
  // interferer polarity, interferer bits.
  std::vector<std::int64_t> radix;
  for (std::int64_t m = 0; m < nf; ++m) radix.push_back(nc);
  if (coded) {
    for (std::int64_t m = 0; m < nf; ++m) radix.push_back(2);
  }
  radix.push_back(max_off + 1);
  for (std::int64_t j = 0; j < frames; ++j) radix.push_back(nc);
  if (coded) {
    for (std::int64_t j = 0; j < frames; ++j) radix.push_back(2);
  }
  for (std::int64_t s = 0; s < symbols; ++s) radix.push_back(2);

  long double outcomes = 1.0L;
  for (auto r : radix) outcomes *= static_cast<long double>(r);
  if (outcomes > static_cast<long double>(kMaxEnumerationOutcomes)) {
    throw InstanceTooLarge("enumerate_exact: " + std::to_string(static_cast<double>(outcomes)) +
                           " outcomes exceed the 2^24 budget");
  }

  std::vector<double> table(static_cast<std::size_t>(2 * reach + 1));
  for (std::int64_t q = -reach; q <= reach; ++q) {
    table[static_cast<std::size_t>(q + reach)] = autocorr(pulse, static_cast<double>(q) * tc + eps);
  }

  const std::size_t u1_c = 0;
  const std::size_t u1_d = u1_c + static_cast<std::size_t>(nf);
  const std::size_t off = u1_d + (coded ? static_cast<std::size_t>(nf) : 0);
  const std::size_t u2_c = off + 1;
  const std::size_t u2_d = u2_c + static_cast<std::size_t>(frames);
  const std::size_t u2_b = u2_d + (coded ? static_cast<std::size_t>(frames) : 0);
  const std::size_t b0 = u2_b + static_cast<std::size_t>(-slo);

  const double desired = std::sqrt(cfg.desired_energy * nf) * table[static_cast<std::size_t>(reach)];
  const double scale2 = std::sqrt(cfg.interferer_energies[0] / nf);
  const double noise_sd = std::sqrt(nf * cfg.noise_psd);
  std::vector<std::int64_t> digit(radix.size(), 0);
  long double sum_pos = 0.0L, sq_pos = 0.0L, sum_all = 0.0L, sq_all = 0.0L, err = 0.0L;
  std::uint64_t count = 0, count_pos = 0;
  for (;;) {
    const std::int64_t delta2 = digit[off];
    double a = 0.0;
    for (std::int64_t m = 0; m < nf; ++m) {
      const std::int64_t p = m * nc + digit[u1_c + static_cast<std::size_t>(m)];
      const int dm = coded ? (digit[u1_d + static_cast<std::size_t>(m)] ? 1 : -1) : 1;
      const std::int64_t lo = std::max(jlo, detail::ceil_div(p - reach - delta2 - (nc - 1), nc));
      const std::int64_t hi = std::min(jhi, detail::floor_div(p + reach - delta2, nc));
      for (std::int64_t j = lo; j <= hi; ++j) {
        const auto fj = static_cast<std::size_t>(j - jlo);
        const std::int64_t dq = j * nc + digit[u2_c + fj] + delta2 - p;
        if (dq < -reach || dq > reach) continue;
        const int dj = coded ? (digit[u2_d + fj] ? 1 : -1) : 1;
        const auto s = static_cast<std::size_t>(detail::floor_div(j, nf) - slo);
        const int bj = digit[u2_b + s] ? 1 : -1;
        a += dm * dj * bj * table[static_cast<std::size_t>(dq + reach)];
      }
    }
    sum_all += a;
    sq_all += static_cast<long double>(a) * a;
    if (digit[b0]) {
      sum_pos += a;
      sq_pos += static_cast<long double>(a) * a;
      ++count_pos;
    }
    const double interference = scale2 * a;
    double pe = 0.0;
    if (noise_sd == 0.0) {
      pe = 0.5 * ((desired + interference < 0.0 ? 1.0 : 0.0) +
                  (-desired + interference >= 0.0 ? 1.0 : 0.0));
    } else {
      pe = 0.5 * (q_function((desired + interference) / noise_sd) +
                  q_function((desired - interference) / noise_sd));
    }
    err += pe;
    ++count;

    std::size_t pos = 0;
    while (pos < digit.size() && ++digit[pos] == radix[pos]) digit[pos++] = 0;
    if (pos == digit.size()) break;
  }

  EnumerationResult r;
  r.outcomes = count;
  const auto cp = static_cast<long double>(count_pos);
  const auto ca = static_cast<long double>(count);
  r.mai_mean_given_bit = static_cast<double>(sum_pos / cp);
  r.mai_var_given_bit = static_cast<double>(sq_pos / cp - (sum_pos / cp) * (sum_pos / cp));
  r.mai_mean = static_cast<double>(sum_all / ca);
  r.mai_var = static_cast<double>(sq_all / ca - (sum_all / ca) * (sum_all / ca));
  r.exact_bep = static_cast<double>(err / ca);
  return r;
}

}  // namespace uwbtrade
