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
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace uwbtrade {

/// Received unit-energy UWB pulse (second derivative of a Gaussian) and the
/// chip slot it occupies. All times are in seconds.
///
/// The pulse is never sampled by the simulation engine; every receiver
/// statistic is assembled from `autocorr` values at exact offsets.
class PulseModel {
 public:
  PulseModel(double tau, double chip_duration) : tau_(tau), chip_duration_(chip_duration) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
      throw std::invalid_argument("PulseModel: tau must be positive");
    }
    if (!(chip_duration > 0.0) || !std::isfinite(chip_duration)) {
      throw std::invalid_argument("PulseModel: chip_duration must be positive");
    }
    inv_tau_ = 1.0 / tau;
  }

  double tau() const noexcept { return tau_; }
  double chip_duration() const noexcept { return chip_duration_; }
  double inv_tau() const noexcept { return inv_tau_; }

  /// Lags at or beyond this magnitude correlate to exactly zero.
  double cutoff() const noexcept { return kCutoffInTau * tau_; }

  static constexpr double kCutoffInTau = 8.0;

 private:
  double tau_;
  double chip_duration_;
  double inv_tau_;
};

/// Normalized pulse autocorrelation
///   R(d) = [1 - 4 pi x^2 + (4 pi^2 / 3) x^4] exp(-pi x^2),  x = d / tau.
/// R(0) = 1 and R is even.
inline double autocorr(const PulseModel& pulse, double lag) noexcept {
  constexpr double pi = std::numbers::pi;
  if (std::abs(lag) >= pulse.cutoff()) return 0.0;
  const double x = lag * pulse.inv_tau();
  const double x2 = x * x;
  return (1.0 - 4.0 * pi * x2 + (4.0 * pi * pi / 3.0) * x2 * x2) * std::exp(-pi * x2);
}

/// Unnormalized transmitted waveform w(t) = (1 - 4 pi t^2/tau^2) exp(-2 pi t^2/tau^2).
inline double waveform(const PulseModel& pulse, double t) noexcept {
  constexpr double pi = std::numbers::pi;
  const double x2 = (t * pulse.inv_tau()) * (t * pulse.inv_tau());
  return (1.0 - 4.0 * pi * x2) * std::exp(-2.0 * pi * x2);
}

/// Energy of `waveform`; the received pulse is waveform / sqrt(energy).
inline double waveform_energy(const PulseModel& pulse) noexcept { return 0.375 * pulse.tau(); }

/// Tapped-delay-line channel h(t) = sum_l gains[l] delta(t - delays[l]).
///
/// The last delay is an exact multiple of the chip: delays.back() = (span_chips - 1) T_c.
struct MultipathChannel {
  std::vector<double> gains;
  std::vector<double> delays;
  int span_chips = 1;  // M

  std::size_t paths() const noexcept { return gains.size(); }
  double delay_spread() const noexcept { return delays.empty() ? 0.0 : delays.back(); }

  /// Builds and validates a channel. `span_chips` is derived from the last delay.
  static MultipathChannel make(std::vector<double> gains, std::vector<double> delays,
                               double chip_duration) {
    if (gains.empty()) {
      throw std::invalid_argument("MultipathChannel: at least one path is required (L >= 1)");
    }
    if (gains.size() != delays.size()) {
      throw std::invalid_argument("MultipathChannel: gains and delays differ in length");
    }
    if (delays.front() != 0.0) {
      throw std::invalid_argument("MultipathChannel: first delay must be 0");
    }
    if (!std::is_sorted(delays.begin(), delays.end())) {
      throw std::invalid_argument("MultipathChannel: delays must be nondecreasing");
    }
    const double chips = delays.back() / chip_duration;
    const double rounded = std::round(chips);
    if (std::abs(chips - rounded) > 1e-9 * std::max(1.0, chips)) {
      throw std::invalid_argument(
          "MultipathChannel: last delay must be an integer multiple of the chip duration");
    }
    MultipathChannel ch;
    ch.gains = std::move(gains);
    ch.delays = std::move(delays);
    ch.span_chips = static_cast<int>(rounded) + 1;
    return ch;
  }

  /// Paths at delays l * T_c, l = 0..L-1.
  static MultipathChannel chip_spaced(std::vector<double> gains, double chip_duration) {
    std::vector<double> delays(gains.size());
    for (std::size_t l = 0; l < delays.size(); ++l) {
      delays[l] = static_cast<double>(l) * chip_duration;
    }
    return make(std::move(gains), std::move(delays), chip_duration);
  }
};

/// Rake combining coefficients, one per channel path, and the mean template
/// energy per frame used for the correlator noise variance.
struct RakeWeights {
  std::vector<double> weights;
  double template_energy = 1.0;

  std::size_t fingers() const noexcept { return weights.size(); }
};

/// Energy of one template frame for a given realization of finger jitters:
/// sum_{p,q} beta_p beta_q R(tau_p - tau_q + jit_p - jit_q).
inline double template_energy(const PulseModel& pulse, const MultipathChannel& channel,
                              std::span<const double> weights,
                              std::span<const double> finger_jitter) {
  double e = 0.0;
  for (std::size_t p = 0; p < weights.size(); ++p) {
    for (std::size_t q = 0; q < weights.size(); ++q) {
      e += weights[p] * weights[q] *
           autocorr(pulse, channel.delays[p] - channel.delays[q] + finger_jitter[p] -
                               finger_jitter[q]);
    }
  }
  return e;
}

/// Rake with arbitrary weights; template energy evaluated without template jitter.
inline RakeWeights make_rake(const PulseModel& pulse, const MultipathChannel& channel,
                             std::vector<double> weights) {
  if (weights.size() != channel.paths()) {
    throw std::invalid_argument("RakeWeights: one weight per channel path is required");
  }
  const std::vector<double> zeros(weights.size(), 0.0);
  RakeWeights rake;
  rake.template_energy = template_energy(pulse, channel, weights, zeros);
  rake.weights = std::move(weights);
  return rake;
}

/// Maximal ratio combining: weights equal the channel gains.
inline RakeWeights make_mrc_rake(const PulseModel& pulse, const MultipathChannel& channel) {
  return make_rake(pulse, channel, channel.gains);
}

namespace detail {

// sum_l gains[l] R(delays[l] + offset), visiting only paths inside the cutoff window.
inline double path_sum(const PulseModel& pulse, const MultipathChannel& channel, double offset) {
  const double reach = pulse.cutoff();
  const auto& d = channel.delays;
  auto first = std::lower_bound(d.begin(), d.end(), -offset - reach);
  double acc = 0.0;
  for (auto it = first; it != d.end() && *it < -offset + reach; ++it) {
    const auto l = static_cast<std::size_t>(it - d.begin());
    acc += channel.gains[l] * autocorr(pulse, *it + offset);
  }
  return acc;
}

}  // namespace detail

/// Cross-correlation phi_uv(shift) = integral u(t - shift) v(t) dt between the
/// received multipath pulse u(t) = sum_l alpha_l w(t - tau_l) and the Rake
/// template v(t) = sum_p beta_p w(t - tau_p - jit_p):
///   sum_p beta_p sum_l alpha_l R(tau_l - tau_p - jit_p + shift).
inline double cross_corr_uv(const PulseModel& pulse, const MultipathChannel& channel,
                            const RakeWeights& rake, std::span<const double> template_jitter,
                            double shift) {
  if (template_jitter.size() != rake.fingers()) {
    throw std::invalid_argument("cross_corr_uv: one template jitter value per finger is required");
  }
  double acc = 0.0;
  for (std::size_t p = 0; p < rake.fingers(); ++p) {
    if (rake.weights[p] == 0.0) continue;
    acc += rake.weights[p] *
           detail::path_sum(pulse, channel, shift - channel.delays[p] - template_jitter[p]);
  }
  return acc;
}

}  // namespace uwbtrade
