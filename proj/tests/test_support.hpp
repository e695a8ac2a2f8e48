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
#include <functional>
#include <vector>

#include "uwbtrade/mc_engine.hpp"

namespace uwbtrade::testing {

inline PulseModel reference_pulse() { return PulseModel(0.125e-9, 0.25e-9); }

/// Running mean and central moments (Welford).
struct Accumulator {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::vector<double> xs;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
    xs.push_back(x);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double mean_se() const { return std::sqrt(variance() / static_cast<double>(n)); }
  /// Standard error of the sample variance from the fourth central moment.
  double variance_se() const {
    double m4 = 0.0;
    for (double x : xs) {
      const double d = x - mean;
      m4 += d * d * d * d;
    }
    m4 /= static_cast<double>(n);
    const double v = m2 / static_cast<double>(n);
    return std::sqrt(std::max(0.0, m4 - v * v) / static_cast<double>(n));
  }
};

/// Draws `symbols` symbols of a plan and passes each decomposed output to `fn`.
inline void for_each_symbol(const TrialPlan& plan, std::int64_t symbols,
                            const std::function<void(const SymbolComponents&)>& fn) {
  TrialPlan sized = plan;
  sized.num_symbols = symbols;
  const Simulator sim(sized);
  StreamSet streams(plan.seed, 0);
  SymbolDraw d;
  SymbolComponents c;
  const int block = plan.block_symbols();
  for (std::int64_t done = 0; done < symbols;) {
    const int n = static_cast<int>(std::min<std::int64_t>(block, symbols - done));
    sim.draw(streams, n, d);
    for (int i = 0; i < n; ++i) {
      sim.evaluate(d, i, c);
      fn(c);
    }
    done += n;
  }
}

}  // namespace uwbtrade::testing
