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


#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "uwbtrade/quadrature.hpp"

namespace uwbtrade {
namespace {

TEST(GaussLegendre, WeightsSumToTwoAndNodesAscend) {
  for (int n : {1, 2, 3, 7, 64, 128, 513}) {
    const GaussLegendre r = gauss_legendre(n);
    double sum = 0.0;
    for (double w : r.weights) sum += w;
    EXPECT_NEAR(sum, 2.0, 1e-13) << n;
    for (int i = 1; i < n; ++i) EXPECT_LT(r.nodes[i - 1], r.nodes[i]);
  }
}

TEST(GaussLegendre, ExactForPolynomialsOfDegree2nMinus1) {
  for (int n : {2, 5, 10}) {
    const GaussLegendre r = gauss_legendre(n);
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += r.weights[i] * std::pow(r.nodes[i], k);
      const double want = (k % 2 == 1) ? 0.0 : 2.0 / (k + 1);
      EXPECT_NEAR(acc, want, 1e-14) << "n=" << n << " k=" << k;
    }
  }
}

TEST(GaussLegendre, SmoothIntegrand) {
  const GaussLegendre r = gauss_legendre(32);
  double acc = 0.0;
  for (int i = 0; i < 32; ++i) acc += r.weights[i] * std::exp(r.nodes[i]);
  EXPECT_NEAR(acc, std::exp(1.0) - std::exp(-1.0), 1e-14);
}

TEST(GaussLegendre, OddRuleHasCenterNode) {
  const GaussLegendre r = gauss_legendre(5);
  EXPECT_EQ(r.nodes[2], 0.0);
  EXPECT_NEAR(r.weights[2], 128.0 / 225.0, 1e-15);
}

TEST(GaussLegendre, RejectsEmptyRule) { EXPECT_THROW(gauss_legendre(0), std::invalid_argument); }

}  // namespace
}  // namespace uwbtrade
