// Copyright 2026 The qdrep Authors.
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

#include "oracle.hpp"
#include "qdrep/cavity.hpp"

using namespace qdrep;

namespace {
CavityParams at(double g, double ks, double delta = 0.0) { return {g, 1.0, ks, 0.1, delta, std::nullopt}; }
}  // namespace

TEST(FullCoeffs, MatchesReferenceOnGrid) {
  oracle::Draw d(21);
  for (int k = 0; k < 200; ++k) {
    const double g = d.uniform(0, 3), ks = d.uniform(0, 0.5), de = d.uniform(-5, 5);
    cplx R, T, S, N;
    oracle::full(g, ks, 0.1, de, R, T, S, N);
    const auto c = full_coeffs(at(g, ks, de));
    EXPECT_NEAR(std::abs(c.R - R), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(c.T - T), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(c.S - S), 0.0, 1e-13);
    EXPECT_NEAR(std::abs(c.N - N), 0.0, 1e-13);
  }
}

TEST(FullCoeffs, ProbabilityConservedProperty) {
  oracle::Draw d(22);
  for (int k = 0; k < 500; ++k) {
    CavityParams p = at(d.uniform(0, 4), d.uniform(0, 1), d.uniform(-10, 10));
    p.gamma = d.uniform(0.01, 1);
    if (k % 2) p.delta_x = d.uniform(-10, 10);
    EXPECT_NEAR(full_coeffs(p).total_probability(), 1.0, 1e-12);
  }
}

TEST(FullCoeffs, ReflectionAtResonanceForStrongCoupling) {
  // g = 2.4, kappa_s = 0.1: R = (0.05 + 115.2)/(1.05 + 115.2).
  EXPECT_NEAR(std::abs(full_coeffs(at(2.4, 0.1)).R), 115.25 / 116.25, 1e-12);
  EXPECT_NEAR(std::abs(full_coeffs(at(2.4, 0.1)).R), 0.9914, 5e-5);
}

TEST(FullCoeffs, ColdCavityHasNoNoiseTerm) {
  const auto c = full_coeffs(at(0.0, 0.2));
  EXPECT_EQ(c.N, cplx(0.0));
  EXPECT_NEAR(c.T.real(), -1.0 / 1.1, 1e-15);
}

TEST(ResonantCoeffs, BeamSplitterIdentitiesProperty) {
  oracle::Draw d(23);
  for (int k = 0; k < 1000; ++k) {
    const auto c = resonant_coeffs(at(d.uniform(0, 3), d.uniform(0, 0.5), d.uniform(-3, 3)));
    EXPECT_NEAR(std::abs(c.r - (1.0 + c.t)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(c.r0 - (1.0 + c.t0)), 0.0, 1e-12);
  }
}

TEST(ResonantCoeffs, MatchesReferenceAtZeroDetuning) {
  for (double g : {0.0, 0.6, 1.2, 2.4})
    for (double ks : {0.0, 0.1, 0.2}) {
      const auto o = oracle::resonant(g, ks);
      const auto c = resonant_coeffs(at(g, ks));
      EXPECT_NEAR(std::abs(c.t - o.t), 0.0, 1e-14);
      EXPECT_NEAR(std::abs(c.t0 - o.t0), 0.0, 1e-14);
      EXPECT_NEAR(std::abs(c.r - o.r), 0.0, 1e-14);
      EXPECT_NEAR(std::abs(c.r0 - o.r0), 0.0, 1e-14);
    }
  // t(1.2, 0.2) = -1/29.9, t0 = -1/1.1
  const auto c = resonant_coeffs(at(1.2, 0.2));
  EXPECT_NEAR(c.t.real(), -0.0334448160535, 1e-12);
  EXPECT_NEAR(c.t0.real(), -0.909090909091, 1e-12);
}

TEST(ResonantCoeffs, HotPlusColdLossesComplete) {
  const auto c = resonant_coeffs(at(1.2, 0.2, 0.7));
  EXPECT_NEAR(std::norm(c.r) + std::norm(c.t) + c.hot_loss(), 1.0, 1e-12);
  EXPECT_NEAR(std::norm(c.r0) + std::norm(c.t0) + c.cold_loss(), 1.0, 1e-12);
}

TEST(CavityParams, Validation) {
  EXPECT_THROW(full_coeffs(CavityParams{1.0, 0.0, 0.1, 0.1, 0.0, std::nullopt}), Error);
  EXPECT_THROW(full_coeffs(CavityParams{-1.0, 1.0, 0.1, 0.1, 0.0, std::nullopt}), Error);
  CavityParams p = at(1, 0.1);
  p.gamma = 0;
  EXPECT_THROW(full_coeffs(p), Error);
  p = at(1, -0.1);
  EXPECT_THROW(full_coeffs(p), Error);
  ScatterCoeffs bad;
  bad.r = 2.0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(IdealCoeffs, Values) {
  const auto c = ideal_coeffs();
  EXPECT_EQ(c.r, cplx(1));
  EXPECT_EQ(c.t, cplx(0));
  EXPECT_EQ(c.r0, cplx(0));
  EXPECT_EQ(c.t0, cplx(-1));
}
