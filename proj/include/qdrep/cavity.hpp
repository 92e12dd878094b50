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

/**
 * @file cavity.hpp
 * @brief Input-output coefficients of a charged quantum dot in a double-sided
 *        micropillar cavity, in the weak-excitation limit.
 *
 * All rates are ratios to the cavity-field decay rate κ (κ = 1 by default).
 * Detunings are Δ = ω_c − ω for the cavity and Δ_X = ω_X − ω for the trion;
 * the resonant convention sets Δ_X = Δ.
 */

#pragma once

#include <cmath>
#include <complex>
#include <optional>

#include "qdrep/qcore.hpp"

namespace qdrep {

struct CavityParams {
  double g = 0.0;        ///< dipole-cavity coupling
  double kappa = 1.0;    ///< cavity-field decay rate (unit)
  double kappa_s = 0.0;  ///< side leakage
  double gamma = 0.1;    ///< dipole decay rate; γ/2 enters the formulas
  double delta = 0.0;    ///< ω_c − ω
  std::optional<double> delta_x;  ///< ω_X − ω; resonant (= delta) when empty

  void validate() const {
    if (!(kappa > 0.0)) throw Error("CavityParams: kappa must be > 0");
    if (!(g >= 0.0)) throw Error("CavityParams: g must be >= 0");
    if (!(kappa_s >= 0.0)) throw Error("CavityParams: kappa_s must be >= 0");
    if (!(gamma > 0.0)) throw Error("CavityParams: gamma must be > 0");
    if (!std::isfinite(delta) || (delta_x && !std::isfinite(*delta_x)))
      throw Error("CavityParams: detuning must be finite");
  }

  double dipole_detuning() const { return delta_x.value_or(delta); }
};

/// Reflection, transmission, leak and noise amplitudes of the coupled cavity.
struct FullCoeffs {
  cplx R, T, S, N;

  double total_probability() const { return std::norm(R) + std::norm(T) + std::norm(S) + std::norm(N); }
};

/// Coefficients that drive the photon–spin scattering map.
///
/// r, t belong to the hot (dipole-coupled) cavity and r0, t0 to the cold one.
/// s_leak, n_noise are the hot-cavity leak/noise amplitudes and s_leak0 the
/// cold-cavity leak; they only enter loss accounting.
struct ScatterCoeffs {
  cplx r{1.0}, t{0.0}, r0{0.0}, t0{-1.0};
  cplx s_leak{0.0}, n_noise{0.0}, s_leak0{0.0};

  /// Hot-cavity loss |S|²+|N|².
  double hot_loss() const { return std::norm(s_leak) + std::norm(n_noise); }
  /// Cold-cavity loss |S₀|².
  double cold_loss() const { return std::norm(s_leak0); }

  void validate() const {
    for (cplx c : {r, t, r0, t0, s_leak, n_noise, s_leak0})
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) throw Error("ScatterCoeffs: non-finite coefficient");
    if (std::norm(r) + std::norm(t) > 1.0 + 1e-9 || std::norm(r0) + std::norm(t0) > 1.0 + 1e-9)
      throw Error("ScatterCoeffs: reflection and transmission exceed unit probability");
  }
};

/// Perfect giant circular birefringence: r = 1, t = 0, r0 = 0, t0 = −1.
inline ScatterCoeffs ideal_coeffs() { return ScatterCoeffs{}; }

inline FullCoeffs full_coeffs(const CavityParams& p) {
  p.validate();
  const cplx i{0.0, 1.0};
  const cplx dipole = i * p.dipole_detuning() + p.gamma / 2.0;
  const cplx denom = i * p.delta + p.kappa + p.kappa_s / 2.0 + p.g * p.g / dipole;
  FullCoeffs c;
  c.R = (i * p.delta + p.kappa_s / 2.0 + p.g * p.g / dipole) / denom;
  c.T = -p.kappa / denom;
  c.S = -std::sqrt(p.kappa_s * p.kappa) / denom;
  c.N = (i * p.g * std::sqrt(p.gamma * p.kappa) / dipole) / denom;
  return c;
}

/// Hot- and cold-cavity coefficients with the trion tuned to the cavity mode.
/// The detuning argument overrides p.delta.
inline ScatterCoeffs resonant_coeffs(const CavityParams& p, double delta) {
  CavityParams hot = p;
  hot.delta = delta;
  hot.delta_x.reset();
  CavityParams cold = hot;
  cold.g = 0.0;
  const FullCoeffs h = full_coeffs(hot);
  const FullCoeffs c = full_coeffs(cold);
  ScatterCoeffs s;
  s.r = h.R;
  s.t = h.T;
  s.s_leak = h.S;
  s.n_noise = h.N;
  s.r0 = c.R;
  s.t0 = c.T;
  s.s_leak0 = c.S;
  return s;
}

inline ScatterCoeffs resonant_coeffs(const CavityParams& p) { return resonant_coeffs(p, p.delta); }

}  // namespace qdrep
