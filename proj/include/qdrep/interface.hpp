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
 * @file interface.hpp
 * @brief Spin-dependent scattering of a circularly polarized photon off a
 *        quantum-dot spin in a double-sided cavity.
 *
 * Polarization subsystems are stored in the linear (H, V) basis. The circular
 * states are |R⟩ = (|H⟩ + i|V⟩)/√2 and |L⟩ = (|H⟩ − i|V⟩)/√2. A photon that
 * reaches a cavity carries a direction subsystem "<photon>.dir" with levels
 * (↑, ↓) relative to the spin quantization axis.
 */

#pragma once

#include <cmath>
#include <string>

#include "qdrep/cavity.hpp"
#include "qdrep/qcore.hpp"

namespace qdrep {

namespace pol {

/// Columns are |R⟩ and |L⟩ in the (H, V) basis.
inline LinearMap circular() {
  const double s = 1.0 / std::sqrt(2.0);
  return LinearMap::from_rows({{s, s}, {cplx(0, s), cplx(0, -s)}}, true);
}

inline MeasurementBasis circular_basis() { return {circular(), {"R", "L"}}; }

/// |R⟩ or |L⟩ as a polarization state vector.
inline StateVector circular_state(const std::string& label, cplx r_amp, cplx l_amp) {
  const auto c = circular();
  return StateVector::single(sub::polarization(label),
                             {c(0, 0) * r_amp + c(0, 1) * l_amp, c(1, 0) * r_amp + c(1, 1) * l_amp});
}

/// Re-expresses a map written in the circular basis in the stored (H, V)
/// basis. The polarization qubit must be the leading factor.
inline LinearMap from_circular(const LinearMap& m_circ) {
  const LinearMap c = kron(circular(), gate::identity(m_circ.dim() / 2));
  return c * m_circ * c.adjoint();
}

}  // namespace pol

inline std::string direction_label(const std::string& photon) { return photon + ".dir"; }

/// Scattering map on (polarization, direction, spin), polarization first.
///
/// A photon with S_z = +1 relative to the axis (R↑, L↓) couples to spin ↑ and
/// one with S_z = −1 (R↓, L↑) couples to spin ↓. A coupled photon sees the hot
/// cavity (r, t), an uncoupled one the cold cavity (r0, t0). Reflection flips
/// both polarization and direction; the spin is untouched.
inline LinearMap scatter_map(const ScatterCoeffs& c) {
  c.validate();
  std::vector<cplx> m(64);
  auto idx = [](std::size_t p, std::size_t d, std::size_t s) { return (p * 2 + d) * 2 + s; };
  for (std::size_t p = 0; p < 2; ++p)
    for (std::size_t d = 0; d < 2; ++d)
      for (std::size_t s = 0; s < 2; ++s) {
        const bool hot = (s == 0) == (p == d);
        const std::size_t col = idx(p, d, s);
        m[idx(1 - p, 1 - d, s) * 8 + col] += hot ? c.r : c.r0;
        m[idx(p, d, s) * 8 + col] += hot ? c.t : c.t0;
      }
  return pol::from_circular(LinearMap(8, std::move(m), false));
}

/// Scatters `photon` off `spin`. Amplitude lost to the leak and noise channels
/// is discarded, so the output norm² is at most the input norm².
inline StateVector scatter(const StateVector& state, const std::string& photon, const std::string& spin,
                           const ScatterCoeffs& coeffs) {
  const auto& reg = state.reg();
  if (reg.at(photon).kind != Kind::polarization) throw Error("scatter(): '" + photon + "' is not a polarization");
  if (!reg.contains(direction_label(photon)))
    throw Error("scatter(): photon '" + photon + "' has no direction subsystem");
  if (reg.at(spin).kind != Kind::spin) throw Error("scatter(): '" + spin + "' is not a spin");
  return apply_map(state, scatter_map(coeffs), {photon, direction_label(photon), spin});
}

}  // namespace qdrep
