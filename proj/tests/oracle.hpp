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

// Reference evaluator for the tests. Works on sparse kets keyed by symbol
// strings, directly in the circular basis, and shares no code with the
// library. Deliberately slow and literal.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Key = std::vector<std::string>;
using Ket = std::map<Key, cplx>;

/// Cavity coefficients on resonance (Δ = Δ_X = 0), κ = 1, real arithmetic.
struct Coef {
  cplx r, t, r0, t0;
};

inline Coef resonant(double g, double ks, double gamma = 0.1) {
  const double load = ks / 2.0 + 2.0 * g * g / gamma;
  Coef c;
  c.r = load / (1.0 + load);
  c.t = -1.0 / (1.0 + load);
  c.r0 = (ks / 2.0) / (1.0 + ks / 2.0);
  c.t0 = -1.0 / (1.0 + ks / 2.0);
  return c;
}

inline Coef ideal() { return {1.0, 0.0, 0.0, -1.0}; }

/// Full coefficients for arbitrary detuning, written out component-wise.
inline void full(double g, double ks, double gamma, double delta, cplx& R, cplx& T, cplx& S, cplx& N) {
  const cplx i(0, 1);
  const cplx dip = cplx(gamma / 2.0, delta);
  const cplx load = cplx(ks / 2.0, delta) + g * g / dip;
  const cplx D = 1.0 + load;
  R = load / D;
  T = -1.0 / D;
  S = -std::sqrt(ks) / D;
  N = i * g * std::sqrt(gamma) / dip / D;
}

inline std::string flip(const std::string& pd) {
  // "R↑" <-> "L↓", "R↓" <-> "L↑"
  const std::string pol = pd.substr(0, 1) == "R" ? "L" : "R";
  const std::string dir = pd.substr(1) == "↑" ? "↓" : "↑";
  return pol + dir;
}

inline bool hot(const std::string& pd, const std::string& spin) {
  if (spin == "u") return pd == "R↑" || pd == "L↓";
  return pd == "R↓" || pd == "L↑";
}

inline Ket scatter(const Ket& in, std::size_t photon, std::size_t spin, const Coef& c) {
  Ket out;
  for (const auto& [k, a] : in) {
    const bool h = hot(k[photon], k[spin]);
    Key f = k;
    f[photon] = flip(k[photon]);
    out[f] += a * (h ? c.r : c.r0);
    out[k] += a * (h ? c.t : c.t0);
  }
  return out;
}

inline double norm2(const Ket& k) {
  double s = 0;
  for (const auto& [key, a] : k) s += std::norm(a);
  return s;
}

/// Ket over n spins ("u"/"d") from the components whose photon symbols match.
inline Ket select(const Ket& in, std::size_t n_photons, const Key& photons) {
  Ket out;
  for (const auto& [k, a] : in) {
    bool match = true;
    for (std::size_t p = 0; p < n_photons; ++p) match = match && k[p] == photons[p];
    if (!match) continue;
    out[Key(k.begin() + static_cast<long>(n_photons), k.end())] += a;
  }
  return out;
}

inline Ket apply_x(const Ket& in, std::size_t slot) {
  Ket out;
  for (const auto& [key, a] : in) {
    Key k = key;
    k[slot] = k[slot] == "u" ? "d" : "u";
    out[k] += a;
  }
  return out;
}

inline Ket apply_z(const Ket& in, std::size_t slot) {
  Ket out;
  for (const auto& [k, a] : in) out[k] += k[slot] == "d" ? -a : a;
  return out;
}

inline Ket apply_h(const Ket& in, std::size_t slot) {
  const double s = 1.0 / std::sqrt(2.0);
  Ket out;
  for (const auto& [k, a] : in) {
    Key u = k, d = k;
    u[slot] = "u";
    d[slot] = "d";
    out[u] += s * a;
    out[d] += (k[slot] == "u" ? s : -s) * a;
  }
  return out;
}

/// (|u…u⟩ + sign |d…d⟩)/√2.
inline Ket ghz(std::size_t n, double sign) {
  return {{Key(n, "u"), 1.0 / std::sqrt(2.0)}, {Key(n, "d"), sign / std::sqrt(2.0)}};
}

inline double fidelity(const Ket& state, const Ket& target) {
  cplx ov = 0;
  for (const auto& [k, a] : target) {
    auto it = state.find(k);
    if (it != state.end()) ov += std::conj(a) * it->second;
  }
  return std::norm(ov) / norm2(state);
}

/// Photons in (R↑…R↑ − L↓…L↓)/√2 (what the decoder, phase plate and QWPs
/// deliver), spins in (u+d)/√2 each; photon k scatters on spin k.
inline Ket distributed(std::size_t n, const std::vector<Coef>& c) {
  Ket k;
  const double amp = 1.0 / std::sqrt(2.0) / std::pow(2.0, n / 2.0);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Key up(n, "R↑"), down(n, "L↓");
    for (std::size_t s = 0; s < n; ++s) {
      const std::string sym = (mask >> (n - 1 - s)) & 1u ? "d" : "u";
      up.push_back(sym);
      down.push_back(sym);
    }
    k[up] += amp;
    k[down] -= amp;
  }
  for (std::size_t p = 0; p < n; ++p) k = scatter(k, p, n + p, c[p]);
  return k;
}

/// Ideal parity projection used by the detector: even → |uu⟩ − |dd⟩ signs,
/// odd → |ud⟩ − |du⟩ signs on slots (a, b).
inline Ket parity(const Ket& in, std::size_t a, std::size_t b, bool even) {
  Ket out;
  for (const auto& [k, v] : in) {
    const bool same = k[a] == k[b];
    if (same != even) continue;
    out[k] += k[a] == "d" ? -v : v;
  }
  return out;
}

/// Deterministic uniform draws for property tests.
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace oracle
