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
 * @file metrics.hpp
 * @brief Closed-form heralding efficiencies and fidelities under imperfect
 *        circular birefringence, and their comparison with full simulation.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qdrep/cavity.hpp"
#include "qdrep/protocols.hpp"

namespace qdrep {

struct DistributionMetrics {
  double eta_even = 0.0;  ///< heralding probability of the even (same-polarization) class
  double eta_odd = 0.0;
  double eta = 0.0;       ///< eta_even + eta_odd
  double f_even = 0.0;
  double f_odd = 1.0;
  std::optional<double> eta_in_adjusted;
};

/// η^E = (|2t+1|² + |2t₀+1|² + 2|1+t+t₀|²)/4, η^O = |t₀−t|²/2,
/// η = (|2t+1|² + |2t₀+1|²)/2, F^E = |t₀−t|²/(2η^E), F^O = 1.
inline DistributionMetrics distribution_metrics(const ScatterCoeffs& c, std::optional<double> eta_in = std::nullopt) {
  c.validate();
  const cplx t = c.t, t0 = c.t0;
  DistributionMetrics m;
  m.eta_even = (std::norm(2.0 * t + 1.0) + std::norm(2.0 * t0 + 1.0) + 2.0 * std::norm(1.0 + t + t0)) / 4.0;
  m.eta_odd = std::norm(t0 - t) / 2.0;
  m.eta = (std::norm(2.0 * t + 1.0) + std::norm(2.0 * t0 + 1.0)) / 2.0;
  m.f_even = m.eta_even > 0.0 ? std::clamp(std::norm(t0 - t) / (2.0 * m.eta_even), 0.0, 1.0) : 0.0;
  m.f_odd = 1.0;
  if (std::abs(m.eta_even + m.eta_odd - m.eta) > 1e-12)
    throw Error("distribution_metrics(): efficiency identity violated");
  if (eta_in) m.eta_in_adjusted = m.eta * *eta_in * *eta_in;
  return m;
}

/// Parity-check efficiencies coincide with the distribution ones; only the
/// input-coupling adjustment differs (one photon instead of two).
inline DistributionMetrics pcd_metrics(const ScatterCoeffs& c, std::optional<double> eta_in = std::nullopt) {
  DistributionMetrics m = distribution_metrics(c);
  if (eta_in) m.eta_in_adjusted = m.eta * *eta_in;
  return m;
}

struct CrosscheckEntry {
  std::string quantity;
  double analytic = 0.0;
  double simulated = 0.0;
  double deviation() const { return std::abs(analytic - simulated); }
};

struct CrosscheckReport {
  std::vector<CrosscheckEntry> entries;
  double max_deviation = 0.0;
  bool passed = false;
};

inline constexpr double kCrosscheckThreshold = 1e-10;

namespace detail {

inline double class_probability(const ProtocolResult& r, bool even, bool (*is_even)(const std::string&)) {
  double p = 0.0;
  for (const auto& o : r.outcomes)
    if (is_even(o.detection) == even) p += o.probability;
  return p;
}

inline double class_fidelity(const ProtocolResult& r, bool even, bool (*is_even)(const std::string&)) {
  std::vector<HeraldedOutcome> sel;
  for (const auto& o : r.outcomes)
    if (is_even(o.detection) == even) sel.push_back(o);
  return mean_fidelity(sel);
}

inline bool bell_even(const std::string& d) { return d == "R↑R↑" || d == "L↓L↓"; }
inline bool pcd_even(const std::string& d) { return is_even_detection(d); }

}  // namespace detail

/// Runs distribute_bell (noiseless fibers) and pcd on uniform spins through
/// full state evolution and compares against the closed forms.
inline CrosscheckReport crosscheck(const ScatterCoeffs& c) {
  const DistributionMetrics dm = distribution_metrics(c);
  const DistributionMetrics pm = pcd_metrics(c);
  const auto d = distribute_bell({}, {}, c, c);
  const auto p = pcd(detail::uniform_spins(2), "e_a", "e_b", c);

  CrosscheckReport rep;
  auto add = [&](std::string q, double a, double s) { rep.entries.push_back({std::move(q), a, s}); };
  add("eta_d_even", dm.eta_even, detail::class_probability(d, true, detail::bell_even));
  add("eta_d_odd", dm.eta_odd, detail::class_probability(d, false, detail::bell_even));
  add("eta_d", dm.eta, d.heralded());
  if (dm.eta_even >= kPruneThreshold) add("f_d_even", dm.f_even, detail::class_fidelity(d, true, detail::bell_even));
  if (dm.eta_odd >= kPruneThreshold) add("f_d_odd", dm.f_odd, detail::class_fidelity(d, false, detail::bell_even));
  add("eta_p_even", pm.eta_even, detail::class_probability(p, true, detail::pcd_even));
  add("eta_p_odd", pm.eta_odd, detail::class_probability(p, false, detail::pcd_even));
  add("eta_p", pm.eta, p.heralded());
  if (pm.eta_even >= kPruneThreshold) add("f_p_even", pm.f_even, detail::class_fidelity(p, true, detail::pcd_even));
  if (pm.eta_odd >= kPruneThreshold) add("f_p_odd", pm.f_odd, detail::class_fidelity(p, false, detail::pcd_even));
  for (const auto& e : rep.entries) rep.max_deviation = std::max(rep.max_deviation, e.deviation());
  rep.passed = rep.max_deviation < kCrosscheckThreshold;
  return rep;
}

}  // namespace qdrep
