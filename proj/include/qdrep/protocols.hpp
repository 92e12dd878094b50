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
 * @file protocols.hpp
 * @brief Heralded repeater protocols: Bell and GHZ distribution over noisy
 *        fibers, the parity-check detector, chain extension, purification,
 *        and an end-to-end chain runner.
 *
 * Every protocol returns all heralded branches with absolute probabilities.
 * Probability that never reaches a detector (cavity leakage, dipole noise,
 * input coupling, rejected parity) is reported as `discarded`, so branch
 * probabilities plus discarded always sum to one.
 */

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qdrep/cavity.hpp"
#include "qdrep/interface.hpp"
#include "qdrep/qcore.hpp"
#include "qdrep/timebin.hpp"

namespace qdrep {

/// Single-spin gate applied after heralding: "X", "Z" or "H".
struct Correction {
  std::string gate;
  std::string spin;

  bool operator==(const Correction&) const = default;
};

inline std::string to_string(const std::vector<Correction>& cs) {
  if (cs.empty()) return "-";
  std::string out;
  for (const auto& c : cs) {
    if (!out.empty()) out += ' ';
    out += c.gate + "(" + c.spin + ")";
  }
  return out;
}

inline LinearMap gate_by_name(const std::string& g) {
  if (g == "X") return gate::x();
  if (g == "Z") return gate::z();
  if (g == "H") return gate::h();
  throw Error("unknown correction gate '" + g + "'");
}

/// Applies the corrections in list order.
inline StateVector apply_corrections(StateVector s, const std::vector<Correction>& cs) {
  for (const auto& c : cs) s = apply_map(s, gate_by_name(c.gate), {c.spin});
  return s;
}

struct HeraldedOutcome {
  std::string detection;
  double probability = 0.0;
  std::vector<Correction> correction;
  std::optional<Ensemble> post;    ///< after correction; empty when probability is zero
  std::optional<Ensemble> raw;     ///< before correction
  std::optional<double> fidelity;  ///< against the protocol's target
};

struct ProtocolResult {
  std::vector<HeraldedOutcome> outcomes;
  double discarded = 0.0;

  double heralded() const {
    double s = 0.0;
    for (const auto& o : outcomes) s += o.probability;
    return s;
  }

  double completeness_defect() const { return std::abs(heralded() + discarded - 1.0); }

  const HeraldedOutcome& at(std::string_view detection) const {
    for (const auto& o : outcomes)
      if (o.detection == detection) return o;
    throw Error("no outcome '" + std::string(detection) + "'");
  }
};

/// Probability-weighted mixture of the corrected post states.
inline Ensemble mixture(const std::vector<HeraldedOutcome>& outcomes) {
  std::vector<StateVector> branches;
  for (const auto& o : outcomes) {
    if (!o.post) continue;
    for (const auto& m : o.post->members()) branches.push_back(m.state.scaled(std::sqrt(o.probability * m.weight)));
  }
  return Ensemble::from_branches(branches);
}

/// Probability-weighted fidelity over the outcomes that carry one.
inline double mean_fidelity(const std::vector<HeraldedOutcome>& outcomes) {
  double p = 0.0, f = 0.0;
  for (const auto& o : outcomes)
    if (o.fidelity) {
      p += o.probability;
      f += o.probability * *o.fidelity;
    }
  if (p <= 0.0) throw Error("mean_fidelity(): no outcome with nonzero probability");
  return f / p;
}

struct DistributionOptions {
  std::optional<double> eta_in;             ///< input-coupling efficiency per photon
  std::vector<PlacedElement> pre_cavity;  ///< elements between decoder and cavity; empty = default
};

namespace detail {

inline void check_eta_in(const std::optional<double>& eta_in) {
  if (eta_in && !(*eta_in > 0.0 && *eta_in <= 1.0)) throw Error("eta_in must lie in (0, 1]");
}

inline std::string photon_name(std::size_t k) { return std::string(1, static_cast<char>('a' + k)); }
inline std::string spin_name(std::size_t k) { return "e_" + photon_name(k); }

/// GHZ source (|H…H⟩ + |V…V⟩)/√2 with every time register in |s⟩, sent through
/// encoder, fiber and decoder, then the pre-cavity script.
inline StateVector transmit(std::size_t n, const std::vector<NoiseChannel>& noise,
                            const std::vector<PlacedElement>& script) {
  std::vector<Subsystem> subs;
  for (std::size_t k = 0; k < n; ++k) {
    subs.push_back(sub::polarization(photon_name(k)));
    subs.push_back(sub::timebin(time_label(photon_name(k))));
  }
  Register reg(std::move(subs));
  std::vector<std::string> hs, vs;
  for (std::size_t k = 0; k < n; ++k) {
    hs.insert(hs.end(), {"H", "s"});
    vs.insert(vs.end(), {"V", "s"});
  }
  StateVector s = (StateVector::basis(reg, hs) + StateVector::basis(reg, vs)).scaled(1.0 / std::sqrt(2.0));
  for (std::size_t k = 0; k < n; ++k) s = encode(s, photon_name(k));
  for (std::size_t k = 0; k < n; ++k) s = apply_noise(s, photon_name(k), noise[k]);
  for (std::size_t k = 0; k < n; ++k) s = decode(s, photon_name(k));
  return run_script(s, script);
}

inline StateVector uniform_spins(std::size_t n) {
  const double h = 1.0 / std::sqrt(2.0);
  StateVector s;
  for (std::size_t k = 0; k < n; ++k) s = tensor(s, StateVector::single(sub::spin(spin_name(k)), {h, h}));
  return s;
}

/// Per detection pattern, the unnormalized spin states for every time-bin
/// outcome. Patterns index (polarization R/L, direction ↑/↓) per photon.
struct Pattern {
  std::size_t index = 0;
  std::string label;
  bool structural = true;  ///< every photon detected as R↑ or L↓
  bool odd = false;        ///< photons disagree in polarization parity
  std::vector<StateVector> branches;
};

inline std::vector<Pattern> herald(const StateVector& state, std::size_t n) {
  StateVector rotated = state;
  std::vector<std::string> targets;
  for (std::size_t k = 0; k < n; ++k) {
    rotated = apply_map(rotated, pol::circular().adjoint(), {photon_name(k)});
    targets.push_back(photon_name(k));
    targets.push_back(direction_label(photon_name(k)));
  }
  for (std::size_t k = 0; k < n; ++k) targets.push_back(time_label(photon_name(k)));
  auto all = project_all(rotated, targets);
  const std::size_t times = std::size_t{1} << n;
  const std::size_t patterns = std::size_t{1} << (2 * n);
  std::vector<Pattern> out(patterns);
  static const char* kPol[] = {"R", "L"};
  static const char* kDir[] = {"↑", "↓"};
  for (std::size_t j = 0; j < patterns; ++j) {
    Pattern& p = out[j];
    p.index = j;
    std::size_t ls = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t pd = (j >> (2 * (n - 1 - k))) & 3u;
      const std::size_t pol = pd >> 1, dir = pd & 1u;
      p.label += std::string(kPol[pol]) + kDir[dir];
      if (pol != dir) p.structural = false;
      ls += pol;
    }
    p.odd = ls % 2 == 1;
    for (std::size_t t = 0; t < times; ++t) p.branches.push_back(std::move(all[j * times + t]));
  }
  return out;
}

inline double norm2_sum(const std::vector<StateVector>& bs) {
  double s = 0.0;
  for (const auto& b : bs) s += b.norm2();
  return s;
}

inline HeraldedOutcome make_outcome(const std::string& label, const std::vector<StateVector>& branches,
                                    const std::vector<Correction>& correction, const StateVector& target,
                                    double scale) {
  HeraldedOutcome o;
  o.detection = label;
  o.correction = correction;
  const double p = norm2_sum(branches);
  o.probability = p * scale;
  if (p < kPruneThreshold) return o;
  std::vector<StateVector> fixed;
  for (const auto& b : branches) fixed.push_back(apply_corrections(b, correction));
  o.raw = Ensemble::from_branches(branches);
  o.post = Ensemble::from_branches(fixed);
  o.fidelity = fidelity(*o.post, target);
  return o;
}

inline std::vector<PlacedElement> default_script(std::size_t n, const std::string& phase_photon) {
  std::vector<PlacedElement> s{{OpticalElement::phase(std::numbers::pi), {phase_photon}}};
  for (std::size_t k = 0; k < n; ++k) s.push_back({OpticalElement::qwp(), {photon_name(k)}});
  return s;
}

}  // namespace detail

/// Heralded Bell-state distribution between the spins e_a and e_b. Odd
/// detection patterns receive a bit flip on e_b; the target is
/// (|↑↑⟩ − |↓↓⟩)/√2.
inline ProtocolResult distribute_bell(const NoiseChannel& noise_a, const NoiseChannel& noise_b,
                                      const ScatterCoeffs& coeffs_a, const ScatterCoeffs& coeffs_b,
                                      const DistributionOptions& opt = {}) {
  coeffs_a.validate();
  coeffs_b.validate();
  detail::check_eta_in(opt.eta_in);
  const auto script = opt.pre_cavity.empty() ? detail::default_script(2, "b") : opt.pre_cavity;
  StateVector s = tensor(detail::transmit(2, {noise_a, noise_b}, script), detail::uniform_spins(2));
  const double n0 = s.norm2();
  s = scatter(s, "a", "e_a", coeffs_a);
  s = scatter(s, "b", "e_b", coeffs_b);

  const double scale = opt.eta_in ? *opt.eta_in * *opt.eta_in : 1.0;
  const StateVector target = ghz({"e_a", "e_b"}, -1.0);
  ProtocolResult res;
  for (const auto& p : detail::herald(s, 2)) {
    if (!p.structural && detail::norm2_sum(p.branches) < kPruneThreshold) continue;
    std::vector<Correction> fix;
    if (p.odd) fix.push_back({"X", "e_b"});
    res.outcomes.push_back(detail::make_outcome(p.label, p.branches, fix, target, scale));
  }
  res.discarded = n0 - res.heralded();
  return res;
}

inline constexpr std::size_t kMaxGhzParties = 5;

namespace detail {

/// Minimal-weight Pauli product (per spin one of I, X, Z, XZ) mapping `raw`
/// onto `target` up to a global phase. Ties resolve towards the earliest
/// spin and the order X, Z, XZ.
inline std::vector<Correction> pauli_search(const StateVector& raw, const StateVector& target,
                                            const std::vector<std::string>& spins) {
  const std::size_t n = spins.size();
  const std::size_t total = std::size_t{1} << (2 * n);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  auto weight = [n](std::size_t code) {
    std::size_t w = 0;
    for (std::size_t k = 0; k < n; ++k) w += ((code >> (2 * k)) & 3u) != 0;
    return w;
  };
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return weight(a) < weight(b); });
  for (auto code : order) {
    std::vector<Correction> cs;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t g = (code >> (2 * k)) & 3u;
      if (g == 2 || g == 3) cs.push_back({"Z", spins[k]});
      if (g == 1 || g == 3) cs.push_back({"X", spins[k]});
    }
    if (fidelity(apply_corrections(raw, cs), target) > 1.0 - 1e-10) return cs;
  }
  throw Error("no Pauli correction maps the heralded state onto the target");
}

inline void check_ghz_args(std::size_t n, std::size_t noise, std::size_t coeffs) {
  if (n < 2) throw Error("distribute_ghz(): n must be >= 2");
  if (n > kMaxGhzParties) throw Error("distribute_ghz(): n must be <= " + std::to_string(kMaxGhzParties));
  if (noise != n || coeffs != n) throw Error("distribute_ghz(): need one noise channel and coefficient set per photon");
}

}  // namespace detail

/// Per-pattern corrections for n-party GHZ distribution, derived from the
/// noiseless ideal pipeline. Index matches the pattern order of distribute_ghz.
inline std::vector<std::vector<Correction>> ghz_corrections(std::size_t n) {
  detail::check_ghz_args(n, n, n);
  std::vector<std::string> spins;
  for (std::size_t k = 0; k < n; ++k) spins.push_back(detail::spin_name(k));
  StateVector s = tensor(detail::transmit(n, std::vector<NoiseChannel>(n), detail::default_script(n, "a")),
                         detail::uniform_spins(n));
  for (std::size_t k = 0; k < n; ++k) s = scatter(s, detail::photon_name(k), spins[k], ideal_coeffs());
  const StateVector target = ghz(spins, 1.0);
  std::vector<std::vector<Correction>> table;
  for (const auto& p : detail::herald(s, n)) {
    const StateVector& b = p.branches.front();
    table.push_back(b.norm2() < kPruneThreshold ? std::vector<Correction>{} : detail::pauli_search(b, target, spins));
  }
  return table;
}

/// Heralded n-party GHZ distribution (2 ≤ n ≤ 5). The π phase acts on V of
/// photon a only; the target is (|↑…↑⟩ + |↓…↓⟩)/√2 over e_a, e_b, ….
inline ProtocolResult distribute_ghz(std::size_t n, const std::vector<NoiseChannel>& noise,
                                     const std::vector<ScatterCoeffs>& coeffs, const DistributionOptions& opt = {}) {
  detail::check_ghz_args(n, noise.size(), coeffs.size());
  for (const auto& c : coeffs) c.validate();
  detail::check_eta_in(opt.eta_in);
  std::vector<std::string> spins;
  for (std::size_t k = 0; k < n; ++k) spins.push_back(detail::spin_name(k));
  const auto script = opt.pre_cavity.empty() ? detail::default_script(n, "a") : opt.pre_cavity;
  StateVector s = tensor(detail::transmit(n, noise, script), detail::uniform_spins(n));
  const double n0 = s.norm2();
  for (std::size_t k = 0; k < n; ++k) s = scatter(s, detail::photon_name(k), spins[k], coeffs[k]);

  const auto table = ghz_corrections(n);
  const double scale = opt.eta_in ? std::pow(*opt.eta_in, static_cast<double>(n)) : 1.0;
  const StateVector target = ghz(spins, 1.0);
  ProtocolResult res;
  for (const auto& p : detail::herald(s, n)) {
    if (!p.structural && detail::norm2_sum(p.branches) < kPruneThreshold) continue;
    res.outcomes.push_back(detail::make_outcome(p.label, p.branches, table[p.index], target, scale));
  }
  res.discarded = n0 - res.heralded();
  return res;
}

// ---------------------------------------------------------------------------
// Parity-check detector

struct PcdOptions {
  std::optional<StateVector> probe;  ///< probe polarization; must be (|R⟩+|L⟩)/√2
  std::optional<double> eta_in;
  std::string photon = "p";
};

namespace detail {

struct PcdBranch {
  std::string detection;  ///< R_a1, R_a2, L_a1, L_a2
  bool even = true;
  StateVector state;      ///< unnormalized, over the input register
};

/// Probe (|R⟩+|L⟩)/√2 split by BS into a1/a2, routed by CPBS (R→↑, L→↓) into
/// the cavity holding spin1 (arm a1) or spin2 (arm a2), recombined by the
/// inverse CPBS, interfered at CPBS3 (L swaps arms) and sent through an HWP.
inline std::vector<PcdBranch> pcd_branches(const StateVector& state, const std::string& spin1,
                                           const std::string& spin2, const ScatterCoeffs& coeffs,
                                           const std::string& photon) {
  const std::string dir = direction_label(photon), path = photon + ".path";
  const StateVector probe = StateVector::basis(
      Register({sub::polarization(photon), sub::direction(dir), sub::path(path, {"a1", "a2"})}), {"H", "↑", "a1"});
  StateVector s = tensor(probe, state);
  s = apply_element(s, OpticalElement::bs(), {path});
  s = apply_element(s, OpticalElement::cpbs(), {photon, dir});
  auto arms = project_all(s, {path});
  arms[0] = scatter(arms[0], photon, spin1, coeffs);
  arms[1] = scatter(arms[1], photon, spin2, coeffs);
  const Register path_reg({sub::path(path, {"a1", "a2"})});
  s = tensor(arms[0], StateVector::basis(path_reg, {"a1"})) + tensor(arms[1], StateVector::basis(path_reg, {"a2"}));
  s = apply_element(s, OpticalElement::cpbs(), {photon, dir});
  if (project(s, {dir}, {"↓"}).norm2() > kTolerance) throw Error("pcd(): probe left the detection port");
  s = project(s, {dir}, {"↑"});
  s = apply_element(s, OpticalElement::cpbs(), {photon, path});
  s = apply_element(s, OpticalElement::hwp(), {photon});
  s = apply_map(s, pol::circular().adjoint(), {photon});
  auto out = project_all(s, {photon, path});
  return {{"R_a1", true, std::move(out[0])},
          {"R_a2", true, std::move(out[1])},
          {"L_a1", false, std::move(out[2])},
          {"L_a2", false, std::move(out[3])}};
}

inline void check_spin(const StateVector& s, const std::string& label, const char* where) {
  if (!s.reg().contains(label)) throw Error(std::string(where) + ": no subsystem '" + label + "'");
  if (s.reg().at(label).kind != Kind::spin) throw Error(std::string(where) + ": '" + label + "' is not a spin");
}

/// Ideal parity projection: even diag(1,0,0,−1), odd diag(0,1,−1,0) on the pair.
inline StateVector ideal_parity(const StateVector& s, const std::string& s1, const std::string& s2, bool even) {
  const LinearMap m = even ? LinearMap::from_rows({{1, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, -1}}, false)
                           : LinearMap::from_rows({{0, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, -1, 0}, {0, 0, 0, 0}}, false);
  return apply_map(s, m, {s1, s2});
}

}  // namespace detail

/// Parity check of spin1, spin2. R clicks herald even parity, L clicks odd.
/// Each branch's fidelity is taken against the ideal parity projection of the
/// input state.
inline ProtocolResult pcd(const StateVector& state, const std::string& spin1, const std::string& spin2,
                          const ScatterCoeffs& coeffs, const PcdOptions& opt = {}) {
  coeffs.validate();
  detail::check_eta_in(opt.eta_in);
  detail::check_spin(state, spin1, "pcd()");
  detail::check_spin(state, spin2, "pcd()");
  if (spin1 == spin2) throw Error("pcd(): spins must differ");
  if (!state.is_normalized()) throw Error("pcd(): input state must be normalized");
  if (opt.probe) {
    const auto& pr = *opt.probe;
    if (pr.reg().size() != 1 || pr.reg()[0].kind != Kind::polarization || !pr.is_normalized() ||
        std::norm(inner(pol::circular_state(pr.reg()[0].label, 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)), pr)) <
            1.0 - kTolerance)
      throw Error("pcd(): probe must be (|R> + |L>)/sqrt(2)");
  }
  const double scale = opt.eta_in.value_or(1.0);
  ProtocolResult res;
  for (auto& b : detail::pcd_branches(state, spin1, spin2, coeffs, opt.photon)) {
    HeraldedOutcome o;
    o.detection = b.detection;
    const double p = b.state.norm2();
    o.probability = p * scale;
    if (p >= kPruneThreshold) {
      o.post = o.raw = Ensemble::pure(b.state);
      const StateVector ideal = detail::ideal_parity(state, spin1, spin2, b.even);
      if (ideal.norm2() >= kPruneThreshold) o.fidelity = fidelity(b.state, ideal.normalized());
    }
    res.outcomes.push_back(std::move(o));
  }
  res.discarded = 1.0 - res.heralded();
  return res;
}

inline bool is_even_detection(std::string_view d) { return !d.empty() && d.front() == 'R'; }

// ---------------------------------------------------------------------------
// Extension

/// Joins a GHZ state (|↑…↑⟩ − |↓…↓⟩)/√2 and a Bell pair (|↑↑⟩ − |↓↓⟩)/√2 that
/// share a node. PCD on the co-located spins (z, z'), Hadamard and Z-basis
/// measurement of both, then corrections on the far Bell spin e_d:
/// even parity → Z if m1⊕m2 = 1; odd parity → X, then Z if m1⊕m2 = 1.
/// The result lives on the GHZ labels without z, followed by e_d. Outcomes are
/// resolved by detector and measurement: "R_a1|↑↓" etc.
inline ProtocolResult extend_chain(const StateVector& ghz_state, const StateVector& bell,
                                   const std::pair<std::string, std::string>& joint, const ScatterCoeffs& coeffs) {
  coeffs.validate();
  const auto& [z, zp] = joint;
  detail::check_spin(ghz_state, z, "extend_chain()");
  detail::check_spin(bell, zp, "extend_chain()");
  if (bell.reg().size() != 2) throw Error("extend_chain(): bell state must hold exactly two spins");
  for (const auto& s : ghz_state.reg().subsystems())
    if (s.kind != Kind::spin) throw Error("extend_chain(): GHZ register holds non-spin '" + s.label + "'");
  const std::string far = bell.reg()[0].label == zp ? bell.reg()[1].label : bell.reg()[0].label;
  if (bell.reg().at(far).kind != Kind::spin) throw Error("extend_chain(): '" + far + "' is not a spin");

  StateVector joined = tensor(ghz_state, bell);
  std::vector<std::string> out_labels;
  for (const auto& s : ghz_state.reg().subsystems())
    if (s.label != z) out_labels.push_back(s.label);
  out_labels.push_back(far);
  const StateVector target = ghz(out_labels, -1.0);

  static const char* kM[] = {"↑", "↓"};
  ProtocolResult res;
  const double n0 = joined.norm2();
  for (auto& b : detail::pcd_branches(joined, z, zp, coeffs, "p")) {
    StateVector s = apply_map(apply_map(b.state, gate::h(), {z}), gate::h(), {zp});
    auto ms = project_all(s, {z, zp});
    for (std::size_t m = 0; m < 4; ++m) {
      const std::size_t m1 = m >> 1, m2 = m & 1u;
      std::vector<Correction> fix;
      if (!b.even) fix.push_back({"X", far});
      if ((m1 ^ m2) == 1) fix.push_back({"Z", far});
      res.outcomes.push_back(detail::make_outcome(b.detection + "|" + kM[m1] + kM[m2], {ms[m]}, fix, target, 1.0));
    }
  }
  res.discarded = n0 - res.heralded();
  return res;
}

/// Merges detector-resolved extension outcomes by parity class, giving the
/// 8 branches "even|↑↑" … "odd|↓↓".
inline ProtocolResult merge_by_parity(const ProtocolResult& r, const StateVector& target) {
  std::map<std::string, std::vector<const HeraldedOutcome*>> groups;
  std::vector<std::string> order;
  for (const auto& o : r.outcomes) {
    const auto bar = o.detection.find('|');
    const std::string key = (is_even_detection(o.detection) ? "even" : "odd") + o.detection.substr(bar);
    if (!groups.count(key)) order.push_back(key);
    groups[key].push_back(&o);
  }
  ProtocolResult out;
  out.discarded = r.discarded;
  for (const auto& key : order) {
    HeraldedOutcome m;
    m.detection = key;
    std::vector<HeraldedOutcome> parts;
    for (const auto* o : groups[key]) {
      m.probability += o->probability;
      m.correction = o->correction;
      parts.push_back(*o);
    }
    if (m.probability >= kPruneThreshold) {
      m.post = mixture(parts);
      m.fidelity = fidelity(*m.post, target);
    }
    out.outcomes.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Purification

struct PurificationState {
  double mu = 0.0;                      ///< weight of (|↑↑⟩ − |↓↓⟩)/√2
  int round = 0;
  double success_probability = 1.0;     ///< this round
  double cumulative_probability = 1.0;  ///< product of per-round success
};

struct PurificationResult {
  Ensemble state;
  double mu = 0.0;
  double success_probability = 0.0;
  double parity_rejected = 0.0;  ///< cross-parity PCD outcomes
  double lost = 0.0;             ///< probe loss in the two PCDs
};

/// The mixture μ|Φ⁻⟩⟨Φ⁻| + (1−μ)|Φ⁺⟩⟨Φ⁺| over (e_a, e_b).
inline Ensemble bell_mixture(double mu, const std::string& a = "e_a", const std::string& b = "e_b") {
  if (!(mu >= 0.0 && mu <= 1.0)) throw Error("mu must lie in [0, 1]");
  return Ensemble({{mu, ghz({a, b}, -1.0)}, {1.0 - mu, ghz({a, b}, 1.0)}});
}

/// One purification round on two copies of `rho` (two spins, Alice's first).
/// Both copies are Hadamard-rotated, Alice checks (A, A') and Bob (B, B') with
/// the PCD; matching parities are kept (odd-odd gets X on A and B). A and B
/// are then measured in the Hadamard basis, A' gets Z when the results differ,
/// and a final Hadamard on A', B' restores the Bell basis. The survivors are
/// renamed to the original labels.
inline PurificationResult purify_ensemble(const Ensemble& rho, const ScatterCoeffs& coeffs_a,
                                          const ScatterCoeffs& coeffs_b) {
  if (rho.reg().size() != 2) throw Error("purify_ensemble(): need a two-spin state");
  const std::string A = rho.reg()[0].label, B = rho.reg()[1].label;
  const std::string Ap = A + "'", Bp = B + "'";
  const auto h = gate::h();
  std::vector<StateVector> kept;
  double rejected = 0.0;
  for (const auto& mi : rho.members())
    for (const auto& mj : rho.members()) {
      const double w = mi.weight * mj.weight;
      if (w <= 0.0) continue;
      StateVector s = tensor(mi.state, relabel(relabel(mj.state, A, Ap), B, Bp));
      for (const auto& l : {A, B, Ap, Bp}) s = apply_map(s, h, {l});
      for (auto& ba : detail::pcd_branches(s, A, Ap, coeffs_a, "pa"))
        for (auto& bb : detail::pcd_branches(ba.state, B, Bp, coeffs_b, "pb")) {
          if (ba.even != bb.even) {
            rejected += w * bb.state.norm2();
            continue;
          }
          StateVector t = bb.state;
          if (!ba.even) t = apply_corrections(t, {{"X", A}, {"X", B}});
          t = apply_map(apply_map(t, h, {A}), h, {B});
          auto ms = project_all(t, {A, B});
          for (std::size_t m = 0; m < 4; ++m) {
            StateVector u = ms[m];
            if ((m >> 1) != (m & 1u)) u = apply_map(u, gate::z(), {Ap});
            u = apply_map(apply_map(u, h, {Ap}), h, {Bp});
            kept.push_back(relabel(relabel(u, Ap, A), Bp, B).scaled(std::sqrt(w)));
          }
        }
    }
  PurificationResult r{Ensemble::from_branches(kept)};
  r.success_probability = detail::norm2_sum(kept);
  r.parity_rejected = rejected;
  r.lost = 1.0 - r.success_probability - rejected;
  r.mu = fidelity(r.state, ghz({A, B}, -1.0));
  return r;
}

struct PurifyRoundResult {
  PurificationState accepted;
  double discarded_probability = 0.0;
};

/// Full state-evolution round starting from bell_mixture(mu).
inline PurifyRoundResult purify_round(double mu, const ScatterCoeffs& coeffs) {
  const auto r = purify_ensemble(bell_mixture(mu), coeffs, coeffs);
  return {{r.mu, 1, r.success_probability, r.success_probability}, r.parity_rejected + r.lost};
}

/// Iterates μ ↦ μ²/(μ² + (1−μ)²); entry k holds round k+1.
inline std::vector<PurificationState> purify_analytic(double mu, int rounds) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw Error("mu must lie in [0, 1]");
  if (rounds < 0) throw Error("rounds must be >= 0");
  std::vector<PurificationState> out;
  double cumulative = 1.0;
  for (int k = 1; k <= rounds; ++k) {
    const double p = mu * mu + (1.0 - mu) * (1.0 - mu);
    mu = mu * mu / p;
    cumulative *= p;
    out.push_back({mu, k, p, cumulative});
  }
  return out;
}

/// Rounds of the recursion needed to exceed `target`, if it ever does.
inline std::optional<int> rounds_to_reach(double mu, double target, int max_rounds = 64) {
  if (mu > target) return 0;
  const auto table = purify_analytic(mu, max_rounds);
  for (const auto& s : table)
    if (s.mu > target) return s.round;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Chain runner

struct NodeSpec {
  std::string name;
  std::optional<CavityParams> cavity;  ///< empty: ideal coefficients

  ScatterCoeffs coeffs() const { return cavity ? resonant_coeffs(*cavity) : ideal_coeffs(); }
};

struct SegmentSpec {
  std::string name;
  std::string left, right;
  NoiseChannel noise_left, noise_right;
};

struct Scenario {
  std::vector<NodeSpec> nodes;
  std::vector<SegmentSpec> segments;
  int purify_rounds = 0;
  std::vector<std::string> extend_order;  ///< empty: segments after the first, in order
  std::optional<double> eta_in;
  std::vector<PlacedElement> pre_cavity;

  const NodeSpec& node(const std::string& n) const {
    for (const auto& x : nodes)
      if (x.name == n) return x;
    throw Error("scenario: unknown node '" + n + "'");
  }

  const SegmentSpec& segment(const std::string& n) const {
    for (const auto& x : segments)
      if (x.name == n) return x;
    throw Error("scenario: unknown segment '" + n + "'");
  }

  std::vector<std::string> resolved_order() const {
    if (!extend_order.empty()) return extend_order;
    std::vector<std::string> o;
    for (std::size_t k = 1; k < segments.size(); ++k) o.push_back(segments[k].name);
    return o;
  }

  void validate() const {
    if (nodes.empty()) throw Error("scenario: no nodes");
    if (segments.empty()) throw Error("scenario: no segments");
    if (purify_rounds < 0) throw Error("scenario: purify_rounds must be >= 0");
    detail::check_eta_in(eta_in);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].cavity) nodes[i].cavity->validate();
      for (std::size_t j = 0; j < i; ++j)
        if (nodes[j].name == nodes[i].name) throw Error("scenario: duplicate node '" + nodes[i].name + "'");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& s = segments[i];
      (void)node(s.left);
      (void)node(s.right);
      if (s.left == s.right) throw Error("scenario: segment '" + s.name + "' joins a node to itself");
      s.noise_left.validate();
      s.noise_right.validate();
      for (std::size_t j = 0; j < i; ++j)
        if (segments[j].name == s.name) throw Error("scenario: duplicate segment '" + s.name + "'");
    }
    const auto order = resolved_order();
    std::vector<std::string> used{segments.front().name};
    std::vector<std::string> visited{segments.front().left, segments.front().right};
    std::string end = segments.front().right;
    for (const auto& name : order) {
      const auto& s = segment(name);
      if (std::find(used.begin(), used.end(), name) != used.end())
        throw Error("scenario: segment '" + name + "' is used twice");
      if (s.left != end)
        throw Error("scenario: segment '" + name + "' starts at '" + s.left + "' but the chain ends at '" + end + "'");
      if (std::find(visited.begin(), visited.end(), s.right) != visited.end())
        throw Error("scenario: segment '" + name + "' closes a loop at '" + s.right + "'");
      used.push_back(name);
      visited.push_back(s.right);
      end = s.right;
    }
    if (used.size() != segments.size())
      for (const auto& s : segments)
        if (std::find(used.begin(), used.end(), s.name) == used.end())
          throw Error("scenario: segment '" + s.name + "' is not attached to the chain");
  }
};

struct StageReport {
  std::string stage;          ///< "distribute", "purify" or "extend"
  std::string subject;        ///< segment name or joint node
  double probability = 0.0;   ///< success of this step alone
  double cumulative = 0.0;    ///< heralding probability of the resulting state
  double fidelity = 0.0;
  std::vector<HeraldedOutcome> branches;
};

struct ChainReport {
  std::vector<StageReport> stages;
  std::vector<std::string> parties;  ///< spin labels of the final state
  double fidelity = 0.0;             ///< against (|↑…↑⟩ − |↓…↓⟩)/√2
  double probability = 0.0;
  std::optional<Ensemble> state;
};

inline std::string chain_spin(const std::string& node, const std::string& segment) { return node + "/" + segment; }

namespace detail {

inline Ensemble relabel_all(const Ensemble& e, const std::vector<std::string>& labels) {
  std::vector<Ensemble::Member> ms;
  for (const auto& m : e.members()) {
    StateVector s = m.state;
    for (std::size_t k = 0; k < labels.size(); ++k) s = relabel(s, s.reg()[k].label, labels[k]);
    ms.push_back({m.weight, s});
  }
  return Ensemble(std::move(ms));
}

inline std::vector<std::string> labels_of(const Register& r) {
  std::vector<std::string> l;
  for (const auto& s : r.subsystems()) l.push_back(s.label);
  return l;
}

}  // namespace detail

/// Distributes every segment, purifies each `purify_rounds` times and joins
/// the segments left to right. Probability bookkeeping: a purification round
/// consumes two copies (P ← P²·p), an extension consumes the chain and one
/// segment (P ← P_chain·P_segment·p).
inline ChainReport run_chain(const Scenario& sc) {
  sc.validate();
  ChainReport rep;
  struct Held {
    Ensemble state;
    double probability;
  };
  std::map<std::string, Held> held;
  for (const auto& seg : sc.segments) {
    const auto& L = sc.node(seg.left);
    const auto& R = sc.node(seg.right);
    DistributionOptions opt{sc.eta_in, sc.pre_cavity};
    const auto d = distribute_bell(seg.noise_left, seg.noise_right, L.coeffs(), R.coeffs(), opt);
    const double p = d.heralded();
    if (p < kPruneThreshold) throw Error("segment '" + seg.name + "' never heralds");
    const std::vector<std::string> labels{chain_spin(L.name, seg.name), chain_spin(R.name, seg.name)};
    Ensemble e = detail::relabel_all(mixture(d.outcomes), labels);
    rep.stages.push_back({"distribute", seg.name, p, p, fidelity(e, ghz(labels, -1.0)), d.outcomes});
    for (int k = 0; k < sc.purify_rounds; ++k) {
      const auto pr = purify_ensemble(e, L.coeffs(), R.coeffs());
      if (pr.success_probability < kPruneThreshold) throw Error("segment '" + seg.name + "': purification never succeeds");
      e = pr.state;
      const double cum = rep.stages.back().cumulative;
      rep.stages.push_back({"purify", seg.name, pr.success_probability, cum * cum * pr.success_probability, pr.mu, {}});
    }
    held.emplace(seg.name, Held{e, rep.stages.back().cumulative});
  }

  const auto& first = sc.segments.front();
  Held chain = held.at(first.name);
  std::string end_segment = first.name;
  for (const auto& name : sc.resolved_order()) {
    const auto& seg = sc.segment(name);
    const Held& next = held.at(name);
    const std::pair<std::string, std::string> joint{chain_spin(seg.left, end_segment), chain_spin(seg.left, seg.name)};
    const ScatterCoeffs c = sc.node(seg.left).coeffs();
    std::vector<StateVector> branches;
    double p_ext = 0.0;
    for (const auto& a : chain.state.members())
      for (const auto& b : next.state.members()) {
        const double w = a.weight * b.weight;
        if (w <= 0.0) continue;
        const auto r = extend_chain(a.state, b.state, joint, c);
        for (const auto& o : r.outcomes) {
          p_ext += w * o.probability;
          if (!o.post) continue;
          for (const auto& m : o.post->members()) branches.push_back(m.state.scaled(std::sqrt(w * o.probability * m.weight)));
        }
      }
    if (p_ext < kPruneThreshold) throw Error("extension at '" + seg.left + "' never succeeds");
    Ensemble e = Ensemble::from_branches(branches);
    chain = {e, chain.probability * next.probability * p_ext};
    end_segment = name;
    rep.stages.push_back({"extend", seg.left, p_ext, chain.probability,
                          fidelity(e, ghz(detail::labels_of(e.reg()), -1.0)), {}});
  }
  rep.parties = detail::labels_of(chain.state.reg());
  rep.fidelity = fidelity(chain.state, ghz(rep.parties, -1.0));
  rep.probability = chain.probability;
  rep.state = chain.state;
  return rep;
}

}  // namespace qdrep
