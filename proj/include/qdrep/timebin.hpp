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
 * @file timebin.hpp
 * @brief Linear-optics elements, the polarization-to-time-bin encoder, fiber
 *        noise, and the noise-rejecting decoder.
 *
 * A photon labelled "a" owns the subsystems "a" (polarization), "a.t" (time
 * bin) and, after decoding, "a.dir" (propagation direction). Time bins are a
 * single qudit whose level names record the arm taken at each unbalanced
 * interferometer: "s"/"l" after the encoder, "ss".."ll" after the first
 * decoder stage, "sss".."lll" after the second. The decoder then collapses the
 * register to the two arrival classes s' and l'.
 *
 * Phase conventions: PBS transmits H (direction ↑ / port 0) and reflects V;
 * CPBS transmits R and reflects L; QWP maps H→R, V→L; HWP is the Hadamard
 * R→(R+L)/√2, L→(R−L)/√2; PHASE(φ) multiplies V by e^{iφ}; BS is the path
 * Hadamard; PC is a bit flip H↔V gated on time-bin levels.
 */

#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qdrep/interface.hpp"
#include "qdrep/qcore.hpp"

namespace qdrep {

inline std::string time_label(const std::string& photon) { return photon + ".t"; }

/// Polarization rotation of one fiber. The early bin sees U_s|H⟩ = δ|H⟩+η|V⟩,
/// the late bin U_l|H⟩ = δ_l|H⟩+η_l|V⟩; the symmetric (collective) model has
/// U_s = U_l.
struct NoiseChannel {
  cplx delta{1.0}, eta{0.0};
  cplx delta_l{1.0}, eta_l{0.0};

  static NoiseChannel symmetric(cplx delta, cplx eta) { return {delta, eta, delta, eta}; }

  /// δ = cos θ, η = e^{iφ} sin θ.
  static NoiseChannel from_angles(double theta, double phi) {
    return symmetric(std::cos(theta), std::polar(std::sin(theta), phi));
  }

  static NoiseChannel asymmetric(double theta, double phi, double theta_l, double phi_l) {
    return {std::cos(theta), std::polar(std::sin(theta), phi), std::cos(theta_l), std::polar(std::sin(theta_l), phi_l)};
  }

  bool is_symmetric(double tol = kTolerance) const {
    return std::abs(delta - delta_l) <= tol && std::abs(eta - eta_l) <= tol;
  }

  void validate() const {
    if (std::abs(std::norm(delta) + std::norm(eta) - 1.0) > kTolerance ||
        std::abs(std::norm(delta_l) + std::norm(eta_l) - 1.0) > kTolerance)
      throw Error("NoiseChannel: |delta|^2 + |eta|^2 must equal 1");
  }

  static LinearMap rotation(cplx d, cplx e) {
    return LinearMap::from_rows({{d, -std::conj(e)}, {e, std::conj(d)}}, true);
  }
  LinearMap early() const { return rotation(delta, eta); }
  LinearMap late() const { return rotation(delta_l, eta_l); }
};

struct OpticalElement {
  enum class Type { PBS, CPBS, QWP, HWP, PC, DELAY, BS, PHASE };

  Type type = Type::QWP;
  double angle = 0.0;               ///< PHASE
  std::vector<std::string> window;  ///< PC: time-bin levels that fire the cell
  std::string delayed = "H";        ///< DELAY: polarization sent through the long arm

  static OpticalElement pbs() { return {Type::PBS, 0.0, {}, "H"}; }
  static OpticalElement cpbs() { return {Type::CPBS, 0.0, {}, "H"}; }
  static OpticalElement qwp() { return {Type::QWP, 0.0, {}, "H"}; }
  static OpticalElement hwp() { return {Type::HWP, 0.0, {}, "H"}; }
  static OpticalElement bs() { return {Type::BS, 0.0, {}, "H"}; }
  static OpticalElement phase(double phi) { return {Type::PHASE, phi, {}, "H"}; }
  static OpticalElement pc(std::vector<std::string> window) { return {Type::PC, 0.0, std::move(window), "H"}; }
  static OpticalElement delay(std::string polarization) { return {Type::DELAY, 0.0, {}, std::move(polarization)}; }
};

inline std::string_view to_string(OpticalElement::Type t) {
  using T = OpticalElement::Type;
  switch (t) {
    case T::PBS: return "PBS";
    case T::CPBS: return "CPBS";
    case T::QWP: return "QWP";
    case T::HWP: return "HWP";
    case T::PC: return "PC";
    case T::DELAY: return "DELAY";
    case T::BS: return "BS";
    case T::PHASE: return "PHASE";
  }
  return "?";
}

namespace detail {

/// Rewrites the target subsystems through a digit-level routing rule. The rule
/// returns the new target digits, or nothing for configurations that must not
/// carry amplitude. Routing must be injective on the support.
inline StateVector route(const StateVector& state, const std::vector<std::string>& targets,
                         const std::vector<Subsystem>& replacement,
                         const std::function<std::optional<std::vector<std::size_t>>(const std::vector<std::size_t>&)>& rule) {
  const auto pos = positions(state.reg(), targets);
  if (replacement.size() != pos.size()) throw Error("route(): replacement must match targets");
  auto subs = state.reg().subsystems();
  for (std::size_t k = 0; k < pos.size(); ++k) subs[pos[k]] = replacement[k];
  Register out_reg(std::move(subs));
  std::vector<cplx> out(out_reg.dimension());
  std::vector<std::size_t> in_digits(pos.size());
  for (std::size_t i = 0; i < state.dimension(); ++i) {
    if (state[i] == cplx{}) continue;
    for (std::size_t k = 0; k < pos.size(); ++k) in_digits[k] = state.reg().digit(i, pos[k]);
    const auto to = rule(in_digits);
    if (!to) {
      if (std::norm(state[i]) > kPruneThreshold)
        throw Error("route(): amplitude on an unroutable configuration " + state.reg().basis_label(i));
      continue;
    }
    auto d = state.reg().digits(i);
    for (std::size_t k = 0; k < pos.size(); ++k) d[pos[k]] = (*to)[k];
    out[out_reg.index(d)] += state[i];
  }
  StateVector result(std::move(out_reg), std::move(out));
  if (std::abs(result.norm2() - state.norm2()) > kTolerance * std::max(1.0, state.norm2()))
    throw Error("route(): routing is not injective on the state's support");
  return result;
}

/// Tensors `single` in and moves it directly after `anchor`.
inline StateVector insert_after(const StateVector& state, const std::string& anchor, const StateVector& single) {
  StateVector joined = tensor(state, single);
  std::vector<std::string> order;
  for (const auto& s : state.reg().subsystems()) {
    order.push_back(s.label);
    if (s.label == anchor)
      for (const auto& n : single.reg().subsystems()) order.push_back(n.label);
  }
  return permute(joined, order);
}

inline void expect_kind(const StateVector& s, const std::string& label, Kind k, OpticalElement::Type t) {
  if (s.reg().at(label).kind != k)
    throw Error(std::string(to_string(t)) + ": target '" + label + "' is not a " + std::string(to_string(k)));
}

/// Flip of a two-level target controlled by `control_state` (0/1) of a
/// polarization expressed in `basis`.
inline LinearMap controlled_flip(const LinearMap& basis, std::size_t control_state) {
  std::vector<cplx> m(16);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < 2; ++t) {
      const std::size_t to = c == control_state ? 1 - t : t;
      m[(c * 2 + to) * 4 + c * 2 + t] = 1.0;
    }
  const LinearMap b = kron(basis, gate::identity(2));
  return b * LinearMap(4, std::move(m), true) * b.adjoint();
}

}  // namespace detail

/// Applies one optical element. Targets by type:
///   PBS, CPBS: {polarization, two-port path};  QWP, HWP, PHASE: {polarization};
///   PC, DELAY: {polarization, timebin};        BS: {two-port path}.
inline StateVector apply_element(const StateVector& state, const OpticalElement& e,
                                 const std::vector<std::string>& targets) {
  using T = OpticalElement::Type;
  const std::size_t want = (e.type == T::QWP || e.type == T::HWP || e.type == T::PHASE || e.type == T::BS) ? 1 : 2;
  if (targets.size() != want)
    throw Error(std::string(to_string(e.type)) + ": expected " + std::to_string(want) + " target(s)");
  switch (e.type) {
    case T::PBS:
    case T::CPBS: {
      detail::expect_kind(state, targets[0], Kind::polarization, e.type);
      detail::expect_kind(state, targets[1], Kind::path, e.type);
      if (state.reg().at(targets[1]).dim() != 2) throw Error("beam splitter port register must have 2 levels");
      const LinearMap basis = e.type == T::PBS ? gate::identity(2) : pol::circular();
      return apply_map(state, detail::controlled_flip(basis, 1), targets);
    }
    case T::QWP:
      detail::expect_kind(state, targets[0], Kind::polarization, e.type);
      return apply_map(state, pol::circular(), targets);
    case T::HWP:
      detail::expect_kind(state, targets[0], Kind::polarization, e.type);
      return apply_map(state, pol::circular() * gate::h() * pol::circular().adjoint(), targets);
    case T::PHASE:
      detail::expect_kind(state, targets[0], Kind::polarization, e.type);
      return apply_map(state, gate::phase(e.angle), targets);
    case T::BS:
      detail::expect_kind(state, targets[0], Kind::path, e.type);
      if (state.reg().at(targets[0]).dim() != 2) throw Error("BS: path register must have 2 levels");
      return apply_map(state, gate::h(), targets);
    case T::PC: {
      detail::expect_kind(state, targets[0], Kind::polarization, e.type);
      detail::expect_kind(state, targets[1], Kind::timebin, e.type);
      const auto& bins = state.reg().at(targets[1]);
      for (const auto& w : e.window) (void)bins.level_index(w);
      const std::size_t n = bins.dim();
      std::vector<cplx> m(4 * n * n);
      for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t k = 0; k < n; ++k) {
          const bool fire = std::find(e.window.begin(), e.window.end(), bins.levels[k]) != e.window.end();
          const std::size_t to = fire ? 1 - p : p;
          m[(to * n + k) * 2 * n + p * n + k] = 1.0;
        }
      return apply_map(state, LinearMap(2 * n, std::move(m), true), targets);
    }
    case T::DELAY: {
      detail::expect_kind(state, targets[0], Kind::polarization, e.type);
      detail::expect_kind(state, targets[1], Kind::timebin, e.type);
      const auto& p = state.reg().at(targets[0]);
      const std::size_t slow = p.level_index(e.delayed);
      const auto& bins = state.reg().at(targets[1]);
      Subsystem grown = bins;
      grown.levels.clear();
      for (const auto& l : bins.levels) {
        grown.levels.push_back(l + "s");
        grown.levels.push_back(l + "l");
      }
      return detail::route(state, targets, {p, grown}, [slow](const std::vector<std::size_t>& d) {
        return std::optional<std::vector<std::size_t>>({d[0], d[1] * 2 + (d[0] == slow ? 1 : 0)});
      });
    }
  }
  throw Error("apply_element(): unknown element");
}

/// Polarization-to-time-bin encoder: α|H⟩+β|V⟩ ↦ |H⟩(α|s⟩+β|l⟩).
/// The V component takes the long arm and the Pockels cell, fired only in
/// the late bin, flips it back to H.
inline StateVector encode(const StateVector& state, const std::string& photon) {
  const std::string t = time_label(photon);
  const auto& bins = state.reg().at(t);
  if (bins.kind != Kind::timebin || bins.levels != std::vector<std::string>{"s", "l"})
    throw Error("encode(): '" + t + "' must be a fresh {s, l} time-bin register");
  if (project(state, {t}, {"l"}).norm2() > kPruneThreshold)
    throw Error("encode(): time-bin subsystem of '" + photon + "' is not in |s>");
  // Long arm for V: controlled shift s -> l on the two-level time register.
  const LinearMap long_arm = detail::controlled_flip(gate::identity(2), 1);
  const StateVector delayed = apply_map(state, long_arm, {photon, t});
  return apply_element(delayed, OpticalElement::pc({"l"}), {photon, t});
}

/// Fiber noise: the early bin gets U_s and the late bin U_l.
inline StateVector apply_noise(const StateVector& state, const std::string& photon, const NoiseChannel& ch) {
  ch.validate();
  const std::string t = time_label(photon);
  const auto& bins = state.reg().at(t);
  const std::size_t n = bins.dim();
  const LinearMap early = ch.early(), late = ch.late();
  std::vector<cplx> m(4 * n * n);
  for (std::size_t k = 0; k < n; ++k) {
    const LinearMap& u = bins.levels[k].front() == 'l' ? late : early;
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) m[(r * n + k) * 2 * n + c * n + k] = u(r, c);
  }
  return apply_map(state, LinearMap(2 * n, std::move(m), true), {photon, t});
}

/// Arrival classes after decoding. s' holds the component whose polarization
/// the fiber left unchanged (routes sll, lls); l' the rotated one (ssl, lss).
inline const std::vector<std::string>& decoded_bins() {
  static const std::vector<std::string> bins{"s'", "l'"};
  return bins;
}

/// Noise-rejecting decoder: unbalanced interferometer delaying H, Pockels cell
/// on the sl/ls windows, PBS onto the direction register (H→↑, V→↓) with a
/// further delay on V, then collapse of the time register to {s', l'}.
inline StateVector decode(const StateVector& state, const std::string& photon) {
  const std::string t = time_label(photon);
  const std::string dir = direction_label(photon);
  if (state.reg().at(t).levels != std::vector<std::string>{"s", "l"})
    throw Error("decode(): time register of '" + photon + "' is already expanded");
  if (state.reg().contains(dir)) throw Error("decode(): '" + dir + "' already exists");

  StateVector s = apply_element(state, OpticalElement::delay("H"), {photon, t});
  s = apply_element(s, OpticalElement::pc({"sl", "ls"}), {photon, t});
  s = detail::insert_after(s, photon, StateVector::basis(Register({sub::direction(dir)}), {"↑"}));
  s = apply_element(s, OpticalElement::pbs(), {photon, dir});
  s = apply_element(s, OpticalElement::delay("V"), {photon, t});

  const Subsystem& bins = s.reg().at(t);
  std::vector<std::optional<std::size_t>> cls(bins.dim());
  for (std::size_t k = 0; k < bins.dim(); ++k) {
    const auto& l = bins.levels[k];
    if (l == "sll" || l == "lls") cls[k] = 0;
    if (l == "ssl" || l == "lss") cls[k] = 1;
  }
  return detail::route(s, {t}, {sub::timebin(t, decoded_bins())},
                       [&cls](const std::vector<std::size_t>& d) -> std::optional<std::vector<std::size_t>> {
                         if (!cls[d[0]]) return std::nullopt;
                         return std::vector<std::size_t>{*cls[d[0]]};
                       });
}

/// An element together with the subsystems it acts on.
struct PlacedElement {
  OpticalElement element;
  std::vector<std::string> targets;
};

inline StateVector run_script(StateVector state, const std::vector<PlacedElement>& script) {
  for (const auto& p : script) state = apply_element(state, p.element, p.targets);
  return state;
}

/// Parses "TYPE[(args)]@target[:target...]" items separated by ';' or ','
/// outside parentheses, e.g. "PHASE(pi)@b; QWP@a; PC(sl,ls)@a:a.t".
inline std::vector<PlacedElement> parse_script(const std::string& text) {
  std::vector<std::string> items;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if ((c == ';' || c == ',') && depth == 0) {
      items.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  items.push_back(cur);
  auto trim = [](std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
  };
  std::vector<PlacedElement> out;
  for (auto item : items) {
    item = trim(item);
    if (item.empty()) continue;
    const auto at = item.find('@');
    if (at == std::string::npos) throw Error("script item '" + item + "' has no '@target'");
    std::string head = trim(item.substr(0, at));
    std::string args;
    if (auto lp = head.find('('); lp != std::string::npos) {
      if (head.back() != ')') throw Error("script item '" + item + "': unbalanced parentheses");
      args = head.substr(lp + 1, head.size() - lp - 2);
      head = trim(head.substr(0, lp));
    }
    PlacedElement pe;
    std::stringstream ts(item.substr(at + 1));
    for (std::string tok; std::getline(ts, tok, ':');) pe.targets.push_back(trim(tok));
    using T = OpticalElement::Type;
    if (head == "PBS") pe.element = OpticalElement::pbs();
    else if (head == "CPBS") pe.element = OpticalElement::cpbs();
    else if (head == "QWP") pe.element = OpticalElement::qwp();
    else if (head == "HWP") pe.element = OpticalElement::hwp();
    else if (head == "BS") pe.element = OpticalElement::bs();
    else if (head == "DELAY") pe.element = OpticalElement::delay(trim(args));
    else if (head == "PC") {
      std::vector<std::string> w;
      std::stringstream as(args);
      for (std::string tok; std::getline(as, tok, ',');) w.push_back(trim(tok));
      pe.element = OpticalElement::pc(std::move(w));
    } else if (head == "PHASE") {
      const std::string a = trim(args);
      double phi = 0.0;
      if (a == "pi") phi = std::numbers::pi;
      else if (a == "-pi") phi = -std::numbers::pi;
      else if (a == "pi/2") phi = std::numbers::pi / 2;
      else {
        try {
          std::size_t used = 0;
          phi = std::stod(a, &used);
          if (used != a.size()) throw std::invalid_argument(a);
        } catch (const std::exception&) {
          throw Error("script item '" + item + "': bad PHASE angle '" + a + "'");
        }
      }
      pe.element = OpticalElement::phase(phi);
    } else {
      throw Error("script item '" + item + "': unknown element '" + head + "'");
    }
    // Single-photon shorthand: PC/DELAY@a means {a, a.t}.
    if ((pe.element.type == T::PC || pe.element.type == T::DELAY) && pe.targets.size() == 1)
      pe.targets.push_back(time_label(pe.targets[0]));
    out.push_back(std::move(pe));
  }
  return out;
}

}  // namespace qdrep
