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
 * @file sweep.hpp
 * @brief Parameter grids, sweep tables and their CSV / text rendering.
 *
 * Numbers are written with 12 significant digits in the shortest of fixed or
 * scientific notation, independent of the C locale. Grid points are emitted
 * with g outermost, then κ_s, γ, Δ (or μ for purification).
 */

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qdrep/cavity.hpp"
#include "qdrep/config.hpp"
#include "qdrep/metrics.hpp"
#include "qdrep/protocols.hpp"

namespace qdrep {

inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;  // folds -0
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 12);
  return std::string(buf.data(), res.ptr);
}

/// "a:b:step" (inclusive, points a + k·step), "x,y,z", or a single value.
inline std::vector<double> parse_grid(const std::string& spec, const std::string& name) {
  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double d = std::stod(s, &used);
      if (used == s.size() && std::isfinite(d)) return d;
    } catch (const std::exception&) {
    }
    throw Error("grid '" + name + "': '" + s + "' is not a finite number");
  };
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    const auto parts = split_list(spec, ':');
    if (parts.size() != 3) throw Error("grid '" + name + "': expected start:stop:step");
    const double a = num(parts[0]), b = num(parts[1]), step = num(parts[2]);
    if (!(step > 0.0)) throw Error("grid '" + name + "': step must be > 0");
    if (b < a) throw Error("grid '" + name + "': stop is below start");
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
    if (count > 1000000) throw Error("grid '" + name + "': more than 10^6 points");
    for (long k = 0; k < count; ++k) out.push_back(a + static_cast<double>(k) * step);
  } else {
    for (const auto& s : split_list(spec)) out.push_back(num(s));
  }
  if (out.empty()) throw Error("grid '" + name + "' is empty");
  return out;
}

enum class Quantity { coeffs, distribution, pcd, purify, chain };

inline std::optional<Quantity> parse_quantity(std::string_view s) {
  if (s == "coeffs") return Quantity::coeffs;
  if (s == "distribution") return Quantity::distribution;
  if (s == "pcd") return Quantity::pcd;
  if (s == "purify") return Quantity::purify;
  if (s == "chain") return Quantity::chain;
  return std::nullopt;
}

struct SweepConfig {
  Quantity quantity = Quantity::coeffs;
  std::vector<double> g{1.2}, kappa_s{0.2}, gamma{0.1}, delta{0.0}, mu{0.7};
  double kappa = 1.0;
  int rounds = 3;
  std::optional<double> eta_in;
  std::optional<Scenario> scenario;  ///< chain sweeps: nodes get the grid cavity

  void validate() const {
    for (const auto* grid : {&g, &kappa_s, &gamma, &delta, &mu}) {
      if (grid->empty()) throw Error("sweep: empty grid");
      for (double v : *grid)
        if (!std::isfinite(v)) throw Error("sweep: non-finite grid value");
    }
    for (double v : mu)
      if (v < 0.0 || v > 1.0) throw Error("sweep: mu must lie in [0, 1]");
    if (rounds < 0) throw Error("sweep: rounds must be >= 0");
    if (quantity == Quantity::chain && !scenario) throw Error("sweep: chain quantity needs a scenario config");
    detail::check_eta_in(eta_in);
  }
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline Table run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  Table t;
  auto cavity_points = [&](auto&& fn) {
    for (double g : cfg.g)
      for (double ks : cfg.kappa_s)
        for (double ga : cfg.gamma)
          for (double de : cfg.delta) fn(CavityParams{g, cfg.kappa, ks, ga, de, std::nullopt});
  };
  switch (cfg.quantity) {
    case Quantity::coeffs:
      t.header = {"g", "kappa_s", "gamma", "delta", "R_re", "R_im", "T_re", "T_im", "S_re", "S_im", "N_re", "N_im",
                  "R_abs", "T_abs", "S_abs", "N_abs", "P"};
      cavity_points([&](const CavityParams& p) {
        const FullCoeffs c = full_coeffs(p);
        t.rows.push_back({p.g, p.kappa_s, p.gamma, p.delta, c.R.real(), c.R.imag(), c.T.real(), c.T.imag(),
                          c.S.real(), c.S.imag(), c.N.real(), c.N.imag(), std::abs(c.R), std::abs(c.T),
                          std::abs(c.S), std::abs(c.N), c.total_probability()});
      });
      break;
    case Quantity::distribution:
    case Quantity::pcd: {
      const bool dist = cfg.quantity == Quantity::distribution;
      const std::string k = dist ? "d" : "p";
      t.header = {"g", "kappa_s", "gamma", "delta", "t_re", "t_im", "t0_re", "t0_im", "eta_" + k + "_even",
                  "eta_" + k + "_odd", "eta_" + k, "f_" + k + "_even", "f_" + k + "_odd", "eta_in_adjusted"};
      const double eta_in = cfg.eta_in.value_or(1.0);
      cavity_points([&](const CavityParams& p) {
        const ScatterCoeffs c = resonant_coeffs(p);
        const DistributionMetrics m = dist ? distribution_metrics(c, eta_in) : pcd_metrics(c, eta_in);
        t.rows.push_back({p.g, p.kappa_s, p.gamma, p.delta, c.t.real(), c.t.imag(), c.t0.real(), c.t0.imag(),
                          m.eta_even, m.eta_odd, m.eta, m.f_even, m.f_odd, *m.eta_in_adjusted});
      });
      break;
    }
    case Quantity::purify:
      t.header = {"mu0", "round", "mu", "success_probability", "cumulative_probability", "mu_simulated"};
      for (double mu0 : cfg.mu) {
        Ensemble e = bell_mixture(mu0);
        for (const auto& s : purify_analytic(mu0, cfg.rounds)) {
          const auto r = purify_ensemble(e, ideal_coeffs(), ideal_coeffs());
          e = r.state;
          t.rows.push_back({mu0, static_cast<double>(s.round), s.mu, s.success_probability, s.cumulative_probability,
                            r.mu});
        }
      }
      break;
    case Quantity::chain:
      t.header = {"g", "kappa_s", "gamma", "delta", "fidelity", "probability"};
      cavity_points([&](const CavityParams& p) {
        Scenario sc = *cfg.scenario;
        for (auto& n : sc.nodes) n.cavity = p;
        const ChainReport rep = run_chain(sc);
        t.rows.push_back({p.g, p.kappa_s, p.gamma, p.delta, rep.fidelity, rep.probability});
      });
      break;
  }
  return t;
}

inline void write_csv(std::ostream& out, const Table& t) {
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

/// Right-aligned columns, one block per table.
inline void write_text(std::ostream& out, const Table& t) {
  std::vector<std::vector<std::string>> cells{t.header};
  for (const auto& row : t.rows) {
    std::vector<std::string> r;
    for (double v : row) r.push_back(format_number(v));
    cells.push_back(std::move(r));
  }
  std::vector<std::size_t> width(t.header.size(), 0);
  for (const auto& r : cells)
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  for (const auto& r : cells) {
    for (std::size_t i = 0; i < r.size(); ++i)
      out << (i ? "  " : "") << std::setw(static_cast<int>(width[i])) << r[i];
    out << '\n';
  }
}

}  // namespace qdrep
