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

// qdrep: command-line driver for the repeater simulator.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include <algorithm>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qdrep/config.hpp"
#include "qdrep/qdrep.hpp"
#include "qdrep/sweep.hpp"

namespace {

using namespace qdrep;

class UsageError : public Error {
 public:
  using Error::Error;
};

template <class T>
T read_value(const Config& cfg, const ConfigEntry& e) {
  if constexpr (std::is_same_v<T, double>) return cfg.number(e);
  else if constexpr (std::is_same_v<T, int>) return cfg.integer(e);
  else if constexpr (std::is_same_v<T, bool>) return cfg.boolean(e);
  else return e.value;
}

/// Options of one subcommand that can also be read from the `[<subcommand>]`
/// section of a config file. Values given on the command line win.
class Settings {
 public:
  Settings(CLI::App* app, std::string section) : app_(app), section_(std::move(section)) {
    app_->add_option("--config", config_path_, "Config file; flags override its [" + section_ + "] section");
  }

  template <class T>
  CLI::Option* option(const std::string& flag, T& var, const std::string& help) {
    CLI::Option* o = app_->add_option("--" + flag, var, help)->capture_default_str();
    bind(o, flag, var);
    return o;
  }

  CLI::Option* flag(const std::string& flag, bool& var, const std::string& help) {
    CLI::Option* o = app_->add_flag("--" + flag, var, help);
    bind(o, flag, var);
    return o;
  }

  const std::string& config_path() const { return config_path_; }

  /// Loads the config (if any) and fills options not given as flags.
  std::optional<Config> apply() {
    if (config_path_.empty()) return std::nullopt;
    Config cfg;
    try {
      cfg = load_config(config_path_);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (const auto* s = cfg.section(section_)) {
      for (const auto& e : s->entries)
        if (std::find(keys_.begin(), keys_.end(), e.key) == keys_.end())
          cfg.fail(e, "unknown key '" + e.key + "' in section [" + section_ + "]", false);
      for (auto& b : binders_) b(cfg, *s);
    }
    return cfg;
  }

 private:
  template <class T>
  void bind(CLI::Option* o, const std::string& flag, T& var) {
    std::string key = flag;
    std::replace(key.begin(), key.end(), '-', '_');
    keys_.push_back(key);
    binders_.push_back([o, &var, key](const Config& cfg, const ConfigSection& s) {
      if (o->count() > 0) return;
      if (const auto* e = s.find(key)) var = read_value<T>(cfg, *e);
    });
  }

  CLI::App* app_;
  std::string section_;
  std::string config_path_;
  std::vector<std::string> keys_;
  std::vector<std::function<void(const Config&, const ConfigSection&)>> binders_;
};

struct CavityOptions {
  double g = 1.2, kappa = 1.0, kappa_s = 0.2, gamma = 0.1, delta = 0.0;
  bool ideal = false;

  void add(Settings& s) {
    s.option("g", g, "Dipole-cavity coupling g/kappa");
    s.option("kappa", kappa, "Cavity decay rate (unit)");
    s.option("kappa-s", kappa_s, "Side leakage kappa_s/kappa");
    s.option("gamma", gamma, "Dipole decay rate gamma/kappa");
    s.option("delta", delta, "Detuning Delta/kappa");
    s.flag("ideal", ideal, "Use ideal coefficients r=1, t=0, r0=0, t0=-1");
  }

  CavityParams params() const { return {g, kappa, kappa_s, gamma, delta, std::nullopt}; }
  ScatterCoeffs coeffs() const { return ideal ? ideal_coeffs() : resonant_coeffs(params()); }
};

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw Error("failed writing '" + path + "'");
}

std::string fixed6(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(6) << (v == 0.0 ? 0.0 : v);
  return ss.str();
}

void print_outcomes(std::ostream& out, const ProtocolResult& r) {
  out << std::left << std::setw(14) << "detection" << std::setw(16) << "probability" << std::setw(16) << "fidelity"
      << "correction\n";
  for (const auto& o : r.outcomes) {
    // Arrow glyphs are three bytes wide but one column on screen.
    std::size_t extra = 0;
    for (unsigned char c : o.detection)
      if ((c & 0xC0) == 0x80) ++extra;
    out << std::setw(static_cast<int>(14 + extra)) << o.detection << std::setw(16) << format_number(o.probability)
        << std::setw(16) << (o.fidelity ? format_number(*o.fidelity) : "-") << to_string(o.correction) << '\n';
  }
  out << std::right;
  out << "heralded " << format_number(r.heralded()) << ", discarded " << format_number(r.discarded) << '\n';
}

void write_outcomes_csv(const std::string& path, const ProtocolResult& r) {
  auto out = open_output(path);
  out << "detection,probability,fidelity,correction\n";
  for (const auto& o : r.outcomes)
    out << o.detection << ',' << format_number(o.probability) << ',' << (o.fidelity ? format_number(*o.fidelity) : "")
        << ',' << to_string(o.correction) << '\n';
  finish_output(out, path);
}

std::vector<NoiseChannel> noise_list(std::size_t n, const std::string& theta, const std::string& phi,
                                     const std::string& theta_late, const std::string& phi_late) {
  auto values = [n](const std::string& spec, const std::string& name, const std::vector<double>* fallback) {
    if (spec.empty() && fallback) return *fallback;
    std::vector<double> v = spec.empty() ? std::vector<double>{0.0} : parse_grid(spec, name);
    if (v.size() == 1) v.assign(n, v.front());
    if (v.size() != n) throw UsageError("--" + name + ": need 1 or " + std::to_string(n) + " values");
    return v;
  };
  try {
    const auto t = values(theta, "theta", nullptr);
    const auto p = values(phi, "phi", nullptr);
    const auto tl = values(theta_late, "theta-late", &t);
    const auto pl = values(phi_late, "phi-late", &p);
    std::vector<NoiseChannel> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(NoiseChannel::asymmetric(t[k], p[k], tl[k], pl[k]));
    return out;
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qdrep: heralded quantum-dot repeater simulator"};
  app.require_subcommand(1);
  std::function<void()> run;

  // coeffs ------------------------------------------------------------------
  auto* coeffs_cmd = app.add_subcommand("coeffs", "Cavity reflection/transmission coefficients at one point");
  Settings coeffs_set(coeffs_cmd, "coeffs");
  CavityOptions coeffs_cav;
  coeffs_cav.add(coeffs_set);
  std::string coeffs_csv;
  coeffs_set.option("csv", coeffs_csv, "Also write the row as CSV to this file");
  coeffs_cmd->callback([&] {
    run = [&] {
      coeffs_set.apply();
      const FullCoeffs f = full_coeffs(coeffs_cav.params());
      const ScatterCoeffs c = resonant_coeffs(coeffs_cav.params());
      std::cout << "R = " << format_number(f.R.real()) << " + " << format_number(f.R.imag()) << "i  |R| = "
                << format_number(std::abs(f.R)) << '\n'
                << "T = " << format_number(f.T.real()) << " + " << format_number(f.T.imag()) << "i  |T| = "
                << format_number(std::abs(f.T)) << '\n'
                << "S = " << format_number(f.S.real()) << " + " << format_number(f.S.imag()) << "i  |S| = "
                << format_number(std::abs(f.S)) << '\n'
                << "N = " << format_number(f.N.real()) << " + " << format_number(f.N.imag()) << "i  |N| = "
                << format_number(std::abs(f.N)) << '\n'
                << "P = " << format_number(f.total_probability()) << '\n'
                << "cold: r0 = " << format_number(c.r0.real()) << " + " << format_number(c.r0.imag())
                << "i, t0 = " << format_number(c.t0.real()) << " + " << format_number(c.t0.imag()) << "i\n";
      if (!coeffs_csv.empty()) {
        SweepConfig sc;
        sc.quantity = Quantity::coeffs;
        sc.g = {coeffs_cav.g};
        sc.kappa = coeffs_cav.kappa;
        sc.kappa_s = {coeffs_cav.kappa_s};
        sc.gamma = {coeffs_cav.gamma};
        sc.delta = {coeffs_cav.delta};
        auto out = open_output(coeffs_csv);
        write_csv(out, run_sweep(sc));
        finish_output(out, coeffs_csv);
      }
    };
  });

  // distribute --------------------------------------------------------------
  auto* dist_cmd = app.add_subcommand("distribute", "Heralded Bell (or GHZ) distribution over noisy fibers");
  Settings dist_set(dist_cmd, "distribute");
  CavityOptions dist_cav;
  dist_cav.add(dist_set);
  int parties = 2;
  std::string theta, phi, theta_late, phi_late, dist_csv;
  double dist_eta_in = 1.0;
  dist_set.option("parties", parties, "Number of parties (2 = Bell pair, up to 5)");
  dist_set.option("theta", theta, "Fiber rotation angle per photon (one value or a comma list)");
  dist_set.option("phi", phi, "Fiber rotation phase per photon");
  dist_set.option("theta-late", theta_late, "Late-bin rotation angle (defaults to --theta)");
  dist_set.option("phi-late", phi_late, "Late-bin rotation phase (defaults to --phi)");
  dist_set.option("eta-in", dist_eta_in, "Input-coupling efficiency per photon");
  dist_set.option("csv", dist_csv, "Write the outcome table as CSV to this file");
  dist_cmd->callback([&] {
    run = [&] {
      dist_set.apply();
      if (parties < 2 || parties > static_cast<int>(kMaxGhzParties))
        throw UsageError("--parties must be between 2 and " + std::to_string(kMaxGhzParties));
      const auto n = static_cast<std::size_t>(parties);
      const auto noise = noise_list(n, theta, phi, theta_late, phi_late);
      DistributionOptions opt{dist_eta_in, {}};
      const ScatterCoeffs c = dist_cav.coeffs();
      const ProtocolResult r = n == 2 ? distribute_bell(noise[0], noise[1], c, c, opt)
                                      : distribute_ghz(n, noise, std::vector<ScatterCoeffs>(n, c), opt);
      std::cout << (n == 2 ? "target (|↑↑⟩ - |↓↓⟩)/√2\n" : "target (|↑…↑⟩ + |↓…↓⟩)/√2\n");
      print_outcomes(std::cout, r);
      if (!dist_csv.empty()) write_outcomes_csv(dist_csv, r);
    };
  });

  // pcd ---------------------------------------------------------------------
  auto* pcd_cmd = app.add_subcommand("pcd", "Parity-check detector on two spins");
  Settings pcd_set(pcd_cmd, "pcd");
  CavityOptions pcd_cav;
  pcd_cav.add(pcd_set);
  double spin1 = std::numbers::pi / 2, spin2 = std::numbers::pi / 2, pcd_eta_in = 1.0;
  std::string pcd_csv;
  pcd_set.option("spin1", spin1, "Bloch polar angle of spin 1: cos(a/2)|↑⟩ + sin(a/2)|↓⟩");
  pcd_set.option("spin2", spin2, "Bloch polar angle of spin 2");
  pcd_set.option("eta-in", pcd_eta_in, "Input-coupling efficiency of the probe");
  pcd_set.option("csv", pcd_csv, "Write the outcome table as CSV to this file");
  pcd_cmd->callback([&] {
    run = [&] {
      pcd_set.apply();
      auto spin = [](const std::string& l, double a) {
        return StateVector::single(sub::spin(l), {std::cos(a / 2), std::sin(a / 2)});
      };
      const StateVector s = tensor(spin("e_1", spin1), spin("e_2", spin2));
      PcdOptions opt;
      opt.eta_in = pcd_eta_in;
      const ProtocolResult r = pcd(s, "e_1", "e_2", pcd_cav.coeffs(), opt);
      std::cout << "fidelity against the ideal parity projection of the input\n";
      print_outcomes(std::cout, r);
      if (!pcd_csv.empty()) write_outcomes_csv(pcd_csv, r);
    };
  });

  // purify ------------------------------------------------------------------
  auto* pur_cmd = app.add_subcommand("purify", "Purification rounds: recursion and full simulation");
  Settings pur_set(pur_cmd, "purify");
  CavityOptions pur_cav;
  pur_cav.ideal = true;
  pur_cav.add(pur_set);
  bool practical = false;
  double mu = 0.7, target = 0.997;
  int rounds = 3;
  std::string pur_csv;
  pur_set.flag("practical", practical, "Simulate with the cavity coefficients instead of ideal ones");
  pur_set.option("mu", mu, "Initial weight of (|↑↑⟩ - |↓↓⟩)/√2");
  pur_set.option("rounds", rounds, "Number of rounds");
  pur_set.option("target", target, "Fidelity threshold to report the round count for");
  pur_set.option("csv", pur_csv, "Write the round table as CSV to this file");
  pur_cmd->callback([&] {
    run = [&] {
      pur_set.apply();
      if (mu < 0.0 || mu > 1.0) throw UsageError("--mu must lie in [0, 1]");
      if (rounds < 0) throw UsageError("--rounds must be >= 0");
      const ScatterCoeffs c = practical ? resonant_coeffs(pur_cav.params()) : ideal_coeffs();
      Table t;
      t.header = {"round", "mu", "success_probability", "cumulative_probability", "mu_simulated",
                  "success_simulated"};
      Ensemble e = bell_mixture(mu);
      for (const auto& s : purify_analytic(mu, rounds)) {
        const auto r = purify_ensemble(e, c, c);
        e = r.state;
        t.rows.push_back({static_cast<double>(s.round), s.mu, s.success_probability, s.cumulative_probability, r.mu,
                          r.success_probability});
      }
      write_text(std::cout, t);
      const auto need = rounds_to_reach(mu, target);
      std::cout << "target fidelity " << format_number(target) << ": ";
      if (need) {
        std::cout << "first exceeded after round " << *need;
        if (*need > 2) std::cout << " (two rounds give " << format_number(purify_analytic(mu, 2).back().mu) << ")";
      } else {
        std::cout << "never exceeded from mu = " << format_number(mu);
      }
      std::cout << '\n';
      if (!pur_csv.empty()) {
        auto out = open_output(pur_csv);
        write_csv(out, t);
        finish_output(out, pur_csv);
      }
    };
  });

  // chain -------------------------------------------------------------------
  auto* chain_cmd = app.add_subcommand("chain", "Run a repeater chain scenario from a config file");
  Settings chain_set(chain_cmd, "chain");
  std::string chain_csv;
  chain_set.option("csv", chain_csv, "Write the per-stage table as CSV to this file");
  chain_cmd->callback([&] {
    run = [&] {
      auto cfg = chain_set.apply();
      if (!cfg) throw UsageError("chain: --config is required");
      const Scenario sc = scenario_from_config(*cfg);
      const ChainReport rep = run_chain(sc);
      for (const auto& st : rep.stages) {
        std::cout << "[" << st.stage << " " << st.subject << "] probability " << fixed6(st.probability)
                  << ", cumulative " << fixed6(st.cumulative) << ", fidelity " << fixed6(st.fidelity) << '\n';
        if (!st.branches.empty()) {
          ProtocolResult pr{st.branches, 1.0};
          pr.discarded = 1.0 - pr.heralded();
          print_outcomes(std::cout, pr);
        }
      }
      std::cout << "parties";
      for (const auto& p : rep.parties) std::cout << ' ' << p;
      std::cout << "\nfidelity " << fixed6(rep.fidelity) << ", probability " << fixed6(rep.probability) << '\n';
      if (!chain_csv.empty()) {
        auto out = open_output(chain_csv);
        out << "stage,subject,probability,cumulative,fidelity\n";
        for (const auto& st : rep.stages)
          out << st.stage << ',' << st.subject << ',' << format_number(st.probability) << ','
              << format_number(st.cumulative) << ',' << format_number(st.fidelity) << '\n';
        finish_output(out, chain_csv);
      }
    };
  });

  // sweep -------------------------------------------------------------------
  auto* sweep_cmd = app.add_subcommand("sweep", "Parameter sweep written as CSV or a text table");
  Settings sweep_set(sweep_cmd, "sweep");
  std::string quantity, g_grid = "1.2", ks_grid = "0.2", gamma_grid = "0.1", delta_grid = "0", mu_grid = "0.7";
  std::string output = "-", format = "csv";
  double kappa = 1.0, sweep_eta_in = 1.0;
  int sweep_rounds = 3;
  sweep_set.option("quantity", quantity, "coeffs | distribution | pcd | purify | chain");
  sweep_set.option("g-grid", g_grid, "g/kappa grid: start:stop:step or a comma list");
  sweep_set.option("kappa-s-grid", ks_grid, "kappa_s/kappa grid");
  sweep_set.option("gamma-grid", gamma_grid, "gamma/kappa grid");
  sweep_set.option("delta-grid", delta_grid, "Delta/kappa grid");
  sweep_set.option("mu-grid", mu_grid, "Initial mu grid (purify)");
  sweep_set.option("kappa", kappa, "Cavity decay rate (unit)");
  sweep_set.option("rounds", sweep_rounds, "Purification rounds (purify)");
  sweep_set.option("eta-in", sweep_eta_in, "Input-coupling efficiency");
  sweep_set.option("output", output, "Output file, '-' for standard output");
  sweep_set.option("format", format, "csv | text");
  sweep_cmd->callback([&] {
    run = [&] {
      auto cfg = sweep_set.apply();
      SweepConfig sc;
      try {
        const auto q = parse_quantity(quantity);
        if (!q) throw Error("--quantity must be one of coeffs, distribution, pcd, purify, chain");
        if (format != "csv" && format != "text") throw Error("--format must be csv or text");
        sc.quantity = *q;
        sc.g = parse_grid(g_grid, "g-grid");
        sc.kappa_s = parse_grid(ks_grid, "kappa-s-grid");
        sc.gamma = parse_grid(gamma_grid, "gamma-grid");
        sc.delta = parse_grid(delta_grid, "delta-grid");
        sc.mu = parse_grid(mu_grid, "mu-grid");
        sc.kappa = kappa;
        sc.rounds = sweep_rounds;
        sc.eta_in = sweep_eta_in;
        if (sc.quantity == Quantity::chain) {
          if (!cfg) throw Error("chain sweeps need --config with a scenario");
          sc.scenario = scenario_from_config(*cfg);
        }
        sc.validate();
      } catch (const ConfigError&) {
        throw;
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      const Table t = run_sweep(sc);
      auto emit = [&](std::ostream& out) { format == "csv" ? write_csv(out, t) : write_text(out, t); };
      if (output == "-") {
        emit(std::cout);
      } else {
        auto out = open_output(output);
        emit(out);
        finish_output(out, output);
      }
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    run();
  } catch (const ConfigError& e) {
    std::cerr << "qdrep: " << e.what() << '\n';
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "qdrep: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "qdrep: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
