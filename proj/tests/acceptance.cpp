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

// Release checks. Prints one PASS/FAIL line per criterion and exits nonzero
// if any fails. Usage: acceptance <qdrep-cli> <golden-dir>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracle.hpp"
#include "qdrep/qdrep.hpp"

using namespace qdrep;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

CavityParams at(double g, double ks, double delta = 0.0) { return {g, 1.0, ks, 0.1, delta, std::nullopt}; }

struct Check {
  bool ok = true;
  std::ostringstream why;
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) why << what;
    ok = ok && cond;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<int, std::string> shell(const std::string& cmd) {
  std::string out;
  FILE* p = popen((cmd + " 2>&1").c_str(), "r");
  if (!p) return {-1, ""};
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) out.append(buf.data(), n);
  const int st = pclose(p);
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out};
}

std::string cli;
std::string golden_dir;

// 1. |R|²+|T|²+|S|²+|N|² = 1 on the 101-point detuning grid for the eight
// coupling / leakage combinations of the reference reflection spectra.
void coefficient_unitarity(Check& c) {
  const auto t0 = Clock::now();
  const std::vector<std::pair<double, double>> combos{{0.0, 0.1}, {0.6, 0.1}, {1.2, 0.1}, {2.4, 0.1},
                                                      {2.4, 0.0}, {2.4, 0.05}, {2.4, 0.15}, {2.4, 0.2}};
  double worst = 0.0;
  for (const auto& [g, ks] : combos)
    for (int k = 0; k <= 100; ++k)
      worst = std::max(worst, std::abs(full_coeffs(at(g, ks, -5.0 + 0.1 * k)).total_probability() - 1.0));
  const double dt = seconds_since(t0);
  c.expect(worst <= 1e-12, "max |P-1| = " + std::to_string(worst));
  c.expect(dt < 1.0, "runtime " + std::to_string(dt) + " s");
}

// 2. r = 1 + t and r0 = 1 + t0.
void beam_splitter_identities(Check& c) {
  oracle::Draw d(1001);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    CavityParams p = at(d.uniform(0, 4), d.uniform(0, 1), d.uniform(-5, 5));
    p.gamma = d.uniform(0.01, 1.0);
    const auto s = resonant_coeffs(p);
    worst = std::max({worst, std::abs(s.r - (1.0 + s.t)), std::abs(s.r0 - (1.0 + s.t0))});
  }
  c.expect(worst <= 1e-12, "max deviation " + std::to_string(worst));
}

// 3. Quoted fidelities and efficiencies on resonance with gamma = 0.1.
void reference_numbers(Check& c) {
  auto m = [](double g, double ks) { return distribution_metrics(resonant_coeffs(at(g, ks))); };
  c.expect(std::abs(m(1.2, 0.2).f_even - 0.991) <= 1e-3, "F_even(1.2, 0.2) = " + std::to_string(m(1.2, 0.2).f_even));
  c.expect(std::abs(m(1.2, 0.0).f_even - 0.998) <= 1e-3, "F_even(1.2, 0) = " + std::to_string(m(1.2, 0.0).f_even));
  c.expect(std::abs(m(1.2, 0.2).eta - 0.770) <= 1e-3, "eta(1.2, 0.2) = " + std::to_string(m(1.2, 0.2).eta));
  c.expect(std::abs(m(2.4, 0.0).eta - 0.983) <= 1e-3, "eta(2.4, 0) = " + std::to_string(m(2.4, 0.0).eta));
  double worst = 1.0;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) worst = std::min(worst, m(0.6 + 2.4 * i / 49.0, 0.2 * j / 49.0).f_even);
  c.expect(worst > 0.948, "grid minimum F_even = " + std::to_string(worst));
}

// 4. Odd-class fidelity of distribution and parity check is exactly one.
void odd_branch_perfection(Check& c) {
  oracle::Draw d(1004);
  int done = 0;
  double worst = 0.0;
  while (done < 100) {
    const auto s = resonant_coeffs(at(d.uniform(0, 3), d.uniform(0, 0.5), d.uniform(-1, 1)));
    if (std::abs(s.t - s.t0) <= 1e-6) continue;
    ++done;
    for (const auto& e : crosscheck(s).entries)
      if (e.quantity == "f_d_odd" || e.quantity == "f_p_odd") worst = std::max(worst, std::abs(e.simulated - 1.0));
  }
  c.expect(worst < 1e-12, "max |F_odd - 1| = " + std::to_string(worst));
}

// 5. Closed forms against full state evolution.
void analytic_simulation_equivalence(Check& c) {
  const auto t0 = Clock::now();
  oracle::Draw d(1005);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) worst = std::max(worst, crosscheck(resonant_coeffs(at(d.uniform(0, 3), d.uniform(0, 0.5)))).max_deviation);
  const double dt = seconds_since(t0);
  c.expect(worst <= 1e-10, "max deviation " + std::to_string(worst));
  c.expect(dt < 10.0, "runtime " + std::to_string(dt) + " s");
}

// 6. Collective fiber noise leaves the ideal heralded states untouched.
void noise_immunity(Check& c) {
  oracle::Draw d(1006);
  auto angle = [&] { return NoiseChannel::from_angles(d.uniform(0, 3.2), d.uniform(-3.2, 3.2)); };
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto r = distribute_bell(angle(), angle(), ideal_coeffs(), ideal_coeffs());
    for (const auto& o : r.outcomes)
      if (o.fidelity) worst = std::max(worst, std::abs(*o.fidelity - 1.0));
  }
  for (std::size_t n : {3u, 4u})
    for (int k = 0; k < 20; ++k) {
      std::vector<NoiseChannel> noise;
      for (std::size_t j = 0; j < n; ++j) noise.push_back(angle());
      const auto r = distribute_ghz(n, noise, std::vector<ScatterCoeffs>(n, ideal_coeffs()));
      for (const auto& o : r.outcomes)
        if (o.fidelity) worst = std::max(worst, std::abs(*o.fidelity - 1.0));
    }
  c.expect(worst <= 1e-10, "max |F - 1| = " + std::to_string(worst));
}

// 7. Purification round against the recursion, and the two-round claim.
void purification_recursion(Check& c) {
  oracle::Draw d(1007);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double mu = d.uniform(0, 1);
    const auto r = purify_round(mu, ideal_coeffs());
    const double p = mu * mu + (1 - mu) * (1 - mu);
    worst = std::max({worst, std::abs(r.accepted.mu - mu * mu / p), std::abs(r.accepted.success_probability - p)});
  }
  c.expect(worst <= 1e-10, "max deviation " + std::to_string(worst));
  const auto two = purify_analytic(0.7, 2).back().mu;
  char buf[160];
  std::snprintf(buf, sizeof buf, "two-round mu from 0.7 is %.10f under the recursion, expected 0.967394 (off by %.2e)",
                two, std::abs(two - 0.967394));
  c.expect(std::abs(two - 0.967394) < 5e-7, buf);
  const auto [code, out] = shell(cli + " purify --mu 0.7 --rounds 3 --target 0.997");
  c.expect(code == 0, "purify exited with " + std::to_string(code));
  c.expect(out.find("first exceeded after round 3") != std::string::npos &&
               out.find("two rounds give") != std::string::npos,
           "report does not flag the round count");
}

// 8. Extension with ideal coefficients over every herald branch.
void extension_correctness(Check& c) {
  const auto t0 = Clock::now();
  auto one = [&](const StateVector& g, const std::vector<std::string>& out_labels) {
    const auto r = extend_chain(g, ghz({"z2", "y"}, -1.0), {"z", "z2"}, ideal_coeffs());
    c.expect(r.outcomes.size() == 16, "expected 16 resolved branches");
    c.expect(std::abs(r.heralded() - 1.0) < 1e-12, "total probability " + std::to_string(r.heralded()));
    for (const auto& o : r.outcomes) c.expect(o.fidelity && std::abs(*o.fidelity - 1.0) < 1e-12, o.detection + " below 1");
    const auto merged = merge_by_parity(r, ghz(out_labels, -1.0));
    c.expect(merged.outcomes.size() == 8, "expected 8 parity branches");
    for (const auto& o : merged.outcomes) c.expect(o.fidelity && std::abs(*o.fidelity - 1.0) < 1e-12, o.detection + " below 1");
  };
  one(ghz({"x", "z"}, -1.0), {"x", "y"});
  one(ghz({"x", "w", "z"}, -1.0), {"x", "w", "y"});
  const double dt = seconds_since(t0);
  c.expect(dt < 1.0, "runtime " + std::to_string(dt) + " s");
}

// 9. Heralded + discarded = 1 for every protocol on random parameters.
void heralded_completeness(Check& c) {
  oracle::Draw d(1009);
  auto coeffs = [&] { return resonant_coeffs(at(d.uniform(0, 3), d.uniform(0, 0.5), d.uniform(-1, 1))); };
  auto noise = [&] {
    return NoiseChannel::asymmetric(d.uniform(0, 3.2), d.uniform(-3.2, 3.2), d.uniform(0, 3.2), d.uniform(-3.2, 3.2));
  };
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    DistributionOptions opt;
    if (k % 2) opt.eta_in = d.uniform(0.5, 1.0);
    worst = std::max(worst, distribute_bell(noise(), noise(), coeffs(), coeffs(), opt).completeness_defect());
    worst = std::max(worst, distribute_ghz(3, {noise(), noise(), noise()}, {coeffs(), coeffs(), coeffs()}, opt).completeness_defect());
    PcdOptions po;
    po.eta_in = opt.eta_in;
    const StateVector spins(Register({sub::spin("x"), sub::spin("y")}),
                            {cplx(d.uniform(-1, 1), d.uniform(-1, 1)), cplx(d.uniform(-1, 1), d.uniform(-1, 1)),
                             cplx(d.uniform(-1, 1), d.uniform(-1, 1)), cplx(d.uniform(-1, 1), d.uniform(-1, 1))});
    worst = std::max(worst, pcd(spins.normalized(), "x", "y", coeffs(), po).completeness_defect());
    worst = std::max(worst, extend_chain(ghz({"x", "z"}, -1.0), ghz({"z2", "y"}, -1.0), {"z", "z2"}, coeffs()).completeness_defect());
    const auto pr = purify_ensemble(bell_mixture(d.uniform(0, 1)), coeffs(), coeffs());
    worst = std::max(worst, std::abs(pr.success_probability + pr.parity_rejected + pr.lost - 1.0));
  }
  c.expect(worst <= 1e-10, "max defect " + std::to_string(worst));
}

// 10. Golden sweeps are byte-identical across runs and match the stored files.
void cli_determinism(Check& c) {
  const std::vector<std::pair<std::string, std::string>> sweeps{
      {"spectrum_coupling", "sweep --quantity coeffs --g-grid 0,0.6,1.2,2.4 --kappa-s-grid 0.1 --delta-grid -5:5:0.1"},
      {"spectrum_leakage", "sweep --quantity coeffs --g-grid 2.4 --kappa-s-grid 0,0.05,0.15,0.2 --delta-grid -5:5:0.1"},
      {"distribution_map", "sweep --quantity distribution --g-grid 0:3:0.05 --kappa-s-grid 0,0.05,0.1,0.15,0.2"}};
  const auto dir = std::filesystem::temp_directory_path() / ("qdrep_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  for (const auto& [name, args] : sweeps) {
    std::string runs[2];
    for (int k = 0; k < 2; ++k) {
      const auto path = (dir / (name + "_" + std::to_string(k) + ".csv")).string();
      const auto [code, out] = shell(cli + " " + args + " --output " + path);
      c.expect(code == 0, name + ": exit " + std::to_string(code) + " " + out);
      runs[k] = slurp(path);
    }
    c.expect(!runs[0].empty() && runs[0] == runs[1], name + ": repeated runs differ");
    c.expect(runs[0] == slurp(golden_dir + "/" + name + ".csv"), name + ": differs from golden file");
  }
  std::filesystem::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: acceptance <qdrep-cli> <golden-dir>\n";
    return 2;
  }
  cli = argv[1];
  golden_dir = argv[2];
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"coefficient unitarity", coefficient_unitarity},
      {"beam-splitter identities", beam_splitter_identities},
      {"reference fidelities and efficiencies", reference_numbers},
      {"odd-branch perfection", odd_branch_perfection},
      {"analytic vs simulation", analytic_simulation_equivalence},
      {"collective-noise immunity", noise_immunity},
      {"purification recursion", purification_recursion},
      {"extension correctness", extension_correctness},
      {"heralded completeness", heralded_completeness},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.why << "exception: " << e.what();
    }
    std::cout << (c.ok ? "[PASS] " : "[FAIL] ") << i + 1 << ". " << criteria[i].first;
    if (!c.ok) std::cout << ": " << c.why.str();
    std::cout << '\n';
    failed += !c.ok;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
