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
#include "qdrep/timebin.hpp"

using namespace qdrep;

namespace {

Register photon(const std::string& p) { return Register({sub::polarization(p), sub::timebin(p + ".t")}); }

StateVector ket(const Register& r, const std::vector<std::string>& levels, cplx amp = 1.0) {
  return StateVector::basis(r, levels).scaled(amp);
}

void expect_same(const StateVector& a, const StateVector& b, double tol = 1e-12) {
  ASSERT_TRUE(a.reg() == b.reg());
  for (std::size_t i = 0; i < a.dimension(); ++i) EXPECT_NEAR(std::abs(a[i] - b[i]), 0.0, tol) << a.reg().basis_label(i);
}

/// Two photons a, b with time registers.
Register pair() {
  return Register({sub::polarization("a"), sub::timebin("a.t"), sub::polarization("b"), sub::timebin("b.t")});
}

StateVector bell_source() {
  const double h = 1.0 / std::sqrt(2.0);
  return ket(pair(), {"H", "s", "H", "s"}, h) + ket(pair(), {"V", "s", "V", "s"}, h);
}

}  // namespace

TEST(Encode, Basics) {
  const Register r = photon("a");
  expect_same(encode(ket(r, {"H", "s"}), "a"), ket(r, {"H", "s"}));
  expect_same(encode(ket(r, {"V", "s"}), "a"), ket(r, {"H", "l"}));
  EXPECT_THROW(encode(ket(r, {"H", "l"}), "a"), Error);
}

TEST(Encode, BellPairBecomesTimeBinEntangled) {
  const double h = 1.0 / std::sqrt(2.0);
  StateVector s = encode(encode(bell_source(), "a"), "b");
  expect_same(s, ket(pair(), {"H", "s", "H", "s"}, h) + ket(pair(), {"H", "l", "H", "l"}, h));
}

TEST(Noise, IdentityAndSymmetric) {
  const double h = 1.0 / std::sqrt(2.0);
  const Register r = photon("a");
  const StateVector in = ket(r, {"H", "s"}, h) + ket(r, {"H", "l"}, h);
  expect_same(apply_noise(in, "a", NoiseChannel{}), in);
  const cplx d(0.6, 0.0), e(0.0, 0.8);
  const auto out = apply_noise(in, "a", NoiseChannel::symmetric(d, e));
  expect_same(out, ket(r, {"H", "s"}, h * d) + ket(r, {"V", "s"}, h * e) + ket(r, {"H", "l"}, h * d) +
                       ket(r, {"V", "l"}, h * e));
  EXPECT_THROW(apply_noise(in, "a", NoiseChannel::symmetric(1.0, 1.0)), Error);
}

TEST(Noise, Asymmetric) {
  const double h = 1.0 / std::sqrt(2.0);
  const Register r = photon("a");
  const StateVector in = ket(r, {"H", "s"}, h) + ket(r, {"H", "l"}, h);
  const auto ch = NoiseChannel::asymmetric(0.3, 0.2, 1.1, -0.5);
  const auto out = apply_noise(in, "a", ch);
  expect_same(out, ket(r, {"H", "s"}, h * ch.delta) + ket(r, {"V", "s"}, h * ch.eta) +
                       ket(r, {"H", "l"}, h * ch.delta_l) + ket(r, {"V", "l"}, h * ch.eta_l));
}

TEST(Decode, SinglePhotonRouting) {
  // |H⟩(α|s⟩ + β|l⟩) with rotation (δ, η) decodes to (α|V↓⟩ + β|H↑⟩)(δ|s'⟩ + η|l'⟩).
  const Register r = photon("a");
  const cplx al(0.6), be(0.0, 0.8);
  const auto ch = NoiseChannel::from_angles(0.4, 1.3);
  const StateVector in = ket(r, {"H", "s"}, al) + ket(r, {"H", "l"}, be);
  const auto out = decode(apply_noise(in, "a", ch), "a");
  const Register o({sub::polarization("a"), sub::direction("a.dir"), sub::timebin("a.t", {"s'", "l'"})});
  expect_same(out, ket(o, {"V", "↓", "s'"}, al * ch.delta) + ket(o, {"V", "↓", "l'"}, al * ch.eta) +
                       ket(o, {"H", "↑", "s'"}, be * ch.delta) + ket(o, {"H", "↑", "l'"}, be * ch.eta));
}

TEST(Decode, NoiselessGivesEarlyClassOnly) {
  const auto s = decode(decode(encode(encode(bell_source(), "a"), "b"), "a"), "b");
  EXPECT_NEAR(project(s, {"a.t", "b.t"}, {"s'", "s'"}).norm2(), 1.0, 1e-12);
}

TEST(Decode, SymmetricNoiseFactorizesProperty) {
  oracle::Draw d(41);
  const double h = 1.0 / std::sqrt(2.0);
  for (int k = 0; k < 100; ++k) {
    const auto na = NoiseChannel::from_angles(d.uniform(0, 3.2), d.uniform(-3.2, 3.2));
    const auto nb = NoiseChannel::from_angles(d.uniform(0, 3.2), d.uniform(-3.2, 3.2));
    StateVector s = encode(encode(bell_source(), "a"), "b");
    s = apply_noise(apply_noise(s, "a", na), "b", nb);
    s = decode(decode(s, "a"), "b");
    EXPECT_NEAR(s.norm2(), 1.0, 1e-12);
    // Expected: (|H↑H↑⟩ + |V↓V↓⟩)/√2 ⊗ (δa s' + ηa l') ⊗ (δb s' + ηb l').
    const Register pd({sub::polarization("a"), sub::direction("a.dir"), sub::polarization("b"),
                       sub::direction("b.dir")});
    const StateVector pol = ket(pd, {"H", "↑", "H", "↑"}, h) + ket(pd, {"V", "↓", "V", "↓"}, h);
    const StateVector ta = StateVector::single(sub::timebin("a.t", {"s'", "l'"}), {na.delta, na.eta});
    const StateVector tb = StateVector::single(sub::timebin("b.t", {"s'", "l'"}), {nb.delta, nb.eta});
    const auto expect = permute(tensor(tensor(pol, ta), tb), {"a", "a.dir", "a.t", "b", "b.dir", "b.t"});
    expect_same(s, expect);
    // Schmidt rank 1 across the polarization/direction | time cut.
    const auto t_only = project_all(permute(s, {"a.t", "b.t", "a", "a.dir", "b", "b.dir"}), {"a.t", "b.t"});
    for (const auto& b : t_only)
      if (b.norm2() > 1e-14) {
        EXPECT_TRUE(equal_up_to_phase(b, pol));
      }
  }
}

TEST(Decode, AsymmetricNoiseSplitsPolarizationByBin) {
  const auto na = NoiseChannel::asymmetric(0.3, 0.1, 0.9, -0.4);
  const auto nb = NoiseChannel::asymmetric(0.7, 1.0, 0.2, 0.3);
  StateVector s = encode(encode(bell_source(), "a"), "b");
  s = decode(decode(apply_noise(apply_noise(s, "a", na), "b", nb), "a"), "b");
  // Early source components exit as V↓V↓ with the early-bin rotation, late as H↑H↑.
  const double h = 1.0 / std::sqrt(2.0);
  const auto ss = project(s, {"a.t", "b.t"}, {"s'", "s'"});
  const Register pd({sub::polarization("a"), sub::direction("a.dir"), sub::polarization("b"), sub::direction("b.dir")});
  const auto expect = ket(pd, {"V", "↓", "V", "↓"}, h * na.delta * nb.delta) +
                      ket(pd, {"H", "↑", "H", "↑"}, h * na.delta_l * nb.delta_l);
  expect_same(ss, expect);
}

TEST(Decode, RejectsExpandedRegister) {
  const Register r({sub::polarization("a"), sub::timebin("a.t", {"ss", "sl", "ls", "ll"})});
  EXPECT_THROW(decode(ket(r, {"H", "ss"}), "a"), Error);
  const Register once({sub::polarization("a"), sub::timebin("a.t")});
  const auto done = decode(ket(once, {"H", "s"}), "a");
  EXPECT_THROW(decode(done, "a"), Error);
}

TEST(Elements, QwpHwpPhase) {
  const Register r({sub::polarization("a")});
  const auto h = ket(r, {"H"});
  const auto v = ket(r, {"V"});
  EXPECT_TRUE(equal_up_to_phase(apply_element(h, OpticalElement::qwp(), {"a"}), pol::circular_state("a", 1, 0)));
  EXPECT_TRUE(equal_up_to_phase(apply_element(v, OpticalElement::qwp(), {"a"}), pol::circular_state("a", 0, 1)));
  const auto mv = apply_element(v, OpticalElement::phase(std::numbers::pi), {"a"});
  EXPECT_NEAR(std::abs(mv[1] + 1.0), 0.0, 1e-15);
  const double s = 1.0 / std::sqrt(2.0);
  const auto hr = apply_element(pol::circular_state("a", 1, 0), OpticalElement::hwp(), {"a"});
  EXPECT_TRUE(equal_up_to_phase(hr, pol::circular_state("a", s, s)));
}

TEST(Elements, BeamSplitterAndPbs) {
  const double h = 1.0 / std::sqrt(2.0);
  const Register p({sub::path("a.path", {"a1", "a2"})});
  const auto out = apply_element(ket(p, {"a1"}), OpticalElement::bs(), {"a.path"});
  EXPECT_NEAR(std::abs(out[0] - h), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(out[1] - h), 0.0, 1e-15);
  const Register r({sub::polarization("a"), sub::direction("a.dir")});
  expect_same(apply_element(ket(r, {"V", "↑"}), OpticalElement::pbs(), {"a", "a.dir"}), ket(r, {"V", "↓"}));
  expect_same(apply_element(ket(r, {"H", "↑"}), OpticalElement::pbs(), {"a", "a.dir"}), ket(r, {"H", "↑"}));
  // CPBS transmits R, reflects L.
  const auto l = tensor(pol::circular_state("a", 0, 1), StateVector::basis(Register({sub::direction("a.dir")}), {"↑"}));
  const auto lr = apply_element(l, OpticalElement::cpbs(), {"a", "a.dir"});
  EXPECT_NEAR(project(lr, {"a.dir"}, {"↓"}).norm2(), 1.0, 1e-12);
}

TEST(Elements, KindMismatchRejected) {
  const Register r({sub::polarization("a"), sub::timebin("a.t"), sub::spin("e")});
  const auto s = ket(r, {"H", "s", "↑"});
  EXPECT_THROW(apply_element(s, OpticalElement::qwp(), {"e"}), Error);
  EXPECT_THROW(apply_element(s, OpticalElement::bs(), {"a"}), Error);
  EXPECT_THROW(apply_element(s, OpticalElement::pbs(), {"a", "a.t"}), Error);
  EXPECT_THROW(apply_element(s, OpticalElement::pc({"s"}), {"a", "e"}), Error);
  EXPECT_THROW(apply_element(s, OpticalElement::pc({"nope"}), {"a", "a.t"}), Error);
  EXPECT_THROW(apply_element(s, OpticalElement::qwp(), {"a", "a.t"}), Error);
}

TEST(Elements, UnitaryOnRandomStatesProperty) {
  oracle::Draw d(42);
  const Register r({sub::polarization("a"), sub::timebin("a.t"), sub::path("a.path", {"a1", "a2"})});
  const std::vector<std::pair<OpticalElement, std::vector<std::string>>> els{
      {OpticalElement::qwp(), {"a"}},         {OpticalElement::hwp(), {"a"}},
      {OpticalElement::phase(0.7), {"a"}},    {OpticalElement::bs(), {"a.path"}},
      {OpticalElement::pbs(), {"a", "a.path"}}, {OpticalElement::cpbs(), {"a", "a.path"}},
      {OpticalElement::pc({"l"}), {"a", "a.t"}}, {OpticalElement::delay("V"), {"a", "a.t"}}};
  for (int k = 0; k < 20; ++k) {
    std::vector<cplx> a(r.dimension());
    for (auto& x : a) x = {d.uniform(-1, 1), d.uniform(-1, 1)};
    const StateVector s = StateVector(r, a).normalized();
    for (const auto& [e, t] : els) EXPECT_NEAR(apply_element(s, e, t).norm2(), 1.0, 1e-12);
  }
}

TEST(Elements, DelayAppendsLetter) {
  const Register r = photon("a");
  const auto out = apply_element(ket(r, {"H", "s"}), OpticalElement::delay("H"), {"a", "a.t"});
  EXPECT_EQ(out.reg()[out.reg().position("a.t")].levels, (std::vector<std::string>{"ss", "sl", "ls", "ll"}));
  EXPECT_NEAR(project(out, {"a.t"}, {"sl"}).norm2(), 1.0, 1e-15);
}

TEST(Script, ParseAndRun) {
  const auto script = parse_script("PHASE(pi)@a; QWP@a, PC(s,l)@a");
  ASSERT_EQ(script.size(), 3u);
  EXPECT_EQ(script[2].element.window, (std::vector<std::string>{"s", "l"}));
  EXPECT_EQ(script[2].targets, (std::vector<std::string>{"a", "a.t"}));
  const Register r = photon("a");
  const auto out = run_script(ket(r, {"V", "s"}), script);
  EXPECT_NEAR(out.norm2(), 1.0, 1e-12);
  EXPECT_THROW(parse_script("FOO@a"), Error);
  EXPECT_THROW(parse_script("QWP"), Error);
  EXPECT_THROW(parse_script("PHASE(x)@a"), Error);
}
