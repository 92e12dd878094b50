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
 * @file qcore.hpp
 * @brief Exact complex state algebra over small labeled composite registers.
 *
 * A StateVector is a dense amplitude array over a Register of labeled
 * subsystems (polarization, time bin, path, spin). Kronecker ordering follows
 * register order with the first subsystem most significant. Heralded
 * (non-unitary) maps leave states unnormalized; norm² is then the branch
 * probability. Mixed states are weighted pure-state Ensembles.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qdrep {

using cplx = std::complex<double>;

/// Tolerance for algebraic identities (normalization, unitarity, weights).
inline constexpr double kTolerance = 1e-12;
/// Branches with probability below this are treated as dead.
inline constexpr double kPruneThreshold = 1e-14;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { polarization, timebin, path, spin };

inline std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::polarization: return "polarization";
    case Kind::timebin: return "timebin";
    case Kind::path: return "path";
    case Kind::spin: return "spin";
  }
  return "?";
}

struct Subsystem {
  std::string label;
  Kind kind = Kind::spin;
  std::vector<std::string> levels;

  std::size_t dim() const noexcept { return levels.size(); }

  std::size_t level_index(std::string_view name) const {
    auto it = std::find(levels.begin(), levels.end(), name);
    if (it == levels.end())
      throw Error("subsystem '" + label + "' has no level '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - levels.begin());
  }

  bool operator==(const Subsystem&) const = default;
};

/// Factories for the subsystem kinds used throughout the protocols.
namespace sub {
inline Subsystem polarization(std::string label) {
  return {std::move(label), Kind::polarization, {"H", "V"}};
}
inline Subsystem spin(std::string label) { return {std::move(label), Kind::spin, {"↑", "↓"}}; }
/// Propagation direction relative to the spin quantization axis.
inline Subsystem direction(std::string label) { return {std::move(label), Kind::path, {"↑", "↓"}}; }
inline Subsystem path(std::string label, std::vector<std::string> ports) {
  return {std::move(label), Kind::path, std::move(ports)};
}
inline Subsystem timebin(std::string label, std::vector<std::string> bins = {"s", "l"}) {
  return {std::move(label), Kind::timebin, std::move(bins)};
}
}  // namespace sub

class Register {
 public:
  Register() = default;

  explicit Register(std::vector<Subsystem> subsystems) : subs_(std::move(subsystems)) {
    for (std::size_t i = 0; i < subs_.size(); ++i) {
      const auto& s = subs_[i];
      if (s.dim() < 2) throw Error("subsystem '" + s.label + "' needs dimension >= 2");
      if ((s.kind == Kind::polarization || s.kind == Kind::spin) && s.dim() != 2)
        throw Error("subsystem '" + s.label + "' of kind " + std::string(to_string(s.kind)) +
                    " must have dimension 2");
      for (std::size_t j = 0; j < i; ++j)
        if (subs_[j].label == s.label) throw Error("duplicate subsystem label '" + s.label + "'");
    }
    strides_.assign(subs_.size(), 1);
    dimension_ = 1;
    for (std::size_t i = subs_.size(); i-- > 0;) {
      strides_[i] = dimension_;
      dimension_ *= subs_[i].dim();
    }
  }

  std::size_t size() const noexcept { return subs_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  const Subsystem& operator[](std::size_t i) const { return subs_[i]; }
  const std::vector<Subsystem>& subsystems() const noexcept { return subs_; }
  std::size_t stride(std::size_t i) const { return strides_[i]; }

  bool contains(std::string_view label) const {
    return std::any_of(subs_.begin(), subs_.end(), [&](const auto& s) { return s.label == label; });
  }

  std::size_t position(std::string_view label) const {
    for (std::size_t i = 0; i < subs_.size(); ++i)
      if (subs_[i].label == label) return i;
    throw Error("register has no subsystem '" + std::string(label) + "'");
  }

  const Subsystem& at(std::string_view label) const { return subs_[position(label)]; }

  std::size_t digit(std::size_t index, std::size_t pos) const {
    return (index / strides_[pos]) % subs_[pos].dim();
  }

  std::vector<std::size_t> digits(std::size_t index) const {
    std::vector<std::size_t> d(subs_.size());
    for (std::size_t p = 0; p < subs_.size(); ++p) d[p] = digit(index, p);
    return d;
  }

  std::size_t index(std::span<const std::size_t> digits) const {
    if (digits.size() != subs_.size()) throw Error("digit count does not match register");
    std::size_t idx = 0;
    for (std::size_t p = 0; p < subs_.size(); ++p) {
      if (digits[p] >= subs_[p].dim()) throw Error("digit out of range for '" + subs_[p].label + "'");
      idx += digits[p] * strides_[p];
    }
    return idx;
  }

  std::string basis_label(std::size_t index) const {
    std::string out;
    for (std::size_t p = 0; p < subs_.size(); ++p) {
      if (p) out += ',';
      out += subs_[p].levels[digit(index, p)];
    }
    return out;
  }

  /// Same number of subsystems with the same dimensions, in order.
  bool same_shape(const Register& o) const {
    if (o.size() != size()) return false;
    for (std::size_t p = 0; p < size(); ++p)
      if (subs_[p].dim() != o.subs_[p].dim()) return false;
    return true;
  }

  bool operator==(const Register& o) const { return subs_ == o.subs_; }

 private:
  std::vector<Subsystem> subs_;
  std::vector<std::size_t> strides_;
  std::size_t dimension_ = 1;
};

class StateVector {
 public:
  StateVector() : amps_(1, cplx{1.0, 0.0}) {}

  StateVector(Register reg, std::vector<cplx> amplitudes)
      : reg_(std::move(reg)), amps_(std::move(amplitudes)) {
    if (amps_.size() != reg_.dimension())
      throw Error("amplitude count " + std::to_string(amps_.size()) +
                  " does not match register dimension " + std::to_string(reg_.dimension()));
  }

  /// Basis state selected by one level name per subsystem, in register order.
  static StateVector basis(Register reg, const std::vector<std::string>& levels) {
    if (levels.size() != reg.size()) throw Error("basis(): need one level per subsystem");
    std::vector<std::size_t> d(levels.size());
    for (std::size_t p = 0; p < levels.size(); ++p) d[p] = reg[p].level_index(levels[p]);
    std::vector<cplx> a(reg.dimension());
    a[reg.index(d)] = 1.0;
    return {std::move(reg), std::move(a)};
  }

  /// Single-subsystem state from explicit amplitudes.
  static StateVector single(Subsystem s, std::vector<cplx> amplitudes) {
    return {Register({std::move(s)}), std::move(amplitudes)};
  }

  const Register& reg() const noexcept { return reg_; }
  std::span<const cplx> amplitudes() const noexcept { return amps_; }
  cplx operator[](std::size_t i) const { return amps_[i]; }
  std::size_t dimension() const noexcept { return amps_.size(); }

  double norm2() const {
    double s = 0.0;
    for (const auto& a : amps_) s += std::norm(a);
    return s;
  }

  bool is_normalized(double tol = kTolerance) const { return std::abs(norm2() - 1.0) <= tol; }

  StateVector normalized() const {
    const double n2 = norm2();
    if (n2 < kPruneThreshold) throw Error("cannot normalize a zero-norm state");
    return scaled(1.0 / std::sqrt(n2));
  }

  StateVector scaled(cplx c) const {
    auto a = amps_;
    for (auto& x : a) x *= c;
    return {reg_, std::move(a)};
  }

  friend StateVector operator+(const StateVector& a, const StateVector& b) {
    if (!a.reg_.same_shape(b.reg_)) throw Error("cannot add states over different registers");
    auto out = a.amps_;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.amps_[i];
    return {a.reg_, std::move(out)};
  }

  friend StateVector operator-(const StateVector& a, const StateVector& b) { return a + b.scaled(-1.0); }

 private:
  Register reg_;
  std::vector<cplx> amps_;
};

inline cplx inner(const StateVector& a, const StateVector& b) {
  if (!a.reg().same_shape(b.reg())) throw Error("inner(): incompatible registers");
  cplx s{};
  for (std::size_t i = 0; i < a.dimension(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

/// True when a = e^{iφ} b for some φ, to tolerance on every amplitude.
inline bool equal_up_to_phase(const StateVector& a, const StateVector& b, double tol = 1e-10) {
  if (!a.reg().same_shape(b.reg())) return false;
  const cplx ov = inner(b, a);
  const double nb = b.norm2();
  if (nb < kPruneThreshold) return a.norm2() < tol * tol;
  const cplx phase = std::abs(ov) > 0 ? ov / std::abs(ov) : cplx{1.0};
  const double scale = std::sqrt(a.norm2() / nb);
  for (std::size_t i = 0; i < a.dimension(); ++i)
    if (std::abs(a[i] - phase * scale * b[i]) > tol) return false;
  return true;
}

/// Square complex matrix acting on a (sub-)register. Unitary maps are checked
/// for M†M = I; general maps must be contractive (largest singular value ≤ 1).
class LinearMap {
 public:
  LinearMap(std::size_t dim, std::vector<cplx> row_major, bool unitary)
      : dim_(dim), m_(std::move(row_major)), unitary_(unitary) {
    if (dim_ == 0 || m_.size() != dim_ * dim_) throw Error("LinearMap: data is not dim x dim");
    if (unitary_) {
      if (unitarity_defect() > kTolerance) throw Error("LinearMap flagged unitary but M†M != I");
    } else if (spectral_norm() > 1.0 + kTolerance) {
      throw Error("LinearMap would increase norm (singular value > 1)");
    }
  }

  static LinearMap from_rows(std::initializer_list<std::initializer_list<cplx>> rows, bool unitary) {
    std::vector<cplx> m;
    for (const auto& r : rows) {
      if (r.size() != rows.size()) throw Error("from_rows: matrix is not square");
      m.insert(m.end(), r.begin(), r.end());
    }
    return {rows.size(), std::move(m), unitary};
  }

  std::size_t dim() const noexcept { return dim_; }
  bool is_unitary() const noexcept { return unitary_; }
  cplx operator()(std::size_t r, std::size_t c) const { return m_[r * dim_ + c]; }
  std::span<const cplx> data() const noexcept { return m_; }

  LinearMap adjoint() const {
    std::vector<cplx> a(m_.size());
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) a[c * dim_ + r] = std::conj(m_[r * dim_ + c]);
    return {dim_, std::move(a), unitary_};
  }

  /// Matrix product this·o (o acts first).
  LinearMap operator*(const LinearMap& o) const {
    if (o.dim_ != dim_) throw Error("LinearMap product: dimension mismatch");
    std::vector<cplx> p(m_.size());
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t k = 0; k < dim_; ++k) {
        const cplx a = m_[r * dim_ + k];
        if (a == cplx{}) continue;
        for (std::size_t c = 0; c < dim_; ++c) p[r * dim_ + c] += a * o.m_[k * dim_ + c];
      }
    return {dim_, std::move(p), unitary_ && o.unitary_};
  }

  double unitarity_defect() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) {
        cplx s{};
        for (std::size_t k = 0; k < dim_; ++k) s += std::conj(m_[k * dim_ + i]) * m_[k * dim_ + j];
        worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
    return worst;
  }

  /// Largest singular value, via power iteration on M†M.
  double spectral_norm() const {
    std::vector<cplx> g(dim_ * dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) {
        cplx s{};
        for (std::size_t k = 0; k < dim_; ++k) s += std::conj(m_[k * dim_ + i]) * m_[k * dim_ + j];
        g[i * dim_ + j] = s;
      }
    std::vector<cplx> v(dim_), w(dim_);
    for (std::size_t i = 0; i < dim_; ++i) v[i] = cplx(1.0 + 0.37 * static_cast<double>(i), 0.11 * static_cast<double>(i % 3));
    double lambda = 0.0;
    for (int it = 0; it < 400; ++it) {
      double n = 0.0;
      for (const auto& x : v) n += std::norm(x);
      n = std::sqrt(n);
      if (n == 0.0) return 0.0;
      for (auto& x : v) x /= n;
      for (std::size_t i = 0; i < dim_; ++i) {
        cplx s{};
        for (std::size_t j = 0; j < dim_; ++j) s += g[i * dim_ + j] * v[j];
        w[i] = s;
      }
      cplx rq{};
      for (std::size_t i = 0; i < dim_; ++i) rq += std::conj(v[i]) * w[i];
      const double next = rq.real();
      v.swap(w);
      if (it > 8 && std::abs(next - lambda) < 1e-16) {
        lambda = next;
        break;
      }
      lambda = next;
    }
    return std::sqrt(std::max(lambda, 0.0));
  }

 private:
  std::size_t dim_;
  std::vector<cplx> m_;
  bool unitary_;
};

inline LinearMap kron(const LinearMap& a, const LinearMap& b) {
  const std::size_t n = a.dim() * b.dim();
  std::vector<cplx> m(n * n);
  for (std::size_t ar = 0; ar < a.dim(); ++ar)
    for (std::size_t ac = 0; ac < a.dim(); ++ac)
      for (std::size_t br = 0; br < b.dim(); ++br)
        for (std::size_t bc = 0; bc < b.dim(); ++bc)
          m[(ar * b.dim() + br) * n + ac * b.dim() + bc] = a(ar, ac) * b(br, bc);
  return {n, std::move(m), a.is_unitary() && b.is_unitary()};
}

namespace gate {
inline LinearMap identity(std::size_t n) {
  std::vector<cplx> m(n * n);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 1.0;
  return {n, std::move(m), true};
}
inline LinearMap x() { return LinearMap::from_rows({{0, 1}, {1, 0}}, true); }
inline LinearMap z() { return LinearMap::from_rows({{1, 0}, {0, -1}}, true); }
inline LinearMap h() {
  const double s = 1.0 / std::sqrt(2.0);
  return LinearMap::from_rows({{s, s}, {s, -s}}, true);
}
/// diag(1, e^{iφ}).
inline LinearMap phase(double phi) {
  return LinearMap::from_rows({{1, 0}, {0, std::polar(1.0, phi)}}, true);
}
/// |k⟩⟨k| on an n-level system.
inline LinearMap projector(std::size_t n, std::size_t k) {
  std::vector<cplx> m(n * n);
  m[k * n + k] = 1.0;
  return {n, std::move(m), false};
}
}  // namespace gate

inline StateVector tensor(const StateVector& a, const StateVector& b) {
  std::vector<Subsystem> subs = a.reg().subsystems();
  for (const auto& s : b.reg().subsystems()) {
    if (a.reg().contains(s.label)) throw Error("tensor(): duplicate label '" + s.label + "'");
    subs.push_back(s);
  }
  std::vector<cplx> amps(a.dimension() * b.dimension());
  for (std::size_t i = 0; i < a.dimension(); ++i)
    for (std::size_t j = 0; j < b.dimension(); ++j) amps[i * b.dimension() + j] = a[i] * b[j];
  return {Register(std::move(subs)), std::move(amps)};
}

namespace detail {

inline std::vector<std::size_t> positions(const Register& reg, std::span<const std::string> labels) {
  std::vector<std::size_t> pos;
  pos.reserve(labels.size());
  for (const auto& l : labels) {
    const std::size_t p = reg.position(l);
    if (std::find(pos.begin(), pos.end(), p) != pos.end()) throw Error("target '" + l + "' listed twice");
    pos.push_back(p);
  }
  return pos;
}

/// Offsets of every joint target configuration (row-major over targets in the
/// given order) and the base indices where all target digits are zero.
struct Blocking {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> bases;
};

inline Blocking blocking(const Register& reg, const std::vector<std::size_t>& pos) {
  std::size_t sub = 1;
  for (auto p : pos) sub *= reg[p].dim();
  Blocking b;
  b.offsets.resize(sub);
  for (std::size_t j = 0; j < sub; ++j) {
    std::size_t rem = j, off = 0;
    for (std::size_t k = pos.size(); k-- > 0;) {
      const std::size_t d = reg[pos[k]].dim();
      off += (rem % d) * reg.stride(pos[k]);
      rem /= d;
    }
    b.offsets[j] = off;
  }
  for (std::size_t i = 0; i < reg.dimension(); ++i) {
    bool zero = true;
    for (auto p : pos)
      if (reg.digit(i, p) != 0) {
        zero = false;
        break;
      }
    if (zero) b.bases.push_back(i);
  }
  return b;
}

inline Register without(const Register& reg, const std::vector<std::size_t>& pos) {
  std::vector<Subsystem> keep;
  for (std::size_t p = 0; p < reg.size(); ++p)
    if (std::find(pos.begin(), pos.end(), p) == pos.end()) keep.push_back(reg[p]);
  return Register(std::move(keep));
}

}  // namespace detail

/// Applies map to the listed subsystems (joint space row-major in list order),
/// identity elsewhere. The result is left unnormalized.
inline StateVector apply_map(const StateVector& state, const LinearMap& map,
                             const std::vector<std::string>& targets) {
  if (targets.empty()) throw Error("apply_map(): empty target list");
  const auto pos = detail::positions(state.reg(), targets);
  const auto blk = detail::blocking(state.reg(), pos);
  if (blk.offsets.size() != map.dim())
    throw Error("apply_map(): map dimension " + std::to_string(map.dim()) +
                " does not match target dimension " + std::to_string(blk.offsets.size()));
  const std::size_t n = map.dim();
  std::vector<cplx> out(state.dimension());
  std::vector<cplx> in(n);
  const auto m = map.data();
  for (auto base : blk.bases) {
    for (std::size_t j = 0; j < n; ++j) in[j] = state[base + blk.offsets[j]];
    for (std::size_t r = 0; r < n; ++r) {
      cplx s{};
      for (std::size_t c = 0; c < n; ++c) s += m[r * n + c] * in[c];
      out[base + blk.offsets[r]] = s;
    }
  }
  return {state.reg(), std::move(out)};
}

/// Projects onto every joint configuration of the targets at once. Entry j
/// (row-major over targets) is the unnormalized state of the remaining
/// subsystems; its norm² is the branch weight.
inline std::vector<StateVector> project_all(const StateVector& state, const std::vector<std::string>& targets) {
  if (targets.empty()) throw Error("project_all(): empty target list");
  const auto pos = detail::positions(state.reg(), targets);
  const Register rest = detail::without(state.reg(), pos);
  const auto blk = detail::blocking(state.reg(), pos);
  std::vector<std::vector<cplx>> buckets(blk.offsets.size(), std::vector<cplx>(rest.dimension()));
  for (std::size_t r = 0; r < blk.bases.size(); ++r) {
    // bases are enumerated in increasing order, which matches the row-major
    // order of the remaining subsystems.
    const std::size_t base = blk.bases[r];
    for (std::size_t j = 0; j < blk.offsets.size(); ++j) buckets[j][r] = state[base + blk.offsets[j]];
  }
  std::vector<StateVector> out;
  out.reserve(buckets.size());
  for (auto& b : buckets) out.emplace_back(rest, std::move(b));
  return out;
}

/// Projects the targets onto the given levels and drops them.
inline StateVector project(const StateVector& state, const std::vector<std::string>& targets,
                           const std::vector<std::string>& levels) {
  if (levels.size() != targets.size()) throw Error("project(): one level per target required");
  std::size_t j = 0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto& s = state.reg().at(targets[k]);
    j = j * s.dim() + s.level_index(levels[k]);
  }
  return project_all(state, targets)[j];
}

/// Orthonormal measurement basis over a joint target space: column k of
/// `vectors` is basis vector k, named names[k].
struct MeasurementBasis {
  LinearMap vectors;
  std::vector<std::string> names;
};

/// Product basis from per-target single-subsystem bases.
inline MeasurementBasis product_basis(const std::vector<MeasurementBasis>& parts) {
  if (parts.empty()) throw Error("product_basis(): no parts");
  MeasurementBasis acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    std::vector<std::string> names;
    for (const auto& a : acc.names)
      for (const auto& b : parts[i].names) names.push_back(a + b);
    acc = {kron(acc.vectors, parts[i].vectors), std::move(names)};
  }
  return acc;
}

inline MeasurementBasis computational_basis(const Subsystem& s) { return {gate::identity(s.dim()), s.levels}; }

struct Outcome {
  std::string label;
  std::size_t index = 0;  ///< row-major joint outcome index
  double probability = 0.0;
  StateVector post;       ///< normalized, measured subsystems removed
};

/// Projective measurement of the targets. Probabilities are absolute
/// (they sum to the input norm²); outcomes below kPruneThreshold are dropped.
inline std::vector<Outcome> measure(const StateVector& state, const std::vector<std::string>& targets,
                                    const std::optional<MeasurementBasis>& basis = std::nullopt) {
  if (targets.empty()) throw Error("measure(): empty target list");
  StateVector rotated = state;
  std::vector<std::string> names;
  if (basis) {
    if (!basis->vectors.is_unitary()) throw Error("measure(): basis must be unitary");
    rotated = apply_map(state, basis->vectors.adjoint(), targets);
    names = basis->names;
  } else {
    std::vector<MeasurementBasis> parts;
    for (const auto& t : targets) parts.push_back(computational_basis(state.reg().at(t)));
    names = product_basis(parts).names;
  }
  auto branches = project_all(rotated, targets);
  if (names.size() != branches.size()) throw Error("measure(): basis name count mismatch");
  std::vector<Outcome> out;
  for (std::size_t j = 0; j < branches.size(); ++j) {
    const double p = branches[j].norm2();
    if (p < kPruneThreshold) continue;
    out.push_back({names[j], j, p, branches[j].normalized()});
  }
  return out;
}

/// Reorders subsystems to the given label order (a permutation of all labels).
inline StateVector permute(const StateVector& state, const std::vector<std::string>& order) {
  if (order.size() != state.reg().size()) throw Error("permute(): order must list every subsystem");
  const auto pos = detail::positions(state.reg(), order);
  std::vector<Subsystem> subs;
  for (auto p : pos) subs.push_back(state.reg()[p]);
  Register out_reg(std::move(subs));
  std::vector<cplx> amps(state.dimension());
  std::vector<std::size_t> d(order.size());
  for (std::size_t i = 0; i < state.dimension(); ++i) {
    for (std::size_t k = 0; k < pos.size(); ++k) d[k] = state.reg().digit(i, pos[k]);
    amps[out_reg.index(d)] = state[i];
  }
  return {std::move(out_reg), std::move(amps)};
}

inline StateVector relabel(const StateVector& state, std::string_view from, std::string to) {
  auto subs = state.reg().subsystems();
  subs[state.reg().position(from)].label = std::move(to);
  return {Register(std::move(subs)), std::vector<cplx>(state.amplitudes().begin(), state.amplitudes().end())};
}

/// Mixed state as a weighted list of normalized pure states over one register.
class Ensemble {
 public:
  struct Member {
    double weight;
    StateVector state;
  };

  explicit Ensemble(std::vector<Member> members) : members_(std::move(members)) {
    if (members_.empty()) throw Error("Ensemble needs at least one member");
    double total = 0.0;
    for (const auto& m : members_) {
      if (m.weight < -kTolerance || m.weight > 1.0 + kTolerance) throw Error("Ensemble weight outside [0,1]");
      if (!m.state.is_normalized()) throw Error("Ensemble member is not normalized");
      if (!(m.state.reg() == members_.front().state.reg())) throw Error("Ensemble members use different registers");
      total += m.weight;
    }
    if (std::abs(total - 1.0) > kTolerance) throw Error("Ensemble weights do not sum to 1");
  }

  static Ensemble pure(const StateVector& s) { return Ensemble({{1.0, s.normalized()}}); }

  /// Builds the mixture of unnormalized branches, weighted by their norm²;
  /// branches equal up to a global phase are merged.
  static Ensemble from_branches(std::span<const StateVector> branches) {
    std::vector<Member> acc;
    double total = 0.0;
    for (const auto& b : branches) {
      const double w = b.norm2();
      if (w < kPruneThreshold) continue;
      total += w;
      const StateVector n = b.normalized();
      bool merged = false;
      for (auto& m : acc)
        if (std::norm(inner(m.state, n)) >= 1.0 - kTolerance) {
          m.weight += w;
          merged = true;
          break;
        }
      if (!merged) acc.push_back({w, n});
    }
    if (acc.empty()) throw Error("Ensemble::from_branches(): every branch has zero weight");
    for (auto& m : acc) m.weight /= total;
    return Ensemble(std::move(acc));
  }

  /// w·a + (1−w)·b.
  static Ensemble mix(const Ensemble& a, const Ensemble& b, double w) {
    if (w < 0.0 || w > 1.0) throw Error("Ensemble::mix(): weight outside [0,1]");
    std::vector<Member> m;
    for (const auto& x : a.members_) m.push_back({w * x.weight, x.state});
    for (const auto& x : b.members_) m.push_back({(1.0 - w) * x.weight, x.state});
    return Ensemble(std::move(m));
  }

  const std::vector<Member>& members() const noexcept { return members_; }
  const Register& reg() const { return members_.front().state.reg(); }
  std::size_t size() const noexcept { return members_.size(); }

 private:
  std::vector<Member> members_;
};

inline double fidelity(const StateVector& state, const StateVector& target) {
  if (!state.reg().same_shape(target.reg())) throw Error("fidelity(): incompatible registers");
  if (!target.is_normalized()) throw Error("fidelity(): target must be normalized");
  const double n2 = state.norm2();
  if (n2 < kPruneThreshold) throw Error("fidelity(): zero-norm state");
  return std::clamp(std::norm(inner(target, state)) / n2, 0.0, 1.0);
}

inline double fidelity(const Ensemble& ens, const StateVector& target) {
  double f = 0.0;
  for (const auto& m : ens.members()) f += m.weight * fidelity(m.state, target);
  return std::clamp(f, 0.0, 1.0);
}

/// Two-spin Bell state (|↑↑⟩ + sign·|↓↓⟩)/√2, or the GHZ analogue over all labels.
inline StateVector ghz(const std::vector<std::string>& spins, double sign) {
  if (spins.empty()) throw Error("ghz(): no spins");
  std::vector<Subsystem> subs;
  for (const auto& s : spins) subs.push_back(sub::spin(s));
  Register reg(std::move(subs));
  std::vector<cplx> a(reg.dimension());
  a.front() = 1.0 / std::sqrt(2.0);
  a.back() = sign / std::sqrt(2.0);
  return {std::move(reg), std::move(a)};
}

}  // namespace qdrep
