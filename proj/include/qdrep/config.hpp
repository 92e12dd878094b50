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
 * @file config.hpp
 * @brief Sectioned key/value configuration files and the chain scenario
 *        schema built on them.
 *
 * Syntax:
 *
 *     # comment (also ';')
 *     [node alice]          section with an optional argument
 *     g = 1.2               key = value, trailing comments allowed
 *
 * Every diagnostic carries `source:line:column`.
 */

#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qdrep/protocols.hpp"

namespace qdrep {

class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, int column, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_, column_;
};

struct ConfigEntry {
  std::string key, value;
  int line = 0;
  int key_column = 0;
  int value_column = 0;
};

struct ConfigSection {
  std::string name, arg;
  int line = 0;
  std::vector<ConfigEntry> entries;

  const ConfigEntry* find(std::string_view key) const {
    for (const auto& e : entries)
      if (e.key == key) return &e;
    return nullptr;
  }
};

class Config {
 public:
  std::string source = "<config>";
  std::vector<ConfigSection> sections;

  /// First section with this name (and argument, when given).
  const ConfigSection* section(std::string_view name, std::optional<std::string_view> arg = std::nullopt) const {
    for (const auto& s : sections)
      if (s.name == name && (!arg || s.arg == *arg)) return &s;
    return nullptr;
  }

  std::vector<const ConfigSection*> all(std::string_view name) const {
    std::vector<const ConfigSection*> out;
    for (const auto& s : sections)
      if (s.name == name) out.push_back(&s);
    return out;
  }

  [[noreturn]] void fail(const ConfigEntry& e, const std::string& what, bool at_value = true) const {
    throw ConfigError(source, e.line, at_value ? e.value_column : e.key_column, what);
  }

  [[noreturn]] void fail(const ConfigSection& s, const std::string& what) const {
    throw ConfigError(source, s.line, 1, what);
  }

  double number(const ConfigEntry& e) const {
    const std::string& v = e.value;
    if (v == "pi") return std::numbers::pi;
    if (v == "-pi") return -std::numbers::pi;
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size() && std::isfinite(d)) return d;
    } catch (const std::exception&) {
    }
    fail(e, "expected a finite number for '" + e.key + "', got '" + v + "'");
  }

  int integer(const ConfigEntry& e) const {
    try {
      std::size_t used = 0;
      const long n = std::stol(e.value, &used);
      if (used == e.value.size()) return static_cast<int>(n);
    } catch (const std::exception&) {
    }
    fail(e, "expected an integer for '" + e.key + "', got '" + e.value + "'");
  }

  bool boolean(const ConfigEntry& e) const {
    if (e.value == "true" || e.value == "yes" || e.value == "1" || e.value == "on") return true;
    if (e.value == "false" || e.value == "no" || e.value == "0" || e.value == "off") return false;
    fail(e, "expected true/false for '" + e.key + "', got '" + e.value + "'");
  }

  /// Rejects keys outside `allowed`.
  void only(const ConfigSection& s, std::initializer_list<std::string_view> allowed) const {
    for (const auto& e : s.entries)
      if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end())
        fail(e, "unknown key '" + e.key + "' in section [" + s.name + "]", false);
  }
};

inline Config parse_config(std::string_view text, std::string source = "<config>") {
  Config cfg;
  cfg.source = std::move(source);
  int line_no = 0;
  std::size_t pos = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (pos <= text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    std::size_t b = 0;
    while (b < line.size() && is_space(line[b])) ++b;
    // Strip a trailing comment that starts at whitespace or line start.
    std::size_t cut = line.size();
    for (std::size_t i = b; i < line.size(); ++i)
      if ((line[i] == '#' || line[i] == ';') && (i == b || is_space(line[i - 1]))) {
        cut = i;
        break;
      }
    std::size_t e = cut;
    while (e > b && is_space(line[e - 1])) --e;
    if (b == e) {
      if (pos > text.size()) break;
      continue;
    }
    const int col = static_cast<int>(b) + 1;
    if (line[b] == '[') {
      if (line[e - 1] != ']') throw ConfigError(cfg.source, line_no, static_cast<int>(e) + 1, "expected ']'");
      std::string inner(line.substr(b + 1, e - b - 2));
      std::stringstream ss(inner);
      ConfigSection s;
      s.line = line_no;
      ss >> s.name;
      std::string rest;
      std::getline(ss, rest);
      while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.erase(rest.begin());
      s.arg = rest;
      if (s.name.empty()) throw ConfigError(cfg.source, line_no, col + 1, "empty section name");
      if (s.arg.find_first_of(" \t") != std::string::npos)
        throw ConfigError(cfg.source, line_no, col, "section argument must be a single word");
      for (const auto& o : cfg.sections)
        if (o.name == s.name && o.arg == s.arg)
          throw ConfigError(cfg.source, line_no, col, "duplicate section [" + std::string(inner) + "]");
      cfg.sections.push_back(std::move(s));
    } else {
      const std::size_t eq = line.find('=', b);
      if (eq == std::string_view::npos || eq >= e)
        throw ConfigError(cfg.source, line_no, col, "expected 'key = value'");
      if (cfg.sections.empty()) throw ConfigError(cfg.source, line_no, col, "key outside of any section");
      std::size_t ke = eq;
      while (ke > b && is_space(line[ke - 1])) --ke;
      std::size_t vb = eq + 1;
      while (vb < e && is_space(line[vb])) ++vb;
      ConfigEntry entry{std::string(line.substr(b, ke - b)), std::string(line.substr(vb, e - vb)), line_no, col,
                        static_cast<int>(vb) + 1};
      if (entry.key.empty()) throw ConfigError(cfg.source, line_no, col, "empty key");
      if (entry.value.empty()) throw ConfigError(cfg.source, line_no, static_cast<int>(eq) + 2, "missing value");
      auto& sec = cfg.sections.back();
      if (sec.find(entry.key)) throw ConfigError(cfg.source, line_no, col, "duplicate key '" + entry.key + "'");
      sec.entries.push_back(std::move(entry));
    }
    if (pos > text.size()) break;
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, sep);) {
    const auto b = tok.find_first_not_of(" \t");
    const auto e = tok.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(tok.substr(b, e - b + 1));
  }
  return out;
}

/// Scenario schema:
///
///     [node NAME]      ideal = true | g, kappa, kappa_s, gamma, delta, delta_x
///     [segment NAME]   left, right, theta_left, phi_left, theta_right, phi_right,
///                      and optional *_late angles for the late time bin
///     [protocol]       purify_rounds, extend (segment list), eta_in, pre_cavity
///
/// Segments form the chain in file order unless `extend` lists the order.
inline Scenario scenario_from_config(const Config& cfg) {
  Scenario sc;
  for (const auto& s : cfg.sections) {
    if (s.name == "node") {
      if (s.arg.empty()) cfg.fail(s, "[node] needs a name, e.g. [node alice]");
      cfg.only(s, {"ideal", "g", "kappa", "kappa_s", "gamma", "delta", "delta_x"});
      NodeSpec n{s.arg, std::nullopt};
      const bool has_cavity = s.entries.size() > (s.find("ideal") ? 1u : 0u);
      const bool ideal = s.find("ideal") ? cfg.boolean(*s.find("ideal")) : !has_cavity;
      if (ideal && has_cavity) cfg.fail(s, "node '" + s.arg + "' is ideal but lists cavity parameters");
      if (!ideal) {
        CavityParams p;
        if (auto e = s.find("g")) p.g = cfg.number(*e);
        if (auto e = s.find("kappa")) p.kappa = cfg.number(*e);
        if (auto e = s.find("kappa_s")) p.kappa_s = cfg.number(*e);
        if (auto e = s.find("gamma")) p.gamma = cfg.number(*e);
        if (auto e = s.find("delta")) p.delta = cfg.number(*e);
        if (auto e = s.find("delta_x")) p.delta_x = cfg.number(*e);
        try {
          p.validate();
        } catch (const Error& err) {
          cfg.fail(s, err.what());
        }
        n.cavity = p;
      }
      sc.nodes.push_back(std::move(n));
    } else if (s.name == "segment") {
      if (s.arg.empty()) cfg.fail(s, "[segment] needs a name, e.g. [segment ab]");
      cfg.only(s, {"left", "right", "theta_left", "phi_left", "theta_right", "phi_right", "theta_left_late",
                   "phi_left_late", "theta_right_late", "phi_right_late"});
      SegmentSpec seg;
      seg.name = s.arg;
      const auto* l = s.find("left");
      const auto* r = s.find("right");
      if (!l || !r) cfg.fail(s, "segment '" + s.arg + "' needs 'left' and 'right'");
      seg.left = l->value;
      seg.right = r->value;
      auto angle = [&](const char* key, double fallback) {
        const auto* e = s.find(key);
        return e ? cfg.number(*e) : fallback;
      };
      const double tl = angle("theta_left", 0.0), pl = angle("phi_left", 0.0);
      const double tr = angle("theta_right", 0.0), pr = angle("phi_right", 0.0);
      seg.noise_left = NoiseChannel::asymmetric(tl, pl, angle("theta_left_late", tl), angle("phi_left_late", pl));
      seg.noise_right = NoiseChannel::asymmetric(tr, pr, angle("theta_right_late", tr), angle("phi_right_late", pr));
      sc.segments.push_back(std::move(seg));
    } else if (s.name == "protocol") {
      cfg.only(s, {"purify_rounds", "extend", "eta_in", "pre_cavity"});
      if (auto e = s.find("purify_rounds")) sc.purify_rounds = cfg.integer(*e);
      if (auto e = s.find("extend")) sc.extend_order = split_list(e->value);
      if (auto e = s.find("eta_in")) sc.eta_in = cfg.number(*e);
      if (auto e = s.find("pre_cavity")) {
        try {
          sc.pre_cavity = parse_script(e->value);
        } catch (const Error& err) {
          cfg.fail(*e, err.what());
        }
      }
    }
  }
  try {
    sc.validate();
  } catch (const Error& err) {
    // Point at the first section named in the message.
    const std::string msg = err.what();
    int line = 1;
    for (const auto& s : cfg.sections)
      if (!s.arg.empty() && msg.find("'" + s.arg + "'") != std::string::npos) {
        line = s.line;
        break;
      }
    throw ConfigError(cfg.source, line, 1, msg);
  }
  return sc;
}

}  // namespace qdrep
