#pragma once

// Scenario files: flat sectioned key = value text.
//
//   schema_version = 1
//   name = torus_exp
//   operations = verify_structural, verify_theta
//
//   [fiber]
//   kind = torus
//   sizes = 32, 32
//
// Blank lines and lines starting with '#' or ';' are ignored. Keys before the
// first section belong to the top-level block.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grw/errors.hpp"
#include "grw/expression.hpp"
#include "grw/fiber.hpp"
#include "grw/solver.hpp"
#include "grw/verify.hpp"
#include "grw/warping.hpp"

namespace grw {

inline constexpr int kSchemaVersion = 1;

struct ConfigEntry {
  std::string value;
  int line = 0;
  int column = 0;  ///< column of the first value character (1-based)
};

/// Parsed key/value blocks with source positions for error reporting.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin = "<string>") {
    Config c;
    c.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto first = line.find_first_not_of(" \t");
      if (first == std::string::npos || line[first] == '#' || line[first] == ';') continue;
      if (line[first] == '[') {
        const auto close = line.find(']', first);
        if (close == std::string::npos) c.fail(lineno, static_cast<int>(line.size()) + 1, "missing ']'");
        const auto rest = line.find_first_not_of(" \t", close + 1);
        if (rest != std::string::npos && line[rest] != '#' && line[rest] != ';')
          c.fail(lineno, static_cast<int>(rest) + 1, "unexpected text after section header");
        section = trim(line.substr(first + 1, close - first - 1));
        if (section.empty() || !valid_name(section)) c.fail(lineno, static_cast<int>(first) + 2, "invalid section name");
        if (c.blocks_.count(section)) c.fail(lineno, static_cast<int>(first) + 1, "duplicate section [" + section + "]");
        c.blocks_[section];
        c.order_.push_back(section);
        continue;
      }
      const auto eq = line.find('=', first);
      if (eq == std::string::npos) c.fail(lineno, static_cast<int>(first) + 1, "expected 'key = value'");
      const std::string key = trim(line.substr(first, eq - first));
      if (key.empty() || !valid_name(key)) c.fail(lineno, static_cast<int>(first) + 1, "invalid key");
      auto vstart = line.find_first_not_of(" \t", eq + 1);
      std::string value = vstart == std::string::npos ? "" : trim(line.substr(vstart));
      if (value.empty()) c.fail(lineno, static_cast<int>(eq) + 2, "empty value for '" + key + "'");
      auto& block = c.blocks_[section];
      if (block.count(key)) c.fail(lineno, static_cast<int>(first) + 1, "duplicate key '" + key + "'");
      block[key] = {value, lineno, static_cast<int>(vstart) + 1};
    }
    return c;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot read scenario '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  const std::string& origin() const { return origin_; }
  bool has_section(const std::string& s) const { return blocks_.count(s) > 0; }
  bool has(const std::string& s, const std::string& key) const {
    const auto it = blocks_.find(s);
    return it != blocks_.end() && it->second.count(key) > 0;
  }
  const ConfigEntry* find(const std::string& s, const std::string& key) const {
    const auto it = blocks_.find(s);
    if (it == blocks_.end()) return nullptr;
    const auto jt = it->second.find(key);
    return jt == it->second.end() ? nullptr : &jt->second;
  }
  const ConfigEntry& require(const std::string& s, const std::string& key) const {
    if (const auto* e = find(s, key)) return *e;
    throw Error(ErrorKind::ParseError, origin_ + ": missing key '" + key + "' in " +
                                           (s.empty() ? std::string("top-level block") : "[" + s + "]"));
  }

  std::string str(const std::string& s, const std::string& key, std::optional<std::string> def = std::nullopt) const {
    if (const auto* e = find(s, key)) return e->value;
    if (def) return *def;
    return require(s, key).value;
  }
  double real(const std::string& s, const std::string& key, std::optional<double> def = std::nullopt) const {
    if (const auto* e = find(s, key)) return to_real(*e, e->value, e->column);
    if (def) return *def;
    const auto& e = require(s, key);
    return to_real(e, e.value, e.column);
  }
  int integer(const std::string& s, const std::string& key, std::optional<int> def = std::nullopt) const {
    const double v = real(s, key, def ? std::optional<double>(*def) : std::nullopt);
    if (v != std::floor(v) || std::abs(v) > 1e9) {
      const auto& e = require(s, key);
      fail(e.line, e.column, "expected an integer");
    }
    return static_cast<int>(v);
  }
  bool boolean(const std::string& s, const std::string& key, bool def) const {
    const auto* e = find(s, key);
    if (!e) return def;
    if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
    if (e->value == "false" || e->value == "no" || e->value == "0") return false;
    fail(e->line, e->column, "expected true or false");
  }
  /// Comma-separated items with their columns.
  std::vector<std::pair<std::string, int>> items(const ConfigEntry& e) const {
    std::vector<std::pair<std::string, int>> out;
    std::size_t start = 0;
    for (;;) {
      const auto comma = e.value.find(',', start);
      const std::string raw = e.value.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      const auto lead = raw.find_first_not_of(" \t");
      const std::string item = trim(raw);
      const int col = e.column + static_cast<int>(start + (lead == std::string::npos ? 0 : lead));
      if (item.empty()) fail(e.line, col, "empty list item");
      out.emplace_back(item, col);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }
  std::vector<double> reals(const std::string& s, const std::string& key) const {
    std::vector<double> out;
    const auto& e = require(s, key);
    for (const auto& [item, col] : items(e)) out.push_back(to_real(e, item, col));
    return out;
  }
  std::vector<int> integers(const std::string& s, const std::string& key) const {
    std::vector<int> out;
    const auto& e = require(s, key);
    for (const auto& [item, col] : items(e)) {
      const double v = to_real(e, item, col);
      if (v != std::floor(v) || std::abs(v) > 1e9) fail(e.line, col, "expected an integer");
      out.push_back(static_cast<int>(v));
    }
    return out;
  }
  std::vector<std::string> strings(const std::string& s, const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [item, col] : items(require(s, key))) out.push_back(item);
    return out;
  }

  [[noreturn]] void fail(int line, int column, const std::string& msg) const {
    throw Error(ErrorKind::ParseError,
                origin_ + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg);
  }

  const std::vector<std::string>& sections() const { return order_; }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
  }
  static bool valid_name(const std::string& s) {
    for (char ch : s)
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.')) return false;
    return true;
  }
  double to_real(const ConfigEntry& e, const std::string& text, int column) const {
    if (text == "inf" || text == "+inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      fail(e.line, column, "expected a number, got '" + text + "'");
    }
    if (used != text.size()) fail(e.line, column + static_cast<int>(used), "trailing characters in number");
    return v;
  }

  std::string origin_;
  std::map<std::string, std::map<std::string, ConfigEntry>> blocks_;
  std::vector<std::string> order_;
};

enum class Operation {
  VerifyStructural,
  VerifyTheta,
  VerifyInequalities,
  CheckOmori,
  CheckParabolicity,
  Solve,
  Uniqueness,
};

inline std::string to_string(Operation op) {
  switch (op) {
    case Operation::VerifyStructural: return "verify_structural";
    case Operation::VerifyTheta: return "verify_theta";
    case Operation::VerifyInequalities: return "verify_inequalities";
    case Operation::CheckOmori: return "check_omori";
    case Operation::CheckParabolicity: return "check_parabolicity";
    case Operation::Solve: return "solve";
    case Operation::Uniqueness: return "uniqueness";
  }
  return "?";
}

struct OmoriSettings {
  OmoriModel model;
  std::string G = "quadratic";  ///< quadratic | quadratic_log | exponential
  double A = 2.0;
  bool expect_pass = true;
};

struct ParabolicitySettings {
  std::string profile = "plane";  ///< plane | hyperbolic | power
  double exponent = 1.0;          ///< power profile: vol(boundary B_t) ~ t^a
  double t_max = 1e6;
  std::optional<bool> expect_parabolic;
};

struct SolveSettings {
  int k = 1;
  std::optional<double> target;  ///< slice value at t0 when empty
  double t0 = 0.0;
  SolveOptions options;
};

struct Scenario {
  std::string name;
  std::string source_path;

  FiberKind fiber = FiberKind::Torus;
  int n = 2;
  std::vector<int> sizes;
  FiberPatch patch;

  WarpingKind warping = WarpingKind::Exp;
  std::vector<double> warping_params;
  Interval warping_interval;
  std::vector<std::pair<double, double>> warping_table;

  std::optional<std::string> surface_expression;
  std::optional<std::string> surface_csv;  ///< resolved path
  std::optional<double> sigma_base;

  std::vector<Operation> operations;
  std::vector<int> grids;  ///< refinement sizes (every axis); empty: fiber sizes only
  std::optional<std::vector<int>> phi_orders;
  std::string out_dir = "out";

  OmoriSettings omori;
  ParabolicitySettings parabolicity;
  SolveSettings solve;
  UniquenessScenario uniqueness;
  Interval check_slab;  ///< slab for the conditions-only check
  TheoremTag check_theorem = TheoremTag::Thm1;
  int check_k = 1;
  bool negative_control = false;
};

namespace detail {

inline Interval interval_from(const Config& c, const std::string& s, const std::string& key, Interval def) {
  if (!c.has(s, key)) return def;
  const auto v = c.reals(s, key);
  const auto& e = c.require(s, key);
  if (v.size() != 2) c.fail(e.line, e.column, "expected 'lo, hi'");
  if (!(v[0] < v[1])) c.fail(e.line, e.column, "interval must satisfy lo < hi");
  return {v[0], v[1]};
}

template <class Fn>
auto checked(const Config& c, const ConfigEntry& e, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& err) {
    if (err.kind() != ErrorKind::BadParams) throw;
    c.fail(e.line, e.column, err.what());
  }
}

inline std::string resolve_path(const std::string& base, const std::string& rel) {
  if (!rel.empty() && rel.front() == '/') return rel;
  const auto slash = base.find_last_of('/');
  return slash == std::string::npos ? rel : base.substr(0, slash + 1) + rel;
}

}  // namespace detail

/// Build a Scenario from parsed config; validates every referenced block.
inline Scenario scenario_from_config(const Config& c) {
  Scenario sc;
  sc.source_path = c.origin();
  {
    const auto& e = c.require("", "schema_version");
    const int v = c.integer("", "schema_version");
    if (v != kSchemaVersion)
      throw Error(ErrorKind::SchemaVersionMismatch, c.origin() + ":" + std::to_string(e.line) + ":" +
                                                        std::to_string(e.column) + ": schema_version " +
                                                        std::to_string(v) + " is not supported (expected " +
                                                        std::to_string(kSchemaVersion) + ")");
  }
  sc.name = c.str("", "name");
  for (char ch : sc.name)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')) {
      const auto& e = c.require("", "name");
      c.fail(e.line, e.column, "name may contain only letters, digits, '_' and '-'");
    }

  {
    const auto& e = c.require("", "operations");
    for (const auto& [item, col] : c.items(e)) {
      static const std::map<std::string, Operation> ops = {
          {"verify_structural", Operation::VerifyStructural}, {"verify_theta", Operation::VerifyTheta},
          {"verify_inequalities", Operation::VerifyInequalities}, {"check_omori", Operation::CheckOmori},
          {"check_parabolicity", Operation::CheckParabolicity}, {"solve", Operation::Solve},
          {"uniqueness", Operation::Uniqueness}};
      const auto it = ops.find(item);
      if (it == ops.end()) c.fail(e.line, col, "unknown operation '" + item + "'");
      sc.operations.push_back(it->second);
    }
  }
  sc.out_dir = c.str("", "out", "out/" + sc.name);
  if (c.has("", "grids")) sc.grids = c.integers("", "grids");

  auto needs = [&](std::initializer_list<Operation> set) {
    for (auto op : sc.operations)
      for (auto s : set)
        if (op == s) return true;
    return false;
  };
  const bool geometric = needs({Operation::VerifyStructural, Operation::VerifyTheta, Operation::VerifyInequalities,
                                Operation::Solve, Operation::Uniqueness});
  const bool need_surface =
      needs({Operation::VerifyStructural, Operation::VerifyTheta, Operation::VerifyInequalities, Operation::Solve});

  if (geometric || c.has_section("fiber")) {
    const auto& ek = c.require("fiber", "kind");
    sc.fiber = detail::checked(c, ek, [&] { return parse_fiber_kind(ek.value); });
    sc.n = c.integer("fiber", "n", 2);
    if (sc.n != 2 && sc.n != 3) {
      const auto* e = c.find("fiber", "n");
      c.fail(e->line, e->column, "n must be 2 or 3");
    }
    sc.sizes = c.integers("fiber", "sizes");
    if (static_cast<int>(sc.sizes.size()) != sc.n) {
      const auto& e = c.require("fiber", "sizes");
      c.fail(e.line, e.column, "expected " + std::to_string(sc.n) + " sizes");
    }
    sc.patch.theta0 = c.real("fiber", "theta0", sc.patch.theta0);
    sc.patch.r_min = c.real("fiber", "r_min", sc.patch.r_min);
    sc.patch.r_max = c.real("fiber", "r_max", sc.patch.r_max);
  }
  if (geometric || c.has_section("warping") || c.has("check", "slab")) {
    const auto& ek = c.require("warping", "kind");
    sc.warping = detail::checked(c, ek, [&] { return parse_warping_kind(ek.value); });
    if (c.has("warping", "params")) sc.warping_params = c.reals("warping", "params");
    sc.warping_interval = detail::interval_from(c, "warping", "interval", Interval{});
    if (c.has("warping", "table")) {
      const auto& e = c.require("warping", "table");
      for (const auto& [item, col] : c.items(e)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) c.fail(e.line, col, "table entries are 't:rho'");
        try {
          sc.warping_table.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
        } catch (const std::exception&) {
          c.fail(e.line, col, "malformed table entry '" + item + "'");
        }
      }
    }
    detail::checked(c, ek, [&] {
      (void)make_warping(sc.warping, sc.warping_params, sc.warping_interval, sc.warping_table);
      return 0;
    });
  }
  if (need_surface) {
    if (c.has("surface", "expression") == c.has("surface", "csv"))
      throw Error(ErrorKind::ParseError, c.origin() + ": [surface] needs exactly one of 'expression' or 'csv'");
    if (c.has("surface", "expression")) {
      const auto& e = c.require("surface", "expression");
      try {
        (void)Expression::parse(e.value);
      } catch (const Error& err) {
        c.fail(e.line, e.column, err.what());
      }
      sc.surface_expression = e.value;
    } else {
      sc.surface_csv = detail::resolve_path(c.origin(), c.str("surface", "csv"));
      if (!sc.grids.empty()) {
        const auto& e = c.require("", "grids");
        c.fail(e.line, e.column, "refinement grids need an expression surface");
      }
    }
    if (c.has("surface", "sigma_base")) sc.sigma_base = c.real("surface", "sigma_base");
  }
  if (c.has("verify", "phi_orders")) sc.phi_orders = c.integers("verify", "phi_orders");

  if (needs({Operation::CheckOmori})) {
    sc.omori.model.c = c.real("omori", "c", 0.0);
    sc.omori.model.r_max = c.real("omori", "r_max", 50.0);
    sc.omori.G = c.str("omori", "G", std::string("quadratic"));
    if (sc.omori.G != "quadratic" && sc.omori.G != "quadratic_log" && sc.omori.G != "exponential") {
      const auto& e = c.require("omori", "G");
      c.fail(e.line, e.column, "G must be quadratic, quadratic_log or exponential");
    }
    sc.omori.A = c.real("omori", "A", 2.0);
    const auto expect = c.str("omori", "expect", std::string("pass"));
    if (expect != "pass" && expect != "fail") {
      const auto& e = c.require("omori", "expect");
      c.fail(e.line, e.column, "expect must be pass or fail");
    }
    sc.omori.expect_pass = expect == "pass";
  }
  if (needs({Operation::CheckParabolicity})) {
    sc.parabolicity.profile = c.str("parabolicity", "profile");
    if (sc.parabolicity.profile != "plane" && sc.parabolicity.profile != "hyperbolic" &&
        sc.parabolicity.profile != "power") {
      const auto& e = c.require("parabolicity", "profile");
      c.fail(e.line, e.column, "profile must be plane, hyperbolic or power");
    }
    sc.parabolicity.exponent = c.real("parabolicity", "exponent", 1.0);
    sc.parabolicity.t_max = c.real("parabolicity", "t_max", 1e6);
    if (c.has("parabolicity", "expect")) {
      const auto& e = c.require("parabolicity", "expect");
      if (e.value != "parabolic" && e.value != "nonparabolic") c.fail(e.line, e.column, "expect must be parabolic or nonparabolic");
      sc.parabolicity.expect_parabolic = e.value == "parabolic";
    }
  }

  auto solve_options = [&](const std::string& s) {
    SolveOptions o;
    o.tol_residual = c.real(s, "tol_residual", o.tol_residual);
    o.max_iter = c.integer(s, "max_iter", o.max_iter);
    o.damping = c.real(s, "damping", o.damping);
    o.spacelike_margin = c.real(s, "spacelike_margin", o.spacelike_margin);
    o.linear_tol = c.real(s, "linear_tol", o.linear_tol);
    return o;
  };
  auto target_rule = [&](const std::string& s) -> std::optional<double> {
    const auto t = c.str(s, "target", std::string("slice"));
    if (t == "slice") return std::nullopt;
    return c.real(s, "target");
  };
  if (needs({Operation::Solve})) {
    sc.solve.k = c.integer("solve", "k");
    sc.solve.t0 = c.real("solve", "t0", 0.0);
    sc.solve.target = target_rule("solve");
    if (!sc.solve.target && !c.has("solve", "t0"))
      throw Error(ErrorKind::ParseError, c.origin() + ": [solve] target = slice needs t0");
    sc.solve.options = solve_options("solve");
  }
  if (needs({Operation::Uniqueness})) {
    auto& u = sc.uniqueness;
    u.fiber = sc.fiber;
    u.sizes = sc.sizes;
    u.patch = sc.patch;
    u.warping = sc.warping;
    u.warping_params = sc.warping_params;
    u.warping_interval = sc.warping_interval;
    u.k = c.integer("uniqueness", "k");
    u.t0 = c.real("uniqueness", "t0");
    u.target = target_rule("uniqueness");
    u.slab = detail::interval_from(c, "uniqueness", "slab", sc.warping_interval);
    u.amplitude = c.real("uniqueness", "amplitude", 0.05);
    u.seeds.clear();
    for (int s : c.integers("uniqueness", "seeds")) {
      if (s < 0) {
        const auto& e = c.require("uniqueness", "seeds");
        c.fail(e.line, e.column, "seeds must be nonnegative");
      }
      u.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    const auto& et = c.require("uniqueness", "theorem");
    u.theorem = detail::checked(c, et, [&] { return parse_theorem_tag(et.value); });
    u.negative_control = c.boolean("uniqueness", "negative_control", false);
    u.solve = solve_options("uniqueness");
  }
  if (c.has_section("check")) {
    sc.check_slab = detail::interval_from(c, "check", "slab", sc.warping_interval);
    const auto& et = c.require("check", "theorem");
    sc.check_theorem = detail::checked(c, et, [&] { return parse_theorem_tag(et.value); });
    sc.check_k = c.integer("check", "k", 1);
    sc.negative_control = c.boolean("check", "negative_control", false);
  } else if (needs({Operation::Uniqueness})) {
    sc.check_slab = sc.uniqueness.slab;
    sc.check_theorem = sc.uniqueness.theorem;
    sc.check_k = sc.uniqueness.k;
    sc.negative_control = sc.uniqueness.negative_control;
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) { return scenario_from_config(Config::load(path)); }

}  // namespace grw
