#pragma once

// Report serialization: ordered JSON, RFC 4180 CSV and SVG plots. Every
// writer is deterministic so identical runs give byte-identical files.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grw/solver.hpp"
#include "grw/verify.hpp"

namespace grw {

using Json = nlohmann::ordered_json;

/// Outcome of one scenario operation.
struct OperationResult {
  std::string op;
  bool pass = false;
  std::string error;  ///< assertion-type failure raised by the operation
  std::vector<std::string> warnings;
  std::vector<IdentityReport> identities;
  Json details;  ///< operation-specific payload
  std::optional<UniquenessReport> uniqueness;
  std::vector<std::pair<std::string, std::vector<double>>> histories;  ///< residual histories by label
  std::optional<std::pair<std::vector<int>, ScalarField>> height;      ///< grid sizes and u* - mean(u*)
};

struct ScenarioResult {
  std::string name;
  std::vector<OperationResult> operations;
  bool strict = false;

  bool pass() const {
    return std::all_of(operations.begin(), operations.end(),
                       [&](const auto& o) { return o.pass && (!strict || o.warnings.empty()); });
  }
};

// ---------------------------------------------------------------------------
// JSON

inline Json json_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json to_json(const GridResidual& g) {
  Json j;
  j["size"] = g.size;
  j["spacing"] = g.spacing;
  j["max_abs"] = json_number(g.max_abs);
  j["rms"] = json_number(g.rms);
  j["min_value"] = json_number(g.min_value);
  j["count"] = g.count;
  j["witness"] = g.witness;
  return j;
}

inline Json to_json(const IdentityReport& r) {
  const auto& info = identity_info(r.id);
  Json j;
  j["identity"] = r.name;
  j["k"] = r.k;
  j["kind"] = to_string(r.kind);
  j["statement"] = info.statement;
  j["tolerance"] = info.tolerance;
  j["pass"] = r.pass;
  j["fitted_order"] = json_number(r.fitted_order);
  j["monotone"] = r.monotone;
  j["notes"] = r.notes;
  Json grids = Json::array();
  for (const auto& g : r.grids) grids.push_back(to_json(g));
  j["grids"] = grids;
  return j;
}

inline Json to_json(const ConditionReport& c) {
  Json j;
  j["logconcave"] = to_string(c.logconcave);
  j["witness"] = c.witness ? Json(*c.witness) : Json(nullptr);
  j["tcc_rho"] = c.tcc_rho;
  j["sup_logrho2_rho2"] = json_number(c.sup_logrho2);
  j["ncc_threshold"] = json_number(c.ncc_threshold);
  j["ncc"] = c.ncc;
  j["strict_ncc"] = c.strict_ncc;
  j["tcc"] = c.tcc;
  j["rho_prime_nonvanishing"] = c.rho_prime_nonvanishing;
  j["rho_prime_constant_sign"] = c.rho_prime_constant_sign;
  j["notes"] = c.notes;
  return j;
}

inline Json to_json(const ExtremumRecord& r) {
  Json j;
  j["role"] = r.role;
  j["index"] = r.index;
  j["coords"] = r.coords;
  j["h"] = r.h;
  j["log_rho_d1"] = r.lambda;
  j["grad_h_norm"] = r.grad_norm;
  j["theta_plus_one"] = r.theta_plus_one;
  j["lap_h"] = r.lap_h;
  j["lap_h_closed"] = r.lap_h_closed;
  j["calL_sigma"] = r.calL_sigma;
  j["calL_sigma_closed"] = r.calL_closed;
  j["H1"] = r.H1;
  j["H2"] = r.H2;
  j["lap_sign_ok"] = r.lap_sign_ok;
  j["calL_sign_ok"] = r.calL_sign_ok;
  j["bracket_ok"] = r.bracket_ok;
  return j;
}

inline Json to_json(const MinMaxDiagnostics& d) {
  Json j;
  j["epsilon"] = d.epsilon;
  j["ok"] = d.ok();
  j["max"] = to_json(d.max);
  j["min"] = to_json(d.min);
  return j;
}

inline Json to_json(const UniquenessReport& r) {
  Json j;
  j["theorem"] = to_string(r.theorem);
  j["k"] = r.k;
  j["t0"] = r.t0;
  j["target"] = r.target;
  j["sizes"] = r.sizes;
  j["conditions"] = to_json(r.conditions);
  Json ell;
  ell["seed_min_Hk"] = json_number(r.ellipticity.seed_min_Hk);
  ell["seed_has_elliptic_point"] = r.ellipticity.seed_has_elliptic_point;
  Json pe = Json::array();
  for (double v : r.ellipticity.seed_min_P_eigen) pe.push_back(json_number(v));
  ell["seed_min_P_eigenvalue"] = pe;
  j["ellipticity"] = ell;
  j["hypothesis_failures"] = r.hypothesis_failures;
  j["hypotheses_hold"] = r.hypotheses_hold;
  j["negative_control"] = r.negative_control;
  j["uniqueness_asserted"] = r.asserted;
  j["converged"] = r.converged;
  j["slice_distance"] = json_number(r.slice_distance);
  j["iterations"] = r.iterations;
  Json runs = Json::array();
  for (const auto& run : r.runs) {
    Json x;
    x["seed"] = run.seed;
    x["amplitude"] = run.amplitude;
    x["converged"] = run.converged;
    x["iterations"] = run.iterations;
    x["final_residual"] = json_number(run.final_residual);
    x["slice_distance"] = json_number(run.slice_distance);
    x["failure"] = run.failure;
    runs.push_back(x);
  }
  j["runs"] = runs;
  j["minmax"] = r.minmax ? to_json(*r.minmax) : Json(nullptr);
  j["pass"] = r.pass;
  j["notes"] = r.notes;
  return j;
}

inline Json to_json(const OmoriCheck& c) {
  Json j;
  j["gamma1"] = c.gamma_ok[0];
  j["gamma2"] = c.gamma_ok[1];
  j["gamma3"] = c.gamma_ok[2];
  j["condG_i"] = c.G_ok[0];
  j["condG_ii"] = c.G_ok[1];
  j["condG_iii"] = c.G_ok[2];
  j["condG_iv"] = c.G_ok[3];
  j["all_ok"] = c.all_ok();
  j["psi_c_margin"] = json_number(c.psi_c_margin);
  j["psi_c_max_abs"] = json_number(c.psi_c_max_abs);
  j["hessian_gamma_margin"] = json_number(c.hessian_gamma_margin);
  j["A"] = c.A;
  j["B"] = json_number(c.B);
  j["G_tail_exponent"] = json_number(c.G_tail.exponent);
  j["G_tail_log_exponent"] = json_number(c.G_tail.log_exponent);
  j["G_tail_second_order"] = c.G_tail.second_order;
  j["G_tail_margin"] = json_number(c.G_tail.margin);
  j["details"] = c.details;
  return j;
}

inline Json to_json(const ParabolicityResult& r) {
  Json j;
  j["parabolic_indicator"] = r.parabolic_indicator;
  j["integral_value"] = json_number(r.integral_value);
  j["tail_exponent"] = json_number(r.tail.exponent);
  j["tail_log_exponent"] = json_number(r.tail.log_exponent);
  j["tail_second_order"] = r.tail.second_order;
  j["tail_margin"] = json_number(r.tail.margin);
  return j;
}

inline Json to_json(const OperationResult& o) {
  Json j;
  j["operation"] = o.op;
  j["pass"] = o.pass;
  j["error"] = o.error;
  j["warnings"] = o.warnings;
  if (!o.identities.empty()) {
    Json ids = Json::array();
    for (const auto& r : o.identities) ids.push_back(to_json(r));
    j["identities"] = ids;
  }
  if (o.uniqueness) j["uniqueness"] = to_json(*o.uniqueness);
  if (!o.details.is_null()) j["details"] = o.details;
  return j;
}

inline Json to_json(const ScenarioResult& r) {
  Json j;
  j["scenario"] = r.name;
  j["strict"] = r.strict;
  j["pass"] = r.pass();
  Json ops = Json::array();
  for (const auto& o : r.operations) ops.push_back(to_json(o));
  j["operations"] = ops;
  return j;
}

// ---------------------------------------------------------------------------
// CSV and SVG

/// Shortest round-trip decimal form; "nan"/"inf" spelled out.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

/// RFC 4180: CRLF line endings, quoted fields where needed.
inline std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_field(cells[i]);
    out += "\r\n";
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

inline std::string identity_csv(const IdentityReport& r) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& g : r.grids) {
    std::string w;
    for (std::size_t i = 0; i < g.witness.size(); ++i) w += (i ? " " : "") + format_number(g.witness[i]);
    rows.push_back({std::to_string(g.size), format_number(g.spacing), format_number(g.max_abs), format_number(g.rms),
                    format_number(g.min_value), std::to_string(g.count), w});
  }
  return csv_table({"size", "spacing", "max_abs", "rms", "min_value", "count", "witness"}, rows);
}

namespace detail {

inline std::string fixed(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace detail

/// Log-log plot of max residual against spacing with the fitted order.
inline std::string convergence_svg(const IdentityReport& r) {
  const double W = 480, H = 360, L = 70, R = 20, T = 40, B = 50;
  std::vector<std::pair<double, double>> pts;
  for (const auto& g : r.grids)
    if (g.max_abs > 0 && std::isfinite(g.max_abs)) pts.emplace_back(std::log10(g.spacing), std::log10(g.max_abs));
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << detail::escape_xml(r.name) << " (fitted order "
     << (std::isfinite(r.fitted_order) ? detail::fixed(r.fitted_order) : std::string("n/a")) << ")</text>\n";
  if (pts.empty()) {
    os << "<text x=\"" << W / 2 << "\" y=\"" << H / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">all residuals zero</text>\n</svg>\n";
    return os.str();
  }
  double x0 = pts.front().first, x1 = x0, y0 = pts.front().second, y1 = y0;
  for (auto [x, y] : pts) x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
  x0 = std::floor(x0 * 2 - 0.5) / 2, x1 = std::ceil(x1 * 2 + 0.5) / 2;
  y0 = std::floor(y0 - 0.5), y1 = std::ceil(y1 + 0.5);
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return T + (y1 - y) / (y1 - y0) * (H - T - B); };
  os << "<g stroke=\"black\" fill=\"none\"><rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R
     << "\" height=\"" << H - T - B << "\"/></g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double y = y0; y <= y1 + 1e-9; y += 1.0)
    os << "<text x=\"" << L - 6 << "\" y=\"" << detail::fixed(py(y) + 4) << "\" text-anchor=\"end\">1e"
       << static_cast<int>(std::lround(y)) << "</text>\n";
  for (const auto& g : r.grids)
    if (g.max_abs > 0 && std::isfinite(g.max_abs))
      os << "<text x=\"" << detail::fixed(px(std::log10(g.spacing))) << "\" y=\"" << H - B + 16
         << "\" text-anchor=\"middle\">" << g.size << "</text>\n";
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">grid size (log spacing)</text>\n";
  os << "</g>\n";
  // Slope-2 reference through the coarsest point.
  {
    const auto [xa, ya] = pts.front();
    const double xb = pts.back().first;
    os << "<line x1=\"" << detail::fixed(px(xa)) << "\" y1=\"" << detail::fixed(py(ya)) << "\" x2=\""
       << detail::fixed(px(xb)) << "\" y2=\"" << detail::fixed(py(ya + 2 * (xb - xa)))
       << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i)
    os << (i ? " " : "") << detail::fixed(px(pts[i].first)) << ',' << detail::fixed(py(pts[i].second));
  os << "\"/>\n";
  for (auto [x, y] : pts)
    os << "<circle cx=\"" << detail::fixed(px(x)) << "\" cy=\"" << detail::fixed(py(y)) << "\" r=\"3.5\" fill=\"#1f5fa8\"/>\n";
  os << "</svg>\n";
  return os.str();
}

/// Filled-cell map with iso-lines (marching squares) of a 2-D field stored
/// row-major with `rows` x `cols` nodes.
inline std::string contour_svg(const std::string& title, const ScalarField& f, int rows, int cols, int levels = 10) {
  const double W = 420, H = 460, M = 30, top = 50;
  const double cw = (W - 2 * M) / cols, ch = (H - top - M) / rows;
  double lo = INFINITY, hi = -INFINITY;
  for (int i = 0; i < rows * cols; ++i) lo = std::min(lo, f[i]), hi = std::max(hi, f[i]);
  const double span = hi - lo;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  char range[96];
  std::snprintf(range, sizeof range, "range [%.3e, %.3e]", lo, hi);
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << detail::escape_xml(title) << "</text>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"38\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
     << range << "</text>\n";
  auto level = [&](double v) { return span > 0 ? (v - lo) / span : 0.5; };
  os << "<g stroke=\"none\">\n";
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const double t = level(f[i * cols + j]);
      const int r = static_cast<int>(std::lround(40 + 200 * t)), b = static_cast<int>(std::lround(240 - 200 * t));
      os << "<rect x=\"" << detail::fixed(M + j * cw) << "\" y=\"" << detail::fixed(top + i * ch) << "\" width=\""
         << detail::fixed(cw + 0.05) << "\" height=\"" << detail::fixed(ch + 0.05) << "\" fill=\"rgb(" << r << ",90," << b
         << ")\"/>\n";
    }
  os << "</g>\n";
  if (span > 0) {
    os << "<g stroke=\"black\" stroke-width=\"0.6\" fill=\"none\">\n";
    auto X = [&](double j) { return M + (j + 0.5) * cw; };
    auto Y = [&](double i) { return top + (i + 0.5) * ch; };
    for (int l = 1; l < levels; ++l) {
      const double c = lo + span * l / levels;
      for (int i = 0; i + 1 < rows; ++i)
        for (int j = 0; j + 1 < cols; ++j) {
          const double v[4] = {f[i * cols + j], f[i * cols + j + 1], f[(i + 1) * cols + j + 1], f[(i + 1) * cols + j]};
          const double ci[4] = {double(i), double(i), double(i + 1), double(i + 1)};
          const double cj[4] = {double(j), double(j + 1), double(j + 1), double(j)};
          std::vector<std::pair<double, double>> cross;
          for (int e = 0; e < 4; ++e) {
            const int a = e, b = (e + 1) % 4;
            if ((v[a] < c) != (v[b] < c)) {
              const double t = (c - v[a]) / (v[b] - v[a]);
              cross.emplace_back(ci[a] + t * (ci[b] - ci[a]), cj[a] + t * (cj[b] - cj[a]));
            }
          }
          for (std::size_t s = 0; s + 1 < cross.size(); s += 2)
            os << "<line x1=\"" << detail::fixed(X(cross[s].second)) << "\" y1=\"" << detail::fixed(Y(cross[s].first))
               << "\" x2=\"" << detail::fixed(X(cross[s + 1].second)) << "\" y2=\""
               << detail::fixed(Y(cross[s + 1].first)) << "\"/>\n";
        }
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Files

/// 64-bit FNV-1a, recorded in the manifest as a content fingerprint.
inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) h = (h ^ ch) * 0x100000001b3ULL;
  return h;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + p.string() + "'");
  out << content;
  if (!out) throw Error(ErrorKind::IoError, "write failed for '" + p.string() + "'");
}

/// Write reports, tables, plots and a manifest into `dir`. With no
/// operations only the manifest is written. Returns the file names.
inline std::vector<std::string> emit_outputs(const ScenarioResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create '" + dir.string() + "': " + ec.message());
  std::vector<std::pair<std::string, std::string>> files;
  const std::string& base = result.name;
  if (!result.operations.empty()) {
    files.emplace_back(base + ".report.json", to_json(result).dump(2) + "\n");
    for (const auto& op : result.operations) {
      for (const auto& r : op.identities) {
        files.emplace_back(base + "." + r.name + ".csv", identity_csv(r));
        if (r.grids.size() >= 2) files.emplace_back(base + "." + r.name + ".svg", convergence_svg(r));
      }
      if (!op.histories.empty()) {
        std::vector<std::vector<std::string>> rows;
        for (const auto& [label, hist] : op.histories)
          for (std::size_t i = 0; i < hist.size(); ++i)
            rows.push_back({label, std::to_string(i), format_number(hist[i])});
        files.emplace_back(base + "." + op.op + "_residuals.csv", csv_table({"run", "iteration", "max_residual"}, rows));
      }
      if (op.height) {
        const auto& [sizes, u] = *op.height;
        if (sizes.size() >= 2)
          files.emplace_back(base + "." + op.op + "_height.svg",
                             contour_svg(base + ": u* - mean(u*)", u, sizes[0], sizes[1]));
      }
    }
  }
  Json manifest;
  manifest["scenario"] = base;
  manifest["pass"] = result.pass();
  Json list = Json::array();
  std::vector<std::string> names;
  for (const auto& [name, content] : files) {
    write_file(dir / name, content);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(content)));
    Json e;
    e["file"] = name;
    e["bytes"] = content.size();
    e["fnv1a64"] = hash;
    list.push_back(e);
    names.push_back(name);
  }
  manifest["files"] = list;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  names.push_back("manifest.json");
  return names;
}

}  // namespace grw
