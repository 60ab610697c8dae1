#pragma once

// Residual fields for every closed-form identity and inequality, refinement
// studies with fitted convergence order, and the one-dimensional side
// conditions of the Omori-Yau principle and the parabolicity criterion.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "grw/operators.hpp"

namespace grw {

enum class IdentityId {
  LkSigma,            ///< L_k sigma(h) = -c_k (rho' H_k + Theta rho H_{k+1})
  LkHeight,           ///< L_k h = -(log rho)'(c_k H_k + <P_k grad h, grad h>) - Theta c_k H_{k+1}
  TraceP,             ///< Tr P_k = c_k H_k
  TraceAP,            ///< Tr(A P_k) = -c_k H_{k+1}
  TraceA2P,           ///< Tr(A^2 P_k) = binom(n,k+1)(n H_1 H_{k+1} - (n-k-1) H_{k+2})
  NormA,              ///< |A|^2 = n^2 H_1^2 - n(n-1) H_2
  GradHeight,         ///< |grad h|^2 = Theta^2 - 1
  GaussH2,            ///< n(n-1) H_2 = Sbar - S + 2 Ricbar(N,N)
  RicciFiberNormal,   ///< Ric_P(N*,N*) = (n-1) kappa |grad h|^2 / rho^2
  CompositeTwoForms,  ///< (n-1)(log rho)' L_0 - Theta L_1 equals the k = 2 composite operator
  CompositeCompact,   ///< calL sigma = -c_{k-1} rho ((log rho)'^k - (-Theta)^k H_k)
  CompositeTheta4,    ///< calL sigma = c_{k-1} rho Theta (|(log rho)'/Theta|^k - H_k), (log rho)' >= 0
  LaplaceThetaHat,    ///< Laplacian of rho(h) Theta
  LkThetaHat,         ///< L_k of rho(h) Theta, constant-curvature fiber
  DivergenceForm,     ///< div(P_{k-1} grad f) against its closed form
  PhiExpansion,       ///< expansion of div(P_{k-1} grad phi), phi = H_k^{1/k} sigma(h) + rho Theta
  PhiBracket,         ///< n H_1 H_k - (n-k) H_{k+1} - k H_k^{(k+1)/k} >= 0 on elliptic points
  SectionalGauss,     ///< K_Sigma >= Kbar - |A|^2
  SectionalSplit,     ///< Kbar through fiber, (log rho)' and (log rho)'' parts
  WedgeNorm,          ///< |X* ^ Y*|^2 = 1 + <X,T>^2 + <Y,T>^2
  SectionalFiberLower,///< Kbar >= kappa |X* ^ Y*|^2 / rho^2 where (log rho)'' <= 0
  SectionalFiberBound,///< kappa |X* ^ Y*|^2 / rho^2 >= -|kappa| Theta^2 / rho^2
  Garding,            ///< H_1 >= H_2^{1/2} >= ... >= H_n^{1/n} > 0 on elliptic points
  MeanSquare,         ///< H_1^2 >= H_2 where H_2 > 0
  ThetaSquare,        ///< Theta^2 >= 1
};

enum class CheckKind { Algebraic, Discretization, Inequality };

inline std::string to_string(CheckKind k) {
  switch (k) {
    case CheckKind::Algebraic: return "algebraic";
    case CheckKind::Discretization: return "discretization";
    case CheckKind::Inequality: return "inequality";
  }
  return "?";
}

struct IdentityInfo {
  IdentityId id;
  const char* name;
  CheckKind kind;
  double tolerance;  ///< algebraic: max relative residual; inequality: allowed negative slack
  const char* statement;
};

inline constexpr double kAlgebraicTol = 1e-10;
inline constexpr double kExactFloor = 1e-8;
inline constexpr double kOrderThreshold = 1.8;

inline const std::vector<IdentityInfo>& identity_table() {
  static const std::vector<IdentityInfo> table = {
      {IdentityId::LkSigma, "Lk_sigma", CheckKind::Discretization, 0, "L_k sigma(h) = -c_k(rho'(h) H_k + Theta rho(h) H_{k+1})"},
      {IdentityId::LkHeight, "Lk_height", CheckKind::Discretization, 0,
       "L_k h = -(log rho)'(h)(c_k H_k + <P_k grad h, grad h>) - Theta c_k H_{k+1}"},
      {IdentityId::TraceP, "trace_P", CheckKind::Algebraic, kAlgebraicTol, "Tr P_k = c_k H_k"},
      {IdentityId::TraceAP, "trace_AP", CheckKind::Algebraic, kAlgebraicTol, "Tr(A P_k) = -c_k H_{k+1}"},
      {IdentityId::TraceA2P, "trace_A2P", CheckKind::Algebraic, kAlgebraicTol,
       "Tr(A^2 P_k) = binom(n,k+1)(n H_1 H_{k+1} - (n-k-1) H_{k+2})"},
      {IdentityId::NormA, "norm_A", CheckKind::Algebraic, kAlgebraicTol, "|A|^2 = n^2 H_1^2 - n(n-1) H_2"},
      {IdentityId::GradHeight, "grad_h", CheckKind::Algebraic, kAlgebraicTol, "|grad h|^2 = Theta^2 - 1"},
      {IdentityId::GaussH2, "gauss_H2", CheckKind::Discretization, 0, "n(n-1) H_2 = Sbar - S + 2 Ricbar(N,N)"},
      {IdentityId::RicciFiberNormal, "ricci_fiber_normal", CheckKind::Algebraic, kAlgebraicTol,
       "Ric_P(N*,N*) = (n-1) kappa |grad h|^2 / rho^2(h)"},
      {IdentityId::CompositeTwoForms, "calL_two_forms", CheckKind::Algebraic, 1e-12,
       "sum_{i<2}(c_1/c_i)(log rho)'^{1-i}(-Theta)^i L_i = (n-1)(log rho)'(h) L_0 - Theta L_1"},
      {IdentityId::CompositeCompact, "calL_compact", CheckKind::Discretization, 0,
       "calL sigma(h) = -c_{k-1} rho(h)((log rho)'(h)^k - (-Theta)^k H_k)"},
      {IdentityId::CompositeTheta4, "calL_theta4", CheckKind::Discretization, 0,
       "calL sigma(h) = c_{k-1} rho(h) Theta(|(log rho)'(h)/Theta|^k - H_k)"},
      {IdentityId::LaplaceThetaHat, "lap_theta_hat", CheckKind::Discretization, 0,
       "Lap(rho Theta) = -n rho <grad h, grad H_1> + n rho' H_1 + n rho Theta(n H_1^2 - (n-1) H_2) "
       "+ rho Theta(Ric_P(N*,N*) - (n-1)(log rho)'' |grad h|^2)"},
      {IdentityId::LkThetaHat, "Lk_theta_hat", CheckKind::Discretization, 0,
       "L_k(rho Theta) = -binom(n,k+1) rho <grad h, grad H_{k+1}> + rho' c_k H_{k+1} "
       "+ rho Theta(kappa/rho^2 - (log rho)'')(|grad h|^2 c_k H_k - <P_k grad h, grad h>) "
       "+ rho Theta binom(n,k+1)(n H_1 H_{k+1} - (n-k-1) H_{k+2})"},
      {IdentityId::DivergenceForm, "frakL", CheckKind::Discretization, 0,
       "div(P_{k-1} grad f) = (n-k+1) Theta(kappa/rho^2 - (log rho)'') <P_{k-2} grad h, grad f> + L_{k-1} f"},
      {IdentityId::PhiExpansion, "frakL_phi", CheckKind::Discretization, 0,
       "div(P_{k-1} grad phi) for phi = H_k^{1/k} sigma(h) + rho Theta, with the terms carried by grad H_k"},
      {IdentityId::PhiBracket, "phi_bracket", CheckKind::Inequality, 1e-9,
       "n H_1 H_k - (n-k) H_{k+1} - k H_k^{(k+1)/k} >= 0 on elliptic points"},
      {IdentityId::SectionalGauss, "sectional_gauss", CheckKind::Inequality, 1e-6, "K_Sigma(X,Y) >= Kbar(X,Y) - |A|^2"},
      {IdentityId::SectionalSplit, "sectional_split", CheckKind::Algebraic, kAlgebraicTol,
       "Kbar = kappa |X*^Y*|^2/rho^2 + (log rho)'^2 - (log rho)''(<X,grad h>^2 + <Y,grad h>^2)"},
      {IdentityId::WedgeNorm, "wedge_norm", CheckKind::Algebraic, kAlgebraicTol, "|X*^Y*|^2 = 1 + <X,T>^2 + <Y,T>^2"},
      {IdentityId::SectionalFiberLower, "sectional_fiber_lower", CheckKind::Inequality, 1e-10,
       "Kbar >= kappa |X*^Y*|^2/rho^2 where (log rho)'' <= 0"},
      {IdentityId::SectionalFiberBound, "sectional_fiber_bound", CheckKind::Inequality, 1e-10,
       "kappa |X*^Y*|^2/rho^2 >= -|kappa| Theta^2/rho^2"},
      {IdentityId::Garding, "garding", CheckKind::Inequality, 1e-9, "H_1 >= H_2^{1/2} >= ... >= H_n^{1/n} > 0 on elliptic points"},
      {IdentityId::MeanSquare, "mean_square", CheckKind::Inequality, 1e-9, "H_1^2 >= H_2 where H_2 > 0"},
      {IdentityId::ThetaSquare, "theta_square", CheckKind::Inequality, 1e-12, "Theta^2 >= 1"},
  };
  return table;
}

inline const IdentityInfo& identity_info(IdentityId id) {
  for (const auto& e : identity_table())
    if (e.id == id) return e;
  throw Error(ErrorKind::BadParams, "unknown identity");
}

/// One identity evaluated on one grid. Points with mask = 0 are ignored.
struct ResidualField {
  IdentityId id;
  int k = -1;  ///< order parameter, -1 when the identity has none
  ScalarField values;
  std::vector<char> mask;  ///< empty means all points
  int margin = 0;          ///< excluded layers on open axes
  double margin_fraction = 0.0;  ///< excluded fraction of each open axis
  std::string note;
};

inline std::string identity_label(IdentityId id, int k) {
  std::string s = identity_info(id).name;
  if (k >= 0) s += "_k" + std::to_string(k);
  return s;
}

struct GridResidual {
  int size = 0;  ///< nodes along the first axis
  double spacing = 0.0;
  double max_abs = 0.0;
  double rms = 0.0;
  double min_value = 0.0;
  std::size_t count = 0;
  std::vector<double> witness;  ///< coordinates of the worst point
};

struct IdentityReport {
  IdentityId id;
  int k = -1;
  std::string name;
  CheckKind kind;
  std::vector<GridResidual> grids;
  double fitted_order = std::numeric_limits<double>::quiet_NaN();
  bool monotone = true;  ///< max residual decreases from coarsest to finest
  bool pass = false;
  std::string notes;
};

template <int N>
GridResidual summarize(const Grid<N>& grid, const ResidualField& r) {
  GridResidual g;
  g.size = grid.axis(0).size;
  g.spacing = grid.max_spacing();
  g.min_value = INFINITY;
  double sum_sq = 0.0;
  std::size_t worst = 0, lowest = 0;
  bool nan = false;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (!grid.is_interior(p, r.margin, r.margin_fraction)) continue;
    if (!r.mask.empty() && !r.mask[p]) continue;
    const double v = r.values[p];
    if (std::isnan(v)) nan = true;
    if (std::abs(v) > g.max_abs) g.max_abs = std::abs(v), worst = p;
    if (v < g.min_value) g.min_value = v, lowest = p;
    sum_sq += v * v;
    ++g.count;
  }
  if (nan) g.max_abs = g.min_value = std::numeric_limits<double>::quiet_NaN();
  if (g.count == 0) g.min_value = 0.0;
  g.rms = g.count ? std::sqrt(sum_sq / static_cast<double>(g.count)) : 0.0;
  const auto kind = identity_info(r.id).kind;
  const auto x = grid.coords(kind == CheckKind::Inequality ? lowest : worst);
  g.witness.assign(x.data(), x.data() + N);
  return g;
}

/// Least-squares slope of log(max residual) against log(spacing).
inline double fit_order(const std::vector<GridResidual>& grids) {
  std::vector<double> xs, ys;
  for (const auto& g : grids)
    if (g.max_abs > 0 && std::isfinite(g.max_abs)) xs.push_back(std::log(g.spacing)), ys.push_back(std::log(g.max_abs));
  if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sx += xs[i], sy += ys[i], sxx += xs[i] * xs[i], sxy += xs[i] * ys[i];
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline void grade(IdentityReport& r) {
  const auto& info = identity_info(r.id);
  if (r.grids.empty()) {
    r.pass = false;
    r.notes = "no grids";
    return;
  }
  r.fitted_order = r.grids.size() >= 2 ? fit_order(r.grids) : std::numeric_limits<double>::quiet_NaN();
  r.monotone = r.grids.size() < 2 || r.grids.back().max_abs < r.grids.front().max_abs ||
               r.grids.back().max_abs <= kExactFloor;
  const auto& finest = r.grids.back();
  switch (info.kind) {
    case CheckKind::Algebraic:
      r.pass = std::all_of(r.grids.begin(), r.grids.end(), [&](const auto& g) { return g.max_abs <= info.tolerance; });
      break;
    case CheckKind::Inequality:
      r.pass = std::all_of(r.grids.begin(), r.grids.end(), [&](const auto& g) { return g.min_value >= -info.tolerance; });
      if (finest.count == 0) r.notes = "vacuous: no points satisfy the premise";
      break;
    case CheckKind::Discretization:
      if (finest.max_abs <= kExactFloor) {
        r.pass = true;
      } else if (std::isnan(r.fitted_order)) {
        r.pass = false;
        r.notes = "order unavailable on a single grid";
      } else {
        r.pass = r.fitted_order >= kOrderThreshold;
      }
      break;
  }
}

/// Merge per-grid residual lists (all produced by the same suite, one per
/// grid, coarsest first) into graded reports in suite order.
template <int N>
std::vector<IdentityReport> merge_reports(const std::vector<const Grid<N>*>& grids,
                                          const std::vector<std::vector<ResidualField>>& per_grid) {
  std::vector<IdentityReport> out;
  if (per_grid.empty()) return out;
  for (std::size_t i = 0; i < per_grid.front().size(); ++i) {
    const auto& r0 = per_grid.front()[i];
    IdentityReport rep;
    rep.id = r0.id;
    rep.k = r0.k;
    rep.name = identity_label(r0.id, r0.k);
    rep.kind = identity_info(r0.id).kind;
    for (std::size_t g = 0; g < per_grid.size(); ++g) {
      const auto& r = per_grid[g].at(i);
      if (r.id != r0.id || r.k != r0.k) throw Error(ErrorKind::ShapeMismatch, "suites differ across grids");
      rep.grids.push_back(summarize(*grids[g], r));
      if (!r.note.empty() && rep.notes.find(r.note) == std::string::npos)
        rep.notes += (rep.notes.empty() ? "" : "; ") + r.note;
    }
    const std::string pre = rep.notes;
    grade(rep);
    if (!pre.empty() && rep.notes != pre) rep.notes = pre + (rep.notes.empty() ? "" : "; " + rep.notes);
    out.push_back(std::move(rep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Residual suites on a single surface.

namespace detail {

template <int N>
double gh_inner(const GraphHypersurface<N>& s, std::size_t p, const Vec<N>& X, const Vec<N>& Y) {
  return induced_inner(s, p, X, Y);
}

/// Pointwise scale for algebraic residuals of polynomial degree d in A.
inline double algebraic_scale(double norm_A_sq, int degree) {
  return std::pow(1.0 + std::sqrt(std::max(norm_A_sq, 0.0)), degree);
}

template <int N>
ResidualField make(IdentityId id, int k, std::size_t n, int margin) {
  ResidualField r;
  r.id = id;
  r.k = k;
  r.values.assign(n, 0.0);
  r.margin = margin;
  if (margin > 0) r.margin_fraction = kBoundaryFraction;
  return r;
}

}  // namespace detail

/// Same-data algebra: trace identities, |A|^2, |grad h|^2.
template <int N>
std::vector<ResidualField> algebraic_residuals(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b) {
  using detail::algebraic_scale;
  std::vector<ResidualField> out;
  const std::size_t n = s.size();
  for (int k = 0; k <= N - 1; ++k) {
    auto a = detail::make<N>(IdentityId::TraceP, k, n, 0);
    auto bb = detail::make<N>(IdentityId::TraceAP, k, n, 0);
    auto c = detail::make<N>(IdentityId::TraceA2P, k, n, 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto& cp = b.at(p);
      const auto& nd = cp.newton;
      const double sc = cp.norm_A_sq;
      a.values[p] = (nd.P[k].trace() - b.c[k] * nd.h(k)) / algebraic_scale(sc, k);
      bb.values[p] = ((cp.A * nd.P[k]).trace() + b.c[k] * nd.h(k + 1)) / algebraic_scale(sc, k + 1);
      c.values[p] = ((cp.A * cp.A * nd.P[k]).trace() -
                     binomial(N, k + 1) * (N * nd.h(1) * nd.h(k + 1) - (N - k - 1) * nd.h(k + 2))) /
                    algebraic_scale(sc, k + 2);
    }
    out.push_back(std::move(a));
    out.push_back(std::move(bb));
    out.push_back(std::move(c));
  }
  auto na = detail::make<N>(IdentityId::NormA, -1, n, 0);
  auto gh = detail::make<N>(IdentityId::GradHeight, -1, n, 0);
  for (std::size_t p = 0; p < n; ++p) {
    const auto& cp = b.at(p);
    const auto& q = s.at(p);
    na.values[p] = (cp.norm_A_sq - (N * N * cp.newton.h(1) * cp.newton.h(1) - N * (N - 1) * cp.newton.h(2))) /
                   algebraic_scale(cp.norm_A_sq, 2);
    gh.values[p] = (q.grad_h_sq - (q.theta * q.theta - 1.0)) / (q.theta * q.theta);
  }
  out.push_back(std::move(na));
  out.push_back(std::move(gh));
  return out;
}

/// Operator identities for sigma(h) and h, plus the algebraic suite, plus the
/// Gauss relation for H_2 when ambient data is supplied (n = 2 only).
template <int N>
std::vector<ResidualField> structural_residuals(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b,
                                                const AmbientCurvature<N>* amb = nullptr) {
  std::vector<ResidualField> out;
  const std::size_t n = s.size();
  const auto sig = s.sigma_h();
  const auto& u = s.height();
  for (int k = 0; k <= N - 1; ++k) {
    const auto ls = apply_Lk(s, b, k, sig);
    const auto lh = apply_Lk(s, b, k, u);
    auto rs = detail::make<N>(IdentityId::LkSigma, k, n, kBoundaryMargin);
    auto rh = detail::make<N>(IdentityId::LkHeight, k, n, kBoundaryMargin);
    for (std::size_t p = 0; p < n; ++p) {
      const auto& q = s.at(p);
      const auto& nd = b.at(p).newton;
      const double ck = b.c[k];
      rs.values[p] = ls[p] - (-ck * (q.rho_d1 * nd.h(k) + q.theta * q.rho * nd.h(k + 1)));
      const double pgg = induced_inner(s, p, Vec<N>(nd.P[k] * q.grad_h), q.grad_h);
      rh.values[p] = lh[p] - (-q.log_d1 * (ck * nd.h(k) + pgg) - q.theta * ck * nd.h(k + 1));
    }
    out.push_back(std::move(rs));
    out.push_back(std::move(rh));
  }
  for (auto& r : algebraic_residuals(s, b)) out.push_back(std::move(r));

  if (amb) {
    auto rp = detail::make<N>(IdentityId::RicciFiberNormal, -1, n, 0);
    const double kappa = s.fiber().kappa();
    for (std::size_t p = 0; p < n; ++p) {
      const auto& q = s.at(p);
      const double closed = (N - 1) * kappa * q.grad_h_sq / (q.rho * q.rho);
      rp.values[p] = (amb->at(p).ric_P_NstarNstar - closed) / (1.0 + std::abs(closed));
    }
    out.push_back(std::move(rp));
    if constexpr (N == 2) {
      TensorField<2> metric(n);
      for (std::size_t p = 0; p < n; ++p) metric[p] = s.at(p).metric;
      const auto K = gauss_curvature(s.grid(), metric);
      auto rg = detail::make<N>(IdentityId::GaussH2, -1, n, kBoundaryMargin);
      for (std::size_t p = 0; p < n; ++p) {
        const auto& a = amb->at(p);
        rg.values[p] = N * (N - 1) * b.at(p).newton.h(2) - (a.scalar - 2.0 * K[p] + 2.0 * a.ric_NN);
      }
      out.push_back(std::move(rg));
    }
  }
  return out;
}

/// Composite-operator identities on sigma(h).
/// The theta4 closed form assumes (log rho)'(h) >= 0; points violating it are masked.
template <int N>
std::vector<ResidualField> composite_residuals(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b) {
  std::vector<ResidualField> out;
  const std::size_t n = s.size();
  const auto sig = s.sigma_h();
  if constexpr (N >= 2) {
    const auto op = compose_calL(s, b, 2, CompositeVariant::Compact);
    const auto lhs = op.apply(s, s.height());
    const auto l0 = apply_Lk(s, b, 0, s.height());
    const auto l1 = apply_Lk(s, b, 1, s.height());
    auto r = detail::make<N>(IdentityId::CompositeTwoForms, 2, n, 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto& q = s.at(p);
      const double rhs = (N - 1) * q.log_d1 * l0[p] - q.theta * l1[p];
      r.values[p] = (lhs[p] - rhs) / (1.0 + std::abs(rhs));
    }
    out.push_back(std::move(r));
  }
  for (int k = 2; k <= N; ++k) {
    const auto lc = compose_calL(s, b, k, CompositeVariant::Compact).apply(s, sig);
    const auto lt = compose_calL(s, b, k, CompositeVariant::Theta4).apply(s, sig);
    auto rc = detail::make<N>(IdentityId::CompositeCompact, k, n, kBoundaryMargin);
    auto rt = detail::make<N>(IdentityId::CompositeTheta4, k, n, kBoundaryMargin);
    rt.mask.assign(n, 1);
    bool masked = false;
    for (std::size_t p = 0; p < n; ++p) {
      const auto& q = s.at(p);
      const double Hk = b.at(p).newton.h(k);
      const double ck1 = b.c[k - 1];
      rc.values[p] = lc[p] - (-ck1 * q.rho * (std::pow(q.log_d1, k) - std::pow(-q.theta, k) * Hk));
      rt.values[p] = lt[p] - ck1 * q.rho * q.theta * (std::pow(std::abs(q.log_d1 / q.theta), k) - Hk);
      if (q.log_d1 < 0) rt.mask[p] = 0, masked = true;
    }
    if (masked) rt.note = "points with (log rho)'(h) < 0 excluded";
    out.push_back(std::move(rc));
    out.push_back(std::move(rt));
  }
  return out;
}

/// Identities for rho(h) Theta and the divergence-form operator. `phi_orders`
/// lists the k for which phi = H_k^{1/k} sigma(h) + rho Theta is expanded; each
/// requires H_k > 0 everywhere.
template <int N>
std::vector<ResidualField> theta_residuals(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b,
                                           std::optional<std::vector<int>> phi_orders = std::nullopt) {
  std::vector<int> orders;
  if (phi_orders) {
    orders = *phi_orders;
  } else {
    for (int k = 1; k <= N; ++k) orders.push_back(k);
  }
  for (int k : orders) {
    if (k < 1 || k > N) throw Error(ErrorKind::BadParams, "phi order out of range");
    for (std::size_t p = 0; p < s.size(); ++p)
      if (!(b.at(p).newton.h(k) > 0))
        throw Error(ErrorKind::NegativeHk, "H_" + std::to_string(k) + " <= 0 at node " + std::to_string(p) +
                                               "; H_k^{1/k} undefined");
  }

  std::vector<ResidualField> out;
  const std::size_t n = s.size();
  const double kappa = s.fiber().kappa();
  const auto th = s.theta_hat();
  std::vector<VectorField<N>> gradH(N + 2);
  for (int j = 1; j <= N; ++j) gradH[j] = induced_gradient(s, b.H(j));
  gradH[N + 1].assign(n, Vec<N>::Zero());
  auto gradHk = [&](int j, std::size_t p) -> Vec<N> { return j <= N + 1 ? gradH[j][p] : Vec<N>::Zero(); };

  // Laplacian of rho Theta with Ric_P(N*,N*) = (n-1) kappa |grad h|^2 / rho^2.
  // With A = -(ambient derivative of N) and binom(n,k) H_k = (-1)^k S_k one has
  // grad(rho Theta) = rho A grad h and d(binom(n,k+1) H_{k+1}) = -Tr(P_k dA), so the
  // gradient terms below carry a minus sign.
  {
    const auto lap = apply_Lk(s, b, 0, th);
    auto r = detail::make<N>(IdentityId::LaplaceThetaHat, -1, n, kBoundaryMargin);
    for (std::size_t p = 0; p < n; ++p) {
      const auto& q = s.at(p);
      const auto& nd = b.at(p).newton;
      const double ric = (N - 1) * kappa * q.grad_h_sq / (q.rho * q.rho);
      const double rhs = -N * q.rho * induced_inner(s, p, q.grad_h, gradHk(1, p)) + N * q.rho_d1 * nd.h(1) +
                         N * th[p] * (N * nd.h(1) * nd.h(1) - (N - 1) * nd.h(2)) +
                         th[p] * (ric - (N - 1) * q.log_d2 * q.grad_h_sq);
      r.values[p] = lap[p] - rhs;
    }
    out.push_back(std::move(r));
  }
  for (int k = 0; k <= N - 1; ++k) {
    const auto lk = apply_Lk(s, b, k, th);
    auto r = detail::make<N>(IdentityId::LkThetaHat, k, n, kBoundaryMargin);
    for (std::size_t p = 0; p < n; ++p) {
      const auto& q = s.at(p);
      const auto& nd = b.at(p).newton;
      const double ck = b.c[k];
      const double bn = binomial(N, k + 1);
      const double pgg = induced_inner(s, p, Vec<N>(nd.P[k] * q.grad_h), q.grad_h);
      const double rhs = -bn * q.rho * induced_inner(s, p, q.grad_h, gradHk(k + 1, p)) + q.rho_d1 * ck * nd.h(k + 1) +
                         th[p] * (kappa / (q.rho * q.rho) - q.log_d2) * (q.grad_h_sq * ck * nd.h(k) - pgg) +
                         th[p] * bn * (N * nd.h(1) * nd.h(k + 1) - (N - k - 1) * nd.h(k + 2));
      r.values[p] = lk[p] - rhs;
    }
    out.push_back(std::move(r));
  }
  for (int k = 1; k <= N; ++k) {
    const auto fr = apply_frakL(s, b, k, s.height());
    auto r = detail::make<N>(IdentityId::DivergenceForm, k, n, kBoundaryMargin);
    for (std::size_t p = 0; p < n; ++p) r.values[p] = fr.divergence[p] - fr.formula[p];
    out.push_back(std::move(r));
  }

  const auto sig = s.sigma_h();
  for (int k : orders) {
    ScalarField c(n), phi(n);
    for (std::size_t p = 0; p < n; ++p) {
      c[p] = std::pow(b.at(p).newton.h(k), 1.0 / k);
      phi[p] = c[p] * sig[p] + th[p];
    }
    const auto lphi = apply_frakL(s, b, k, phi).divergence;
    const auto lc = apply_frakL(s, b, k, c).divergence;
    const auto gc = induced_gradient(s, c);
    auto r = detail::make<N>(IdentityId::PhiExpansion, k, n, kBoundaryMargin);
    for (std::size_t p = 0; p < n; ++p) {
      const auto& q = s.at(p);
      const auto& nd = b.at(p).newton;
      const double Hk = nd.h(k);
      const double curv = kappa / (q.rho * q.rho) - q.log_d2;
      const double t1 = -b.c[k - 1] * q.rho_d1 * c[p] * (nd.h(k - 1) - std::pow(Hk, (k - 1.0) / k));
      const double t2 = k >= 2 ? (N - k + 1) * th[p] * curv * c[p] *
                                     induced_inner(s, p, Vec<N>(nd.P[k - 2] * q.grad_h), q.grad_h)
                               : 0.0;
      const double t3 = (N - k) * th[p] * curv * induced_inner(s, p, Vec<N>(nd.P[k - 1] * q.grad_h), q.grad_h);
      const double t4 = th[p] * binomial(N, k) *
                        (N * nd.h(1) * Hk - (N - k) * nd.h(k + 1) - k * std::pow(Hk, (k + 1.0) / k));
      // Terms that vanish when H_k is constant.
      const double t5 = sig[p] * lc[p] + 2.0 * q.rho * induced_inner(s, p, Vec<N>(nd.P[k - 1] * gc[p]), q.grad_h) +
                        binomial(N, k) * q.rho * induced_inner(s, p, q.grad_h, gradHk(k, p)) * -1.0;
      r.values[p] = lphi[p] - (t1 + t2 + t3 + t4 + t5);
    }
    out.push_back(std::move(r));
  }
  return out;
}

/// Pointwise inequality slacks. The sectional chain needs n = 2 and ambient data.
template <int N>
std::vector<ResidualField> inequality_residuals(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b,
                                                const AmbientCurvature<N>* amb = nullptr) {
  std::vector<ResidualField> out;
  const std::size_t n = s.size();
  const double kappa = s.fiber().kappa();

  if (amb) {
    auto split = detail::make<N>(IdentityId::SectionalSplit, -1, n, 0);
    auto wedge = detail::make<N>(IdentityId::WedgeNorm, -1, n, 0);
    auto lower = detail::make<N>(IdentityId::SectionalFiberLower, -1, n, 0);
    auto bound = detail::make<N>(IdentityId::SectionalFiberBound, -1, n, 0);
    lower.mask.assign(n, 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto& a = amb->at(p);
      const auto& q = s.at(p);
      double es = 0, ew = 0, lo = INFINITY, bd = INFINITY;
      for (int i = 0; i < num_planes(N); ++i) {
        es = std::max(es, std::abs(a.Kbar[i] - a.Kbar_split[i]) / (1.0 + std::abs(a.Kbar[i])));
        ew = std::max(ew, std::abs(a.wedge_sq[i] - a.wedge_sq_closed[i]) / a.wedge_sq_closed[i]);
        const double fiber_part = kappa * a.wedge_sq[i] / (q.rho * q.rho);
        lo = std::min(lo, a.Kbar[i] - fiber_part);
        bd = std::min(bd, fiber_part + std::abs(kappa) * q.theta * q.theta / (q.rho * q.rho));
      }
      split.values[p] = es;
      wedge.values[p] = ew;
      lower.values[p] = lo;
      lower.mask[p] = q.log_d2 <= 0;
      bound.values[p] = bd;
    }
    out.push_back(std::move(split));
    out.push_back(std::move(wedge));
    out.push_back(std::move(lower));
    out.push_back(std::move(bound));
    if constexpr (N == 2) {
      TensorField<2> metric(n);
      for (std::size_t p = 0; p < n; ++p) metric[p] = s.at(p).metric;
      const auto K = gauss_curvature(s.grid(), metric);
      auto r = detail::make<N>(IdentityId::SectionalGauss, -1, n, kBoundaryMargin);
      for (std::size_t p = 0; p < n; ++p) r.values[p] = K[p] - (amb->at(p).Kbar[0] - b.at(p).norm_A_sq);
      out.push_back(std::move(r));
    }
  }

  auto garding = detail::make<N>(IdentityId::Garding, -1, n, 0);
  auto bracket = detail::make<N>(IdentityId::PhiBracket, -1, n, 0);
  auto mean = detail::make<N>(IdentityId::MeanSquare, -1, n, 0);
  auto theta = detail::make<N>(IdentityId::ThetaSquare, -1, n, 0);
  garding.mask.assign(n, 0);
  bracket.mask.assign(n, 0);
  mean.mask.assign(n, 0);
  for (std::size_t p = 0; p < n; ++p) {
    const auto& cp = b.at(p);
    const auto& nd = cp.newton;
    if (cp.elliptic) {
      double slack = INFINITY, br = INFINITY;
      double prev = nd.h(1);
      for (int j = 2; j <= N; ++j) {
        const double r = nd.h(j) > 0 ? std::pow(nd.h(j), 1.0 / j) : -INFINITY;
        slack = std::min(slack, prev - r);
        prev = r;
      }
      slack = std::min(slack, prev);
      for (int k = 1; k <= N; ++k) {
        const double Hk = std::max(nd.h(k), 0.0);
        br = std::min(br, (N * nd.h(1) * nd.h(k) - (N - k) * nd.h(k + 1) - k * std::pow(Hk, (k + 1.0) / k)) /
                              detail::algebraic_scale(cp.norm_A_sq, k + 1));
      }
      garding.values[p] = slack;
      garding.mask[p] = 1;
      bracket.values[p] = br;
      bracket.mask[p] = 1;
    }
    if (N >= 2 && nd.h(2) > 0) {
      mean.values[p] = nd.h(1) * nd.h(1) - nd.h(2);
      mean.mask[p] = 1;
    }
    const double t = s.at(p).theta;
    theta.values[p] = t * t - 1.0;
  }
  out.push_back(std::move(garding));
  out.push_back(std::move(bracket));
  out.push_back(std::move(mean));
  out.push_back(std::move(theta));
  return out;
}

template <int N>
std::vector<IdentityReport> single_grid_reports(const GraphHypersurface<N>& s, std::vector<ResidualField> fields) {
  return merge_reports<N>({&s.grid()}, {std::move(fields)});
}

template <int N>
std::vector<IdentityReport> verify_structural(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b,
                                              const AmbientCurvature<N>* amb = nullptr) {
  auto f = structural_residuals(s, b, amb);
  for (auto& r : composite_residuals(s, b)) f.push_back(std::move(r));
  return single_grid_reports(s, std::move(f));
}

template <int N>
std::vector<IdentityReport> verify_theta(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b,
                                         std::optional<std::vector<int>> phi_orders = std::nullopt) {
  return single_grid_reports(s, theta_residuals(s, b, phi_orders));
}

template <int N>
std::vector<IdentityReport> verify_inequalities(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b,
                                                const AmbientCurvature<N>* amb) {
  return single_grid_reports(s, inequality_residuals(s, b, amb));
}

/// Run `suite` on the surface produced by `family(size)` for each size
/// (coarsest first) and merge into graded refinement reports.
template <int N, class Family, class Suite>
std::vector<IdentityReport> verify_refinement(Family&& family, const std::vector<int>& sizes, Suite&& suite) {
  std::vector<GraphHypersurface<N>> surfaces;
  std::vector<std::vector<ResidualField>> per_grid;
  surfaces.reserve(sizes.size());
  for (int m : sizes) {
    surfaces.push_back(family(m));
    const auto& s = surfaces.back();
    const auto b = curvature_bundle(s);
    per_grid.push_back(suite(s, b));
  }
  std::vector<const Grid<N>*> grids;
  for (const auto& s : surfaces) grids.push_back(&s.grid());
  return merge_reports<N>(grids, per_grid);
}

// ---------------------------------------------------------------------------
// Tail classification of one-dimensional integrands.

struct TailFit {
  double exponent = 0.0;      ///< slope of log f against log t
  double log_exponent = 0.0;  ///< slope of log(t f) against log log t
  bool second_order = false;  ///< the log test decided
  bool divergent = false;
  double margin = 0.0;        ///< distance of the deciding slope from -1
};

inline constexpr double kTailMargin = 0.05;

namespace detail {

inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace detail

/// Decide whether int^infty f diverges from log f sampled on [t_lo, t_hi].
/// The power-law slope p decides when |p + 1| >= kTailMargin; otherwise
/// t f ~ (log t)^q is fitted and decides (divergent iff q >= -1).
template <class LogF>
TailFit classify_tail(LogF&& log_f, double t_lo, double t_hi, int samples = 64) {
  std::vector<double> x, y, lx, ly;
  for (int i = 0; i < samples; ++i) {
    const double t = t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / (samples - 1));
    const double lf = log_f(t);
    x.push_back(std::log(t));
    y.push_back(lf);
    lx.push_back(std::log(std::log(t)));
    ly.push_back(std::log(t) + lf);
  }
  TailFit fit;
  fit.exponent = detail::ls_slope(x, y);
  fit.log_exponent = detail::ls_slope(lx, ly);
  fit.margin = std::abs(fit.exponent + 1.0);
  if (!(fit.margin >= kTailMargin)) {
    fit.second_order = true;
    fit.margin = std::abs(fit.log_exponent + 1.0);
    if (!(fit.margin >= kTailMargin))
      throw Error(ErrorKind::AmbiguousTail, "tail exponents " + std::to_string(fit.exponent) + " and log exponent " +
                                                std::to_string(fit.log_exponent) + " are both within 0.05 of -1");
    fit.divergent = fit.log_exponent >= -1.0;
  } else {
    fit.divergent = fit.exponent >= -1.0;
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Omori-Yau side conditions on rotationally symmetric model surfaces
// dr^2 + f(r)^2 dphi^2 with f(r) = r (c = 0) or sinh(sqrt(-c) r)/sqrt(-c).

struct OmoriModel {
  double c = 0.0;
  double r_max = 50.0;
};

/// gamma as a radial function with its first two derivatives.
struct GammaSpec {
  std::string label = "r^2";
  std::function<double(double)> value = [](double r) { return r * r; };
  std::function<double(double)> d1 = [](double r) { return 2 * r; };
  std::function<double(double)> d2 = [](double) { return 2.0; };
};

/// G with its logarithm (used for large arguments) and derivative.
struct GSpec {
  std::string label;
  std::function<double(double)> value;
  std::function<double(double)> log_value;
  std::function<double(double)> d1;
};

inline GSpec g_quadratic() {
  return {"t^2+1", [](double t) { return t * t + 1; }, [](double t) { return std::log(t * t + 1); },
          [](double t) { return 2 * t; }};
}
inline GSpec g_quadratic_log() {
  return {"t^2 log(t+e)", [](double t) { return t * t * std::log(t + std::numbers::e) + 1.0; },
          [](double t) { return std::log(t * t * std::log(t + std::numbers::e) + 1.0); },
          [](double t) {
            return 2 * t * std::log(t + std::numbers::e) + t * t / (t + std::numbers::e);
          }};
}
inline GSpec g_exponential() {
  return {"e^t", [](double t) { return std::exp(t); }, [](double t) { return t; }, [](double t) { return std::exp(t); }};
}

struct OmoriCheck {
  std::array<bool, 3> gamma_ok{};
  std::array<bool, 4> G_ok{};
  double psi_c_margin = 0.0;     ///< min over samples of psi_c(r) - Hess r(v,v) for unit v orthogonal to grad r
  double psi_c_max_abs = 0.0;    ///< max |psi_c(r) - Hess r(v,v)| (equality case)
  double hessian_gamma_margin = 0.0;    ///< min of 2 r psi_c(r) minus the eigenvalues of Hess gamma, where r psi_c(r) >= 1
  double A = 2.0;
  double B = 0.0;                ///< sup of L gamma / sqrt(gamma G(sqrt gamma)) off the unit disk
  TailFit G_tail;
  std::string details;

  bool all_ok() const {
    return std::all_of(gamma_ok.begin(), gamma_ok.end(), [](bool b) { return b; }) &&
           std::all_of(G_ok.begin(), G_ok.end(), [](bool b) { return b; });
  }
};

inline double psi_c(double c, double t) {
  if (c == 0.0) return 1.0 / t;
  const double s = std::sqrt(-c);
  return s / std::tanh(s * t);
}

inline OmoriCheck check_omori(const OmoriModel& model, const GSpec& G, const GammaSpec& gamma = {}, double A = 2.0) {
  if (model.c > 0) throw Error(ErrorKind::BadParams, "model curvature must be <= 0");
  if (!(model.r_max > 1.0)) throw Error(ErrorKind::BadParams, "r_max must exceed 1");
  for (int i = 0; i <= 1000; ++i) {
    const double t = model.r_max * i / 1000.0;
    if (!(G.value(t) > 0))
      throw Error(ErrorKind::BadG, "G(" + std::to_string(t) + ") = " + std::to_string(G.value(t)) + " <= 0");
  }
  OmoriCheck out;
  out.A = A;
  const double s = std::sqrt(-model.c);
  // Warp and its derivative, kept finite by working with f'/f directly.
  auto f = [&](double r) { return model.c == 0.0 ? r : std::sinh(s * r) / s; };
  auto fp = [&](double r) { return model.c == 0.0 ? 1.0 : std::cosh(s * r); };
  auto fp_over_f = [&](double r) { return model.c == 0.0 ? 1.0 / r : s * std::cosh(s * r) / std::sinh(s * r); };

  const int M = 2000;
  std::vector<double> rs;
  for (int i = 0; i < M; ++i) rs.push_back(std::pow(model.r_max / 1e-2, static_cast<double>(i) / (M - 1)) * 1e-2);

  // (gamma1): increasing and unbounded along rays.
  {
    bool inc = true;
    for (int i = 1; i < M; ++i) inc = inc && gamma.value(rs[i]) > gamma.value(rs[i - 1]);
    const double far = gamma.value(1e6);
    out.gamma_ok[0] = inc && far >= 1e10;
  }
  // (gamma2): |grad gamma| = |gamma'(r)| <= A sqrt(gamma) for r >= 1.
  {
    bool ok = true;
    for (double r : rs)
      if (r >= 1.0) ok = ok && std::abs(gamma.d1(r)) <= A * std::sqrt(gamma.value(r)) * (1 + 1e-12);
    out.gamma_ok[1] = ok;
  }
  // (gamma3): Lap gamma = gamma'' + gamma' f'/f bounded by B sqrt(gamma G(sqrt gamma)) for r >= 1.
  {
    double B = 0.0;
    std::vector<double> x, y;
    for (double r : rs) {
      if (r < 1.0) continue;
      const double g = gamma.value(r);
      const double lap = gamma.d2(r) + gamma.d1(r) * fp_over_f(r);
      const double log_den = 0.5 * (std::log(g) + G.log_value(std::sqrt(g)));
      const double ratio = lap / std::exp(log_den);
      B = std::max(B, ratio);
      if (r >= model.r_max / 10) x.push_back(std::log(r)), y.push_back(std::log(std::max(std::abs(ratio), 1e-300)));
    }
    out.B = B;
    out.gamma_ok[2] = std::isfinite(B) && detail::ls_slope(x, y) <= 0.02;
  }
  // Hessian comparison: on the model Hess r = (f'/f)(g - dr (x) dr), computed from
  // the metric Christoffel Gamma^r_{phi phi} = -f f'.
  {
    double lo = INFINITY, mx = 0.0, hg_margin = INFINITY;
    const double r_cap = model.c == 0.0 ? model.r_max : std::min(model.r_max, 300.0 / s);
    for (double r : rs) {
      if (r > r_cap) break;
      const double hess_unit = f(r) * fp(r) / (f(r) * f(r));
      const double slack = psi_c(model.c, r) - hess_unit;
      lo = std::min(lo, slack);
      mx = std::max(mx, std::abs(slack));
      const double rp = r * psi_c(model.c, r);
      if (rp >= 1.0 && r >= 1.0) {
        // Eigenvalues of Hess gamma = 2 r Hess r + 2 dr (x) dr: radial 2, angular 2 r f'/f.
        hg_margin = std::min({hg_margin, 2 * rp - 2.0, 2 * rp - 2 * r * fp_over_f(r)});
      }
    }
    out.psi_c_margin = lo;
    out.psi_c_max_abs = mx;
    out.hessian_gamma_margin = hg_margin;
  }
  // (condG).
  out.G_ok[0] = G.value(0.0) > 0;
  {
    bool mono = true;
    for (int i = 0; i <= 4000; ++i) {
      const double t = i <= 1000 ? 10.0 * i / 1000.0 : 10.0 * std::pow(1e5, (i - 1000) / 3000.0);
      if (t > 700 && G.label == "e^t") break;
      const double d = G.d1(t);
      mono = mono && d >= -1e-12 * std::max(1.0, std::abs(G.value(t)));
    }
    out.G_ok[1] = mono;
  }
  {
    out.G_tail = classify_tail([&](double t) { return -0.5 * G.log_value(t); }, 1e5, 1e6);
    out.G_ok[2] = out.G_tail.divergent;
  }
  {
    std::vector<double> x, y;
    bool finite = true;
    for (int i = 0; i < 64; ++i) {
      const double t = 1e5 * std::pow(10.0, i / 63.0);
      const double lr = std::log(t) + G.log_value(std::sqrt(t)) - G.log_value(t);
      finite = finite && std::isfinite(lr);
      x.push_back(std::log(t));
      y.push_back(lr);
    }
    out.G_ok[3] = finite && detail::ls_slope(x, y) <= 0.02;
  }
  out.details = "model c=" + std::to_string(model.c) + ", gamma=" + gamma.label + ", G=" + G.label;
  return out;
}

// ---------------------------------------------------------------------------
// Integral parabolicity criterion: (sup H_{k-1} vol(boundary B_t))^{-1} not integrable.

struct ParabolicityProfile {
  std::string label;
  std::function<double(double)> log_vol_boundary;  ///< log vol(boundary of B_t)
  std::function<double(double)> log_Hk1_sup;       ///< log sup H_{k-1} on the boundary
};

inline ParabolicityProfile plane_profile() {
  return {"plane", [](double t) { return std::log(2 * std::numbers::pi * t); }, [](double) { return 0.0; }};
}
inline ParabolicityProfile hyperbolic_profile() {
  return {"hyperbolic", [](double t) { return std::log(2 * std::numbers::pi) + t + std::log1p(-std::exp(-2 * t)) - std::log(2.0); },
          [](double) { return 0.0; }};
}
inline ParabolicityProfile power_profile(double a) {
  return {"power", [a](double t) { return std::log(2 * std::numbers::pi) + a * std::log(t); }, [](double) { return 0.0; }};
}

struct ParabolicityResult {
  bool parabolic_indicator = false;
  double integral_value = 0.0;  ///< quadrature of the integrand on (1, t_max)
  TailFit tail;
};

inline ParabolicityResult check_parabolicity(const ParabolicityProfile& prof, double t_max) {
  if (!(t_max > 10.0)) throw Error(ErrorKind::BadParams, "t_max must exceed 10");
  auto log_f = [&](double t) { return -(prof.log_Hk1_sup(t) + prof.log_vol_boundary(t)); };
  ParabolicityResult r;
  r.integral_value =
      adaptive_simpson([&](double s) { return std::exp(log_f(std::exp(s)) + s); }, 0.0, std::log(t_max), 1e-12);
  r.tail = classify_tail(log_f, t_max / 10, t_max);
  r.parabolic_indicator = r.tail.divergent;
  return r;
}

}  // namespace grw
