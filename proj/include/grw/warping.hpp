#pragma once

// Warping functions rho: I -> (0, inf) of a Lorentzian warped product
// -I x_rho P^n, their log-derivatives, the antiderivative sigma, and the
// curvature-condition predicates evaluated on a slab.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "grw/errors.hpp"

namespace grw {

enum class WarpingKind { Exp, Cosh, Linear, Power, Tabulated };

inline std::string to_string(WarpingKind k) {
  switch (k) {
    case WarpingKind::Exp: return "exp";
    case WarpingKind::Cosh: return "cosh";
    case WarpingKind::Linear: return "linear";
    case WarpingKind::Power: return "power";
    case WarpingKind::Tabulated: return "tabulated";
  }
  return "?";
}

inline WarpingKind parse_warping_kind(const std::string& s) {
  if (s == "exp") return WarpingKind::Exp;
  if (s == "cosh") return WarpingKind::Cosh;
  if (s == "linear") return WarpingKind::Linear;
  if (s == "power") return WarpingKind::Power;
  if (s == "tabulated") return WarpingKind::Tabulated;
  throw Error(ErrorKind::BadParams, "unknown warping kind '" + s + "'");
}

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double t) const { return t >= lo && t <= hi; }
  bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
  bool contains(const Interval& other) const { return other.lo >= lo && other.hi <= hi; }
};

namespace detail {

/// Natural cubic spline through strictly increasing abscissae.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> t, std::vector<double> y) : t_(std::move(t)), y_(std::move(y)) {
    const std::size_t n = t_.size();
    m_.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> a(n, 0.0), b(n, 1.0), c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = t_[i] - t_[i - 1];
      const double h1 = t_[i + 1] - t_[i];
      a[i] = h0 / 6.0;
      b[i] = (h0 + h1) / 3.0;
      c[i] = h1 / 6.0;
      d[i] = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
    }
    // Thomas algorithm; rows 0 and n-1 are the natural conditions m = 0.
    for (std::size_t i = 1; i < n; ++i) {
      const double w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
  }

  /// Value, first and second derivative at t (t must lie in the table range).
  std::array<double, 3> eval(double t) const {
    std::size_t i = static_cast<std::size_t>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin());
    i = std::clamp<std::size_t>(i, 1, t_.size() - 1) - 1;
    const double h = t_[i + 1] - t_[i];
    const double A = (t_[i + 1] - t) / h;
    const double B = (t - t_[i]) / h;
    const double v = A * y_[i] + B * y_[i + 1] + ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
    const double d1 = (y_[i + 1] - y_[i]) / h - (3 * A * A - 1) * h / 6.0 * m_[i] + (3 * B * B - 1) * h / 6.0 * m_[i + 1];
    const double d2 = A * m_[i] + B * m_[i + 1];
    return {v, d1, d2};
  }

  const std::vector<double>& knots() const { return t_; }

 private:
  std::vector<double> t_, y_, m_;
};

template <class F>
double adaptive_simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                             double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return detail::adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol, 50);
}

/// A warping function with closed-form or spline-interpolated derivatives.
///
/// Parametrisations (params in order, defaults in brackets):
///   exp     rho = a exp(b t)          [a = 1, b = 1]; one param sets b
///   cosh    rho = a cosh(b t)         [a = 1, b = 1]; one param sets b
///   linear  rho = m t + q             [m = 1, q = 0]
///   power   rho = a t^p               [a = 1]; one param sets p (required)
///   tabulated  natural cubic spline through (t, rho) samples
class WarpingFunction {
 public:
  WarpingKind kind() const { return kind_; }
  const std::vector<double>& params() const { return params_; }
  const Interval& interval() const { return interval_; }

  double rho(double t) const { return eval(t)[0]; }
  double rho_d1(double t) const { return eval(t)[1]; }
  double rho_d2(double t) const { return eval(t)[2]; }

  /// (log rho)'
  double log_d1(double t) const {
    switch (kind_) {
      case WarpingKind::Exp: return b_;
      case WarpingKind::Cosh: return b_ * std::tanh(b_ * t);
      case WarpingKind::Linear: return a_ / (a_ * t + b_);
      case WarpingKind::Power: return b_ / t;
      case WarpingKind::Tabulated: {
        const auto v = eval(t);
        return v[1] / v[0];
      }
    }
    return 0.0;
  }

  /// (log rho)''
  double log_d2(double t) const {
    switch (kind_) {
      case WarpingKind::Exp: return 0.0;
      case WarpingKind::Cosh: {
        const double c = std::cosh(b_ * t);
        return b_ * b_ / (c * c);
      }
      case WarpingKind::Linear: {
        const double r = a_ * t + b_;
        return -a_ * a_ / (r * r);
      }
      case WarpingKind::Power: return -b_ / (t * t);
      case WarpingKind::Tabulated: {
        const auto v = eval(t);
        const double q = v[1] / v[0];
        return v[2] / v[0] - q * q;
      }
    }
    return 0.0;
  }

  /// Integral of rho over [t0, t].
  double sigma(double t, double t0) const {
    if (!interval_.contains(t) || !interval_.contains(t0)) {
      std::ostringstream os;
      os << "sigma arguments t=" << t << ", t0=" << t0 << " outside [" << interval_.lo << ", " << interval_.hi << "]";
      throw Error(ErrorKind::OutOfInterval, os.str());
    }
    if (t == t0) return 0.0;
    switch (kind_) {
      case WarpingKind::Exp:
        if (b_ == 0.0) return a_ * (t - t0);
        return a_ * (std::exp(b_ * t) - std::exp(b_ * t0)) / b_;
      case WarpingKind::Cosh:
        if (b_ == 0.0) return a_ * (t - t0);
        return a_ * (std::sinh(b_ * t) - std::sinh(b_ * t0)) / b_;
      case WarpingKind::Linear: return 0.5 * a_ * (t * t - t0 * t0) + b_ * (t - t0);
      case WarpingKind::Power:
        if (b_ == -1.0) return a_ * std::log(t / t0);
        return a_ * (std::pow(t, b_ + 1) - std::pow(t0, b_ + 1)) / (b_ + 1);
      case WarpingKind::Tabulated: return sigma_tabulated(t, t0);
    }
    return 0.0;
  }

  friend WarpingFunction make_warping(WarpingKind, std::vector<double>, Interval,
                                      std::vector<std::pair<double, double>>);

 private:
  std::array<double, 3> eval(double t) const {
    switch (kind_) {
      case WarpingKind::Exp: {
        const double v = a_ * std::exp(b_ * t);
        return {v, b_ * v, b_ * b_ * v};
      }
      case WarpingKind::Cosh:
        return {a_ * std::cosh(b_ * t), a_ * b_ * std::sinh(b_ * t), a_ * b_ * b_ * std::cosh(b_ * t)};
      case WarpingKind::Linear: return {a_ * t + b_, a_, 0.0};
      case WarpingKind::Power: {
        const double v = a_ * std::pow(t, b_);
        return {v, b_ * v / t, b_ * (b_ - 1) * v / (t * t)};
      }
      case WarpingKind::Tabulated:
        if (!interval_.contains(t)) throw Error(ErrorKind::OutOfInterval, "tabulated warping evaluated outside table");
        return spline_.eval(t);
    }
    return {0, 0, 0};
  }

  double sigma_tabulated(double t, double t0) const {
    const double lo = std::min(t, t0), hi = std::max(t, t0);
    // Integrate knot interval by knot interval; the spline is a cubic on each.
    const auto& knots = spline_.knots();
    auto f = [this](double s) { return spline_.eval(s)[0]; };
    double total = 0.0;
    double a = lo;
    for (double k : knots) {
      if (k <= a) continue;
      if (k >= hi) break;
      total += adaptive_simpson(f, a, k, 1e-13);
      a = k;
    }
    total += adaptive_simpson(f, a, hi, 1e-13);
    return t >= t0 ? total : -total;
  }

  WarpingKind kind_ = WarpingKind::Exp;
  std::vector<double> params_;
  Interval interval_;
  double a_ = 1.0, b_ = 1.0;
  detail::CubicSpline spline_;
};

/// Sample points used for positivity and condition checks on an interval;
/// infinite endpoints are clipped to a finite window.
inline std::vector<double> sample_interval(const Interval& I, int count) {
  const double lo = std::isfinite(I.lo) ? I.lo : (std::isfinite(I.hi) ? I.hi - 100.0 : -50.0);
  const double hi = std::isfinite(I.hi) ? I.hi : lo + 100.0;
  std::vector<double> t(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) t[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (count - 1);
  return t;
}

inline WarpingFunction make_warping(WarpingKind kind, std::vector<double> params, Interval interval,
                                    std::vector<std::pair<double, double>> table = {}) {
  if (!(interval.lo < interval.hi)) throw Error(ErrorKind::BadParams, "empty warping interval");
  WarpingFunction w;
  w.kind_ = kind;
  w.params_ = params;
  w.interval_ = interval;
  auto bad = [&](const std::string& why) { throw Error(ErrorKind::BadParams, to_string(kind) + ": " + why); };
  switch (kind) {
    case WarpingKind::Exp:
    case WarpingKind::Cosh:
      if (params.size() > 2) bad("expects at most 2 params");
      if (params.size() == 1) w.b_ = params[0];
      if (params.size() == 2) w.a_ = params[0], w.b_ = params[1];
      if (!(w.a_ > 0)) bad("scale must be positive");
      break;
    case WarpingKind::Linear:
      if (params.size() > 2) bad("expects at most 2 params");
      w.a_ = 1.0, w.b_ = 0.0;
      if (params.size() >= 1) w.a_ = params[0];
      if (params.size() == 2) w.b_ = params[1];
      if (!interval.finite()) bad("interval must be finite");
      break;
    case WarpingKind::Power:
      if (params.empty() || params.size() > 2) bad("expects [p] or [a, p]");
      w.a_ = params.size() == 2 ? params[0] : 1.0;
      w.b_ = params.back();
      if (!(w.a_ > 0)) bad("scale must be positive");
      if (!(interval.lo > 0)) bad("interval must lie in (0, inf)");
      break;
    case WarpingKind::Tabulated: {
      if (table.size() < 4) bad("table needs at least 4 rows");
      std::vector<double> t, y;
      for (std::size_t i = 0; i < table.size(); ++i) {
        if (i > 0 && !(table[i].first > table[i - 1].first)) bad("t column must be strictly increasing");
        t.push_back(table[i].first);
        y.push_back(table[i].second);
      }
      w.interval_ = Interval{t.front(), t.back()};
      w.spline_ = detail::CubicSpline(std::move(t), std::move(y));
      break;
    }
  }
  for (double t : sample_interval(w.interval_, 1001)) {
    const double r = w.rho(t);
    if (!(r > 0) || !std::isfinite(r)) {
      std::ostringstream os;
      os << "rho(" << t << ") = " << r;
      throw Error(ErrorKind::NonPositiveWarp, os.str());
    }
  }
  return w;
}

enum class LogConcavity { Strict, IsolatedEquality, InteriorEquality, Fails };

inline std::string to_string(LogConcavity c) {
  switch (c) {
    case LogConcavity::Strict: return "strict";
    case LogConcavity::IsolatedEquality: return "isolated_equality";
    case LogConcavity::InteriorEquality: return "interior_equality";
    case LogConcavity::Fails: return "fails";
  }
  return "?";
}

struct ConditionReport {
  LogConcavity logconcave = LogConcavity::Strict;
  std::optional<double> witness;  ///< point with (log rho)'' > tolerance when logconcave fails
  bool tcc_rho = false;           ///< rho'' <= 0 on the slab
  double sup_logrho2 = 0.0;       ///< sup of (log rho)'' rho^2 over the slab
  double ncc_threshold = 0.0;     ///< (n-1) sup((log rho)'' rho^2): right side of NCC as a multiple of <,>_P
  bool ncc = false;               ///< Ric_P = (n-1) kappa <,>_P satisfies NCC (also TCC's first condition)
  bool strict_ncc = false;
  bool tcc = false;               ///< both timelike convergence conditions
  bool rho_prime_nonvanishing = false;
  bool rho_prime_constant_sign = false;
  std::string notes;
};

inline constexpr double kPredicateTol = 1e-12;

/// Evaluate the curvature predicates on a uniform sampling of the slab.
inline ConditionReport check_conditions(const WarpingFunction& w, const Interval& slab, double fiber_kappa, int n) {
  if (!slab.finite() || !(slab.lo <= slab.hi)) throw Error(ErrorKind::BadParams, "slab must be a finite interval");
  if (!w.interval().contains(slab)) throw Error(ErrorKind::OutOfInterval, "slab not contained in warping interval");
  constexpr int kSamples = 2049;
  const double tol = kPredicateTol;
  const double len = slab.hi - slab.lo;
  std::vector<double> t(kSamples), v(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    t[i] = len > 0 ? slab.lo + len * i / (kSamples - 1) : slab.lo;
    v[i] = w.log_d2(t[i]);
  }

  ConditionReport r;
  std::ostringstream notes;

  // Refine each interior local maximum of (log rho)'' by golden-section search
  // so zeros that fall between samples are found.
  auto refine_max = [&](int i) {
    double a = t[std::max(i - 1, 0)], b = t[std::min(i + 1, kSamples - 1)];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    for (int it = 0; it < 80 && b - a > 1e-15 * (1 + std::abs(a)); ++it) {
      if (w.log_d2(c) > w.log_d2(d)) b = d;
      else a = c;
      c = b - g * (b - a);
      d = a + g * (b - a);
    }
    const double tm = 0.5 * (a + b);
    return std::pair{tm, w.log_d2(tm)};
  };

  int best = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  double best_t = t[best], best_v = v[best];
  std::vector<double> refined_zeros;
  for (int i = 1; i + 1 < kSamples; ++i) {
    if (v[i] >= v[i - 1] && v[i] >= v[i + 1] && v[i] <= tol) {
      const auto [tm, vm] = refine_max(i);
      if (vm > best_v) best_t = tm, best_v = vm;
      if (std::abs(vm) <= tol && std::abs(v[i]) > tol) refined_zeros.push_back(tm);
    }
  }

  if (best_v > tol) {
    r.logconcave = LogConcavity::Fails;
    r.witness = best_t;
    notes << "(log rho)'' = " << best_v << " > 0 at t = " << best_t << "; ";
  } else {
    int longest_run = 0, run = 0, zeros = 0;
    for (int i = 0; i < kSamples; ++i) {
      if (std::abs(v[i]) <= tol) {
        ++run;
        ++zeros;
        longest_run = std::max(longest_run, run);
      } else {
        run = 0;
      }
    }
    zeros += static_cast<int>(refined_zeros.size());
    if (longest_run - 1 > 2) r.logconcave = LogConcavity::InteriorEquality;
    else if (zeros > 0) r.logconcave = LogConcavity::IsolatedEquality;
    else r.logconcave = LogConcavity::Strict;
  }

  bool rho2_ok = true;
  double sup_l2 = -INFINITY;
  int pos = 0, neg = 0, zero = 0;
  for (int i = 0; i < kSamples; ++i) {
    if (w.rho_d2(t[i]) > tol) rho2_ok = false;
    const double rho = w.rho(t[i]);
    sup_l2 = std::max(sup_l2, v[i] * rho * rho);
    const double d1 = w.rho_d1(t[i]);
    if (d1 > tol) ++pos;
    else if (d1 < -tol) ++neg;
    else ++zero;
  }
  r.tcc_rho = rho2_ok;
  r.sup_logrho2 = sup_l2;
  r.ncc_threshold = (n - 1) * sup_l2;
  r.ncc = (n - 1) * fiber_kappa >= r.ncc_threshold - tol;
  r.strict_ncc = (n - 1) * fiber_kappa > r.ncc_threshold + tol;
  r.tcc = r.ncc && r.tcc_rho;
  r.rho_prime_nonvanishing = zero == 0 && (pos == 0 || neg == 0);
  r.rho_prime_constant_sign = pos == 0 || neg == 0;
  notes << "logconcave=" << to_string(r.logconcave) << "; sup((log rho)''rho^2)=" << sup_l2;
  r.notes = notes.str();
  return r;
}

}  // namespace grw
