#pragma once

// Trace-type operators on a graph: L_k f = Tr(P_k o hess f), the normalized
// P_k / H_k variant, the composite operators built from P_0..P_{k-1}, and the
// divergence-form operator div(P_{k-1} grad f).

#include <cmath>
#include <string>
#include <vector>

#include "grw/hypersurface.hpp"

namespace grw {

/// Induced Hessian as a mixed tensor (g^{-1} Hess f) at every grid point.
template <int N>
TensorField<N> induced_hessian(const GraphHypersurface<N>& s, const ScalarField& f) {
  if (f.size() != s.size()) throw Error(ErrorKind::ShapeMismatch, "field does not match surface grid");
  const auto d = differentiate(s.grid(), f);
  TensorField<N> out(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) {
    const auto& q = s.at(p);
    Mat<N> hess = d.d2[p];
    for (int l = 0; l < N; ++l) hess -= q.christoffel[l] * d.d1[p][l];
    out[p] = q.inverse * hess;
  }
  return out;
}

/// Induced gradient (contravariant) of f.
template <int N>
VectorField<N> induced_gradient(const GraphHypersurface<N>& s, const ScalarField& f) {
  auto df = gradient(s.grid(), f);
  for (std::size_t p = 0; p < df.size(); ++p) df[p] = s.at(p).inverse * df[p];
  return df;
}

/// g(X, Y) for contravariant X, Y at point p.
template <int N>
double induced_inner(const GraphHypersurface<N>& s, std::size_t p, const Vec<N>& X, const Vec<N>& Y) {
  return X.dot(s.at(p).metric * Y);
}

inline constexpr double kNormalizeFloor = 1e-10;

template <int N>
ScalarField apply_Lk(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b, int k, const ScalarField& f,
                     bool normalized = false) {
  if (k < 0 || k > N - 1) throw Error(ErrorKind::BadParams, "L_k requires 0 <= k <= n-1");
  if (normalized) {
    for (std::size_t p = 0; p < b.size(); ++p)
      if (!(b.at(p).newton.H[k] > kNormalizeFloor))
        throw Error(ErrorKind::NormalizeByZero, "H_" + std::to_string(k) + " <= 1e-10 at node " + std::to_string(p));
  }
  const auto hess = induced_hessian(s, f);
  ScalarField out(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) {
    const auto& nd = b.at(p).newton;
    double v = (nd.P[k] * hess[p]).trace();
    if (normalized) v /= nd.H[k];
    out[p] = v;
  }
  return out;
}

/// f -> Tr(coeff o hess f) for a per-point coefficient tensor.
template <int N>
struct TraceOperator {
  std::string label;
  TensorField<N> coeff;
  double trace_bound = 0.0;
  double min_eigenvalue = 0.0;
  bool elliptic = false;

  ScalarField apply(const GraphHypersurface<N>& s, const ScalarField& f) const {
    const auto hess = induced_hessian(s, f);
    ScalarField out(f.size());
    for (std::size_t p = 0; p < f.size(); ++p) out[p] = (coeff[p] * hess[p]).trace();
    return out;
  }
};

template <int N>
TraceOperator<N> make_trace_operator(const GraphHypersurface<N>& s, std::string label, TensorField<N> coeff) {
  TraceOperator<N> op;
  op.label = std::move(label);
  op.trace_bound = -INFINITY;
  op.min_eigenvalue = INFINITY;
  for (std::size_t p = 0; p < coeff.size(); ++p) {
    op.trace_bound = std::max(op.trace_bound, coeff[p].trace());
    op.min_eigenvalue = std::min(op.min_eigenvalue, self_adjoint_eigenvalues<N>(s.at(p).metric, coeff[p]).minCoeff());
  }
  op.coeff = std::move(coeff);
  op.elliptic = op.min_eigenvalue > kEllipticThreshold;
  return op;
}

template <int N>
TraceOperator<N> lk_operator(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b, int k,
                             bool normalized = false) {
  if (k < 0 || k > N - 1) throw Error(ErrorKind::BadParams, "L_k requires 0 <= k <= n-1");
  TensorField<N> c(b.size());
  for (std::size_t p = 0; p < b.size(); ++p) {
    const auto& nd = b.at(p).newton;
    if (normalized && !(nd.H[k] > kNormalizeFloor))
      throw Error(ErrorKind::NormalizeByZero, "H_" + std::to_string(k) + " <= 1e-10 at node " + std::to_string(p));
    c[p] = normalized ? Mat<N>(nd.P[k] / nd.H[k]) : nd.P[k];
  }
  return make_trace_operator(s, normalized ? "L_hat_" + std::to_string(k) : "L_" + std::to_string(k), std::move(c));
}

enum class CompositeVariant {
  Compact,  ///< coefficients (log rho)'(h)^{k-1-i} (-Theta)^i
  Theta4,   ///< coefficients |(log rho)'(h) / Theta|^{k-1-i}
};

inline std::string to_string(CompositeVariant v) { return v == CompositeVariant::Compact ? "compact" : "theta4"; }

/// Composite operator sum_{i<k} (c_{k-1}/c_i) w_i(h) L_i.
/// With `check_hypotheses`, throws HypothesisViolation when the ellipticity
/// hypotheses of the chosen variant fail: rho'(h) > 0 and P_1..P_{k-1}
/// positive definite (compact), or (log rho)'(h) Theta < 0 (theta4).
template <int N>
TraceOperator<N> compose_calL(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b, int k,
                              CompositeVariant variant = CompositeVariant::Compact, bool check_hypotheses = false) {
  if (k < 1 || k > N) throw Error(ErrorKind::BadParams, "composite operator requires 1 <= k <= n");
  TensorField<N> c(b.size());
  for (std::size_t p = 0; p < b.size(); ++p) {
    const auto& q = s.at(p);
    const auto& nd = b.at(p).newton;
    if (check_hypotheses) {
      if (variant == CompositeVariant::Compact) {
        if (!(q.rho_d1 > 0))
          throw Error(ErrorKind::HypothesisViolation, "rho'(h) > 0 fails at node " + std::to_string(p));
        for (int i = 1; i < k; ++i)
          if (!(self_adjoint_eigenvalues<N>(q.metric, nd.P[i]).minCoeff() > kEllipticThreshold))
            throw Error(ErrorKind::HypothesisViolation,
                        "P_" + std::to_string(i) + " positive definite fails at node " + std::to_string(p));
      } else if (!(q.log_d1 * q.theta < 0)) {
        throw Error(ErrorKind::HypothesisViolation, "(log rho)'(h) Theta < 0 fails at node " + std::to_string(p));
      }
    }
    Mat<N> m = Mat<N>::Zero();
    for (int i = 0; i < k; ++i) {
      const double ratio = b.c[k - 1] / b.c[i];
      const double w = variant == CompositeVariant::Compact
                           ? std::pow(q.log_d1, k - 1 - i) * std::pow(-q.theta, i)
                           : std::pow(std::abs(q.log_d1 / q.theta), k - 1 - i);
      m += ratio * w * nd.P[i];
    }
    c[p] = m;
  }
  return make_trace_operator(s, "calL_" + to_string(variant) + "_" + std::to_string(k), std::move(c));
}

template <int N>
struct FrakLResult {
  ScalarField formula;     ///< L_{k-1} f, plus (n-k+1) Theta (kappa/rho^2 - (log rho)'') <P_{k-2} grad h, grad f> when k >= 2
  ScalarField divergence;  ///< conservative flux discretization of div(P_{k-1} grad f); 0 on open edges
};

/// div(P_{k-1} grad f) in two independent forms. For k = 1 this is the
/// Laplacian and the first-order term is absent. Only constant-curvature
/// fibers are supported (all built-in fibers qualify).
template <int N>
FrakLResult<N> apply_frakL(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b, int k, const ScalarField& f) {
  if (k < 1 || k > N) throw Error(ErrorKind::BadParams, "frakL requires 1 <= k <= n");
  const auto& grid = s.grid();
  const double kappa = s.fiber().kappa();
  FrakLResult<N> r;
  r.formula = apply_Lk(s, b, k - 1, f);
  const auto gf = induced_gradient(s, f);
  for (std::size_t p = 0; p < f.size() && k >= 2; ++p) {
    const auto& q = s.at(p);
    const Vec<N> Pg = b.at(p).newton.P[k - 2] * q.grad_h;
    r.formula[p] += (N - k + 1) * q.theta * (kappa / (q.rho * q.rho) - q.log_d2) * induced_inner(s, p, Pg, gf[p]);
  }

  // Flux K^{ab} d_b f with K = sqrt(g) P_{k-1} g^{-1} (symmetric); K is averaged
  // to half points, the normal derivative is the compact difference and the
  // tangential ones are averaged central differences.
  std::vector<Mat<N>> K(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) {
    const auto& q = s.at(p);
    K[p] = q.sqrt_det * b.at(p).newton.P[k - 1] * q.inverse;
  }
  const auto df = gradient(grid, f);
  auto flux = [&](std::size_t p, std::size_t q, int a) {
    const double h = grid.axis(a).spacing;
    const Mat<N> Kh = 0.5 * (K[p] + K[q]);
    Vec<N> d = 0.5 * (df[p] + df[q]);
    d[a] = (f[q] - f[p]) / h;
    return Kh.row(a).dot(d);
  };
  r.divergence.assign(f.size(), 0.0);
  for (std::size_t p = 0; p < f.size(); ++p) {
    if (!grid.is_interior(p, 1)) continue;
    double acc = 0.0;
    for (int a = 0; a < N; ++a) {
      const std::size_t up = grid.shifted(p, a, 1), dn = grid.shifted(p, a, -1);
      acc += (flux(p, up, a) - flux(dn, p, a)) / grid.axis(a).spacing;
    }
    r.divergence[p] = acc / s.at(p).sqrt_det;
  }
  return r;
}

}  // namespace grw
