#pragma once

// Spacelike graphs x -> (u(x), x) in -I x_rho P^n and their first- and
// second-order invariants.
//
// Conventions (fixed throughout the library):
//   induced metric  g_ij = rho^2(u) gP_ij - u_i u_j
//   future normal   N = a (d_t + gP^{-1} Du / rho^2),  a = rho / sqrt(rho^2 - |Du|_P^2)
//   angle function  Theta = <N, d_t> = -a <= -1
//   shape operator  A X = -(ambient covariant derivative of N along X)
// so a slice {t0} x P has A = -(log rho)'(t0) Id and H_1 = (log rho)'(t0).

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <sstream>
#include <vector>

#include "grw/fiber.hpp"
#include "grw/newton_tensors.hpp"
#include "grw/warping.hpp"

namespace grw {

/// Degenerate spacelike margin: reject rho^2 - |Du|^2 < kSpacelikeMargin rho^2.
inline constexpr double kSpacelikeMargin = 1e-12;
/// Principal curvatures below -kEllipticThreshold mark an elliptic point.
inline constexpr double kEllipticThreshold = 1e-10;

template <int N>
struct SurfacePoint {
  double u = 0.0;
  double rho = 1.0, rho_d1 = 0.0, rho_d2 = 0.0;
  double log_d1 = 0.0, log_d2 = 0.0;
  double sigma = 0.0;        ///< sigma(h)
  Vec<N> du;                 ///< coordinate differential of u
  Mat<N> d2u;                ///< coordinate second derivatives of u
  double du_sq_P = 0.0;      ///< |Du|^2 in the fiber metric
  Mat<N> metric;             ///< induced metric g_ij
  Mat<N> inverse;            ///< g^ij
  double sqrt_det = 1.0;     ///< volume density of g
  std::array<Mat<N>, N> christoffel{};  ///< induced Gamma^l_ij stored as christoffel[l](i,j)
  double theta = -1.0;       ///< Theta = <N, T>
  Vec<N> grad_h;             ///< induced gradient of the height (contravariant)
  double grad_h_sq = 0.0;    ///< |grad h|^2 in the induced metric
};

template <int N>
class GraphHypersurface {
 public:
  const Fiber<N>& fiber() const { return *fiber_; }
  std::shared_ptr<const Fiber<N>> fiber_ptr() const { return fiber_; }
  const WarpingFunction& warping() const { return warping_; }
  const Grid<N>& grid() const { return fiber_->grid(); }
  const ScalarField& height() const { return u_; }
  const Interval& slab() const { return slab_; }
  double sigma_base() const { return t0_; }
  std::size_t size() const { return points_.size(); }
  const SurfacePoint<N>& at(std::size_t p) const { return points_[p]; }

  template <class F>
  ScalarField map(F&& f) const {
    ScalarField out(points_.size());
    for (std::size_t p = 0; p < points_.size(); ++p) out[p] = f(points_[p]);
    return out;
  }
  ScalarField theta() const { return map([](const auto& s) { return s.theta; }); }
  ScalarField sigma_h() const { return map([](const auto& s) { return s.sigma; }); }
  /// Theta-hat = rho(h) Theta.
  ScalarField theta_hat() const { return map([](const auto& s) { return s.rho * s.theta; }); }

  template <int M>
  friend GraphHypersurface<M> build_graph(std::shared_ptr<const Fiber<M>>, const WarpingFunction&, ScalarField,
                                          std::optional<double>);

 private:
  std::shared_ptr<const Fiber<N>> fiber_;
  WarpingFunction warping_;
  ScalarField u_;
  Interval slab_;
  double t0_ = 0.0;
  std::vector<SurfacePoint<N>> points_;
};

/// Build the graph of u over the fiber. sigma(h) is measured from `sigma_base`
/// (default: min u).
template <int N>
GraphHypersurface<N> build_graph(std::shared_ptr<const Fiber<N>> fiber, const WarpingFunction& w, ScalarField u,
                                 std::optional<double> sigma_base = std::nullopt) {
  const auto& grid = fiber->grid();
  if (u.size() != grid.size()) throw Error(ErrorKind::ShapeMismatch, "height field does not match fiber grid");
  GraphHypersurface<N> s;
  s.fiber_ = fiber;
  s.warping_ = w;
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  s.slab_ = Interval{*lo, *hi};
  if (!w.interval().contains(s.slab_) || !std::isfinite(*lo) || !std::isfinite(*hi)) {
    std::ostringstream os;
    os << "height range [" << *lo << ", " << *hi << "] outside warping interval";
    throw Error(ErrorKind::HeightOutOfInterval, os.str());
  }
  s.t0_ = sigma_base.value_or(*lo);
  s.u_ = u;
  const auto d = differentiate(grid, u);
  s.points_.resize(u.size());

  double worst_margin = INFINITY;
  std::size_t worst = 0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    auto& q = s.points_[p];
    const auto& fg = fiber->at(p);
    q.u = u[p];
    q.rho = w.rho(q.u);
    q.rho_d1 = w.rho_d1(q.u);
    q.rho_d2 = w.rho_d2(q.u);
    q.log_d1 = w.log_d1(q.u);
    q.log_d2 = w.log_d2(q.u);
    q.sigma = w.sigma(q.u, s.t0_);
    q.du = d.d1[p];
    q.d2u = d.d2[p];
    q.du_sq_P = q.du.dot(fg.inverse * q.du);
    const double rho2 = q.rho * q.rho;
    const double margin = (rho2 - q.du_sq_P) / rho2;
    if (margin < worst_margin) worst_margin = margin, worst = p;
  }
  if (!(worst_margin >= kSpacelikeMargin)) {
    std::ostringstream os;
    os << "graph is not spacelike: 1 - |Du|^2/rho^2 = " << worst_margin << " at node " << worst << " (coords";
    const auto x = grid.coords(worst);
    for (int a = 0; a < N; ++a) os << ' ' << x[a];
    os << ")";
    throw Error(ErrorKind::NotSpacelike, os.str());
  }

  for (std::size_t p = 0; p < u.size(); ++p) {
    auto& q = s.points_[p];
    const auto& fg = fiber->at(p);
    const double rho2 = q.rho * q.rho;
    q.metric = rho2 * fg.metric - q.du * q.du.transpose();
    q.inverse = q.metric.inverse();
    q.sqrt_det = std::sqrt(q.metric.determinant());
    q.theta = -q.rho / std::sqrt(rho2 - q.du_sq_P);
    q.grad_h = q.inverse * q.du;
    q.grad_h_sq = q.du.dot(q.grad_h);

    // d_k g_ij by the chain rule on g = rho^2(u) gP - du du^T.
    std::array<Mat<N>, N> dg;
    for (int k = 0; k < N; ++k) {
      const Vec<N> col = q.d2u.col(k);
      dg[k] = 2.0 * q.rho * q.rho_d1 * q.du[k] * fg.metric + rho2 * fg.dmetric[k] - col * q.du.transpose() -
              q.du * col.transpose();
    }
    for (int l = 0; l < N; ++l) {
      Mat<N> G = Mat<N>::Zero();
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          double acc = 0.0;
          for (int m = 0; m < N; ++m) acc += q.inverse(l, m) * (dg[i](m, j) + dg[j](m, i) - dg[m](i, j));
          G(i, j) = 0.5 * acc;
        }
      q.christoffel[l] = G;
    }
  }
  return s;
}

/// Shape operator (mixed tensor A^i_j) from the warped-product Christoffels:
///   b_ij = Theta (HessP u + rho rho' gP - 2 (log rho)' du du^T)_ij,  A = g^{-1} b.
template <int N>
TensorField<N> shape_operator(const GraphHypersurface<N>& s) {
  TensorField<N> A(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) {
    const auto& q = s.at(p);
    const auto& fg = s.fiber().at(p);
    Mat<N> hess = q.d2u;
    for (int k = 0; k < N; ++k) hess -= fg.christoffel[k] * q.du[k];
    Mat<N> b = q.theta * (hess + q.rho * q.rho_d1 * fg.metric - 2.0 * q.log_d1 * q.du * q.du.transpose());
    b = 0.5 * (b + b.transpose()).eval();
    A[p] = q.inverse * b;
  }
  return A;
}

template <int N>
struct CurvaturePoint {
  Mat<N> A;
  Vec<N> principal;  ///< ascending
  NewtonData<N> newton;
  bool elliptic = false;
  double norm_A_sq = 0.0;
};

template <int N>
struct CurvatureBundle {
  std::vector<CurvaturePoint<N>> points;
  std::array<double, N + 1> c{};  ///< c_k = (n-k) binom(n,k)

  const CurvaturePoint<N>& at(std::size_t p) const { return points[p]; }
  std::size_t size() const { return points.size(); }

  ScalarField H(int k) const {
    ScalarField out(points.size());
    for (std::size_t p = 0; p < points.size(); ++p) out[p] = points[p].newton.h(k);
    return out;
  }
  bool all_elliptic() const {
    return std::all_of(points.begin(), points.end(), [](const auto& q) { return q.elliptic; });
  }
  bool any_elliptic() const {
    return std::any_of(points.begin(), points.end(), [](const auto& q) { return q.elliptic; });
  }
};

/// Eigenvalues of a g-self-adjoint mixed tensor T, computed as the symmetric
/// matrix L^{-1} (g T) L^{-T} in an orthonormal frame g = L L^T.
template <int N>
Vec<N> self_adjoint_eigenvalues(const Mat<N>& metric, const Mat<N>& T) {
  const Eigen::LLT<Mat<N>> llt(metric);
  const Mat<N> L = llt.matrixL();
  const Mat<N> Linv = L.inverse();
  Mat<N> S = Linv * (metric * T) * Linv.transpose();
  S = 0.5 * (S + S.transpose()).eval();
  return Eigen::SelfAdjointEigenSolver<Mat<N>>(S, Eigen::EigenvaluesOnly).eigenvalues();
}

template <int N>
CurvaturePoint<N> curvature_point(const Mat<N>& metric, const Mat<N>& A) {
  const Eigen::SelfAdjointEigenSolver<Mat<N>> ge(metric, Eigen::EigenvaluesOnly);
  const double cond = ge.eigenvalues().maxCoeff() / ge.eigenvalues().minCoeff();
  if (!(cond > 0 && cond <= 1e8)) throw Error(ErrorKind::EigenFailure, "induced metric ill-conditioned");
  CurvaturePoint<N> cp;
  cp.A = A;
  cp.principal = self_adjoint_eigenvalues<N>(metric, A);
  cp.newton = newton_tensors<N>(A);
  cp.elliptic = cp.principal.maxCoeff() < -kEllipticThreshold;
  cp.norm_A_sq = (A * A).trace();
  return cp;
}

template <int N>
CurvatureBundle<N> curvature_bundle(const GraphHypersurface<N>& s, const TensorField<N>& A) {
  if (A.size() != s.size()) throw Error(ErrorKind::ShapeMismatch, "shape operator does not match surface");
  CurvatureBundle<N> b;
  for (int k = 0; k <= N; ++k) b.c[k] = newton_c(N, k);
  b.points.resize(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) b.points[p] = curvature_point<N>(s.at(p).metric, A[p]);
  return b;
}

template <int N>
CurvatureBundle<N> curvature_bundle(const GraphHypersurface<N>& s) {
  return curvature_bundle(s, shape_operator(s));
}

/// Bundle of the opposite orientation (N -> -N, so A -> -A).
template <int N>
CurvatureBundle<N> flip_orientation(const GraphHypersurface<N>& s, const CurvatureBundle<N>& b) {
  TensorField<N> A(b.size());
  for (std::size_t p = 0; p < b.size(); ++p) A[p] = -b.points[p].A;
  return curvature_bundle(s, A);
}

// ---------------------------------------------------------------------------
// Ambient curvature along the graph.

template <int N>
using AmbientVec = Eigen::Matrix<double, N + 1, 1>;

/// Ambient (Lorentzian) frame data at one surface point, in coordinates
/// (t, x^1..x^n) of the warped product.
template <int N>
struct AmbientFrame {
  std::array<AmbientVec<N>, N> tangent;  ///< orthonormal tangent frame E_1..E_n
  AmbientVec<N> normal;                  ///< future unit normal
  Mat<N> fiber_metric;
  double rho = 1.0, log_d1 = 0.0, log_d2 = 0.0, kappa = 0.0;

  double inner(const AmbientVec<N>& U, const AmbientVec<N>& W) const {
    return -U[0] * W[0] + rho * rho * U.template tail<N>().dot(fiber_metric * W.template tail<N>());
  }
  double inner_P(const AmbientVec<N>& U, const AmbientVec<N>& W) const {
    return U.template tail<N>().dot(fiber_metric * W.template tail<N>());
  }

  /// Warped-product curvature tensor R(U,V)W for a constant-curvature fiber:
  ///   R_P(U*,V*)W* + ((log rho)')^2 (<U,W>V - <V,W>U)
  ///   + (log rho)'' <W,T> (<V,T>U - <U,T>V) - (log rho)'' (<U,W><V,T> - <V,W><U,T>) T
  AmbientVec<N> curvature(const AmbientVec<N>& U, const AmbientVec<N>& V, const AmbientVec<N>& W) const {
    AmbientVec<N> T = AmbientVec<N>::Zero();
    T[0] = 1.0;
    AmbientVec<N> Us = U, Vs = V;
    Us[0] = 0.0;
    Vs[0] = 0.0;
    const double uw = inner(U, W), vw = inner(V, W), ut = inner(U, T), vt = inner(V, T), wt = inner(W, T);
    AmbientVec<N> r = kappa * (inner_P(U, W) * Vs - inner_P(V, W) * Us);
    r += log_d1 * log_d1 * (uw * V - vw * U);
    r += log_d2 * wt * (vt * U - ut * V);
    r -= log_d2 * (uw * vt - vw * ut) * T;
    return r;
  }

  /// <R(X,Y)X, Y>, the sectional curvature of an orthonormal spacelike pair.
  double sectional(const AmbientVec<N>& X, const AmbientVec<N>& Y) const { return inner(curvature(X, Y, X), Y); }

  /// Ric(V,W) = sum_m eps_m <R(V,E_m)W, E_m> over the frame {E_i, N}.
  double ricci(const AmbientVec<N>& V, const AmbientVec<N>& W) const {
    double acc = 0.0;
    for (const auto& E : tangent) acc += inner(curvature(V, E, W), E);
    acc -= inner(curvature(V, normal, W), normal);
    return acc;
  }
};

template <int N>
AmbientFrame<N> ambient_frame(const GraphHypersurface<N>& s, std::size_t p) {
  const auto& q = s.at(p);
  const auto& fg = s.fiber().at(p);
  AmbientFrame<N> f;
  f.fiber_metric = fg.metric;
  f.rho = q.rho;
  f.log_d1 = q.log_d1;
  f.log_d2 = q.log_d2;
  f.kappa = s.fiber().kappa();
  // Coordinate tangents X_i = u_i d_t + d_i, Gram-Schmidt in the ambient metric.
  for (int i = 0; i < N; ++i) {
    AmbientVec<N> X = AmbientVec<N>::Zero();
    X[0] = q.du[i];
    X[i + 1] = 1.0;
    for (int j = 0; j < i; ++j) X -= f.inner(X, f.tangent[j]) * f.tangent[j];
    f.tangent[i] = X / std::sqrt(f.inner(X, X));
  }
  const double a = -q.theta;
  f.normal[0] = a;
  f.normal.template tail<N>() = a * (fg.inverse * q.du) / (q.rho * q.rho);
  return f;
}

inline constexpr int num_planes(int n) { return n * (n - 1) / 2; }

template <int N>
struct AmbientPoint {
  std::array<double, num_planes(N)> Kbar{};        ///< sectional curvature of orthonormal tangent pairs (E_i, E_j), i < j
  std::array<double, num_planes(N)> Kbar_split{};  ///< same via kappa/rho^2 |X*^Y*|^2 + (log rho)'^2 - (log rho)''(<X,grad h>^2 + <Y,grad h>^2)
  std::array<double, num_planes(N)> wedge_sq{};    ///< |X* ^ Y*|^2 in the ambient metric
  std::array<double, num_planes(N)> wedge_sq_closed{};  ///< 1 + <X,T>^2 + <Y,T>^2
  double ric_NN = 0.0;
  double scalar = 0.0;
  double ric_P_NstarNstar = 0.0;  ///< Ric_P(N*,N*) = (n-1) kappa <N*,N*>_P
};

template <int N>
struct AmbientCurvature {
  std::vector<AmbientPoint<N>> points;
  const AmbientPoint<N>& at(std::size_t p) const { return points[p]; }
};

template <int N>
AmbientCurvature<N> ambient_curvature(const GraphHypersurface<N>& s) {
  AmbientCurvature<N> out;
  out.points.resize(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) {
    const auto& q = s.at(p);
    const auto f = ambient_frame(s, p);
    auto& ap = out.points[p];
    AmbientVec<N> T = AmbientVec<N>::Zero();
    T[0] = 1.0;
    int plane = 0;
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j, ++plane) {
        const auto& X = f.tangent[i];
        const auto& Y = f.tangent[j];
        ap.Kbar[plane] = f.sectional(X, Y);
        AmbientVec<N> Xs = X, Ys = Y;
        Xs[0] = 0.0;
        Ys[0] = 0.0;
        const double xx = f.inner(Xs, Xs), yy = f.inner(Ys, Ys), xy = f.inner(Xs, Ys);
        ap.wedge_sq[plane] = xx * yy - xy * xy;
        const double xt = f.inner(X, T), yt = f.inner(Y, T);
        ap.wedge_sq_closed[plane] = 1.0 + xt * xt + yt * yt;
        // <X, grad h> = dh(X) = X^0 in coordinates.
        const double xg = X[0], yg = Y[0];
        ap.Kbar_split[plane] = f.kappa / (f.rho * f.rho) * ap.wedge_sq[plane] + f.log_d1 * f.log_d1 -
                               f.log_d2 * (xg * xg + yg * yg);
      }
    }
    ap.ric_NN = f.ricci(f.normal, f.normal);
    double S = -ap.ric_NN;
    for (const auto& E : f.tangent) S += f.ricci(E, E);
    ap.scalar = S;
    ap.ric_P_NstarNstar = (N - 1) * f.kappa * f.inner_P(f.normal, f.normal);
    (void)q;
  }
  return out;
}

}  // namespace grw
