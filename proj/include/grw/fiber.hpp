#pragma once

// Constant-curvature Riemannian fibers P^n on structured grids.
//
// Flat tori are available for any dimension; the curved fibers are surfaces
// of revolution ds^2 = dx^2 + f(x)^2 dy^2 with y periodic:
//   sphere_band      f = sin(theta), theta in [theta0, pi - theta0], K = +1
//   hyperbolic_disk  f = sinh(r),    r in [r_min, r_max] (polar annulus), K = -1

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>

#include "grw/grid.hpp"

namespace grw {

enum class FiberKind { Torus, SphereBand, HyperbolicDisk };

inline std::string to_string(FiberKind k) {
  switch (k) {
    case FiberKind::Torus: return "torus";
    case FiberKind::SphereBand: return "sphere_band";
    case FiberKind::HyperbolicDisk: return "hyperbolic_disk";
  }
  return "?";
}

inline FiberKind parse_fiber_kind(const std::string& s) {
  if (s == "torus") return FiberKind::Torus;
  if (s == "sphere_band") return FiberKind::SphereBand;
  if (s == "hyperbolic_disk") return FiberKind::HyperbolicDisk;
  throw Error(ErrorKind::BadParams, "unknown fiber kind '" + s + "'");
}

struct FiberPatch {
  double theta0 = 0.3;  ///< sphere_band pole exclusion
  double r_min = 0.5;   ///< hyperbolic_disk inner radius of the polar patch
  double r_max = 1.5;   ///< hyperbolic_disk outer radius
};

/// Metric data of a fiber at one point: g_P, its inverse, coordinate
/// derivatives dg[k](i,j) = d_k g_ij and Christoffels gamma[k](i,j) = Gamma^k_ij.
template <int N>
struct FiberPointGeometry {
  Mat<N> metric = Mat<N>::Identity();
  Mat<N> inverse = Mat<N>::Identity();
  std::array<Mat<N>, N> dmetric{};
  std::array<Mat<N>, N> christoffel{};
};

template <int N>
class Fiber {
 public:
  FiberKind kind() const { return kind_; }
  static constexpr int dim() { return N; }
  double kappa() const { return kappa_; }
  const Grid<N>& grid() const { return grid_; }
  const FiberPatch& patch() const { return patch_; }

  const FiberPointGeometry<N>& at(std::size_t p) const { return points_[p]; }
  double volume_density(std::size_t p) const { return std::sqrt(points_[p].metric.determinant()); }

  /// Closed-form geometry at an arbitrary coordinate point.
  FiberPointGeometry<N> geometry_at(const Vec<N>& x) const {
    FiberPointGeometry<N> g;
    for (int k = 0; k < N; ++k) {
      g.dmetric[k].setZero();
      g.christoffel[k].setZero();
    }
    if constexpr (N == 2) {
      if (kind_ == FiberKind::Torus) return g;
      const double s = x[0];
      const double f = kind_ == FiberKind::SphereBand ? std::sin(s) : std::sinh(s);
      const double fp = kind_ == FiberKind::SphereBand ? std::cos(s) : std::cosh(s);
      g.metric(1, 1) = f * f;
      g.inverse(1, 1) = 1.0 / (f * f);
      g.dmetric[0](1, 1) = 2.0 * f * fp;
      g.christoffel[0](1, 1) = -f * fp;
      g.christoffel[1](0, 1) = fp / f;
      g.christoffel[1](1, 0) = fp / f;
    }
    return g;
  }

  template <int M>
  friend Fiber<M> make_fiber(FiberKind, std::array<int, M>, FiberPatch);

 private:
  FiberKind kind_ = FiberKind::Torus;
  double kappa_ = 0.0;
  FiberPatch patch_;
  Grid<N> grid_;
  std::vector<FiberPointGeometry<N>> points_;
};

namespace detail {

/// Gaussian curvature from the Brioschi formula given E, F, G and their
/// first and second coordinate derivatives at a point.
struct MetricJet2 {
  double E, F, G;
  double Eu, Ev, Fu, Fv, Gu, Gv;
  double Evv, Fuv, Guu;
};

inline double brioschi(const MetricJet2& m) {
  Eigen::Matrix3d a, b;
  a << -0.5 * m.Evv + m.Fuv - 0.5 * m.Guu, 0.5 * m.Eu, m.Fu - 0.5 * m.Ev,  //
      m.Fv - 0.5 * m.Gu, m.E, m.F,                                         //
      0.5 * m.Gv, m.F, m.G;
  b << 0.0, 0.5 * m.Ev, 0.5 * m.Gu,  //
      0.5 * m.Ev, m.E, m.F,          //
      0.5 * m.Gu, m.F, m.G;
  const double det = m.E * m.G - m.F * m.F;
  return (a.determinant() - b.determinant()) / (det * det);
}

/// Curvature of the fiber's analytic metric at x, differentiating with a
/// fourth-order central stencil of step `step` (independent of the grid).
template <int N>
double analytic_gauss_curvature(const Fiber<N>& fib, const Vec<N>& x, double step = 1e-3) {
  static_assert(N == 2);
  auto comp = [&](const Vec<N>& y) {
    const auto g = fib.geometry_at(y).metric;
    return Eigen::Vector3d(g(0, 0), g(0, 1), g(1, 1));
  };
  auto shift = [&](double du, double dv) {
    Vec<N> y = x;
    y[0] += du;
    y[1] += dv;
    return comp(y);
  };
  const double h = step;
  auto d1 = [&](int axis) {
    auto p = [&](double s) { return axis == 0 ? shift(s, 0) : shift(0, s); };
    return Eigen::Vector3d((-p(2 * h) + 8 * p(h) - 8 * p(-h) + p(-2 * h)) / (12 * h));
  };
  auto d2 = [&](int axis) {
    auto p = [&](double s) { return axis == 0 ? shift(s, 0) : shift(0, s); };
    return Eigen::Vector3d((-p(2 * h) + 16 * p(h) - 30 * p(0) + 16 * p(-h) - p(-2 * h)) / (12 * h * h));
  };
  auto duv = [&]() {
    auto q = [&](double s) {
      return Eigen::Vector3d((-shift(s, 2 * h) + 8 * shift(s, h) - 8 * shift(s, -h) + shift(s, -2 * h)) / (12 * h));
    };
    return Eigen::Vector3d((-q(2 * h) + 8 * q(h) - 8 * q(-h) + q(-2 * h)) / (12 * h));
  };
  const auto c = comp(x);
  const auto cu = d1(0), cv = d1(1), cuu = d2(0), cvv = d2(1), cuv = duv();
  return brioschi({c[0], c[1], c[2], cu[0], cv[0], cu[1], cv[1], cu[2], cv[2], cvv[0], cuv[1], cuu[2]});
}

}  // namespace detail

/// Discrete Gaussian curvature of a 2-dimensional metric field (E, F, G) on a
/// grid, using the grid stencils for all metric derivatives.
inline ScalarField gauss_curvature(const Grid<2>& grid, const ScalarField& E, const ScalarField& F,
                                   const ScalarField& G) {
  const auto dE = differentiate(grid, E);
  const auto dF = differentiate(grid, F);
  const auto dG = differentiate(grid, G);
  ScalarField K(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    K[p] = detail::brioschi({E[p], F[p], G[p], dE.d1[p][0], dE.d1[p][1], dF.d1[p][0], dF.d1[p][1], dG.d1[p][0],
                             dG.d1[p][1], dE.d2[p](1, 1), dF.d2[p](0, 1), dG.d2[p](0, 0)});
  }
  return K;
}

inline ScalarField gauss_curvature(const Grid<2>& grid, const TensorField<2>& metric) {
  ScalarField E(grid.size()), F(grid.size()), G(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    E[p] = metric[p](0, 0);
    F[p] = metric[p](0, 1);
    G[p] = metric[p](1, 1);
  }
  return gauss_curvature(grid, E, F, G);
}

/// Build a fiber. Grid sizes must be >= 16 per axis. Flat tori are accepted
/// for n = 2 and n = 3; curved fibers only for n = 2.
template <int N>
Fiber<N> make_fiber(FiberKind kind, std::array<int, N> sizes, FiberPatch patch = {}) {
  if constexpr (N != 2 && N != 3) {
    throw Error(ErrorKind::UnsupportedDimension, "fiber dimension must be 2 (or 3 for flat tori)");
  }
  if (N != 2 && kind != FiberKind::Torus)
    throw Error(ErrorKind::UnsupportedDimension, to_string(kind) + " fibers are only available for n = 2");
  for (int s : sizes)
    if (s < 16) throw Error(ErrorKind::BadParams, "grid sizes must be >= 16 per axis");

  Fiber<N> fib;
  fib.kind_ = kind;
  fib.patch_ = patch;
  std::array<Axis, N> axes;
  for (int a = 0; a < N; ++a) axes[a] = periodic_axis(sizes[a]);
  switch (kind) {
    case FiberKind::Torus: fib.kappa_ = 0.0; break;
    case FiberKind::SphereBand:
      if (patch.theta0 < 0.2) throw Error(ErrorKind::PoleTooClose, "theta0 must be >= 0.2");
      if (patch.theta0 >= std::numbers::pi / 2) throw Error(ErrorKind::BadParams, "theta0 must be < pi/2");
      fib.kappa_ = 1.0;
      axes[0] = closed_axis(sizes[0], patch.theta0, std::numbers::pi - patch.theta0);
      break;
    case FiberKind::HyperbolicDisk:
      if (!(patch.r_min > 0.0 && patch.r_max > patch.r_min))
        throw Error(ErrorKind::BadParams, "hyperbolic patch needs 0 < r_min < r_max");
      fib.kappa_ = -1.0;
      axes[0] = closed_axis(sizes[0], patch.r_min, patch.r_max);
      break;
  }
  fib.grid_ = Grid<N>(axes);
  fib.points_.resize(fib.grid_.size());
  for (std::size_t p = 0; p < fib.grid_.size(); ++p) {
    const auto x = fib.grid_.coords(p);
    fib.points_[p] = fib.geometry_at(x);
    const Eigen::SelfAdjointEigenSolver<Mat<N>> es(fib.points_[p].metric, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 1e-12))
      throw Error(ErrorKind::BadParams, "fiber metric not positive definite");
  }
  if constexpr (N == 2) {
    // Check the constant-curvature claim with grid-independent derivatives.
    for (std::size_t p = 0; p < fib.grid_.size(); ++p) {
      if (!fib.grid_.is_interior(p, 1)) continue;
      const double K = kind == FiberKind::Torus ? 0.0 : detail::analytic_gauss_curvature(fib, fib.grid_.coords(p));
      const double err = std::abs(K - fib.kappa_);
      if (err > 1e-6 * std::max(1.0, std::abs(fib.kappa_))) {
        std::ostringstream os;
        os << "fiber curvature " << K << " differs from kappa " << fib.kappa_;
        throw Error(ErrorKind::BadParams, os.str());
      }
    }
  }
  return fib;
}

template <int N>
struct FiberCalculus {
  VectorField<N> grad;  ///< contravariant gradient g_P^{ij} d_j f
  TensorField<N> hess;  ///< covariant Hessian d_ij f - Gamma^k_ij d_k f
  ScalarField lap;      ///< g_P^{ij} hess_ij
};

template <int N>
FiberCalculus<N> fiber_calculus(const Fiber<N>& fib, const ScalarField& f) {
  if (f.size() != fib.grid().size()) throw Error(ErrorKind::ShapeMismatch, "field does not match fiber grid");
  const auto d = differentiate(fib.grid(), f);
  FiberCalculus<N> out;
  out.grad.resize(f.size());
  out.hess.resize(f.size());
  out.lap.resize(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) {
    const auto& geo = fib.at(p);
    Mat<N> h = d.d2[p];
    for (int k = 0; k < N; ++k) h -= geo.christoffel[k] * d.d1[p][k];
    h = 0.5 * (h + h.transpose()).eval();
    out.grad[p] = geo.inverse * d.d1[p];
    out.hess[p] = h;
    out.lap[p] = (geo.inverse.cwiseProduct(h)).sum();
  }
  return out;
}

/// Volume-weighted integral of a field over the fiber (fixed row-major order).
template <int N>
double integrate(const Fiber<N>& fib, const ScalarField& f) {
  double acc = 0.0;
  for (std::size_t p = 0; p < f.size(); ++p) acc += f[p] * fib.volume_density(p) * fib.grid().cell_volume(p);
  return acc;
}

}  // namespace grw
