#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "grw/fiber.hpp"

using namespace grw;

namespace {

constexpr double kPi = std::numbers::pi;

// Largest |f - g| over nodes away from open edges.
template <int N>
double interior_error(const Grid<N>& grid, const ScalarField& f, const ScalarField& g) {
  double m = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p)
    if (grid.is_interior(p, kBoundaryMargin, kBoundaryFraction)) m = std::max(m, std::abs(f[p] - g[p]));
  return m;
}

template <int N>
ErrorKind thrown_kind(FiberKind kind, std::array<int, N> sizes, FiberPatch patch = {}) {
  try {
    make_fiber<N>(kind, sizes, patch);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;
}

}  // namespace

TEST(Fiber, TorusIsFlatAndPeriodic) {
  const auto f = make_fiber<2>(FiberKind::Torus, {32, 48});
  EXPECT_EQ(f.kappa(), 0.0);
  EXPECT_TRUE(f.grid().fully_periodic());
  EXPECT_NEAR(f.grid().axis(1).spacing, 2 * kPi / 48, 1e-15);
  EXPECT_TRUE(f.at(17).metric.isIdentity());
  EXPECT_NEAR(integrate(f, ScalarField(f.grid().size(), 1.0)), 4 * kPi * kPi, 1e-12);

  const auto t3 = make_fiber<3>(FiberKind::Torus, {16, 16, 16});
  EXPECT_EQ(t3.grid().size(), 4096u);
}

TEST(Fiber, RejectsBadConfigurations) {
  EXPECT_EQ(thrown_kind<2>(FiberKind::Torus, {8, 32}), ErrorKind::BadParams);
  EXPECT_EQ(thrown_kind<2>(FiberKind::SphereBand, {32, 32}, FiberPatch{0.1, 0.5, 1.5}), ErrorKind::PoleTooClose);
  EXPECT_EQ(thrown_kind<2>(FiberKind::HyperbolicDisk, {32, 32}, FiberPatch{0.3, 1.5, 1.0}), ErrorKind::BadParams);
  EXPECT_EQ(thrown_kind<3>(FiberKind::SphereBand, {16, 16, 16}), ErrorKind::UnsupportedDimension);
  EXPECT_EQ(thrown_kind<3>(FiberKind::HyperbolicDisk, {16, 16, 16}), ErrorKind::UnsupportedDimension);
}

TEST(Fiber, SphereBandGeometry) {
  const auto f = make_fiber<2>(FiberKind::SphereBand, {64, 64}, FiberPatch{0.3});
  EXPECT_EQ(f.kappa(), 1.0);
  EXPECT_FALSE(f.grid().axis(0).periodic);
  EXPECT_NEAR(f.grid().axis(0).origin, 0.3, 1e-15);
  const std::size_t p = f.grid().flatten({20, 5});
  const double th = f.grid().coords(p)[0];
  EXPECT_NEAR(f.at(p).metric(1, 1), std::sin(th) * std::sin(th), 1e-15);
  EXPECT_NEAR(f.at(p).christoffel[0](1, 1), -std::sin(th) * std::cos(th), 1e-15);
  EXPECT_NEAR(f.at(p).christoffel[1](0, 1), std::cos(th) / std::sin(th), 1e-14);
  EXPECT_EQ(f.at(p).christoffel[1](0, 1), f.at(p).christoffel[1](1, 0));
  // Area of the band between the polar caps is 4 pi cos(theta0).
  EXPECT_NEAR(integrate(f, ScalarField(f.grid().size(), 1.0)), 4 * kPi * std::cos(0.3), 2e-3);
}

TEST(Fiber, DiscreteGaussCurvatureConvergesToKappa) {
  for (auto kind : {FiberKind::SphereBand, FiberKind::HyperbolicDisk}) {
    double prev = 0.0;
    for (int m : {32, 64}) {
      const auto f = make_fiber<2>(kind, {m, m});
      ScalarField E(f.grid().size()), F(f.grid().size()), G(f.grid().size());
      for (std::size_t p = 0; p < f.grid().size(); ++p) {
        E[p] = f.at(p).metric(0, 0);
        F[p] = f.at(p).metric(0, 1);
        G[p] = f.at(p).metric(1, 1);
      }
      const auto K = gauss_curvature(f.grid(), E, F, G);
      const double err = interior_error(f.grid(), K, ScalarField(K.size(), f.kappa()));
      EXPECT_LT(err, 2e-2) << to_string(kind) << " m=" << m;
      if (m == 64) EXPECT_GT(prev / err, 3.0) << to_string(kind);
      prev = err;
    }
  }
}

TEST(Fiber, LaplacianEigenfunctions) {
  // Torus: sin x cos 2y is an eigenvector of the central-difference Laplacian
  // with symbol -(2 - 2 cos h)/h^2 - (2 - 2 cos 2h)/h^2.
  {
    const auto f = make_fiber<2>(FiberKind::Torus, {64, 64});
    const auto u = sample(f.grid(), [](const Vec<2>& x) { return std::sin(x[0]) * std::cos(2 * x[1]); });
    const auto c = fiber_calculus(f, u);
    const double h = f.grid().axis(0).spacing;
    const double symbol = -(2 - 2 * std::cos(h)) / (h * h) - (2 - 2 * std::cos(2 * h)) / (h * h);
    ScalarField expect(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) expect[p] = symbol * u[p];
    EXPECT_LT(interior_error(f.grid(), c.lap, expect), 1e-10);
    EXPECT_NEAR(symbol, -5.0, 2e-2);
  }
  // Unit sphere: cos(theta) is a first spherical harmonic, Lap = -2 cos(theta).
  {
    const auto f = make_fiber<2>(FiberKind::SphereBand, {128, 64});
    const auto u = sample(f.grid(), [](const Vec<2>& x) { return std::cos(x[0]); });
    const auto c = fiber_calculus(f, u);
    ScalarField expect(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) expect[p] = -2.0 * u[p];
    EXPECT_LT(interior_error(f.grid(), c.lap, expect), 1e-3);
  }
  // Hyperbolic plane: cosh(r) satisfies Lap = 2 cosh(r).
  {
    const auto f = make_fiber<2>(FiberKind::HyperbolicDisk, {128, 64});
    const auto u = sample(f.grid(), [](const Vec<2>& x) { return std::cosh(x[0]); });
    const auto c = fiber_calculus(f, u);
    ScalarField expect(u.size());
    for (std::size_t p = 0; p < u.size(); ++p) expect[p] = 2.0 * u[p];
    EXPECT_LT(interior_error(f.grid(), c.lap, expect), 1e-3);
  }
}

TEST(Fiber, CovariantHessianOfDistanceFunction) {
  // On the sphere Hess(theta) = sin(theta) cos(theta) dphi^2; theta is linear in the chart, so stencils are exact.
  const auto f = make_fiber<2>(FiberKind::SphereBand, {64, 32});
  const auto u = sample(f.grid(), [](const Vec<2>& x) { return x[0]; });
  const auto c = fiber_calculus(f, u);
  for (std::size_t p = 0; p < u.size(); p += 97) {
    if (!f.grid().is_interior(p)) continue;
    const double th = f.grid().coords(p)[0];
    EXPECT_NEAR(c.hess[p](0, 0), 0.0, 1e-10);
    EXPECT_NEAR(c.hess[p](1, 1), std::sin(th) * std::cos(th), 1e-10);
    EXPECT_NEAR(c.grad[p][0], 1.0, 1e-10);
  }
  EXPECT_THROW(fiber_calculus(f, ScalarField(3, 0.0)), Error);
}
