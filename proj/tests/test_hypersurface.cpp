#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "grw/hypersurface.hpp"
#include "support.hpp"

using namespace grw;
using grw::test::graph;
using grw::test::kPi;

namespace {

ErrorKind build_error(std::function<void()> fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;
}

}  // namespace

TEST(NewtonTensors, MatchElementarySymmetricFunctionsOfEigenvalues) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Mat<3> M;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) M(i, j) = U(gen);
    const Mat<3> A = 0.5 * (M + M.transpose());
    const Vec<3> ev = Eigen::SelfAdjointEigenSolver<Mat<3>>(A).eigenvalues();
    const auto e = elementary_symmetric<3>(ev);
    const auto d = newton_tensors<3>(A);
    for (int k = 0; k <= 3; ++k) {
      EXPECT_NEAR(d.S[k], e[k], 1e-13);
      EXPECT_NEAR(binomial(3, k) * d.H[k], (k % 2 ? -1.0 : 1.0) * e[k], 1e-13);
      EXPECT_NEAR(d.P[k].trace(), newton_c(3, k) * d.H[k], 1e-13);
    }
    EXPECT_LT(d.P[3].norm(), 1e-13);  // Cayley-Hamilton
    EXPECT_LT((d.P[1] - (3.0 * d.H[1] * Mat<3>::Identity() + A)).norm(), 1e-14);
  }
  EXPECT_EQ(newton_c(2, 0), 2.0);
  EXPECT_EQ(newton_c(3, 1), 6.0);
  EXPECT_EQ(newton_c(3, 2), 3.0);
}

TEST(Hypersurface, SliceOfExponentialWarp) {
  const auto fib = test::torus<2>(32);
  const auto w = make_warping(WarpingKind::Exp, {0.5}, Interval{});
  const auto s = graph<2>(fib, w, [](const Vec<2>&) { return 1.5; });
  const auto b = curvature_bundle(s);
  for (std::size_t p = 0; p < s.size(); p += 37) {
    EXPECT_DOUBLE_EQ(s.at(p).theta, -1.0);
    EXPECT_EQ(s.at(p).grad_h_sq, 0.0);
    EXPECT_LT((b.at(p).A + 0.5 * Mat<2>::Identity()).norm(), 1e-15);
    EXPECT_NEAR(b.at(p).newton.H[1], 0.5, 1e-15);
    EXPECT_NEAR(b.at(p).newton.H[2], 0.25, 1e-15);
    EXPECT_TRUE(b.at(p).elliptic);
  }
  EXPECT_TRUE(b.all_elliptic());
  EXPECT_EQ(s.sigma_base(), 1.5);
}

TEST(Hypersurface, OrientationFlipAlternatesSigns) {
  const auto fib = test::torus<3>(16);
  const auto s = graph<3>(fib, test::linear_warp(), [](const Vec<3>& x) {
    return 2.0 + 0.1 * std::sin(x[0]) * std::cos(x[1]) + 0.05 * std::sin(x[2]);
  });
  const auto b = curvature_bundle(s);
  const auto f = flip_orientation(s, b);
  for (std::size_t p = 0; p < s.size(); p += 101)
    for (int k = 0; k <= 3; ++k)
      EXPECT_NEAR(f.at(p).newton.H[k], (k % 2 ? -1.0 : 1.0) * b.at(p).newton.H[k], 1e-14);
}

// Spacelike graphs t = u(x) in Minkowski space (rho = 1 over the flat torus):
// n H_1 = div(Du / sqrt(1 - |Du|^2)) and H_2 = det Hess u / (1 - |Du|^2)^2.
TEST(Hypersurface, MinkowskiGraphAgainstClassicalFormulas) {
  const auto w = make_warping(WarpingKind::Exp, {1.0, 0.0}, Interval{});
  const double a = 0.3;
  for (int m : {64, 128}) {
    const auto fib = test::torus<2>(m);
    const auto s = graph<2>(fib, w, [a](const Vec<2>& x) { return a * std::sin(x[0]) * std::cos(x[1]); });
    const auto b = curvature_bundle(s);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t p = 0; p < s.size(); ++p) {
      const auto x = fib->grid().coords(p);
      const double ux = a * std::cos(x[0]) * std::cos(x[1]), uy = -a * std::sin(x[0]) * std::sin(x[1]);
      const double uxx = -a * std::sin(x[0]) * std::cos(x[1]), uyy = uxx, uxy = -a * std::cos(x[0]) * std::sin(x[1]);
      const double q = 1.0 - ux * ux - uy * uy;
      const double W = 1.0 / std::sqrt(q);
      const double lap = uxx + uyy;
      const double dhd = ux * ux * uxx + 2 * ux * uy * uxy + uy * uy * uyy;
      const double H1 = 0.5 * (W * lap + W * W * W * dhd);
      const double H2 = (uxx * uyy - uxy * uxy) / (q * q);
      e1 = std::max(e1, std::abs(b.at(p).newton.H[1] - H1));
      e2 = std::max(e2, std::abs(b.at(p).newton.H[2] - H2));
      EXPECT_NEAR(s.at(p).theta, -W, 1e-3);
    }
    EXPECT_LT(e1, m == 64 ? 2e-3 : 5e-4) << m;
    EXPECT_LT(e2, m == 64 ? 2e-3 : 5e-4) << m;
  }
}

TEST(Hypersurface, HeightGradientIdentityHoldsPointwise) {
  const auto fib = test::fiber_ptr<2>(FiberKind::SphereBand, {48, 48});
  const auto w = make_warping(WarpingKind::Cosh, {}, Interval{});
  const auto s = graph<2>(fib, w, [](const Vec<2>& x) { return 0.8 + 0.2 * std::cos(x[0]) * std::sin(x[1]); });
  for (std::size_t p = 0; p < s.size(); ++p) {
    const auto& q = s.at(p);
    EXPECT_LE(q.theta, -1.0);
    EXPECT_NEAR(q.grad_h_sq, q.theta * q.theta - 1.0, 1e-12 * q.theta * q.theta);
  }
}

TEST(Hypersurface, RejectsInvalidGraphs) {
  const auto fib = test::torus<2>(32);
  const auto flat = make_warping(WarpingKind::Exp, {1.0, 0.0}, Interval{});
  EXPECT_EQ(build_error([&] { graph<2>(fib, flat, [](const Vec<2>& x) { return 2.0 * std::sin(x[0]); }); }),
            ErrorKind::NotSpacelike);
  EXPECT_EQ(build_error([&] { graph<2>(fib, test::linear_warp(), [](const Vec<2>&) { return 5.0; }); }),
            ErrorKind::HeightOutOfInterval);
  EXPECT_EQ(build_error([&] { build_graph<2>(fib, flat, ScalarField(10, 0.0)); }), ErrorKind::ShapeMismatch);
  try {
    graph<2>(fib, flat, [](const Vec<2>& x) { return 2.0 * std::sin(x[0]); });
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("coords"), std::string::npos);
  }
}

// Steady-state de Sitter (rho = e^t, flat fiber), de Sitter in global form
// (rho = cosh t, round fiber) and the Milne wedge of Minkowski space
// (rho = t, hyperbolic fiber) have constant ambient curvature 1, 1 and 0.
TEST(AmbientCurvature, SpaceFormsHaveConstantCurvature) {
  struct Case {
    std::shared_ptr<const Fiber<2>> fib;
    WarpingFunction w;
    double c;
  };
  const std::vector<Case> cases = {
      {test::torus<2>(32), test::exp_warp(), 1.0},
      {test::fiber_ptr<2>(FiberKind::SphereBand, {32, 32}), make_warping(WarpingKind::Cosh, {}, Interval{}), 1.0},
      {test::fiber_ptr<2>(FiberKind::HyperbolicDisk, {32, 32}), test::linear_warp(), 0.0},
  };
  for (const auto& c : cases) {
    const auto s = graph<2>(c.fib, c.w, [](const Vec<2>& x) { return 1.5 + 0.2 * std::sin(x[1]) * std::cos(x[0]); });
    const auto amb = ambient_curvature(s);
    for (std::size_t p = 0; p < s.size(); p += 13) {
      const auto& a = amb.at(p);
      EXPECT_NEAR(a.Kbar[0], c.c, 1e-12);
      EXPECT_NEAR(a.Kbar_split[0], c.c, 1e-12);
      EXPECT_NEAR(a.ric_NN, -2.0 * c.c, 1e-12);  // Ric = n c g and <N,N> = -1
      EXPECT_NEAR(a.scalar, 6.0 * c.c, 1e-12);
      EXPECT_NEAR(a.wedge_sq[0], a.wedge_sq_closed[0], 1e-12);
    }
  }
}

TEST(AmbientCurvature, GaussEquationOnSurfaces) {
  // K_Sigma = Kbar - det A for a spacelike surface (timelike normal).
  const auto fib = test::fiber_ptr<2>(FiberKind::SphereBand, {128, 128});
  const auto w = make_warping(WarpingKind::Cosh, {}, Interval{});
  const auto s = graph<2>(fib, w, [](const Vec<2>& x) { return 0.5 + 0.1 * std::cos(x[0]) * std::cos(x[1]); });
  const auto b = curvature_bundle(s);
  const auto amb = ambient_curvature(s);
  TensorField<2> g(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) g[p] = s.at(p).metric;
  const auto K = gauss_curvature(s.grid(), g);
  double err = 0.0;
  for (std::size_t p = 0; p < s.size(); ++p)
    if (s.grid().is_interior(p, kBoundaryMargin, kBoundaryFraction))
      err = std::max(err, std::abs(K[p] - (amb.at(p).Kbar[0] - b.at(p).A.determinant())));
  EXPECT_LT(err, 1e-3);
}
