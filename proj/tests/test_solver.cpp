#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "grw/solver.hpp"
#include "grw/verify.hpp"
#include "support.hpp"

using namespace grw;

namespace {

ScalarField height(const Grid<2>& g, double t0, double a, int freq = 1) {
  return sample(g, [=](const Vec<2>& x) { return t0 + a * std::sin(freq * x[0]) * std::sin(freq * x[1]); });
}

template <class Fn>
ErrorKind error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::IoError;
}

}  // namespace

TEST(Gmres, MatchesDirectSolve) {
  const int n = 40;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    M(i, i) = 3.0 + 0.1 * i;
    if (i + 1 < n) M(i, i + 1) = -1.0, M(i + 1, i) = -0.5;
  }
  Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(n, -1.0, 2.0);
  const auto out = detail::gmres([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return M * v; }, b, 1e-12, 10, 500);
  const Eigen::VectorXd x = M.partialPivLu().solve(b);
  EXPECT_LT((out.x - x).norm(), 1e-10 * x.norm());
  EXPECT_LE(out.relative_residual, 1e-12);
  const auto zero = detail::gmres([&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return M * v; },
                                  Eigen::VectorXd::Zero(n), 1e-12, 10, 500);
  EXPECT_EQ(zero.x.norm(), 0.0);
}

TEST(Solver, SliceIsAFixedPoint) {
  const auto fib = test::torus<2>(32);
  const auto w = test::linear_warp();
  for (int k : {1, 2}) {
    SolveOptions o;
    o.k = k;
    o.target = std::pow(0.5, k);
    const auto r = solve_constant_Hk<2>(*fib, w, ScalarField(fib->grid().size(), 2.0), o);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_LE(r.final_residual, 1e-12);
    EXPECT_EQ(r.slice_distance, 0.0);
  }
}

TEST(Solver, PerturbedSlicesRelaxToTheSlice) {
  const auto fib = test::torus<2>(32);
  const auto w = test::linear_warp();
  for (int k : {1, 2}) {
    SolveOptions o;
    o.k = k;
    o.target = std::pow(0.5, k);
    const auto r = solve_constant_Hk<2>(*fib, w, height(fib->grid(), 2.0, 0.05), o);
    EXPECT_TRUE(r.converged) << k;
    EXPECT_LE(r.final_residual, 1e-10);
    EXPECT_LE(r.slice_distance, 1e-6);
    EXPECT_LE(r.iterations, 50);
    ASSERT_EQ(r.residual_history.size(), static_cast<std::size_t>(r.iterations + 1));
    for (std::size_t i = 1; i < r.residual_history.size(); ++i)
      EXPECT_LT(r.residual_history[i], r.residual_history[i - 1]);
    double mean = 0.0;
    for (double v : r.u) mean += v;
    mean /= static_cast<double>(r.u.size());
    EXPECT_NEAR(mean, 2.0, 1e-6);  // lambda(t) = 1/t is injective, so H_k fixes the level

    // The computed surface satisfies the pointwise algebraic identities.
    const auto s = build_graph(fib, w, r.u, 2.0);
    const auto b = curvature_bundle(s);
    for (const auto& rep : single_grid_reports(s, algebraic_residuals(s, b)))
      EXPECT_TRUE(rep.pass) << rep.name;
  }
}

TEST(Solver, FailureModes) {
  const auto fib = test::torus<2>(32);
  const auto w = test::linear_warp();
  SolveOptions o;
  o.k = 2;
  o.target = 1.0 / 9.0;
  // A high-frequency wrinkle makes H_2 negative at the saddles of the initial
  // height: the discrete mixed derivative 0.2 (sin 6h / h)^2 exceeds rho rho' = 3.
  try {
    solve_constant_Hk<2>(*fib, w, height(fib->grid(), 3.0, 0.2, 6), o);
    ADD_FAILURE() << "expected LostEllipticity";
  } catch (const SolveError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::LostEllipticity);
    EXPECT_EQ(e.partial().residual_history.size(), 1u);
  }

  o.k = 1;
  o.target = 0.5;
  o.max_iter = 1;
  try {
    solve_constant_Hk<2>(*fib, w, height(fib->grid(), 2.0, 0.2), o);
    ADD_FAILURE() << "expected NonConvergence";
  } catch (const SolveError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonConvergence);
    EXPECT_EQ(e.partial().iterations, 1);
    EXPECT_EQ(e.partial().residual_history.size(), 2u);
    EXPECT_LT(e.partial().residual_history[1], e.partial().residual_history[0]);
  }

  o.max_iter = 200;
  const auto band = make_fiber<2>(FiberKind::SphereBand, {32, 32});
  EXPECT_EQ(error_of([&] { solve_constant_Hk<2>(band, w, ScalarField(band.grid().size(), 2.0), o); }),
            ErrorKind::UnsupportedFiber);
  EXPECT_EQ(error_of([&] { solve_constant_Hk<2>(*fib, w, ScalarField(7, 2.0), o); }), ErrorKind::ShapeMismatch);
  o.k = 3;
  EXPECT_EQ(error_of([&] { solve_constant_Hk<2>(*fib, w, ScalarField(fib->grid().size(), 2.0), o); }),
            ErrorKind::BadParams);
  o.k = 1;
  const auto flat = make_warping(WarpingKind::Exp, {1.0, 0.0}, Interval{});
  EXPECT_EQ(error_of([&] {
              solve_constant_Hk<2>(*fib, flat, sample(fib->grid(), [](const Vec<2>& x) { return 2 * std::sin(x[0]); }), o);
            }),
            ErrorKind::NotSpacelike);
}

TEST(MinMax, SliceAndPerturbedHeights) {
  const auto fib = test::torus<2>(64);
  const auto w = test::linear_warp();
  {
    const auto s = build_graph(fib, w, ScalarField(fib->grid().size(), 2.0));
    const auto d = minmax_diagnostics(s, curvature_bundle(s));
    EXPECT_TRUE(d.ok());
    EXPECT_EQ(d.max.index, 0u);
    EXPECT_NEAR(d.max.lap_h, 0.0, 1e-14);
    EXPECT_NEAR(d.max.calL_sigma, 0.0, 1e-13);
    EXPECT_NEAR(d.max.calL_closed, 0.0, 1e-13);
    EXPECT_NEAR(d.max.H2, 0.25, 1e-14);
    EXPECT_EQ(d.max.theta_plus_one, 0.0);
  }
  {
    const auto u = sample(fib->grid(), [](const Vec<2>& x) { return 2.0 + 0.1 * std::sin(x[0]); });
    const auto s = build_graph(fib, w, u);
    const auto d = minmax_diagnostics(s, curvature_bundle(s));
    const double h = fib->grid().max_spacing();
    EXPECT_NEAR(d.epsilon, 10 * h * h, 1e-15);
    EXPECT_TRUE(d.ok());
    EXPECT_NEAR(d.max.coords[0], test::kPi / 2, 1e-12);
    EXPECT_NEAR(d.min.coords[0], 3 * test::kPi / 2, 1e-12);
    EXPECT_LT(d.max.lap_h, 0.0);
    EXPECT_GT(d.min.lap_h, 0.0);
    EXPECT_NEAR(d.max.lap_h, d.max.lap_h_closed, 1e-3);
    EXPECT_NEAR(d.min.calL_sigma, d.min.calL_closed, 1e-3);
    EXPECT_LT(d.max.grad_norm, 1e-12);
  }
}

TEST(Uniqueness, HypothesisTable) {
  const auto lin = test::linear_warp();
  const auto exp = test::exp_warp();
  const auto cosh = make_warping(WarpingKind::Cosh, {}, Interval{});
  const auto c_lin = check_conditions(lin, Interval{0.5, 4.0}, 0.0, 2);
  const auto c_exp = check_conditions(exp, Interval{-1.0, 1.0}, 0.0, 2);
  const auto c_cosh = check_conditions(cosh, Interval{-1.0, 1.0}, 0.0, 2);

  EXPECT_TRUE(hypothesis_failures(TheoremTag::Thm1, 2, c_lin, true).empty());
  EXPECT_TRUE(hypothesis_failures(TheoremTag::Thm1, 1, c_exp, true).empty());
  EXPECT_TRUE(hypothesis_failures(TheoremTag::Thm1, 2, c_exp, true).empty());
  EXPECT_FALSE(hypothesis_failures(TheoremTag::Thm1, 1, c_lin, false).empty());
  EXPECT_FALSE(hypothesis_failures(TheoremTag::Thm1, 1, c_cosh, true).empty());

  EXPECT_TRUE(hypothesis_failures(TheoremTag::Thm4, 2, c_lin, true).empty());
  EXPECT_EQ(hypothesis_failures(TheoremTag::Thm4, 2, c_exp, true).size(), 1u);  // equality not isolated
  const auto f = hypothesis_failures(TheoremTag::Thm4, 2, c_cosh, true);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_NE(f[0].find("witness t = "), std::string::npos);
  EXPECT_FALSE(hypothesis_failures(TheoremTag::Thm4, 1, c_lin, true).empty());

  EXPECT_TRUE(hypothesis_failures(TheoremTag::Thm5, 1, c_lin, true).empty());
  EXPECT_FALSE(hypothesis_failures(TheoremTag::Thm5, 1, c_exp, true).empty());
  EXPECT_FALSE(hypothesis_failures(TheoremTag::Thm5, 2, c_lin, true).empty());

  EXPECT_TRUE(hypothesis_failures(TheoremTag::Thm6, 2, c_lin, true).empty());
  EXPECT_FALSE(hypothesis_failures(TheoremTag::Thm6, 2, c_cosh, true).empty());

  EXPECT_EQ(parse_theorem_tag("thm6"), TheoremTag::Thm6);
  EXPECT_EQ(to_string(TheoremTag::Thm4), "thm4");
  EXPECT_THROW(parse_theorem_tag("thm2"), Error);
}

TEST(Uniqueness, SeedFieldsAreDeterministicLowModes) {
  const auto g = test::torus<2>(32)->grid();
  const auto a = detail::low_mode_field(g, 3);
  const auto b = detail::low_mode_field(g, 3);
  const auto c = detail::low_mode_field(g, 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_DOUBLE_EQ(test::max_abs(a), 1.0);
  double mean = 0.0;
  for (double v : a) mean += v;
  EXPECT_NEAR(mean / static_cast<double>(a.size()), 0.0, 1e-12);  // no constant mode
  std::mt19937_64 gen(0);
  for (int i = 0; i < 1000; ++i) {
    const double x = detail::unit_uniform(gen);
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
  }
}

TEST(Uniqueness, AssertedRunConvergesToSlice) {
  UniquenessScenario sc;
  sc.sizes = {32, 32};
  sc.k = 1;
  sc.seeds = {1, 2};
  const auto rep = uniqueness_experiment<2>(sc);
  EXPECT_TRUE(rep.hypotheses_hold);
  EXPECT_TRUE(rep.asserted);
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.target, 0.5, 1e-15);
  ASSERT_EQ(rep.runs.size(), 2u);
  for (const auto& r : rep.runs) {
    EXPECT_TRUE(r.converged);
    EXPECT_LE(r.slice_distance, 1e-6);
    EXPECT_DOUBLE_EQ(r.amplitude, 0.05);
  }
  ASSERT_TRUE(rep.minmax.has_value());
  EXPECT_TRUE(rep.minmax->ok());
}

TEST(Uniqueness, ViolatedHypothesesAndNegativeControls) {
  UniquenessScenario sc;
  sc.sizes = {32, 32};
  sc.warping = WarpingKind::Cosh;
  sc.warping_interval = Interval{-1.0, 1.0};
  sc.slab = Interval{-1.0, 1.0};
  sc.k = 2;
  sc.t0 = 0.5;
  sc.seeds = {1};
  sc.theorem = TheoremTag::Thm4;
  try {
    uniqueness_experiment<2>(sc);
    ADD_FAILURE() << "expected HypothesisViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::HypothesisViolation);
    EXPECT_NE(std::string(e.what()).find("witness t = "), std::string::npos);
  }

  sc.k = 1;
  sc.t0 = 0.0;
  sc.theorem = TheoremTag::Thm1;
  sc.negative_control = true;
  const auto rep = uniqueness_experiment<2>(sc);
  EXPECT_FALSE(rep.hypotheses_hold);
  EXPECT_FALSE(rep.asserted);
  EXPECT_TRUE(rep.pass);
  EXPECT_NE(rep.notes.find("negative control"), std::string::npos);
  EXPECT_EQ(rep.runs.size(), 1u);
}
