#pragma once

// Shared builders for the test binaries.

#include <array>
#include <cmath>
#include <memory>
#include <numbers>

#include "grw/hypersurface.hpp"

namespace grw::test {

inline constexpr double kPi = std::numbers::pi;

template <int N>
std::shared_ptr<const Fiber<N>> fiber_ptr(FiberKind kind, std::array<int, N> sizes, FiberPatch patch = {}) {
  return std::make_shared<const Fiber<N>>(make_fiber<N>(kind, sizes, patch));
}

template <int N>
std::shared_ptr<const Fiber<N>> torus(int m) {
  std::array<int, N> s;
  s.fill(m);
  return fiber_ptr<N>(FiberKind::Torus, s);
}

/// Graph of x -> f(x) over the fiber.
template <int N, class F>
GraphHypersurface<N> graph(std::shared_ptr<const Fiber<N>> fib, const WarpingFunction& w, F&& f,
                           std::optional<double> base = std::nullopt) {
  auto u = sample(fib->grid(), std::forward<F>(f));
  return build_graph(fib, w, std::move(u), base);
}

inline WarpingFunction exp_warp() { return make_warping(WarpingKind::Exp, {}, Interval{-INFINITY, INFINITY}); }
inline WarpingFunction linear_warp() { return make_warping(WarpingKind::Linear, {}, Interval{0.5, 4.0}); }

inline double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace grw::test
