#pragma once

// Structured tensor-product grids and second-order finite-difference stencils.
//
// Periodic axes use central stencils everywhere. Non-periodic axes use central
// stencils in the interior and second-order one-sided stencils on the two
// outermost nodes, so every derivative field is O(h^2) at every node. Nested
// differentiation degrades accuracy only in a thin boundary ring, which callers
// exclude through `Grid::is_interior(idx, margin)`.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "grw/errors.hpp"

namespace grw {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
template <int N>
using Mat = Eigen::Matrix<double, N, N>;

using ScalarField = std::vector<double>;
template <int N>
using VectorField = std::vector<Vec<N>>;
template <int N>
using TensorField = std::vector<Mat<N>>;

struct Axis {
  int size = 0;
  double origin = 0.0;
  double spacing = 1.0;
  bool periodic = true;

  double coord(int i) const { return origin + spacing * i; }
};

/// Boundary ring width excluded from residual norms on non-periodic axes.
inline constexpr int kBoundaryMargin = 4;
/// Residuals of discretized identities are measured on a fixed physical
/// region: this fraction of every open axis is excluded at each end.
inline constexpr double kBoundaryFraction = 0.1;

template <int N>
class Grid {
 public:
  using Index = std::array<int, N>;

  Grid() = default;
  explicit Grid(std::array<Axis, N> axes) : axes_(axes) {
    std::size_t total = 1;
    for (int a = N - 1; a >= 0; --a) {
      strides_[a] = total;
      total *= static_cast<std::size_t>(axes_[a].size);
    }
    size_ = total;
  }

  const Axis& axis(int a) const { return axes_[a]; }
  const std::array<Axis, N>& axes() const { return axes_; }
  std::size_t size() const { return size_; }
  std::size_t stride(int a) const { return strides_[a]; }

  /// Largest spacing over all axes; the refinement parameter for order fits.
  double max_spacing() const {
    double h = 0.0;
    for (const auto& ax : axes_) h = std::max(h, ax.spacing);
    return h;
  }

  Index unflatten(std::size_t p) const {
    Index idx{};
    for (int a = 0; a < N; ++a) {
      idx[a] = static_cast<int>(p / strides_[a]);
      p %= strides_[a];
    }
    return idx;
  }

  std::size_t flatten(const Index& idx) const {
    std::size_t p = 0;
    for (int a = 0; a < N; ++a) p += strides_[a] * static_cast<std::size_t>(idx[a]);
    return p;
  }

  /// Neighbour of p shifted by `offset` along axis a (wrapping on periodic axes).
  std::size_t shifted(std::size_t p, int a, int offset) const {
    const int n = axes_[a].size;
    const int i = static_cast<int>((p / strides_[a]) % static_cast<std::size_t>(n));
    int j = i + offset;
    if (axes_[a].periodic) j = ((j % n) + n) % n;
    return p + static_cast<std::size_t>(j - i) * strides_[a];
  }

  Vec<N> coords(std::size_t p) const {
    const Index idx = unflatten(p);
    Vec<N> x;
    for (int a = 0; a < N; ++a) x[a] = axes_[a].coord(idx[a]);
    return x;
  }

  /// Layers excluded at each end of open axis a: at least `margin` nodes and
  /// at least `fraction` of the axis length.
  int excluded_layers(int a, int margin, double fraction) const {
    return std::max(margin, static_cast<int>(std::ceil(fraction * (axes_[a].size - 1))));
  }

  bool is_interior(std::size_t p, int margin = kBoundaryMargin, double fraction = 0.0) const {
    const Index idx = unflatten(p);
    for (int a = 0; a < N; ++a) {
      if (axes_[a].periodic) continue;
      const int m = excluded_layers(a, margin, fraction);
      if (idx[a] < m || idx[a] >= axes_[a].size - m) return false;
    }
    return true;
  }

  bool fully_periodic() const {
    for (const auto& ax : axes_)
      if (!ax.periodic) return false;
    return true;
  }

  /// Volume weight of a node in the coordinate measure (trapezoid on open axes).
  double cell_volume(std::size_t p) const {
    const Index idx = unflatten(p);
    double v = 1.0;
    for (int a = 0; a < N; ++a) {
      double w = axes_[a].spacing;
      if (!axes_[a].periodic && (idx[a] == 0 || idx[a] == axes_[a].size - 1)) w *= 0.5;
      v *= w;
    }
    return v;
  }

 private:
  std::array<Axis, N> axes_{};
  std::array<std::size_t, N> strides_{};
  std::size_t size_ = 0;
};

/// Uniform periodic axis on [0, 2*pi).
inline Axis periodic_axis(int n) {
  return Axis{n, 0.0, 2.0 * std::numbers::pi / n, true};
}

/// Closed axis with n nodes spanning [lo, hi] inclusive.
inline Axis closed_axis(int n, double lo, double hi) {
  return Axis{n, lo, (hi - lo) / (n - 1), false};
}

namespace detail {

struct Stencil {
  std::array<int, 4> offset{};
  std::array<double, 4> weight{};
  int count = 0;
};

inline Stencil first_stencil(const Axis& ax, int i) {
  const double h = ax.spacing;
  if (ax.periodic || (i > 0 && i < ax.size - 1))
    return {{-1, 1, 0, 0}, {-0.5 / h, 0.5 / h, 0, 0}, 2};
  if (i == 0) return {{0, 1, 2, 0}, {-1.5 / h, 2.0 / h, -0.5 / h, 0}, 3};
  return {{0, -1, -2, 0}, {1.5 / h, -2.0 / h, 0.5 / h, 0}, 3};
}

inline Stencil second_stencil(const Axis& ax, int i) {
  const double h2 = ax.spacing * ax.spacing;
  if (ax.periodic || (i > 0 && i < ax.size - 1))
    return {{-1, 0, 1, 0}, {1.0 / h2, -2.0 / h2, 1.0 / h2, 0}, 3};
  if (i == 0) return {{0, 1, 2, 3}, {2.0 / h2, -5.0 / h2, 4.0 / h2, -1.0 / h2}, 4};
  return {{0, -1, -2, -3}, {2.0 / h2, -5.0 / h2, 4.0 / h2, -1.0 / h2}, 4};
}

}  // namespace detail

/// Coordinate first and second derivatives of a scalar field.
template <int N>
struct Derivatives {
  VectorField<N> d1;
  TensorField<N> d2;
};

template <int N>
Derivatives<N> differentiate(const Grid<N>& grid, const ScalarField& f) {
  if (f.size() != grid.size()) throw Error(ErrorKind::ShapeMismatch, "field size does not match grid");
  Derivatives<N> out;
  out.d1.resize(grid.size());
  out.d2.resize(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto idx = grid.unflatten(p);
    std::array<detail::Stencil, N> s1;
    for (int a = 0; a < N; ++a) s1[a] = detail::first_stencil(grid.axis(a), idx[a]);
    Vec<N> g;
    Mat<N> h;
    for (int a = 0; a < N; ++a) {
      double acc = 0.0;
      for (int m = 0; m < s1[a].count; ++m) acc += s1[a].weight[m] * f[grid.shifted(p, a, s1[a].offset[m])];
      g[a] = acc;
      const auto s2 = detail::second_stencil(grid.axis(a), idx[a]);
      acc = 0.0;
      for (int m = 0; m < s2.count; ++m) acc += s2.weight[m] * f[grid.shifted(p, a, s2.offset[m])];
      h(a, a) = acc;
    }
    for (int a = 0; a < N; ++a) {
      for (int b = a + 1; b < N; ++b) {
        double acc = 0.0;
        for (int m = 0; m < s1[a].count; ++m) {
          const std::size_t q = grid.shifted(p, a, s1[a].offset[m]);
          for (int l = 0; l < s1[b].count; ++l)
            acc += s1[a].weight[m] * s1[b].weight[l] * f[grid.shifted(q, b, s1[b].offset[l])];
        }
        h(a, b) = acc;
        h(b, a) = acc;
      }
    }
    out.d1[p] = g;
    out.d2[p] = h;
  }
  return out;
}

/// Coordinate gradient only.
template <int N>
VectorField<N> gradient(const Grid<N>& grid, const ScalarField& f) {
  if (f.size() != grid.size()) throw Error(ErrorKind::ShapeMismatch, "field size does not match grid");
  VectorField<N> out(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto idx = grid.unflatten(p);
    for (int a = 0; a < N; ++a) {
      const auto s = detail::first_stencil(grid.axis(a), idx[a]);
      double acc = 0.0;
      for (int m = 0; m < s.count; ++m) acc += s.weight[m] * f[grid.shifted(p, a, s.offset[m])];
      out[p][a] = acc;
    }
  }
  return out;
}

/// Sample a callable f(Vec<N>) at every grid node.
template <int N, class F>
ScalarField sample(const Grid<N>& grid, F&& f) {
  ScalarField out(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) out[p] = f(grid.coords(p));
  return out;
}

/// Summary of a residual field over the interior nodes; reductions run in
/// flat row-major order so results are bitwise reproducible.
struct FieldNorms {
  double max_abs = 0.0;
  double rms = 0.0;
  double min_value = 0.0;
  std::size_t argmax = 0;
  std::size_t argmin = 0;
  std::size_t count = 0;
};

template <int N>
FieldNorms field_norms(const Grid<N>& grid, const ScalarField& r, int margin = kBoundaryMargin) {
  FieldNorms n;
  n.min_value = INFINITY;
  double sum_sq = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (!grid.is_interior(p, margin)) continue;
    const double v = r[p];
    if (!(std::abs(v) <= n.max_abs)) {
      n.max_abs = std::abs(v);
      n.argmax = p;
    }
    if (v < n.min_value) {
      n.min_value = v;
      n.argmin = p;
    }
    sum_sq += v * v;
    ++n.count;
  }
  n.rms = n.count ? std::sqrt(sum_sq / static_cast<double>(n.count)) : 0.0;
  return n;
}

}  // namespace grw
