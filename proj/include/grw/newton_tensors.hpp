#pragma once

// Pointwise algebra of the shape operator: elementary symmetric functions S_k,
// normalized k-mean curvatures H_k with binom(n,k) H_k = (-1)^k S_k, and the
// Newton transformations P_k = binom(n,k) H_k I + A P_{k-1}.

#include <Eigen/Core>

#include <array>
#include <cmath>

#include "grw/grid.hpp"

namespace grw {

constexpr double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

/// c_k = (n - k) binom(n, k) = (k + 1) binom(n, k + 1).
constexpr double newton_c(int n, int k) { return (n - k) * binomial(n, k); }

template <int N>
struct NewtonData {
  std::array<double, N + 1> S{};  ///< S_0 .. S_n
  std::array<double, N + 1> H{};  ///< H_0 .. H_n
  std::array<Mat<N>, N + 1> P{};  ///< P_0 .. P_n (P_n vanishes by Cayley-Hamilton)

  /// H_j with H_j = 0 for j > n.
  double h(int j) const { return j >= 0 && j <= N ? H[j] : 0.0; }
};

/// S_k and H_k are read off the characteristic polynomial through the
/// Faddeev-LeVerrier recursion: binom(n,k) H_k = -Tr(A P_{k-1}) / k.
template <int N>
NewtonData<N> newton_tensors(const Mat<N>& A) {
  NewtonData<N> d;
  d.S[0] = 1.0;
  d.H[0] = 1.0;
  d.P[0] = Mat<N>::Identity();
  for (int k = 1; k <= N; ++k) {
    const Mat<N> AP = A * d.P[k - 1];
    const double bH = -AP.trace() / k;  // binom(n,k) H_k = (-1)^k S_k
    d.H[k] = bH / binomial(N, k);
    d.S[k] = (k % 2 == 0) ? bH : -bH;
    d.P[k] = bH * Mat<N>::Identity() + AP;
  }
  return d;
}

/// Elementary symmetric polynomials of a list of numbers (test oracle helper
/// and orientation checks).
template <int N>
std::array<double, N + 1> elementary_symmetric(const Vec<N>& k) {
  std::array<double, N + 1> e{};
  e[0] = 1.0;
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j >= 1; --j) e[j] += k[i] * e[j - 1];
  return e;
}

}  // namespace grw
