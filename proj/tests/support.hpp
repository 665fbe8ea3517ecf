#pragma once

#include "nica/linalg.hpp"
#include "nica/partitions.hpp"
#include "nica/tensor.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing {

using nica::Matrix;
using nica::Rng;
using nica::SymmetricTensor;
using nica::Vector;

inline Matrix random_matrix(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> z;
  Matrix M(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) M(i, j) = z(rng);
  return M;
}

inline SymmetricTensor random_tensor(int d, int r, Rng& rng) {
  std::normal_distribution<double> z;
  SymmetricTensor T(d, r);
  for (auto& v : T.values()) v = z(rng);
  return T;
}

inline SymmetricTensor random_diagonal(int d, int r, Rng& rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  std::bernoulli_distribution sign(0.5);
  SymmetricTensor T(d, r);
  for (int i = 0; i < d; ++i) T.set(std::vector<int>(r, i), sign(rng) ? u(rng) : -u(rng));
  return T;
}

// Random tensor whose nonzero entries sit at indices where every value repeats an even number of times.
inline SymmetricTensor random_reflectional(int d, int r, Rng& rng) {
  std::normal_distribution<double> z;
  SymmetricTensor T(d, r);
  for (std::size_t u = 0; u < T.size(); ++u) {
    std::vector<int> cnt(d, 0);
    for (int v : T.index(u)) ++cnt[v];
    bool even = true;
    for (int c : cnt) even = even && c % 2 == 0;
    if (even) T[u] = z(rng);
  }
  return T;
}

// Calls f on every tuple in {0..d-1}^r.
inline void for_each_tuple(int d, int r, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> t(r, 0);
  while (true) {
    f(t);
    int k = r - 1;
    while (k >= 0 && ++t[k] == d) t[k--] = 0;
    if (k < 0) return;
  }
}

// Literal definition of the multilinear action, summing over all d^r tuples.
inline double brute_action(const std::vector<Matrix>& mats, const SymmetricTensor& T, const std::vector<int>& out) {
  const int d = T.dim(), r = T.order();
  double s = 0.0;
  for_each_tuple(d, r, [&](const std::vector<int>& j) {
    double p = T.at(j);
    for (int k = 0; k < r && p != 0.0; ++k) p *= mats[k](out[k], j[k]);
    s += p;
  });
  return s;
}

// Set partitions of {0..n-1} generated by inserting element k into each existing block or a new one.
inline std::vector<std::vector<std::vector<int>>> partitions_by_insertion(int n) {
  std::vector<std::vector<std::vector<int>>> out{{}};
  for (int k = 0; k < n; ++k) {
    std::vector<std::vector<std::vector<int>>> next;
    for (const auto& p : out) {
      for (std::size_t b = 0; b < p.size(); ++b) {
        auto q = p;
        q[b].push_back(k);
        next.push_back(q);
      }
      auto q = p;
      q.push_back({k});
      next.push_back(q);
    }
    out = std::move(next);
  }
  return out;
}

inline double max_abs_diff(const SymmetricTensor& a, const SymmetricTensor& b) {
  double m = 0.0;
  for (std::size_t u = 0; u < a.size(); ++u) m = std::max(m, std::abs(a[u] - b[u]));
  return m;
}

}  // namespace testing
