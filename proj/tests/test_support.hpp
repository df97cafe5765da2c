#pragma once

#include <random>

#include "olp/numerics.hpp"

namespace olp::test {

inline MatrixXd random_matrix(int m, int n, std::mt19937_64& rng, double scale = 5.0) {
  std::uniform_real_distribution<double> unif(-scale, scale);
  MatrixXd A(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = unif(rng);
  return A;
}

inline VectorXd random_simplex_point(int n, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = expo(rng);
  return VectorXd(v / v.sum());
}

}  // namespace olp::test
