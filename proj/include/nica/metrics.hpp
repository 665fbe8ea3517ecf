#pragma once

#include "nica/tensor.hpp"

namespace nica {

struct FrobeniusError {
  double value = 0.0;
  Matrix Q;           // minimizing signed permutation
  bool exact = true;  // false when the greedy assignment was used (d > 6)
};

// min over signed permutations Q of ||A_hat^{-1} Q A0 - I||_F / d^2.
FrobeniusError frobenius_error_detail(const Matrix& A_hat, const Matrix& A0);
double frobenius_error(const Matrix& A_hat, const Matrix& A0);

// Amari error of M = A0 A_hat^{-1}: (row term + column term) / (2d).
double amari_error(const Matrix& A_hat, const Matrix& A0);
double amari_index(const Matrix& M);

}  // namespace nica
