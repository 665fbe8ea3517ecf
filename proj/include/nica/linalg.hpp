#pragma once

#include "nica/tensor.hpp"

#include <random>
#include <vector>

namespace nica {

using Rng = std::mt19937_64;

// Independent stream for (seed, index); used for per-replicate and per-draw randomness.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

// All 2^d d! signed permutation matrices, d <= 6.
std::vector<Matrix> signed_permutations(int d);
bool is_signed_permutation(const Matrix& P, double tol = 1e-8);

// Haar-distributed orthogonal matrix.
Matrix random_orthogonal(int d, Rng& rng);

double condition_number(const Matrix& A);

// Inverse symmetric square root of a symmetric positive definite matrix.
Matrix inverse_sqrt_spd(const Matrix& S);

// Column-major vec and its inverse.
Vector vec(const Matrix& A);
Matrix unvec(const Vector& v, int rows);

}  // namespace nica
