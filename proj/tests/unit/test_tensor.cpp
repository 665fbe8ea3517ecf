#include <doctest.h>

#include "nica/restrictions.hpp"
#include "support.hpp"

#include <algorithm>

using namespace nica;
using testing::brute_action;
using testing::random_matrix;
using testing::random_tensor;

TEST_CASE("storage size is the number of unique entries") {
  for (int d = 1; d <= 5; ++d)
    for (int r = 1; r <= 6; ++r) {
      SymmetricTensor T(d, r);
      CHECK(T.size() == binomial_exact(d + r - 1, r));
    }
  CHECK(binomial(10, 3) == 120.0);
  CHECK(binomial(70, 2) == 2415.0);
  CHECK(binomial(3, 5) == 0.0);
}

TEST_CASE("lookup ignores the order of the index tuple") {
  Rng rng = make_stream(11, 0);
  SymmetricTensor T = random_tensor(3, 4, rng);
  testing::for_each_tuple(3, 4, [&](const std::vector<int>& t) {
    std::vector<int> s = t;
    std::sort(s.begin(), s.end());
    CHECK(T.at(t) == T.at(s));
  });
  std::vector<int> a{2, 0, 1, 1}, b{1, 2, 1, 0};
  CHECK(T.at(a) == T.at(b));
}

TEST_CASE("ranks enumerate unique indices in lexicographic order") {
  const auto& space = *IndexSpace::get(3, 3);
  for (std::size_t u = 0; u < space.size(); ++u) {
    CHECK(space.rank_sorted(space.index(u)) == u);
    if (u > 0) CHECK(std::lexicographical_compare(space.index(u - 1).begin(), space.index(u - 1).end(),
                                                  space.index(u).begin(), space.index(u).end()));
  }
}

TEST_CASE("full expansion roundtrip and multiplicity-weighted norm") {
  Rng rng = make_stream(12, 0);
  SymmetricTensor T = random_tensor(3, 3, rng);
  auto full = T.full();
  CHECK(full.size() == 27);
  SymmetricTensor back = SymmetricTensor::from_full(3, 3, full);
  CHECK(testing::max_abs_diff(T, back) == 0.0);
  double ss = 0.0;
  for (double v : full) ss += v * v;
  CHECK(T.norm() == doctest::Approx(std::sqrt(ss)).epsilon(1e-14));
}

TEST_CASE("multilinear action by the identity returns T") {
  Rng rng = make_stream(13, 0);
  for (int d = 1; d <= 4; ++d) {
    SymmetricTensor T = random_tensor(d, 3, rng);
    CHECK(testing::max_abs_diff(multilinear_apply(Matrix::Identity(d, d), T), T) <= 1e-15);
  }
}

TEST_CASE("permutation matrix permutes a diagonal tensor") {
  SymmetricTensor T(3, 3);
  T.set({0, 0, 0}, 1.0);
  T.set({1, 1, 1}, 2.0);
  T.set({2, 2, 2}, 3.0);
  Matrix P = Matrix::Zero(3, 3);
  P(0, 2) = P(1, 0) = P(2, 1) = 1.0;  // row i picks source component
  SymmetricTensor S = multilinear_apply(P, T);
  CHECK(S.at({0, 0, 0}) == 3.0);
  CHECK(S.at({1, 1, 1}) == 1.0);
  CHECK(S.at({2, 2, 2}) == 2.0);
  CHECK(S.max_abs() == 3.0);
  double off = 0.0;
  for (std::size_t u = 0; u < S.size(); ++u) {
    const auto& i = S.index(u);
    if (i.front() != i.back()) off = std::max(off, std::abs(S[u]));
  }
  CHECK(off == 0.0);
}

TEST_CASE("multilinear action matches the brute-force sum over all tuples") {
  Rng rng = make_stream(14, 0);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix A = random_matrix(2, 2, rng);
    SymmetricTensor T = random_tensor(2, 3, rng);
    SymmetricTensor S = multilinear_apply(A, T);
    std::vector<Matrix> mats(3, A);
    for (std::size_t u = 0; u < S.size(); ++u)
      CHECK(S[u] == doctest::Approx(brute_action(mats, T, S.index(u))).epsilon(1e-13));
  }
  // Rectangular A maps into a different dimension.
  Matrix B = random_matrix(3, 2, rng);
  SymmetricTensor T = random_tensor(2, 3, rng);
  SymmetricTensor S = multilinear_apply(B, T);
  CHECK(S.dim() == 3);
  std::vector<Matrix> mats(3, B);
  for (std::size_t u = 0; u < S.size(); ++u)
    CHECK(S[u] == doctest::Approx(brute_action(mats, T, S.index(u))).epsilon(1e-13));
}

TEST_CASE("composition of multilinear actions") {
  Rng rng = make_stream(15, 0);
  for (int d = 1; d <= 4; ++d)
    for (int r = 1; r <= 5; ++r) {
      Matrix A = random_matrix(d, d, rng), B = random_matrix(d, d, rng);
      SymmetricTensor T = random_tensor(d, r, rng);
      SymmetricTensor lhs = multilinear_apply(A * B, T);
      SymmetricTensor rhs = multilinear_apply(A, multilinear_apply(B, T));
      CHECK(testing::max_abs_diff(lhs, rhs) <= 1e-12 * std::max(1.0, lhs.max_abs()));
    }
}

TEST_CASE("general multilinear action") {
  Rng rng = make_stream(16, 0);
  SymmetricTensor T = random_tensor(2, 3, rng);
  DenseTensor D = DenseTensor::from_symmetric(T);

  SUBCASE("identity matrices") {
    DenseTensor R = multilinear_apply(std::vector<Matrix>(3, Matrix::Identity(2, 2)), D);
    CHECK(R.data == D.data);
  }
  SUBCASE("equal matrices agree with the symmetric action") {
    Matrix A = random_matrix(2, 2, rng);
    DenseTensor R = multilinear_apply(std::vector<Matrix>(3, A), D);
    SymmetricTensor S = multilinear_apply(A, T);
    testing::for_each_tuple(2, 3, [&](const std::vector<int>& t) {
      CHECK(R.at(t) == doctest::Approx(S.at(t)).epsilon(1e-13));
    });
  }
  SUBCASE("unit matrix in the first mode") {
    Matrix E = Matrix::Zero(2, 2);
    E(0, 1) = 1.0;
    std::vector<Matrix> mats{E, Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
    DenseTensor R = multilinear_apply(mats, D);
    testing::for_each_tuple(2, 3, [&](const std::vector<int>& t) {
      CHECK(R.at(t) == doctest::Approx(brute_action(mats, T, t)).epsilon(1e-13));
    });
  }
  SUBCASE("dimension mismatch") {
    std::vector<Matrix> mats(3, Matrix::Identity(3, 3));
    CHECK_THROWS_AS(multilinear_apply(mats, D), InvalidArgument);
    CHECK_THROWS_AS(multilinear_apply(Matrix::Identity(3, 3), T), InvalidArgument);
  }
}

TEST_CASE("associated polynomial") {
  SUBCASE("diagonal tensor") {
    SymmetricTensor T(3, 4);
    T.set({0, 0, 0, 0}, 1.5);
    T.set({1, 1, 1, 1}, -2.0);
    T.set({2, 2, 2, 2}, 0.5);
    Vector x(3);
    x << 0.3, -1.2, 2.0;
    double expect = 1.5 * std::pow(0.3, 4) - 2.0 * std::pow(1.2, 4) + 0.5 * std::pow(2.0, 4);
    CHECK(associated_polynomial(T, x) == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("worked example: 1 + 2 + 3*3 + 0 = 12") {
    SymmetricTensor T(2, 3);
    T.set({0, 0, 0}, 1.0);
    T.set({1, 1, 1}, 2.0);
    T.set({0, 0, 1}, 3.0);
    CHECK(associated_polynomial(T, Vector::Ones(2)) == doctest::Approx(12.0));
  }
  SUBCASE("f of the transformed tensor is f at the transposed point") {
    Rng rng = make_stream(17, 0);
    for (int trial = 0; trial < 20; ++trial) {
      int d = 2 + trial % 3, r = 2 + trial % 4;
      Matrix A = random_matrix(d, d, rng);
      SymmetricTensor T = random_tensor(d, r, rng);
      Vector x = random_matrix(d, 1, rng);
      double lhs = associated_polynomial(multilinear_apply(A, T), x);
      double rhs = associated_polynomial(T, A.transpose() * x);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("projection onto pattern coordinates") {
  Rng rng = make_stream(18, 0);
  ZeroPattern I = make_pattern(PatternKind::diagonal, 3, 3);
  SymmetricTensor T = random_tensor(3, 3, rng), S = random_tensor(3, 3, rng);

  SUBCASE("diagonal pattern returns the off-diagonal entries") {
    Vector p = project_onto_pattern(T, I);
    CHECK(p.size() == static_cast<Eigen::Index>(T.size() - 3));
    for (std::size_t k = 0; k < I.size(); ++k) CHECK(p(k) == T.at(I.indices[k]));
  }
  SUBCASE("linearity") {
    SymmetricTensor C(3, 3);
    for (std::size_t u = 0; u < C.size(); ++u) C[u] = 2.5 * T[u] - 0.75 * S[u];
    Vector lhs = project_onto_pattern(C, I);
    Vector rhs = 2.5 * project_onto_pattern(T, I) - 0.75 * project_onto_pattern(S, I);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("tensor vanishing on the pattern") {
    SymmetricTensor D = testing::random_diagonal(3, 3, rng);
    CHECK(project_onto_pattern(D, I).isZero(0.0));
  }
  SUBCASE("worked example under the one-index pattern") {
    SymmetricTensor E(2, 3);
    E.set({0, 0, 0}, 1.0);
    E.set({1, 1, 1}, 2.0);
    E.set({0, 0, 1}, 3.0);
    ZeroPattern J = make_pattern(PatternKind::minimal, 2, 3);
    Vector p = project_onto_pattern(E, J);
    CHECK(p.size() == 1);
    CHECK(p(0) == 0.0);
  }
}

TEST_CASE("action jacobian matches finite differences") {
  Rng rng = make_stream(19, 0);
  const int d = 3, r = 3;
  Matrix A = random_matrix(d, d, rng);
  SymmetricTensor T = random_tensor(d, r, rng);
  std::vector<std::size_t> ranks(T.size());
  for (std::size_t u = 0; u < ranks.size(); ++u) ranks[u] = u;
  Matrix J = action_jacobian(A, T, ranks);
  const double h = 1e-6;
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      Matrix Ap = A, Am = A;
      Ap(i, j) += h;
      Am(i, j) -= h;
      SymmetricTensor P = multilinear_apply(Ap, T), M = multilinear_apply(Am, T);
      for (std::size_t u = 0; u < T.size(); ++u)
        CHECK(J(u, j * d + i) == doctest::Approx((P[u] - M[u]) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("one-based index formatting") {
  CHECK(format_index({0, 1, 1}) == "122");
}
