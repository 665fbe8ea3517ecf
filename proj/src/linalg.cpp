#include "nica/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nica {

Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x5eedu};
  return Rng(seq);
}

std::vector<Matrix> signed_permutations(int d) {
  if (d < 1 || d > 6) throw InvalidArgument("signed permutation enumeration supports 1 <= d <= 6");
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Matrix> out;
  do {
    for (int mask = 0; mask < (1 << d); ++mask) {
      Matrix P = Matrix::Zero(d, d);
      for (int i = 0; i < d; ++i) P(i, perm[i]) = (mask >> i) & 1 ? -1.0 : 1.0;
      out.push_back(std::move(P));
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

bool is_signed_permutation(const Matrix& P, double tol) {
  if (P.rows() != P.cols()) return false;
  const Eigen::Index d = P.rows();
  std::vector<int> col_hits(d, 0);
  for (Eigen::Index i = 0; i < d; ++i) {
    int hits = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      double a = std::abs(P(i, j));
      if (std::abs(a - 1.0) <= tol) {
        ++hits;
        ++col_hits[j];
      } else if (a > tol) {
        return false;
      }
    }
    if (hits != 1) return false;
  }
  return std::all_of(col_hits.begin(), col_hits.end(), [](int h) { return h == 1; });
}

Matrix random_orthogonal(int d, Rng& rng) {
  std::normal_distribution<double> z;
  Matrix G(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) G(i, j) = z(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  return Q;
}

double condition_number(const Matrix& A) {
  Eigen::JacobiSVD<Matrix> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0.0;
  double smin = s(s.size() - 1);
  if (smin <= 0.0) return std::numeric_limits<double>::infinity();
  return s(0) / smin;
}

Matrix inverse_sqrt_spd(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  const Vector& ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0) throw NumericalError("matrix is not positive definite");
  return es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

Vector vec(const Matrix& A) { return Eigen::Map<const Vector>(A.data(), A.size()); }

Matrix unvec(const Vector& v, int rows) {
  return Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
}

}  // namespace nica
