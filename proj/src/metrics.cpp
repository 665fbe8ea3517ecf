#include "nica/metrics.hpp"

#include "nica/linalg.hpp"

#include <cmath>
#include <limits>

namespace nica {

namespace {

Matrix checked_inverse(const Matrix& A) {
  if (A.rows() != A.cols()) throw InvalidArgument("matrix must be square");
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible()) throw InvalidArgument("matrix is singular");
  return lu.inverse();
}

Matrix greedy_assignment(const Matrix& C) {
  const Eigen::Index d = C.rows();
  Matrix Q = Matrix::Zero(d, d);
  std::vector<bool> row_used(d, false), col_used(d, false);
  for (Eigen::Index step = 0; step < d; ++step) {
    double best = -1.0;
    Eigen::Index bi = 0, bj = 0;
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        if (!row_used[i] && !col_used[j] && std::abs(C(i, j)) > best) {
          best = std::abs(C(i, j));
          bi = i;
          bj = j;
        }
    row_used[bi] = col_used[bj] = true;
    Q(bi, bj) = C(bi, bj) < 0 ? -1.0 : 1.0;
  }
  return Q;
}

}  // namespace

FrobeniusError frobenius_error_detail(const Matrix& A_hat, const Matrix& A0) {
  if (A_hat.rows() != A0.rows() || A_hat.cols() != A0.cols()) throw InvalidArgument("matrix shapes differ");
  const Eigen::Index d = A0.rows();
  Matrix Ainv = checked_inverse(A_hat);
  checked_inverse(A0);
  const Matrix I = Matrix::Identity(d, d);
  const double scale = 1.0 / static_cast<double>(d * d);
  FrobeniusError out;
  if (d > 6) {
    out.exact = false;
    out.Q = greedy_assignment(A_hat * A0.inverse());
    out.value = scale * (Ainv * out.Q * A0 - I).norm();
    return out;
  }
  out.value = std::numeric_limits<double>::infinity();
  for (const auto& Q : signed_permutations(static_cast<int>(d))) {
    double v = scale * (Ainv * Q * A0 - I).norm();
    if (v < out.value) {
      out.value = v;
      out.Q = Q;
    }
  }
  return out;
}

double frobenius_error(const Matrix& A_hat, const Matrix& A0) { return frobenius_error_detail(A_hat, A0).value; }

double amari_index(const Matrix& M) {
  const Eigen::Index d = M.rows();
  if (d != M.cols() || d == 0) throw InvalidArgument("matrix must be square");
  Matrix a = M.cwiseAbs();
  double rows = 0.0, cols = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) rows += a.row(i).sum() / a.row(i).maxCoeff() - 1.0;
  for (Eigen::Index j = 0; j < d; ++j) cols += a.col(j).sum() / a.col(j).maxCoeff() - 1.0;
  return (rows + cols) / (2.0 * static_cast<double>(d));
}

double amari_error(const Matrix& A_hat, const Matrix& A0) {
  if (A_hat.rows() != A0.rows() || A_hat.cols() != A0.cols()) throw InvalidArgument("matrix shapes differ");
  return amari_index(A0 * checked_inverse(A_hat));
}

}  // namespace nica
