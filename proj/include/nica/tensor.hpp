#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nica {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Nondecreasing, 0-based index tuple identifying one unique entry of a symmetric tensor.
using MultiIndex = std::vector<int>;

struct InvalidArgument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double binomial(int n, int k);
std::uint64_t binomial_exact(int n, int k);

// Enumeration of the unique entries of a d-dimensional, order-r symmetric tensor.
// Instances are shared and immutable; obtain them through get().
class IndexSpace {
 public:
  static std::shared_ptr<const IndexSpace> get(int d, int r);

  int dim() const { return d_; }
  int order() const { return r_; }
  std::size_t size() const { return indices_.size(); }
  std::size_t full_size() const { return full_size_; }

  const MultiIndex& index(std::size_t u) const { return indices_[u]; }
  double multiplicity(std::size_t u) const { return multiplicity_[u]; }
  // Rank of a tuple given in any order.
  std::size_t rank(std::span<const int> idx) const;
  std::size_t rank_sorted(std::span<const int> idx) const;
  // Row-major offset in the full d^r array of the sorted tuple for unique entry u.
  std::size_t full_offset(std::size_t u) const { return unique_to_full_[u]; }
  // Unique entry holding the value of full offset f.
  std::size_t unique_of_full(std::size_t f) const { return full_to_unique_[f]; }

  IndexSpace(int d, int r);

 private:
  int d_;
  int r_;
  std::size_t full_size_;
  std::vector<MultiIndex> indices_;
  std::vector<double> multiplicity_;
  std::vector<std::size_t> unique_to_full_;
  std::vector<std::uint32_t> full_to_unique_;
  // count_[m][l] = number of nondecreasing tuples of length l over m values
  std::vector<std::vector<std::size_t>> count_;
};

class SymmetricTensor {
 public:
  SymmetricTensor() = default;
  SymmetricTensor(int d, int r);
  explicit SymmetricTensor(std::shared_ptr<const IndexSpace> space);

  int dim() const { return space_->dim(); }
  int order() const { return space_->order(); }
  std::size_t size() const { return values_.size(); }
  const IndexSpace& space() const { return *space_; }
  const std::shared_ptr<const IndexSpace>& space_ptr() const { return space_; }

  double& operator[](std::size_t u) { return values_[u]; }
  double operator[](std::size_t u) const { return values_[u]; }
  double at(std::span<const int> idx) const { return values_[space_->rank(idx)]; }
  double at(std::initializer_list<int> idx) const;
  void set(std::span<const int> idx, double v) { values_[space_->rank(idx)] = v; }
  void set(std::initializer_list<int> idx, double v);

  const MultiIndex& index(std::size_t u) const { return space_->index(u); }
  double multiplicity(std::size_t u) const { return space_->multiplicity(u); }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  // Row-major expansion to all d^r entries.
  std::vector<double> full() const;
  static SymmetricTensor from_full(int d, int r, const std::vector<double>& full);

  // Frobenius norm of the full tensor (orthogonally invariant).
  double norm() const;
  double max_abs() const;

  // Order-2 tensors as matrices.
  Matrix to_matrix() const;
  static SymmetricTensor from_matrix(const Matrix& m);

 private:
  std::shared_ptr<const IndexSpace> space_;
  std::vector<double> values_;
};

// Row-major dense tensor with arbitrary mode sizes.
struct DenseTensor {
  std::vector<int> shape;
  std::vector<double> data;

  DenseTensor() = default;
  explicit DenseTensor(std::vector<int> shape_);
  static DenseTensor from_symmetric(const SymmetricTensor& t);
  std::size_t offset(std::span<const int> idx) const;
  double at(std::span<const int> idx) const { return data[offset(idx)]; }
};

// (A . T)_i = sum_j prod_k A(i_k, j_k) T_j; A is m x d and the result has dimension m.
SymmetricTensor multilinear_apply(const Matrix& A, const SymmetricTensor& T);

// Applies mats[k] along mode k; mats[k] must have T.shape[k] columns.
DenseTensor multilinear_apply(const std::vector<Matrix>& mats, const DenseTensor& T);

// Contracts a single mode of T with M (M has T.shape[mode] columns).
DenseTensor contract_mode(const DenseTensor& T, const Matrix& M, int mode);

// f_T(x) = <T, x^{(r)}>.
double associated_polynomial(const SymmetricTensor& T, const Vector& x);

// Values at the given unique entries.
Vector gather(const SymmetricTensor& T, std::span<const std::size_t> ranks);

// Derivative of vec(A) -> (A . T) at the listed unique output entries.
// Column j*d + i holds the derivative with respect to A(i, j) (column-major vec).
Matrix action_jacobian(const Matrix& A, const SymmetricTensor& T, std::span<const std::size_t> ranks);

std::string format_index(const MultiIndex& idx);  // 1-based, e.g. "122"

}  // namespace nica
