#include "nica/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

namespace nica {

double binomial(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  if (n <= 60) return static_cast<double>(binomial_exact(n, k));
  if (k <= 60) {
    double b = 1.0;
    for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
    return b;
  }
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

std::uint64_t binomial_exact(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t b = 1;
  for (int i = 1; i <= k; ++i) b = b * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return b;
}

namespace {

constexpr std::size_t kMaxFull = std::size_t{1} << 26;

void enumerate_sorted(int d, int r, MultiIndex& cur, int pos, std::vector<MultiIndex>& out) {
  if (pos == r) {
    out.push_back(cur);
    return;
  }
  int start = pos == 0 ? 0 : cur[pos - 1];
  for (int v = start; v < d; ++v) {
    cur[pos] = v;
    enumerate_sorted(d, r, cur, pos + 1, out);
  }
}

}  // namespace

std::shared_ptr<const IndexSpace> IndexSpace::get(int d, int r) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const IndexSpace>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(d, r);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto sp = std::make_shared<const IndexSpace>(d, r);
  cache.emplace(key, sp);
  return sp;
}

IndexSpace::IndexSpace(int d, int r) : d_(d), r_(r) {
  if (d < 1) throw InvalidArgument("tensor dimension must be at least 1");
  if (r < 1) throw InvalidArgument("tensor order must be at least 1");
  double fs = std::pow(static_cast<double>(d), r);
  if (fs > static_cast<double>(kMaxFull)) throw InvalidArgument("tensor too large: d^r exceeds 2^26");
  full_size_ = static_cast<std::size_t>(std::llround(fs));

  count_.assign(d + 1, std::vector<std::size_t>(r + 1, 0));
  for (int m = 0; m <= d; ++m)
    for (int l = 0; l <= r; ++l) count_[m][l] = m == 0 ? (l == 0 ? 1 : 0) : binomial_exact(m + l - 1, l);

  MultiIndex cur(r, 0);
  enumerate_sorted(d, r, cur, 0, indices_);

  double rfact = std::tgamma(r + 1.0);
  multiplicity_.resize(indices_.size());
  unique_to_full_.resize(indices_.size());
  for (std::size_t u = 0; u < indices_.size(); ++u) {
    const auto& idx = indices_[u];
    double denom = 1.0;
    int run = 1;
    std::size_t off = 0;
    for (int k = 0; k < r; ++k) {
      off = off * d + idx[k];
      if (k > 0 && idx[k] == idx[k - 1]) {
        ++run;
        denom *= run;
      } else {
        run = 1;
      }
    }
    multiplicity_[u] = std::round(rfact / denom);
    unique_to_full_[u] = off;
  }

  full_to_unique_.resize(full_size_);
  std::vector<int> tup(r, 0), sorted(r);
  for (std::size_t f = 0; f < full_size_; ++f) {
    std::size_t rem = f;
    for (int k = r - 1; k >= 0; --k) {
      tup[k] = static_cast<int>(rem % d);
      rem /= d;
    }
    sorted = tup;
    std::sort(sorted.begin(), sorted.end());
    full_to_unique_[f] = static_cast<std::uint32_t>(rank_sorted(sorted));
  }
}

std::size_t IndexSpace::rank_sorted(std::span<const int> idx) const {
  std::size_t rk = 0;
  int prev = 0;
  for (int k = 0; k < r_; ++k) {
    int len = r_ - k - 1;
    for (int v = prev; v < idx[k]; ++v) rk += count_[d_ - v][len];
    prev = idx[k];
  }
  return rk;
}

std::size_t IndexSpace::rank(std::span<const int> idx) const {
  if (static_cast<int>(idx.size()) != r_) throw InvalidArgument("index length does not match tensor order");
  int buf[32];
  std::vector<int> heap;
  int* s = buf;
  if (r_ > 32) {
    heap.resize(r_);
    s = heap.data();
  }
  for (int k = 0; k < r_; ++k) {
    if (idx[k] < 0 || idx[k] >= d_) throw InvalidArgument("tensor index out of range");
    s[k] = idx[k];
  }
  std::sort(s, s + r_);
  return rank_sorted(std::span<const int>(s, r_));
}

SymmetricTensor::SymmetricTensor(int d, int r) : SymmetricTensor(IndexSpace::get(d, r)) {}

SymmetricTensor::SymmetricTensor(std::shared_ptr<const IndexSpace> space)
    : space_(std::move(space)), values_(space_->size(), 0.0) {}

double SymmetricTensor::at(std::initializer_list<int> idx) const {
  return at(std::span<const int>(idx.begin(), idx.size()));
}

void SymmetricTensor::set(std::initializer_list<int> idx, double v) {
  set(std::span<const int>(idx.begin(), idx.size()), v);
}

std::vector<double> SymmetricTensor::full() const {
  std::vector<double> f(space_->full_size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = values_[space_->unique_of_full(i)];
  return f;
}

SymmetricTensor SymmetricTensor::from_full(int d, int r, const std::vector<double>& full) {
  SymmetricTensor t(d, r);
  if (full.size() != t.space().full_size()) throw InvalidArgument("full tensor has wrong size");
  for (std::size_t u = 0; u < t.size(); ++u) t.values_[u] = full[t.space().full_offset(u)];
  return t;
}

double SymmetricTensor::norm() const {
  double s = 0.0;
  for (std::size_t u = 0; u < values_.size(); ++u) s += space_->multiplicity(u) * values_[u] * values_[u];
  return std::sqrt(s);
}

double SymmetricTensor::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

Matrix SymmetricTensor::to_matrix() const {
  if (order() != 2) throw InvalidArgument("to_matrix requires an order-2 tensor");
  int d = dim();
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = at({i, j});
  return m;
}

SymmetricTensor SymmetricTensor::from_matrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidArgument("from_matrix requires a square matrix");
  int d = static_cast<int>(m.rows());
  SymmetricTensor t(d, 2);
  for (std::size_t u = 0; u < t.size(); ++u) {
    const auto& idx = t.index(u);
    t[u] = 0.5 * (m(idx[0], idx[1]) + m(idx[1], idx[0]));
  }
  return t;
}

DenseTensor::DenseTensor(std::vector<int> shape_) : shape(std::move(shape_)) {
  std::size_t n = 1;
  for (int s : shape) {
    if (s < 1) throw InvalidArgument("dense tensor modes must be positive");
    n *= static_cast<std::size_t>(s);
  }
  data.assign(n, 0.0);
}

DenseTensor DenseTensor::from_symmetric(const SymmetricTensor& t) {
  DenseTensor out(std::vector<int>(t.order(), t.dim()));
  out.data = t.full();
  return out;
}

std::size_t DenseTensor::offset(std::span<const int> idx) const {
  if (idx.size() != shape.size()) throw InvalidArgument("index length does not match tensor order");
  std::size_t off = 0;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= shape[k]) throw InvalidArgument("tensor index out of range");
    off = off * shape[k] + idx[k];
  }
  return off;
}

DenseTensor contract_mode(const DenseTensor& T, const Matrix& M, int mode) {
  const int r = static_cast<int>(T.shape.size());
  if (mode < 0 || mode >= r) throw InvalidArgument("mode out of range");
  const int n = T.shape[mode];
  if (M.cols() != n) throw InvalidArgument("matrix columns do not match tensor mode size");
  const int m = static_cast<int>(M.rows());
  std::size_t pre = 1, post = 1;
  for (int k = 0; k < mode; ++k) pre *= T.shape[k];
  for (int k = mode + 1; k < r; ++k) post *= T.shape[k];
  std::vector<int> shape = T.shape;
  shape[mode] = m;
  DenseTensor out(shape);
  for (std::size_t p = 0; p < pre; ++p) {
    const double* src = T.data.data() + p * n * post;
    double* dst = out.data.data() + p * m * post;
    for (int i = 0; i < m; ++i) {
      double* drow = dst + i * post;
      for (int j = 0; j < n; ++j) {
        double a = M(i, j);
        if (a == 0.0) continue;
        const double* srow = src + j * post;
        for (std::size_t q = 0; q < post; ++q) drow[q] += a * srow[q];
      }
    }
  }
  return out;
}

DenseTensor multilinear_apply(const std::vector<Matrix>& mats, const DenseTensor& T) {
  if (mats.size() != T.shape.size()) throw InvalidArgument("need one matrix per tensor mode");
  DenseTensor cur = T;
  for (std::size_t k = 0; k < mats.size(); ++k) cur = contract_mode(cur, mats[k], static_cast<int>(k));
  return cur;
}

SymmetricTensor multilinear_apply(const Matrix& A, const SymmetricTensor& T) {
  if (A.cols() != T.dim()) throw InvalidArgument("matrix columns do not match tensor dimension");
  const int r = T.order();
  DenseTensor cur = DenseTensor::from_symmetric(T);
  for (int k = 0; k < r; ++k) cur = contract_mode(cur, A, k);
  auto space = A.rows() == T.dim() ? T.space_ptr() : IndexSpace::get(static_cast<int>(A.rows()), r);
  SymmetricTensor out(space);
  for (std::size_t u = 0; u < out.size(); ++u) out[u] = cur.data[space->full_offset(u)];
  return out;
}

double associated_polynomial(const SymmetricTensor& T, const Vector& x) {
  if (x.size() != T.dim()) throw InvalidArgument("vector length does not match tensor dimension");
  double s = 0.0;
  for (std::size_t u = 0; u < T.size(); ++u) {
    double p = T.multiplicity(u) * T[u];
    for (int i : T.index(u)) p *= x(i);
    s += p;
  }
  return s;
}

Vector gather(const SymmetricTensor& T, std::span<const std::size_t> ranks) {
  Vector v(static_cast<Eigen::Index>(ranks.size()));
  for (std::size_t k = 0; k < ranks.size(); ++k) v(static_cast<Eigen::Index>(k)) = T[ranks[k]];
  return v;
}

Matrix action_jacobian(const Matrix& A, const SymmetricTensor& T, std::span<const std::size_t> ranks) {
  const int d = T.dim();
  const int r = T.order();
  const int m = static_cast<int>(A.rows());
  if (A.cols() != d) throw InvalidArgument("matrix columns do not match tensor dimension");
  // P = (I, A, ..., A) . T; by symmetry of T the derivative at output index idx along E_ij is
  // count(idx, i) * P[j, idx without one i].
  DenseTensor P = DenseTensor::from_symmetric(T);
  for (int k = 1; k < r; ++k) P = contract_mode(P, A, k);
  const auto out_space = IndexSpace::get(m, r);
  std::size_t post = 1;
  for (int k = 1; k < r; ++k) post *= m;

  Matrix J = Matrix::Zero(static_cast<Eigen::Index>(ranks.size()), static_cast<Eigen::Index>(m) * d);
  for (std::size_t row = 0; row < ranks.size(); ++row) {
    const MultiIndex& idx = out_space->index(ranks[row]);
    for (int k = 0; k < r; ++k) {
      if (k > 0 && idx[k] == idx[k - 1]) continue;
      const int i = idx[k];
      int cnt = 0;
      for (int v : idx) cnt += v == i;
      std::size_t off = 0;
      bool skipped = false;
      for (int l = 0; l < r; ++l) {
        if (!skipped && idx[l] == i) {
          skipped = true;
          continue;
        }
        off = off * m + idx[l];
      }
      for (int j = 0; j < d; ++j)
        J(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j) * m + i) = cnt * P.data[j * post + off];
    }
  }
  return J;
}

std::string format_index(const MultiIndex& idx) {
  std::ostringstream os;
  bool wide = false;
  for (int v : idx) wide = wide || v >= 9;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (wide && k > 0) os << ',';
    os << idx[k] + 1;
  }
  return os.str();
}

}  // namespace nica
