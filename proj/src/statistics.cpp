#include "nica/statistics.hpp"

#include <cmath>
#include <map>

namespace nica {

void validate_data(const Matrix& Y) {
  if (Y.rows() < 1 || Y.cols() < 1) throw InvalidArgument("data matrix is empty");
  if (!Y.allFinite()) throw InvalidArgument("data matrix contains non-finite values");
}

namespace {

void moments_dfs(const Matrix& Y, int r, int depth, int start, std::vector<int>& idx,
                 std::vector<Vector>& prods, TensorFamily& out) {
  const int d = static_cast<int>(Y.cols());
  const double n = static_cast<double>(Y.rows());
  for (int v = start; v < d; ++v) {
    idx[depth] = v;
    if (depth == 0)
      prods[0] = Y.col(v);
    else
      prods[depth] = prods[depth - 1].cwiseProduct(Y.col(v));
    auto& t = out.orders[depth];
    t[t.space().rank_sorted(std::span<const int>(idx.data(), depth + 1))] = prods[depth].sum() / n;
    if (depth + 1 < r) moments_dfs(Y, r, depth + 1, v, idx, prods, out);
  }
}

}  // namespace

TensorFamily sample_moments(const Matrix& Y, int r) {
  validate_data(Y);
  if (r < 1) throw InvalidArgument("moment order must be at least 1");
  const int d = static_cast<int>(Y.cols());
  TensorFamily out;
  for (int p = 1; p <= r; ++p) out.orders.emplace_back(d, p);
  std::vector<int> idx(r);
  std::vector<Vector> prods(r);
  moments_dfs(Y, r, 0, 0, idx, prods, out);
  return out;
}

SymmetricTensor partition_expand(const TensorFamily& family, int r,
                                 const std::function<double(const SetPartition&)>& weight) {
  if (r < 1) throw InvalidArgument("order must be at least 1");
  const auto& parts = cached_set_partitions(r);
  std::vector<double> w(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) w[p] = weight(parts[p]);
  return partition_expand(family, r, w);
}

SymmetricTensor partition_expand(const TensorFamily& family, int r, const std::vector<double>& w) {
  if (r < 1 || family.max_order() < r) throw InvalidArgument("tensor family does not reach the requested order");
  const int d = family.dim();
  const auto& parts = cached_set_partitions(r);
  if (w.size() != parts.size()) throw InvalidArgument("need one weight per set partition");

  SymmetricTensor out(d, r);
  std::vector<int> sub(r);
  for (std::size_t u = 0; u < out.size(); ++u) {
    const MultiIndex& idx = out.index(u);
    double total = 0.0;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      if (w[p] == 0.0) continue;
      double prod = w[p];
      for (const auto& block : parts[p].blocks()) {
        const int b = static_cast<int>(block.size());
        for (int k = 0; k < b; ++k) sub[k] = idx[block[k]];
        const auto& f = family(b);
        prod *= f[f.space().rank_sorted(std::span<const int>(sub.data(), b))];
        if (prod == 0.0) break;
      }
      total += prod;
    }
    out[u] = total;
  }
  return out;
}

SymmetricTensor kstatistic_from_moments(const TensorFamily& moments, long n, int r) {
  if (n <= r) throw InvalidArgument("k-statistic of order r requires more than r observations");
  thread_local std::map<std::pair<int, long>, std::vector<double>> cache;
  auto key = std::make_pair(r, n);
  auto it = cache.find(key);
  if (it == cache.end()) {
    std::vector<double> w;
    for (const auto& pi : cached_set_partitions(r)) w.push_back(kstat_weight(pi, n));
    if (cache.size() > 64) cache.clear();
    it = cache.emplace(key, std::move(w)).first;
  }
  return partition_expand(moments, r, it->second);
}

SymmetricTensor kstatistic(const Matrix& Y, int r) {
  validate_data(Y);
  if (Y.rows() <= r) throw InvalidArgument("k-statistic of order r requires more than r observations");
  return kstatistic_from_moments(sample_moments(Y, r), static_cast<long>(Y.rows()), r);
}

SymmetricTensor cumulant_from_moments(const TensorFamily& moments, int r) {
  return partition_expand(moments, r, [](const SetPartition& pi) {
    int b = pi.num_blocks();
    double s = (b - 1) % 2 == 0 ? 1.0 : -1.0;
    return s * std::tgamma(static_cast<double>(b));
  });
}

SymmetricTensor moment_from_cumulants(const TensorFamily& cumulants, int r) {
  return partition_expand(cumulants, r, [](const SetPartition&) { return 1.0; });
}

TensorFamily cumulants_from_moments(const TensorFamily& moments) {
  TensorFamily out;
  for (int p = 1; p <= moments.max_order(); ++p) out.orders.push_back(cumulant_from_moments(moments, p));
  return out;
}

TensorFamily moments_from_cumulants(const TensorFamily& cumulants) {
  TensorFamily out;
  for (int p = 1; p <= cumulants.max_order(); ++p) out.orders.push_back(moment_from_cumulants(cumulants, p));
  return out;
}

std::vector<double> univariate_cumulants(const std::vector<double>& moments) {
  // kappa_m = mu_m - sum_{k=1}^{m-1} binom(m-1, k-1) kappa_k mu_{m-k}
  std::vector<double> k(moments.size());
  for (std::size_t m = 1; m <= moments.size(); ++m) {
    double v = moments[m - 1];
    for (std::size_t j = 1; j < m; ++j)
      v -= binomial(static_cast<int>(m - 1), static_cast<int>(j - 1)) * k[j - 1] * moments[m - j - 1];
    k[m - 1] = v;
  }
  return k;
}

std::vector<double> univariate_moments(const std::vector<double>& cumulants) {
  std::vector<double> mu(cumulants.size());
  for (std::size_t m = 1; m <= cumulants.size(); ++m) {
    double v = cumulants[m - 1];
    for (std::size_t j = 1; j < m; ++j)
      v += binomial(static_cast<int>(m - 1), static_cast<int>(j - 1)) * cumulants[j - 1] * mu[m - j - 1];
    mu[m - 1] = v;
  }
  return mu;
}

}  // namespace nica
