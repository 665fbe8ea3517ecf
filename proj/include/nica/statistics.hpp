#pragma once

#include "nica/partitions.hpp"
#include "nica/tensor.hpp"

#include <functional>
#include <vector>

namespace nica {

// Tensors of orders 1..max_order of one family (moments or cumulants).
struct TensorFamily {
  std::vector<SymmetricTensor> orders;  // orders[p - 1] has order p

  int max_order() const { return static_cast<int>(orders.size()); }
  int dim() const { return orders.empty() ? 0 : orders.front().dim(); }
  const SymmetricTensor& operator()(int p) const { return orders.at(p - 1); }
  SymmetricTensor& operator()(int p) { return orders.at(p - 1); }
};

// Throws unless Y is non-empty and finite.
void validate_data(const Matrix& Y);

// Raw sample moments of orders 1..r; rows of Y are observations.
TensorFamily sample_moments(const Matrix& Y, int r);

// Unbiased k-statistic of order r; requires n > r.
SymmetricTensor kstatistic(const Matrix& Y, int r);
SymmetricTensor kstatistic_from_moments(const TensorFamily& moments, long n, int r);

// Order-r cumulant from moments of orders 1..r, and the inverse map.
SymmetricTensor cumulant_from_moments(const TensorFamily& moments, int r);
SymmetricTensor moment_from_cumulants(const TensorFamily& cumulants, int r);

TensorFamily cumulants_from_moments(const TensorFamily& moments);
TensorFamily moments_from_cumulants(const TensorFamily& cumulants);

// sum over partitions pi of {1..r} of weight(pi) * prod_{B in pi} F_{|B|}[i_B].
SymmetricTensor partition_expand(const TensorFamily& family, int r,
                                 const std::function<double(const SetPartition&)>& weight);
// Same with weights listed in cached_set_partitions(r) order.
SymmetricTensor partition_expand(const TensorFamily& family, int r, const std::vector<double>& weights);

// Univariate versions, moments/cumulants indexed from order 1 (element 0 is order 1).
std::vector<double> univariate_cumulants(const std::vector<double>& moments);
std::vector<double> univariate_moments(const std::vector<double>& cumulants);

}  // namespace nica
