#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nica {

// Partition of {0, ..., n-1}, stored as a restricted growth string: labels[i] is the
// block of element i and blocks are numbered by first appearance.
class SetPartition {
 public:
  SetPartition() = default;
  explicit SetPartition(std::vector<int> labels);
  static SetPartition from_blocks(int n, const std::vector<std::vector<int>>& blocks);

  int size() const { return static_cast<int>(labels_.size()); }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }
  const std::vector<int>& labels() const { return labels_; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  std::string to_string() const;  // 1-based, e.g. "1/23"

  bool operator==(const SetPartition& o) const { return labels_ == o.labels_; }

 private:
  std::vector<int> labels_;
  std::vector<std::vector<int>> blocks_;
};

std::vector<SetPartition> set_partitions(int n);
// Per-thread memoized set_partitions(n).
const std::vector<SetPartition>& cached_set_partitions(int n);
std::uint64_t bell_number(int n);

// rho <= pi: every block of rho lies inside a block of pi.
bool refines(const SetPartition& rho, const SetPartition& pi);

// All rho with rho <= pi.
std::vector<SetPartition> refinements(const SetPartition& pi);

// Moebius function of the partition lattice; zero unless rho <= pi.
double mobius(const SetPartition& rho, const SetPartition& pi);

// c(pi) = sum_{rho <= pi} m(rho, pi) (-1)^{|rho|-1} / binom(n-1, |rho|-1); requires n >= size.
double kstat_coefficient(const SetPartition& pi, long n);

// n^{|pi|-1} c(pi), the weight of pi in the k-statistic expansion.
double kstat_weight(const SetPartition& pi, long n);

}  // namespace nica
