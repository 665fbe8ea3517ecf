#include "nica/partitions.hpp"

#include "nica/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace nica {

SetPartition::SetPartition(std::vector<int> labels) : labels_(std::move(labels)) {
  int next = 0;
  for (int l : labels_) {
    if (l < 0 || l > next) throw InvalidArgument("labels must form a restricted growth string");
    if (l == next) {
      ++next;
      blocks_.emplace_back();
    }
  }
  for (int i = 0; i < size(); ++i) blocks_[labels_[i]].push_back(i);
}

SetPartition SetPartition::from_blocks(int n, const std::vector<std::vector<int>>& blocks) {
  std::vector<int> raw(n, -1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].empty()) throw InvalidArgument("empty block");
    for (int e : blocks[b]) {
      if (e < 0 || e >= n || raw[e] != -1) throw InvalidArgument("blocks must partition {0..n-1}");
      raw[e] = static_cast<int>(b);
    }
  }
  std::vector<int> relabel(blocks.size(), -1), labels(n);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (raw[i] < 0) throw InvalidArgument("blocks must cover {0..n-1}");
    if (relabel[raw[i]] < 0) relabel[raw[i]] = next++;
    labels[i] = relabel[raw[i]];
  }
  return SetPartition(std::move(labels));
}

std::string SetPartition::to_string() const {
  std::ostringstream os;
  bool wide = size() > 9;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    if (b > 0) os << '/';
    for (std::size_t k = 0; k < blocks_[b].size(); ++k) {
      if (wide && k > 0) os << ',';
      os << blocks_[b][k] + 1;
    }
  }
  return os.str();
}

namespace {

void grow(std::vector<int>& labels, int pos, int max_label, std::vector<SetPartition>& out) {
  if (pos == static_cast<int>(labels.size())) {
    out.emplace_back(labels);
    return;
  }
  for (int l = 0; l <= max_label + 1; ++l) {
    labels[pos] = l;
    grow(labels, pos + 1, std::max(max_label, l), out);
  }
}

}  // namespace

std::vector<SetPartition> set_partitions(int n) {
  if (n < 1) throw InvalidArgument("set_partitions requires n >= 1");
  std::vector<SetPartition> out;
  out.reserve(bell_number(n));
  std::vector<int> labels(n, 0);
  grow(labels, 1, 0, out);
  return out;
}

const std::vector<SetPartition>& cached_set_partitions(int n) {
  thread_local std::map<int, std::vector<SetPartition>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, set_partitions(n)).first;
  return it->second;
}

std::uint64_t bell_number(int n) {
  if (n < 0 || n > 25) throw InvalidArgument("bell_number supports 0 <= n <= 25");
  // Bell triangle.
  std::vector<std::uint64_t> row{1};
  for (int i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (auto v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

bool refines(const SetPartition& rho, const SetPartition& pi) {
  if (rho.size() != pi.size()) throw InvalidArgument("partitions of different sets");
  for (const auto& block : rho.blocks())
    for (int e : block)
      if (pi.labels()[e] != pi.labels()[block.front()]) return false;
  return true;
}

std::vector<SetPartition> refinements(const SetPartition& pi) {
  const int n = pi.size();
  std::vector<std::vector<SetPartition>> parts;
  for (const auto& block : pi.blocks()) parts.push_back(set_partitions(static_cast<int>(block.size())));
  std::vector<SetPartition> out;
  std::vector<std::size_t> pick(parts.size(), 0);
  while (true) {
    std::vector<std::vector<int>> blocks;
    for (std::size_t b = 0; b < parts.size(); ++b) {
      const auto& sub = parts[b][pick[b]];
      for (const auto& sb : sub.blocks()) {
        std::vector<int> mapped;
        for (int e : sb) mapped.push_back(pi.blocks()[b][e]);
        blocks.push_back(std::move(mapped));
      }
    }
    out.push_back(SetPartition::from_blocks(n, blocks));
    std::size_t b = 0;
    while (b < pick.size() && ++pick[b] == parts[b].size()) pick[b++] = 0;
    if (b == pick.size()) break;
  }
  return out;
}

double mobius(const SetPartition& rho, const SetPartition& pi) {
  if (!refines(rho, pi)) return 0.0;
  std::vector<int> count(pi.num_blocks(), 0);
  for (const auto& block : rho.blocks()) ++count[pi.labels()[block.front()]];
  double m = ((rho.num_blocks() - pi.num_blocks()) % 2 == 0) ? 1.0 : -1.0;
  for (int c : count) m *= std::tgamma(static_cast<double>(c));
  return m;
}

double kstat_coefficient(const SetPartition& pi, long n) {
  if (n < pi.size()) throw InvalidArgument("kstat_coefficient requires n >= r");
  double c = 0.0;
  for (const auto& rho : refinements(pi)) {
    int nb = rho.num_blocks();
    double sign = (nb - 1) % 2 == 0 ? 1.0 : -1.0;
    c += mobius(rho, pi) * sign / binomial(static_cast<int>(n - 1), nb - 1);
  }
  return c;
}

double kstat_weight(const SetPartition& pi, long n) {
  return std::pow(static_cast<double>(n), pi.num_blocks() - 1) * kstat_coefficient(pi, n);
}

}  // namespace nica
