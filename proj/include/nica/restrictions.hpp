#pragma once

#include "nica/tensor.hpp"

#include <string>
#include <vector>

namespace nica {

enum class PatternKind { diagonal, reflectional, mean_independence, minimal, custom };

std::string to_string(PatternKind kind);
PatternKind parse_pattern_kind(const std::string& name);

// The index set I of zero restrictions T_i = c_i (c_i = 0 unless targets are given).
struct ZeroPattern {
  PatternKind kind = PatternKind::custom;
  int d = 0;
  int r = 0;
  std::vector<MultiIndex> indices;  // sorted in rank order
  std::vector<std::size_t> ranks;
  std::vector<double> targets;      // one per index

  std::size_t size() const { return indices.size(); }
  bool contains(const MultiIndex& idx) const;
  bool has_targets() const;
};

ZeroPattern make_pattern(PatternKind kind, int d, int r);
// Indices may be given in any order; they are sorted and deduplicated check is strict.
ZeroPattern make_custom_pattern(int d, int r, std::vector<MultiIndex> indices, std::vector<double> targets = {});

// Coordinates T_i for i in I, in pattern order.
Vector project_onto_pattern(const SymmetricTensor& T, const ZeroPattern& I);
// max_i |T_i - c_i|.
double pattern_violation(const SymmetricTensor& T, const ZeroPattern& I);

struct GenericityResult {
  bool passed = false;
  std::vector<std::string> reasons;
};

GenericityResult check_genericity_diagonal(const SymmetricTensor& T, double tol = 1e-8);
GenericityResult check_genericity_reflectional(const SymmetricTensor& T, double tol = 1e-8);
GenericityResult check_genericity_minimal(const SymmetricTensor& T, double tol = 1e-8);

// Sums T_{+...+ii} over all d^{r-2} leading index tuples.
Vector reflectional_marginal_sums(const SymmetricTensor& T);

// True iff max_i |(Q . T)_i - c_i| <= tol * scale, scale = max(||T||, max |c_i|).
bool verify_in_GT(const Matrix& Q, const SymmetricTensor& T, const ZeroPattern& I, double tol = 1e-8);

struct LocalIdentification {
  bool locally_identified = false;
  int kernel_dimension = 0;
  Vector singular_values;
};

LocalIdentification local_identification_test(const SymmetricTensor& T, const ZeroPattern& I, const Matrix& Q,
                                               double tol = 1e-8);

struct Enumeration2d {
  bool finite = true;
  std::vector<Matrix> matrices;
};

Enumeration2d enumerate_GT_2d(const SymmetricTensor& T, const ZeroPattern& I, double tol = 1e-8);

}  // namespace nica
