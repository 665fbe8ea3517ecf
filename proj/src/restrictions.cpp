#include "nica/restrictions.hpp"

#include "nica/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <tuple>

namespace nica {

std::string to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::diagonal: return "diagonal";
    case PatternKind::reflectional: return "reflectional";
    case PatternKind::mean_independence: return "mean_independence";
    case PatternKind::minimal: return "minimal";
    case PatternKind::custom: return "custom";
  }
  return "custom";
}

PatternKind parse_pattern_kind(const std::string& name) {
  if (name == "diagonal") return PatternKind::diagonal;
  if (name == "reflectional") return PatternKind::reflectional;
  if (name == "mean_independence" || name == "mean-independence") return PatternKind::mean_independence;
  if (name == "minimal") return PatternKind::minimal;
  if (name == "custom") return PatternKind::custom;
  throw InvalidArgument("unknown pattern kind '" + name + "'");
}

bool ZeroPattern::contains(const MultiIndex& idx) const {
  MultiIndex s = idx;
  std::sort(s.begin(), s.end());
  return std::binary_search(indices.begin(), indices.end(), s);
}

bool ZeroPattern::has_targets() const {
  return std::any_of(targets.begin(), targets.end(), [](double c) { return c != 0.0; });
}

namespace {

ZeroPattern finish(PatternKind kind, int d, int r, std::vector<MultiIndex> indices, std::vector<double> targets) {
  auto space = IndexSpace::get(d, r);
  ZeroPattern p;
  p.kind = kind;
  p.d = d;
  p.r = r;
  if (targets.empty()) targets.assign(indices.size(), 0.0);
  if (targets.size() != indices.size()) throw InvalidArgument("pattern targets must match the number of indices");
  std::vector<std::pair<std::size_t, double>> ranked;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (static_cast<int>(indices[k].size()) != r) throw InvalidArgument("pattern index has wrong length");
    ranked.emplace_back(space->rank(indices[k]), targets[k]);
  }
  std::sort(ranked.begin(), ranked.end());
  for (std::size_t k = 1; k < ranked.size(); ++k)
    if (ranked[k].first == ranked[k - 1].first) throw InvalidArgument("duplicate index in pattern");
  if (ranked.empty()) throw InvalidArgument("pattern must contain at least one index");
  for (const auto& [rk, c] : ranked) {
    p.ranks.push_back(rk);
    p.indices.push_back(space->index(rk));
    p.targets.push_back(c);
  }
  return p;
}

std::vector<int> counts(const MultiIndex& idx, int d) {
  std::vector<int> c(d, 0);
  for (int v : idx) ++c[v];
  return c;
}

}  // namespace

ZeroPattern make_pattern(PatternKind kind, int d, int r) {
  if (r < 3) throw InvalidArgument("zero patterns require r >= 3");
  if (d < 2) throw InvalidArgument("zero patterns require d >= 2");
  auto space = IndexSpace::get(d, r);
  std::vector<MultiIndex> idx;
  switch (kind) {
    case PatternKind::diagonal:
      for (std::size_t u = 0; u < space->size(); ++u) {
        const auto& m = space->index(u);
        if (m.front() != m.back()) idx.push_back(m);
      }
      break;
    case PatternKind::reflectional:
      if (r % 2 != 0) throw InvalidArgument("reflectional pattern requires even r");
      for (std::size_t u = 0; u < space->size(); ++u) {
        auto c = counts(space->index(u), d);
        if (std::any_of(c.begin(), c.end(), [](int v) { return v % 2 != 0; })) idx.push_back(space->index(u));
      }
      break;
    case PatternKind::mean_independence:
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          MultiIndex a(r, j), b(r, i);
          a[0] = i;
          b[r - 1] = j;
          idx.push_back(a);
          idx.push_back(b);
        }
      break;
    case PatternKind::minimal:
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
          MultiIndex a(r, j);
          a[0] = i;
          idx.push_back(a);
        }
      break;
    case PatternKind::custom:
      throw InvalidArgument("custom patterns need an explicit index list");
  }
  return finish(kind, d, r, std::move(idx), {});
}

ZeroPattern make_custom_pattern(int d, int r, std::vector<MultiIndex> indices, std::vector<double> targets) {
  if (d < 1 || r < 1) throw InvalidArgument("invalid pattern dimensions");
  for (auto& m : indices)
    for (int v : m)
      if (v < 0 || v >= d) throw InvalidArgument("pattern index out of range");
  return finish(PatternKind::custom, d, r, std::move(indices), std::move(targets));
}

Vector project_onto_pattern(const SymmetricTensor& T, const ZeroPattern& I) {
  if (T.dim() != I.d || T.order() != I.r) throw InvalidArgument("tensor and pattern shapes differ");
  return gather(T, I.ranks);
}

double pattern_violation(const SymmetricTensor& T, const ZeroPattern& I) {
  Vector v = project_onto_pattern(T, I);
  double m = 0.0;
  for (Eigen::Index k = 0; k < v.size(); ++k) m = std::max(m, std::abs(v(k) - I.targets[k]));
  return m;
}

namespace {

double scale_of(const SymmetricTensor& T) {
  double s = T.norm();
  return s > 0.0 ? s : 1.0;
}

}  // namespace

GenericityResult check_genericity_diagonal(const SymmetricTensor& T, double tol) {
  const double thr = tol * scale_of(T);
  const int d = T.dim();
  for (std::size_t u = 0; u < T.size(); ++u) {
    const auto& m = T.index(u);
    if (m.front() != m.back() && std::abs(T[u]) > thr)
      throw InvalidArgument("tensor is not diagonal: entry " + format_index(m) + " is nonzero");
  }
  GenericityResult res;
  int zeros = 0;
  for (int i = 0; i < d; ++i) {
    std::vector<int> idx(T.order(), i);
    if (std::abs(T.at(idx)) <= thr) {
      ++zeros;
      res.reasons.push_back("diagonal entry " + std::to_string(i + 1) + " is zero");
    }
  }
  res.passed = zeros <= 1;
  if (!res.passed) res.reasons.push_back("more than one zero on the diagonal");
  return res;
}

Vector reflectional_marginal_sums(const SymmetricTensor& T) {
  const int d = T.dim(), r = T.order();
  if (r < 2) throw InvalidArgument("marginal sums need r >= 2");
  Vector s = Vector::Zero(d);
  if (r == 2) {
    for (int i = 0; i < d; ++i) s(i) = T.at({i, i});
    return s;
  }
  auto lead = IndexSpace::get(d, r - 2);
  std::vector<int> idx(r);
  for (int i = 0; i < d; ++i) {
    for (std::size_t u = 0; u < lead->size(); ++u) {
      const auto& m = lead->index(u);
      std::copy(m.begin(), m.end(), idx.begin());
      idx[r - 2] = i;
      idx[r - 1] = i;
      s(i) += lead->multiplicity(u) * T.at(idx);
    }
  }
  return s;
}

GenericityResult check_genericity_reflectional(const SymmetricTensor& T, double tol) {
  const int d = T.dim(), r = T.order();
  if (r % 2 != 0) throw InvalidArgument("reflectional genericity requires even r");
  const double thr = tol * scale_of(T);
  for (std::size_t u = 0; u < T.size(); ++u) {
    auto c = counts(T.index(u), d);
    bool odd = std::any_of(c.begin(), c.end(), [](int v) { return v % 2 != 0; });
    if (odd && std::abs(T[u]) > thr)
      throw InvalidArgument("tensor is not reflectionally invariant: entry " + format_index(T.index(u)) +
                            " is nonzero");
  }
  Vector s = reflectional_marginal_sums(T);
  GenericityResult res;
  res.passed = true;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (std::abs(s(i) - s(j)) <= thr) {
        res.passed = false;
        res.reasons.push_back("marginal sums " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                              " coincide");
      }
  return res;
}

GenericityResult check_genericity_minimal(const SymmetricTensor& T, double tol) {
  const int d = T.dim(), r = T.order();
  if (r < 3) throw InvalidArgument("minimal-pattern genericity requires r >= 3");
  const double scale = scale_of(T);
  ZeroPattern I = make_pattern(PatternKind::minimal, d, r);
  if (pattern_violation(T, I) > tol * scale) throw InvalidArgument("tensor violates the minimal zero pattern");
  GenericityResult res;
  res.passed = true;
  std::vector<int> idx(r);
  for (int j = 1; j < d; ++j) {
    Matrix B(j, j);
    for (int k = 0; k < j; ++k)
      for (int l = 0; l < j; ++l) {
        std::fill(idx.begin(), idx.end(), j);
        idx[0] = k;
        idx[1] = l;
        B(k, l) = T.at(idx);
      }
    std::fill(idx.begin(), idx.end(), j);
    Matrix M = T.at(idx) * Matrix::Identity(j, j) - (r - 1) * B;
    double det = M.determinant();
    if (std::abs(det) <= tol * std::pow(scale, j)) {
      res.passed = false;
      res.reasons.push_back("determinant condition fails at j = " + std::to_string(j + 1));
    }
  }
  return res;
}

namespace {

void require_orthogonal(const Matrix& Q, double tol) {
  if (Q.rows() != Q.cols()) throw InvalidArgument("Q must be square");
  const Eigen::Index d = Q.rows();
  double err = (Q.transpose() * Q - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
  if (err > std::max(tol, 1e-10)) throw InvalidArgument("Q is not orthogonal");
}

double gt_scale(const SymmetricTensor& T, const ZeroPattern& I) {
  double s = T.norm();
  for (double c : I.targets) s = std::max(s, std::abs(c));
  return s > 0.0 ? s : 1.0;
}

}  // namespace

bool verify_in_GT(const Matrix& Q, const SymmetricTensor& T, const ZeroPattern& I, double tol) {
  require_orthogonal(Q, tol);
  if (Q.rows() != T.dim()) throw InvalidArgument("Q and T dimensions differ");
  return pattern_violation(multilinear_apply(Q, T), I) <= tol * gt_scale(T, I);
}

LocalIdentification local_identification_test(const SymmetricTensor& T, const ZeroPattern& I, const Matrix& Q,
                                               double tol) {
  if (!verify_in_GT(Q, T, I, tol)) throw InvalidArgument("Q is not in the identified set of T");
  const int d = T.dim();
  SymmetricTensor S = multilinear_apply(Q, T);
  Matrix J = action_jacobian(Matrix::Identity(d, d), S, I.ranks);
  const int q = d * (d - 1) / 2;
  Matrix M(J.rows(), q);
  int c = 0;
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) M.col(c++) = J.col(b * d + a) - J.col(a * d + b);

  LocalIdentification out;
  if (q == 0) {
    out.locally_identified = true;
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(M);
  out.singular_values = svd.singularValues();
  double smax = out.singular_values.size() ? out.singular_values(0) : 0.0;
  int rank = 0;
  if (smax > 0.0)
    for (Eigen::Index k = 0; k < out.singular_values.size(); ++k)
      if (out.singular_values(k) > tol * smax) ++rank;
  out.kernel_dimension = q - rank;
  out.locally_identified = out.kernel_dimension == 0;
  return out;
}

namespace {

using Poly = std::vector<double>;  // coefficients, lowest degree first

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

Poly poly_add(Poly a, const Poly& b, double s = 1.0) {
  if (b.size() > a.size()) a.resize(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += s * b[i];
  return a;
}

Poly poly_pow(const Poly& a, int e) {
  Poly out{1.0};
  for (int k = 0; k < e; ++k) out = poly_mul(out, a);
  return out;
}

double poly_eval(const Poly& p, double z) {
  double v = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * z + *it;
  return v;
}

double poly_deriv_eval(const Poly& p, double z) {
  double v = 0.0;
  for (std::size_t k = p.size(); k-- > 1;) v = v * z + k * p[k];
  return v;
}

// Drops leading coefficients that are negligible relative to the largest one.
Poly trim(Poly p, double abs_floor) {
  double mx = 0.0;
  for (double c : p) mx = std::max(mx, std::abs(c));
  if (mx <= abs_floor) return {};
  while (!p.empty() && std::abs(p.back()) <= 1e-13 * mx) p.pop_back();
  return p;
}

double polish(const Poly& p, double z) {
  for (int it = 0; it < 50; ++it) {
    double f = poly_eval(p, z), df = poly_deriv_eval(p, z);
    if (df == 0.0 || !std::isfinite(df)) break;
    double step = f / df;
    z -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) break;
  }
  return z;
}

std::vector<double> real_roots(const Poly& p) {
  std::vector<double> roots;
  const int m = static_cast<int>(p.size()) - 1;
  if (m < 1) return roots;
  Matrix C = Matrix::Zero(m, m);
  for (int i = 1; i < m; ++i) C(i, i - 1) = 1.0;
  for (int i = 0; i < m; ++i) C(i, m - 1) = -p[i] / p[m];
  Eigen::EigenSolver<Matrix> es(C, false);
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    auto ev = es.eigenvalues()(k);
    if (std::abs(ev.imag()) <= 1e-6 * (1.0 + std::abs(ev.real()))) roots.push_back(polish(p, ev.real()));
  }
  // Sign changes of the homogenized form over angles in (-pi/2, pi/2) catch roots the
  // eigenvalue route reports with spurious imaginary parts.
  auto h = [&](double th) {
    double s = std::sin(th), c = std::cos(th), v = 0.0;
    for (int k = 0; k <= m; ++k) v += p[k] * std::pow(s, k) * std::pow(c, m - k);
    return v;
  };
  const int grid = 4096;
  const double lo = -std::numbers::pi / 2, hi = std::numbers::pi / 2;
  double prev_t = lo + 1e-9, prev_v = h(prev_t);
  for (int g = 1; g <= grid; ++g) {
    double t = lo + (hi - lo) * g / grid - (g == grid ? 1e-9 : 0.0);
    double v = h(t);
    if ((prev_v < 0) != (v < 0) && prev_v != 0.0) {
      double a = prev_t, b = t, fa = prev_v;
      for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
        double mid = 0.5 * (a + b), fm = h(mid);
        if ((fm < 0) == (fa < 0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      double th = 0.5 * (a + b);
      if (std::abs(std::cos(th)) > 1e-12) roots.push_back(polish(p, std::tan(th)));
    }
    prev_t = t;
    prev_v = v;
  }
  return roots;
}

bool near_any(const std::vector<Matrix>& set, const Matrix& Q, double tol) {
  return std::any_of(set.begin(), set.end(), [&](const Matrix& P) { return (P - Q).norm() <= tol; });
}

}  // namespace

Enumeration2d enumerate_GT_2d(const SymmetricTensor& T, const ZeroPattern& I, double tol) {
  if (T.dim() != 2) throw InvalidArgument("enumeration requires d = 2");
  if (I.d != 2 || I.r != T.order()) throw InvalidArgument("pattern does not match the tensor");
  const int r = T.order();
  const double scale = gt_scale(T, I);
  Enumeration2d out;

  for (const auto& P : signed_permutations(2))
    if (verify_in_GT(P, T, I, tol)) out.matrices.push_back(P);

  const auto full = T.full();
  const std::size_t nfull = full.size();
  for (int cls = 0; cls < 2; ++cls) {
    // Q(z) / Q11 with z = Q21 / Q11; rotations [[1,-z],[z,1]], reflections [[1,z],[z,-1]].
    Poly q[2][2] = {{{1.0}, {0.0, cls == 0 ? -1.0 : 1.0}}, {{0.0, 1.0}, {cls == 0 ? 1.0 : -1.0}}};
    std::vector<Poly> polys;
    for (std::size_t k = 0; k < I.size(); ++k) {
      const MultiIndex& i = I.indices[k];
      Poly p{0.0};
      for (std::size_t f = 0; f < nfull; ++f) {
        if (full[f] == 0.0) continue;
        Poly term{full[f]};
        for (int m = 0; m < r; ++m) {
          int jm = static_cast<int>((f >> (r - 1 - m)) & 1);
          term = poly_mul(term, q[i[m]][jm]);
        }
        p = poly_add(p, term);
      }
      const double c = I.targets[k];
      if (c != 0.0) {
        Poly one_plus{1.0, 0.0, 1.0};
        if (r % 2 == 0)
          p = poly_add(p, poly_pow(one_plus, r / 2), -c);
        else
          p = poly_add(poly_mul(p, p), poly_pow(one_plus, r), -c * c);
      }
      polys.push_back(trim(p, 1e-12 * scale));
    }
    if (std::all_of(polys.begin(), polys.end(), [](const Poly& p) { return p.empty(); })) {
      out.finite = false;
      out.matrices.clear();
      return out;
    }
    std::vector<double> cand;
    for (const auto& p : polys) {
      auto rr = real_roots(p);
      cand.insert(cand.end(), rr.begin(), rr.end());
    }
    for (double z : cand) {
      if (!std::isfinite(z)) continue;
      double a = 1.0 / std::sqrt(1.0 + z * z);
      for (double sgn : {1.0, -1.0}) {
        Matrix Q(2, 2);
        Q << 1.0, (cls == 0 ? -z : z), z, (cls == 0 ? 1.0 : -1.0);
        Q *= sgn * a;
        if (near_any(out.matrices, Q, 1e-6)) continue;
        if (verify_in_GT(Q, T, I, tol)) out.matrices.push_back(Q);
      }
    }
  }

  auto key = [](const Matrix& Q) {
    double ang = std::atan2(Q(1, 0), Q(0, 0));
    if (ang < 0) ang += std::numbers::pi;
    if (ang >= std::numbers::pi - 1e-9) ang -= std::numbers::pi;
    if (std::abs(ang) < 1e-9) ang = 0.0;
    bool refl = Q.determinant() < 0;
    return std::make_tuple(std::round(ang * 1e9), refl, -Q(0, 0), -Q(0, 1));
  };
  std::sort(out.matrices.begin(), out.matrices.end(),
            [&](const Matrix& A, const Matrix& B) { return key(A) < key(B); });
  return out;
}

}  // namespace nica
