#include "nica/estimator.hpp"

#include "nica/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nica {

std::string to_string(StatKind k) { return k == StatKind::moment ? "moment" : "cumulant"; }

std::string to_string(Weighting w) {
  switch (w) {
    case Weighting::identity: return "identity";
    case Weighting::plug_in: return "plug_in";
    case Weighting::bootstrap: return "bootstrap";
    case Weighting::iterated: return "iterated";
  }
  return "identity";
}

StatKind parse_stat_kind(const std::string& s) {
  if (s == "moment") return StatKind::moment;
  if (s == "cumulant") return StatKind::cumulant;
  throw InvalidArgument("unknown statistic kind '" + s + "' (expected moment or cumulant)");
}

Weighting parse_weighting(const std::string& s) {
  if (s == "identity") return Weighting::identity;
  if (s == "plug_in" || s == "plug-in" || s == "plugin") return Weighting::plug_in;
  if (s == "bootstrap") return Weighting::bootstrap;
  if (s == "iterated") return Weighting::iterated;
  throw InvalidArgument("unknown weighting '" + s + "'");
}

Weighting efficient_weighting(StatKind k) {
  return k == StatKind::moment ? Weighting::plug_in : Weighting::bootstrap;
}

int RestrictionSpec::d_g() const {
  const int d = dim();
  return d * (d + 1) / 2 + static_cast<int>(pattern.size()) + (include_mean ? d : 0);
}

void RestrictionSpec::validate() const {
  if (pattern.r != r) throw InvalidArgument("pattern order does not match r");
  if (r < 3) throw InvalidArgument("restriction order must be at least 3");
  if (d_g() < dim() * dim()) throw InvalidArgument("too few restrictions: d_g < d^2");
}

RestrictionSpec make_spec(PatternKind kind, int d, int r, StatKind stat, bool include_mean) {
  RestrictionSpec s;
  s.r = r;
  s.stat = stat;
  s.pattern = make_pattern(kind, d, r);
  s.include_mean = include_mean;
  s.validate();
  return s;
}

SampleStatistics compute_statistics(const Matrix& Y, const RestrictionSpec& spec) {
  validate_data(Y);
  if (Y.cols() != spec.dim()) throw InvalidArgument("data dimension does not match the restriction pattern");
  if (Y.rows() <= spec.r) throw InvalidArgument("need more than r observations");
  const long n = static_cast<long>(Y.rows());
  TensorFamily mu = sample_moments(Y, spec.r);
  SampleStatistics s;
  s.n = n;
  if (spec.include_mean) s.h1 = Eigen::Map<const Vector>(mu(1).values().data(), spec.dim());
  if (spec.stat == StatKind::moment) {
    s.h2 = mu(2);
    s.hr = mu(spec.r);
  } else {
    s.h2 = kstatistic_from_moments(mu, n, 2);
    s.hr = kstatistic_from_moments(mu, n, spec.r);
  }
  return s;
}

SampleStatistics model_statistics(const Matrix& A0, const SymmetricTensor& T) {
  const int d = T.dim();
  if (A0.rows() != d || A0.cols() != d) throw InvalidArgument("A0 must be d x d");
  Matrix B = A0.inverse();
  SampleStatistics s;
  s.h1 = Vector::Zero(d);
  s.h2 = SymmetricTensor::from_matrix(B * B.transpose());
  s.hr = multilinear_apply(B, T);
  return s;
}

namespace {

void check_shapes(const Matrix& A, const SymmetricTensor& S2, const SymmetricTensor& Tr, const RestrictionSpec& spec) {
  const int d = spec.dim();
  if (A.rows() != d || A.cols() != d) throw InvalidArgument("A must be d x d");
  if (S2.dim() != d || S2.order() != 2) throw InvalidArgument("second-order statistic has wrong shape");
  if (Tr.dim() != d || Tr.order() != spec.r) throw InvalidArgument("order-r statistic has wrong shape");
}

const std::vector<std::size_t>& all_ranks(int d) {
  thread_local std::vector<std::vector<std::size_t>> cache;
  if (static_cast<int>(cache.size()) <= d) cache.resize(d + 1);
  auto& v = cache[d];
  if (v.empty()) {
    v.resize(static_cast<std::size_t>(d * (d + 1) / 2));
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = k;
  }
  return v;
}

Vector residual_impl(const Matrix& A, const SymmetricTensor& S2, const SymmetricTensor& Tr, const Vector* h1,
                     const RestrictionSpec& spec) {
  check_shapes(A, S2, Tr, spec);
  const int d = spec.dim();
  Vector g(spec.d_g());
  SymmetricTensor AS = multilinear_apply(A, S2);
  Eigen::Index k = 0;
  for (std::size_t u = 0; u < AS.size(); ++u) {
    const auto& idx = AS.index(u);
    g(k++) = AS[u] - (idx[0] == idx[1] ? 1.0 : 0.0);
  }
  SymmetricTensor AT = multilinear_apply(A, Tr);
  for (std::size_t j = 0; j < spec.pattern.size(); ++j) g(k++) = AT[spec.pattern.ranks[j]] - spec.pattern.targets[j];
  if (spec.include_mean) {
    if (!h1 || h1->size() != d) throw InvalidArgument("mean restrictions need the first-order statistic");
    g.segment(k, d) = A * (*h1);
  }
  return g;
}

Matrix jacobian_impl(const Matrix& A, const SymmetricTensor& S2, const SymmetricTensor& Tr, const Vector* h1,
                     const RestrictionSpec& spec) {
  check_shapes(A, S2, Tr, spec);
  const int d = spec.dim();
  const Eigen::Index q = d * (d + 1) / 2;
  const Eigen::Index p = static_cast<Eigen::Index>(spec.pattern.size());
  Matrix J = Matrix::Zero(spec.d_g(), d * d);
  J.topRows(q) = action_jacobian(A, S2, all_ranks(d));
  J.middleRows(q, p) = action_jacobian(A, Tr, spec.pattern.ranks);
  if (spec.include_mean) {
    if (!h1 || h1->size() != d) throw InvalidArgument("mean restrictions need the first-order statistic");
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) J(q + p + i, j * d + i) = (*h1)(j);
  }
  return J;
}

}  // namespace

Vector residual(const Matrix& A, const SampleStatistics& s, const RestrictionSpec& spec) {
  return residual_impl(A, s.h2, s.hr, &s.h1, spec);
}

Vector residual(const Matrix& A, const SymmetricTensor& S2, const SymmetricTensor& Tr, const RestrictionSpec& spec) {
  return residual_impl(A, S2, Tr, nullptr, spec);
}

Matrix jacobian(const Matrix& A, const SampleStatistics& s, const RestrictionSpec& spec) {
  return jacobian_impl(A, s.h2, s.hr, &s.h1, spec);
}

Matrix jacobian(const Matrix& A, const SymmetricTensor& S2, const SymmetricTensor& Tr, const RestrictionSpec& spec) {
  return jacobian_impl(A, S2, Tr, nullptr, spec);
}

namespace {

struct Whitener {
  std::optional<Eigen::LLT<Matrix>> llt;

  explicit Whitener(const Matrix* sigma) {
    if (!sigma) return;
    llt.emplace(*sigma);
    if (llt->info() != Eigen::Success) throw NumericalError("weighting covariance is not positive definite");
  }
  Vector apply(const Vector& g) const {
    if (!llt) return g;
    return llt->matrixL().solve(g);
  }
  Matrix apply(const Matrix& J) const {
    if (!llt) return J;
    return llt->matrixL().solve(J);
  }
};

}  // namespace

double objective(const Matrix& A, const SampleStatistics& s, const RestrictionSpec& spec, const Matrix* sigma) {
  Whitener w(sigma);
  return w.apply(residual(A, s, spec)).squaredNorm();
}

LmResult minimize_objective(const SampleStatistics& s, const RestrictionSpec& spec, const Matrix& A_start,
                            const Matrix* sigma, const LmOptions& opts) {
  const int d = spec.dim();
  Whitener w(sigma);
  LmResult res;
  res.A = A_start;
  Vector r = w.apply(residual(res.A, s, spec));
  res.objective = r.squaredNorm();
  double lambda = opts.lambda0;
  for (int it = 0; it < opts.max_iter; ++it) {
    res.iterations = it + 1;
    Matrix J = w.apply(jacobian(res.A, s, spec));
    Vector grad = J.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() <= opts.gtol || res.objective == 0.0) {
      res.converged = true;
      return res;
    }
    Matrix H = J.transpose() * J;
    Vector diag = H.diagonal();
    const double floor = std::max(1e-12 * diag.maxCoeff(), 1e-300);
    bool accepted = false;
    while (lambda < 1e16) {
      Matrix Hd = H;
      for (Eigen::Index k = 0; k < Hd.rows(); ++k) Hd(k, k) += lambda * std::max(diag(k), floor);
      Vector step = Hd.ldlt().solve(-grad);
      Matrix A_new = res.A + unvec(step, d);
      if (step.allFinite() && condition_number(A_new) <= opts.cond_max) {
        Vector r_new = w.apply(residual(A_new, s, spec));
        double obj_new = r_new.squaredNorm();
        if (obj_new < res.objective) {
          res.A = A_new;
          r = r_new;
          res.objective = obj_new;
          lambda = std::max(lambda / 10.0, 1e-12);
          accepted = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent possible at machine precision: accept as a minimum if the gradient is
      // small relative to the problem scale.
      res.converged = grad.lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + J.norm() * r.norm());
      return res;
    }
  }
  Matrix J = w.apply(jacobian(res.A, s, spec));
  res.converged = (J.transpose() * r).lpNorm<Eigen::Infinity>() <= opts.gtol;
  return res;
}

namespace {

Matrix whitening_start(const SymmetricTensor& h2) {
  Eigen::LLT<Matrix> llt(h2.to_matrix());
  if (llt.info() != Eigen::Success) throw NumericalError("sample covariance is not positive definite");
  const Eigen::Index d = h2.dim();
  Matrix Linv = llt.matrixL().solve(Matrix::Identity(d, d));
  return Linv;
}

std::vector<StartResult> multistart(const SampleStatistics& s, const RestrictionSpec& spec, const Matrix* sigma,
                                    const EstimateOptions& opts, LmResult& best) {
  const int d = spec.dim();
  Matrix W0 = whitening_start(s.h2);
  std::vector<StartResult> bests;
  bool have = false;
  for (int k = 0; k < std::max(1, opts.starts); ++k) {
    Rng rng = make_stream(opts.seed, static_cast<std::uint64_t>(k));
    Matrix Q = random_orthogonal(d, rng);
    LmResult lm = minimize_objective(s, spec, Q * W0, sigma, opts.lm);
    bests.push_back({lm.objective, lm.A});
    if (!have || lm.objective < best.objective) {
      best = lm;
      have = true;
    }
  }
  std::stable_sort(bests.begin(), bests.end(),
                   [](const StartResult& a, const StartResult& b) { return a.objective < b.objective; });
  return bests;
}

Matrix ridge(Matrix sigma, double factor) {
  const double lam = factor * sigma.trace() / static_cast<double>(sigma.rows());
  sigma.diagonal().array() += lam;
  return sigma;
}

Matrix sigma_at(const Matrix& Y, const Matrix& A, const RestrictionSpec& spec, Weighting w,
                const EstimateOptions& opts) {
  bool boot = w == Weighting::bootstrap || spec.stat == StatKind::cumulant;
  if (w == Weighting::plug_in && spec.stat == StatKind::cumulant)
    throw InvalidArgument("plug-in weighting is available for moment restrictions only; use bootstrap");
  return boot ? estimate_sigma_bootstrap(Y, A, spec, opts.bootstrap_B, opts.seed) : estimate_sigma_plugin(Y, A, spec);
}

Matrix permute_variance(const Matrix& S, const Matrix& P) {
  const Eigen::Index d = P.rows();
  Matrix K = Matrix::Zero(d * d, d * d);
  for (Eigen::Index j = 0; j < d; ++j) K.block(j * d, j * d, d, d) = P;
  return K * S * K.transpose();
}

void finish_variance(EstimationResult& out, const SampleStatistics& s, const RestrictionSpec& spec) {
  if (!out.Sigma_hat) return;
  const int d = spec.dim();
  Matrix G = jacobian(out.A_hat, s, spec);
  Matrix Sig = *out.Sigma_hat;
  Matrix S;
  if (out.weighting == Weighting::identity) {
    Matrix bread = (G.transpose() * G).inverse();
    S = bread * G.transpose() * Sig * G * bread;
  } else {
    S = efficient_variance(G, Sig);
  }
  out.S_hat = S;
  Vector se = (S.diagonal().cwiseMax(0.0) / static_cast<double>(s.n)).cwiseSqrt();
  out.standard_errors = unvec(se, d);
}

}  // namespace

Matrix efficient_variance(const Matrix& G, const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("restriction covariance is not positive definite");
  Matrix SiG = llt.solve(G);
  return (G.transpose() * SiG).inverse();
}

EstimationResult estimate_from_statistics(const SampleStatistics& s, const RestrictionSpec& spec,
                                          const EstimateOptions& opts) {
  spec.validate();
  EstimationResult out;
  LmResult best;
  out.multistart_bests = multistart(s, spec, nullptr, opts, best);
  out.A_hat = best.A;
  out.objective = best.objective;
  out.n_iterations = best.iterations;
  out.converged = best.converged;
  out.weighting = Weighting::identity;
  out.n = s.n;
  out.d_g = spec.d_g();
  out.A_first = best.A;
  out.objective_first = best.objective;
  if (opts.reference) {
    Alignment al = align_to_reference(out.A_hat, *opts.reference);
    out.A_hat = al.aligned;
    out.alignment = al.P;
  }
  return out;
}

EstimationResult estimate(const Matrix& Y, const RestrictionSpec& spec, const EstimateOptions& opts) {
  spec.validate();
  SampleStatistics s = compute_statistics(Y, spec);
  EstimationResult out;
  LmResult best;
  out.multistart_bests = multistart(s, spec, nullptr, opts, best);
  out.n = s.n;
  out.d_g = spec.d_g();
  out.A_first = best.A;
  out.objective_first = best.objective;
  out.weighting = opts.weighting;
  int total_iter = best.iterations;

  if (opts.weighting == Weighting::identity) {
    if (opts.compute_variance) out.Sigma_hat = sigma_at(Y, best.A, spec, Weighting::identity, opts);
  } else {
    Matrix A = best.A;
    int rounds = opts.weighting == Weighting::iterated ? std::max(1, opts.max_weight_iter) : 1;
    for (int k = 0; k < rounds; ++k) {
      Matrix sig = ridge(sigma_at(Y, A, spec, opts.weighting, opts), opts.ridge);
      LmResult lm = minimize_objective(s, spec, A, &sig, opts.lm);
      total_iter += lm.iterations;
      double change = (lm.A - A).norm();
      best = lm;
      A = lm.A;
      out.Sigma_hat = sig;
      if (change <= opts.iter_tol * (1.0 + A.norm())) break;
    }
  }
  out.A_hat = best.A;
  out.objective = best.objective;
  out.converged = best.converged;
  out.n_iterations = total_iter;
  if (opts.compute_variance) finish_variance(out, s, spec);
  if (opts.reference) {
    Alignment al = align_to_reference(out.A_hat, *opts.reference);
    out.A_hat = al.aligned;
    out.alignment = al.P;
    if (out.S_hat) out.S_hat = permute_variance(*out.S_hat, al.P);
    if (out.standard_errors) out.standard_errors = al.P.cwiseAbs() * (*out.standard_errors);
  }
  return out;
}

Matrix estimate_sigma_plugin(const Matrix& Y, const Matrix& A, const RestrictionSpec& spec) {
  validate_data(Y);
  if (spec.stat != StatKind::moment)
    throw InvalidArgument("plug-in covariance is implemented for moment restrictions only");
  const int d = spec.dim();
  if (Y.cols() != d) throw InvalidArgument("data dimension does not match the restriction pattern");
  // The sample restriction vector is the mean of per-observation terms g_s built from
  // eps_s = A y_s, so its covariance is the sample covariance of those terms.
  const Eigen::Index n = Y.rows();
  Matrix E = Y * A.transpose();
  Matrix G(n, spec.d_g());
  auto sp2 = IndexSpace::get(d, 2);
  Eigen::Index col = 0;
  for (std::size_t u = 0; u < sp2->size(); ++u) {
    const auto& idx = sp2->index(u);
    G.col(col++) = E.col(idx[0]).cwiseProduct(E.col(idx[1]));
  }
  for (const auto& idx : spec.pattern.indices) {
    Vector p = E.col(idx[0]);
    for (std::size_t k = 1; k < idx.size(); ++k) p = p.cwiseProduct(E.col(idx[k]));
    G.col(col++) = p;
  }
  if (spec.include_mean)
    for (int a = 0; a < d; ++a) G.col(col++) = E.col(a);
  Vector mean = G.colwise().mean();
  G.rowwise() -= mean.transpose();
  Matrix S = Matrix::Zero(G.cols(), G.cols());
  S.selfadjointView<Eigen::Lower>().rankUpdate(G.transpose(), 1.0 / static_cast<double>(n));
  return S.selfadjointView<Eigen::Lower>();
}

Matrix estimate_sigma_bootstrap(const Matrix& Y, const Matrix& A, const RestrictionSpec& spec, int B,
                                std::uint64_t seed) {
  validate_data(Y);
  if (B < 2) throw InvalidArgument("bootstrap needs B >= 2");
  const Eigen::Index n = Y.rows();
  const int dg = spec.d_g();
  Matrix draws(B, dg);
  Matrix Ystar(n, Y.cols());
  for (int b = 0; b < B; ++b) {
    Rng rng = make_stream(seed ^ 0xb0075742ULL, static_cast<std::uint64_t>(b));
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    for (Eigen::Index i = 0; i < n; ++i) Ystar.row(i) = Y.row(pick(rng));
    SampleStatistics s = compute_statistics(Ystar, spec);
    draws.row(b) = residual(A, s, spec).transpose();
  }
  Vector mean = draws.colwise().mean();
  draws.rowwise() -= mean.transpose();
  return static_cast<double>(n) * (draws.transpose() * draws) / static_cast<double>(B - 1);
}

Alignment align_to_reference(const Matrix& A_hat, const Matrix& A_ref) {
  if (A_hat.rows() != A_ref.rows() || A_hat.cols() != A_ref.cols()) throw InvalidArgument("matrix shapes differ");
  const int d = static_cast<int>(A_hat.rows());
  if (d > 6) throw InvalidArgument("alignment enumerates signed permutations and supports d <= 6");
  Alignment best;
  best.distance = std::numeric_limits<double>::infinity();
  for (const auto& P : signed_permutations(d)) {
    double dist = (P * A_hat - A_ref).norm();
    if (dist < best.distance) {
      best.distance = dist;
      best.P = P;
    }
  }
  best.aligned = best.P * A_hat;
  return best;
}

Exploration explore_identified_set(const SymmetricTensor& T, const ZeroPattern& I, int starts, std::uint64_t seed,
                                   double tol) {
  const int d = T.dim();
  RestrictionSpec spec;
  spec.r = T.order();
  spec.stat = StatKind::moment;
  spec.pattern = I;
  SampleStatistics s;
  s.h2 = SymmetricTensor::from_matrix(Matrix::Identity(d, d));
  s.hr = T;
  s.n = 1;
  Exploration out;
  out.starts = starts;
  for (int k = 0; k < starts; ++k) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(k));
    LmResult lm = minimize_objective(s, spec, random_orthogonal(d, rng), nullptr);
    // Nearest orthogonal matrix, then an exact membership check.
    Eigen::JacobiSVD<Matrix> svd(lm.A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix Q = svd.matrixU() * svd.matrixV().transpose();
    if (!verify_in_GT(Q, T, I, tol)) continue;
    bool dup = std::any_of(out.solutions.begin(), out.solutions.end(),
                           [&](const Matrix& P) { return (P - Q).norm() <= 1e-6; });
    if (dup) continue;
    out.solutions.push_back(Q);
    out.signed_permutation.push_back(is_signed_permutation(Q, 1e-6));
  }
  return out;
}

}  // namespace nica
