#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "logitcond/data.hpp"
#include "logitcond/error.hpp"
#include "logitcond/lp.hpp"
#include "logitcond/norms.hpp"
#include "logitcond/random.hpp"

namespace logitcond {

constexpr double kLn2 = std::numbers::ln2;

// ---------------------------------------------------------------- min-norm point

struct MinNormPoint {
  Vec lambda;  // convex weights over the input points
  Vec point;   // sum_i lambda_i P_i
  int iterations = 0;
  bool converged = false;
};

// Wolfe's algorithm for the minimum-l2-norm point of conv{rows of P}.
inline MinNormPoint wolfe_min_norm_point(const Mat& P, int max_iter = 100000) {
  const Eigen::Index n = P.rows();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "wolfe_min_norm_point: no points");
  const Vec sq = P.rowwise().squaredNorm();
  const double scale2 = std::max(sq.maxCoeff(), std::numeric_limits<double>::min());
  Eigen::Index i0 = 0;
  sq.minCoeff(&i0);
  std::vector<Eigen::Index> S{i0};
  std::vector<double> w{1.0};
  MinNormPoint out;
  auto current = [&]() {
    Vec x = Vec::Zero(P.cols());
    for (std::size_t k = 0; k < S.size(); ++k) x += w[k] * P.row(S[k]).transpose();
    return x;
  };
  Vec x = current();
  for (int it = 0; it < max_iter; ++it) {
    out.iterations = it + 1;
    if (x.squaredNorm() <= 1e-30 * scale2) {
      out.converged = true;
      break;
    }
    const Vec scores = P * x;
    Eigen::Index j = 0;
    const double best = scores.minCoeff(&j);
    if (x.squaredNorm() - best <= 1e-14 * scale2) {
      out.converged = true;
      break;
    }
    if (std::find(S.begin(), S.end(), j) != S.end()) {
      out.converged = true;
      break;
    }
    S.push_back(j);
    w.push_back(0.0);
    for (int minor = 0; minor < 1000; ++minor) {
      const auto k = static_cast<Eigen::Index>(S.size());
      Mat K = Mat::Zero(k + 1, k + 1);
      for (Eigen::Index a = 0; a < k; ++a)
        for (Eigen::Index b = 0; b < k; ++b) K(a, b) = P.row(S[a]).dot(P.row(S[b]));
      K.block(0, k, k, 1).setOnes();
      K.block(k, 0, 1, k).setOnes();
      Vec rhs = Vec::Zero(k + 1);
      rhs(k) = 1.0;
      const Vec sol = K.completeOrthogonalDecomposition().solve(rhs);
      const Vec alpha = sol.head(k);
      if ((alpha.array() > 1e-15).all()) {
        for (Eigen::Index a = 0; a < k; ++a) w[a] = alpha(a);
        break;
      }
      double theta = 1.0;
      for (Eigen::Index a = 0; a < k; ++a)
        if (alpha(a) <= 1e-15) theta = std::min(theta, w[a] / (w[a] - alpha(a)));
      for (Eigen::Index a = 0; a < k; ++a) w[a] = (1.0 - theta) * w[a] + theta * alpha(a);
      std::vector<Eigen::Index> S2;
      std::vector<double> w2;
      for (Eigen::Index a = 0; a < k; ++a)
        if (w[a] > 1e-15) {
          S2.push_back(S[a]);
          w2.push_back(w[a]);
        }
      if (S2.empty()) {
        S2.push_back(j);
        w2.push_back(1.0);
      }
      S.swap(S2);
      w.swap(w2);
    }
    double total = 0.0;
    for (double v : w) total += v;
    for (double& v : w) v /= total;
    x = current();
  }
  out.lambda = Vec::Zero(n);
  for (std::size_t k = 0; k < S.size(); ++k) out.lambda(S[k]) += w[k];
  out.point = P.transpose() * out.lambda;
  return out;
}

// ---------------------------------------------------------------- DegSEP

enum class DegSepMethod { Auto, Wolfe, LinearProgram, MirrorDescent };

inline const char* to_string(DegSepMethod m) {
  switch (m) {
    case DegSepMethod::Auto: return "Auto";
    case DegSepMethod::Wolfe: return "Wolfe";
    case DegSepMethod::LinearProgram: return "LinearProgram";
    case DegSepMethod::MirrorDescent: return "MirrorDescent";
  }
  return "?";
}

struct DegSepResult {
  double value = 0.0;  // upper bound ||X^T Y lambda||_*
  double lower = 0.0;  // rho(beta) for the returned feasible beta, clipped at 0
  double gap = 0.0;
  Vec lambda;
  Vec beta;
  DegSepMethod method = DegSepMethod::Auto;
  bool converged = false;
};

struct DegSepOptions {
  double tol = 1e-10;
  DegSepMethod method = DegSepMethod::Auto;
  long mirror_iterations = 200000;
};

namespace detail {

inline DegSepResult finish_degsep(const Mat& A, NormSpec norm, Vec lambda, Vec beta, DegSepMethod m, double tol) {
  lambda = lambda.cwiseMax(0.0);
  const double s = lambda.sum();
  if (s > 0) lambda /= s;
  DegSepResult r;
  r.method = m;
  r.value = norm.dual_norm(A.transpose() * lambda);
  const double bn = norm.norm(beta);
  if (bn > 1.0) beta /= bn;
  r.lower = std::max(0.0, bn > 0 ? (A * beta).minCoeff() : 0.0);
  if (r.lower <= 0.0) beta.setZero();
  r.gap = std::max(0.0, r.value - r.lower);
  r.converged = r.gap <= tol;
  r.lambda = std::move(lambda);
  r.beta = std::move(beta);
  return r;
}

// lambda side: min_{lambda in simplex} ||A^T lambda||_* for a polyhedral primal norm
inline Vec degsep_dual_lp(const Mat& A, NormSpec norm) {
  const Eigen::Index n = A.rows(), p = A.cols();
  const bool linf_dual = norm.kind == NormKind::L1;  // dual norm l-inf needs one bound t
  const Eigen::Index nt = linf_dual ? 1 : p;
  const Eigen::Index nv = n + nt + 2 * p;
  Mat M = Mat::Zero(2 * p + 1, nv);
  Vec b = Vec::Zero(2 * p + 1);
  Vec c = Vec::Zero(nv);
  for (Eigen::Index j = 0; j < p; ++j) {
    M.row(j).head(n) = A.col(j).transpose();
    M.row(p + j).head(n) = -A.col(j).transpose();
    const Eigen::Index tcol = n + (linf_dual ? 0 : j);
    M(j, tcol) = -1.0;
    M(p + j, tcol) = -1.0;
    M(j, n + nt + j) = 1.0;
    M(p + j, n + nt + p + j) = 1.0;
  }
  M.row(2 * p).head(n).setOnes();
  b(2 * p) = 1.0;
  c.segment(n, nt).setOnes();
  const LpResult r = solve_lp(M, b, c);
  if (r.status != LpStatus::Optimal) throw Error(ErrorCode::MethodUnavailable, "degsep dual LP did not solve");
  return r.x.head(n);
}

// beta side: max_{||beta|| <= 1} min_i a_i^T beta
inline Vec degsep_primal_lp(const Mat& A, NormSpec norm) {
  const Eigen::Index n = A.rows(), p = A.cols();
  const bool l1 = norm.kind == NormKind::L1;
  const Eigen::Index nr = l1 ? 1 : p;
  // columns: beta+ (p), beta- (p), ball slack (nr), t+ , t-, margin slack (n)
  const Eigen::Index nv = 2 * p + nr + 2 + n;
  const Eigen::Index rows = nr + n;
  Mat M = Mat::Zero(rows, nv);
  Vec b = Vec::Zero(rows);
  Vec c = Vec::Zero(nv);
  if (l1) {
    M.row(0).head(2 * p).setOnes();
    M(0, 2 * p) = 1.0;
    b(0) = 1.0;
  } else {
    for (Eigen::Index j = 0; j < p; ++j) {
      M(j, j) = 1.0;
      M(j, p + j) = 1.0;
      M(j, 2 * p + j) = 1.0;
      b(j) = 1.0;
    }
  }
  const Eigen::Index tp = 2 * p + nr;
  for (Eigen::Index i = 0; i < n; ++i) {
    M.row(nr + i).head(p) = A.row(i);
    M.row(nr + i).segment(p, p) = -A.row(i);
    M(nr + i, tp) = -1.0;
    M(nr + i, tp + 1) = 1.0;
    M(nr + i, tp + 2 + i) = -1.0;
  }
  c(tp) = -1.0;
  c(tp + 1) = 1.0;
  const LpResult r = solve_lp(M, b, c);
  if (r.status != LpStatus::Optimal) throw Error(ErrorCode::MethodUnavailable, "degsep primal LP did not solve");
  return r.x.head(p) - r.x.segment(p, p);
}

inline DegSepResult degsep_mirror(const Mat& A, NormSpec norm, const DegSepOptions& opt) {
  const Eigen::Index n = A.rows(), p = A.cols();
  Vec lambda = Vec::Constant(n, 1.0 / static_cast<double>(n));
  Vec best_lambda = lambda;
  double best_upper = std::numeric_limits<double>::infinity();
  Vec beta_sum = Vec::Zero(p);
  Vec best_beta = Vec::Zero(p);
  double best_lower = 0.0;
  const double G = A.cwiseAbs().maxCoeff() * (norm.kind == NormKind::LInf ? static_cast<double>(p) : 1.0);
  const double eta0 = std::sqrt(2.0 * std::log(static_cast<double>(std::max<Eigen::Index>(n, 2)))) / std::max(G, 1e-300);
  for (long k = 0; k < opt.mirror_iterations; ++k) {
    const Vec z = A.transpose() * lambda;
    const double up = norm.dual_norm(z);
    if (up < best_upper) {
      best_upper = up;
      best_lambda = lambda;
    }
    if (up == 0.0) break;
    const Vec beta = unit_maximizer(norm, z);
    beta_sum += beta;
    const Vec avg = beta_sum / static_cast<double>(k + 1);
    const double an = norm.norm(avg);
    if (an > 0) {
      const double lo = (A * (avg / std::max(an, 1.0))).minCoeff();
      if (lo > best_lower) {
        best_lower = lo;
        best_beta = avg / std::max(an, 1.0);
      }
    }
    if (best_upper - best_lower <= opt.tol) break;
    const Vec g = A * beta;
    const double eta = eta0 / std::sqrt(static_cast<double>(k + 1));
    Vec logits = lambda.array().log().matrix() - eta * g;
    logits.array() -= logits.maxCoeff();
    lambda = logits.array().exp().matrix();
    lambda /= lambda.sum();
    lambda = lambda.cwiseMax(1e-300);
  }
  return finish_degsep(A, norm, best_lambda, best_beta, DegSepMethod::MirrorDescent, opt.tol);
}

}  // namespace detail

// max over ||beta|| <= 1 of min_i y_i beta^T x_i, with a dual hull certificate
inline DegSepResult degsep(const Dataset& data, NormSpec norm, const DegSepOptions& opt = {}) {
  if (!(opt.tol > 0)) throw Error(ErrorCode::InvalidArgument, "degsep tolerance must be positive");
  const Mat A = data.signed_rows();
  DegSepMethod m = opt.method;
  if (m == DegSepMethod::Auto) m = norm.kind == NormKind::L2 ? DegSepMethod::Wolfe : DegSepMethod::LinearProgram;
  if (m == DegSepMethod::MirrorDescent) return detail::degsep_mirror(A, norm, opt);

  const MinNormPoint mnp = wolfe_min_norm_point(A);
  const double scale = A.rowwise().norm().maxCoeff();
  if (norm.kind == NormKind::L2 || m == DegSepMethod::Wolfe) {
    if (norm.kind != NormKind::L2) throw Error(ErrorCode::MethodUnavailable, "Wolfe path needs the l2 norm");
    const double zn = mnp.point.norm();
    Vec beta = zn > 1e-13 * std::max(scale, 1e-300) ? Vec(mnp.point / zn) : Vec(Vec::Zero(data.p()));
    return detail::finish_degsep(A, norm, mnp.lambda, beta, DegSepMethod::Wolfe, opt.tol);
  }
  // zero in the hull does not depend on the norm
  if (mnp.point.norm() <= 1e-13 * std::max(scale, 1e-300))
    return detail::finish_degsep(A, norm, mnp.lambda, Vec::Zero(data.p()), DegSepMethod::Wolfe, opt.tol);
  Vec lambda = detail::degsep_dual_lp(A, norm);
  Vec beta = detail::degsep_primal_lp(A, norm);
  return detail::finish_degsep(A, norm, lambda, beta, DegSepMethod::LinearProgram, opt.tol);
}

// ---------------------------------------------------------------- DegNSEP

enum class DegNsepMethod { Auto, CertifiedGrid, FacetExact, Heuristic };

inline const char* to_string(DegNsepMethod m) {
  switch (m) {
    case DegNsepMethod::Auto: return "Auto";
    case DegNsepMethod::CertifiedGrid: return "CertifiedGrid";
    case DegNsepMethod::FacetExact: return "FacetExact";
    case DegNsepMethod::Heuristic: return "Heuristic";
  }
  return "?";
}

struct DegNsepResult {
  double value = 0.0;        // objective at the witness, an upper bound
  double lower_bound = 0.0;  // certified lower bound (0 for Heuristic)
  Vec witness;               // unit-norm beta attaining value
  DegNsepMethod method = DegNsepMethod::Heuristic;

  bool certified() const { return method != DegNsepMethod::Heuristic; }
};

struct DegNsepOptions {
  DegNsepMethod method = DegNsepMethod::Auto;
  double grid_tol = 1e-6;
  int initial_grid = 4096;
  int heuristic_starts = 64;
  int heuristic_iterations = 2000;
  std::uint64_t seed = 0x5eed;
};

// sum_i c_i [a_i^T beta]^-
inline double misclassification(const Mat& A, const Vec& c, const Eigen::Ref<const Vec>& beta) {
  const Vec t = A * beta;
  double s = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i)
    if (t(i) < 0) s -= c(i) * t(i);
  return s;
}

inline double misclassification(const Dataset& data, const Eigen::Ref<const Vec>& beta) {
  return misclassification(data.signed_rows(), Vec::Constant(data.n(), 1.0 / static_cast<double>(data.n())), beta);
}

namespace detail {

// closed unit circle of a norm in the plane, arc-length parametrized in that norm
struct UnitCurve2 {
  NormKind kind;
  double perimeter() const { return kind == NormKind::L2 ? 2.0 * std::numbers::pi : 8.0; }
  Vec at(double s) const {
    Vec b(2);
    if (kind == NormKind::L2) {
      b << std::cos(s), std::sin(s);
      return b;
    }
    static const double l1v[5][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}, {1, 0}};
    static const double liv[5][2] = {{1, -1}, {1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
    const auto& v = kind == NormKind::L1 ? l1v : liv;
    s = std::clamp(s, 0.0, 8.0);
    int k = std::min(3, static_cast<int>(s / 2.0));
    const double t = (s - 2.0 * k) / 2.0;
    b << v[k][0] + t * (v[k + 1][0] - v[k][0]), v[k][1] + t * (v[k + 1][1] - v[k][1]);
    return b;
  }
};

inline DegNsepResult degnsep_one_dim(const Mat& A, const Vec& c) {
  Vec plus(1), minus(1);
  plus << 1.0;
  minus << -1.0;
  const double fp = misclassification(A, c, plus), fm = misclassification(A, c, minus);
  DegNsepResult r;
  r.method = DegNsepMethod::CertifiedGrid;
  r.value = std::min(fp, fm);
  r.lower_bound = r.value;
  r.witness = fm < fp ? minus : plus;
  return r;
}

// Lipschitz branch and bound on the planar unit circle of `norm`.
inline DegNsepResult degnsep_grid(const Mat& A, const Vec& c, NormSpec norm, const DegNsepOptions& opt) {
  const UnitCurve2 curve{norm.kind};
  double lip = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) lip += c(i) * norm.dual_norm(A.row(i).transpose());
  auto f = [&](double s) { return misclassification(A, c, curve.at(s)); };

  double best = std::numeric_limits<double>::infinity();
  double best_s = 0.0;
  auto consider = [&](double s, double v) {
    if (v < best) {
      best = v;
      best_s = s;
    }
  };

  // Candidate optima: the objective is concave between kinks, so kinks and vertices are exact candidates.
  const double P = curve.perimeter();
  std::vector<double> kinks;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double a0 = A(i, 0), a1 = A(i, 1);
    if (a0 == 0.0 && a1 == 0.0) continue;
    for (int sgn = -1; sgn <= 1; sgn += 2) {
      Vec d(2);
      d << -a1 * sgn, a0 * sgn;
      if (norm.kind == NormKind::L2) {
        double th = std::atan2(d(1), d(0));
        if (th < 0) th += 2.0 * std::numbers::pi;
        kinks.push_back(th);
      } else {
        d /= norm.norm(d);
        // locate d on the polygon by scanning its four edges
        for (int k = 0; k < 4; ++k) {
          const Vec v0 = curve.at(2.0 * k), v1 = curve.at(2.0 * k + 2.0);
          const Vec e = v1 - v0;
          const Eigen::Index axis = std::abs(e(0)) >= std::abs(e(1)) ? 0 : 1;
          const double t = (d(axis) - v0(axis)) / e(axis);
          if (t >= -1e-12 && t <= 1 + 1e-12) {
            const Vec q = v0 + std::clamp(t, 0.0, 1.0) * e;
            if ((q - d).norm() <= 1e-9) kinks.push_back(2.0 * k + 2.0 * std::clamp(t, 0.0, 1.0));
          }
        }
      }
    }
  }
  if (norm.kind != NormKind::L2)
    for (int k = 0; k < 4; ++k) kinks.push_back(2.0 * k);
  for (double s : kinks) consider(s, f(s));

  struct Interval {
    double a, b, fa, fb, lower;
    bool operator<(const Interval& o) const { return lower > o.lower; }  // min-heap on lower
  };
  std::priority_queue<Interval> heap;
  const int N = std::max(16, opt.initial_grid);
  std::vector<double> vals(static_cast<std::size_t>(N) + 1);
  for (int k = 0; k <= N; ++k) {
    const double s = P * k / N;
    vals[static_cast<std::size_t>(k)] = k == N ? vals[0] : f(s);
    consider(s, vals[static_cast<std::size_t>(k)]);
  }
  for (int k = 0; k < N; ++k) {
    const double a = P * k / N, b = P * (k + 1) / N;
    const double fa = vals[static_cast<std::size_t>(k)], fb = vals[static_cast<std::size_t>(k) + 1];
    heap.push({a, b, fa, fb, 0.5 * (fa + fb - lip * (b - a))});
  }
  double lower = heap.top().lower;
  long evals = 0;
  while (!heap.empty()) {
    const Interval top = heap.top();
    lower = top.lower;
    if (best - std::max(0.0, lower) <= opt.grid_tol || evals > 20000000) break;
    heap.pop();
    const double m = 0.5 * (top.a + top.b);
    const double fm = f(m);
    ++evals;
    consider(m, fm);
    heap.push({top.a, m, top.fa, fm, 0.5 * (top.fa + fm - lip * (m - top.a))});
    heap.push({m, top.b, fm, top.fb, 0.5 * (fm + top.fb - lip * (top.b - m))});
  }
  DegNsepResult r;
  r.method = DegNsepMethod::CertifiedGrid;
  r.witness = curve.at(best_s);
  r.witness /= norm.norm(r.witness);
  r.value = misclassification(A, c, r.witness);
  r.lower_bound = std::clamp(lower, 0.0, r.value);
  return r;
}

// min sum c_i r_i  s.t.  r_i >= -a_i^T beta, r >= 0, s^T beta = 1 (beta free)
inline std::optional<Vec> plane_lp(const Mat& A, const Vec& c, const Vec& s) {
  const Eigen::Index n = A.rows(), p = A.cols();
  const Eigen::Index nv = 2 * p + 2 * n;
  Mat M = Mat::Zero(n + 1, nv);
  Vec b = Vec::Zero(n + 1);
  Vec cost = Vec::Zero(nv);
  for (Eigen::Index i = 0; i < n; ++i) {
    M.row(i).head(p) = A.row(i);
    M.row(i).segment(p, p) = -A.row(i);
    M(i, 2 * p + i) = 1.0;
    M(i, 2 * p + n + i) = -1.0;
  }
  M.row(n).head(p) = s.transpose();
  M.row(n).segment(p, p) = -s.transpose();
  b(n) = 1.0;
  cost.segment(2 * p, n) = c;
  const LpResult r = solve_lp(M, b, cost);
  if (r.status != LpStatus::Optimal) return std::nullopt;
  return Vec(r.x.head(p) - r.x.segment(p, p));
}

// one LP per facet of the l1 sphere
inline DegNsepResult degnsep_facets(const Mat& A, const Vec& c) {
  const Eigen::Index n = A.rows(), p = A.cols();
  double best = std::numeric_limits<double>::infinity();
  Vec best_beta = Vec::Zero(p);
  const unsigned long facets = 1UL << p;
  for (unsigned long mask = 0; mask < facets; ++mask) {
    Vec sgn(p);
    for (Eigen::Index j = 0; j < p; ++j) sgn(j) = (mask >> j) & 1UL ? -1.0 : 1.0;
    // columns: z (p), r (n), q (n)
    const Eigen::Index nv = p + 2 * n;
    Mat M = Mat::Zero(n + 1, nv);
    Vec b = Vec::Zero(n + 1);
    Vec cost = Vec::Zero(nv);
    for (Eigen::Index i = 0; i < n; ++i) {
      M.row(i).head(p) = A.row(i).cwiseProduct(sgn.transpose());
      M(i, p + i) = 1.0;
      M(i, p + n + i) = -1.0;
    }
    M.row(n).head(p).setOnes();
    b(n) = 1.0;
    cost.segment(p, n) = c;
    const LpResult r = solve_lp(M, b, cost);
    if (r.status != LpStatus::Optimal) continue;
    Vec beta = r.x.head(p).cwiseProduct(sgn);
    const double bn = beta.lpNorm<1>();
    if (bn <= 0) continue;
    beta /= bn;
    const double v = misclassification(A, c, beta);
    if (v < best) {
      best = v;
      best_beta = beta;
    }
  }
  if (!std::isfinite(best)) throw Error(ErrorCode::MethodUnavailable, "facet LPs failed");
  double lip = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) lip += c(i) * A.row(i).cwiseAbs().maxCoeff();
  DegNsepResult r;
  r.method = DegNsepMethod::FacetExact;
  r.witness = best_beta;
  r.value = best;
  r.lower_bound = std::max(0.0, best - 1e-11 * std::max(lip, 1.0));
  return r;
}

inline Vec random_unit(Rng& rng, Eigen::Index p, NormSpec norm) {
  Vec v(p);
  do {
    for (Eigen::Index j = 0; j < p; ++j) v(j) = rng.normal();
  } while (norm.norm(v) == 0.0);
  return v / norm.norm(v);
}

// Multi-start projected subgradient on the unit sphere, polished by tangent-plane LPs.
inline DegNsepResult degnsep_heuristic(const Mat& A, const Vec& c, NormSpec norm, const DegNsepOptions& opt) {
  const Eigen::Index p = A.cols();
  double best = std::numeric_limits<double>::infinity();
  Vec best_beta = Vec::Zero(p);
  double lip = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) lip += c(i) * norm.dual_norm(A.row(i).transpose());
  for (int start = 0; start < std::max(64, opt.heuristic_starts); ++start) {
    Rng rng(opt.seed, static_cast<std::uint64_t>(start));
    Vec beta = random_unit(rng, p, norm);
    double local_best = misclassification(A, c, beta);
    Vec local_beta = beta;
    for (int it = 0; it < opt.heuristic_iterations; ++it) {
      const Vec t = A * beta;
      Vec g = Vec::Zero(p);
      for (Eigen::Index i = 0; i < t.size(); ++i)
        if (t(i) < 0) g -= c(i) * A.row(i).transpose();
      if (g.norm() == 0.0) break;
      const double eta = 0.5 / (std::max(lip, 1e-300) * std::sqrt(static_cast<double>(it + 1)));
      beta -= eta * lip * g / norm.dual_norm(g);
      const double bn = norm.norm(beta);
      if (bn == 0.0) break;
      beta /= bn;
      const double v = misclassification(A, c, beta);
      if (v < local_best) {
        local_best = v;
        local_beta = beta;
      }
    }
    // each tangent-plane LP can only lower the normalized objective
    for (int polish = 0; polish < 25; ++polish) {
      const Vec s = unit_maximizer(norm.dual(), local_beta);
      const auto cand = plane_lp(A, c, s);
      if (!cand) break;
      const double cn = norm.norm(*cand);
      if (cn == 0.0) break;
      const Vec unit = *cand / cn;
      const double v = misclassification(A, c, unit);
      if (v < local_best - 1e-15 * std::max(1.0, local_best)) {
        local_best = v;
        local_beta = unit;
      } else {
        break;
      }
    }
    if (local_best < best) {
      best = local_best;
      best_beta = local_beta;
    }
  }
  DegNsepResult r;
  r.method = DegNsepMethod::Heuristic;
  r.witness = best_beta;
  r.value = best;
  r.lower_bound = 0.0;
  return r;
}

}  // namespace detail

inline DegNsepMethod resolve_degnsep_method(Eigen::Index p, NormSpec norm, DegNsepMethod m) {
  if (m != DegNsepMethod::Auto) return m;
  if (p <= 2) return DegNsepMethod::CertifiedGrid;
  if (norm.kind == NormKind::L1 && p <= 12) return DegNsepMethod::FacetExact;
  return DegNsepMethod::Heuristic;
}

// min over ||beta|| = 1 of sum_i c_i [y_i beta^T x_i]^-, with c uniform for a plain dataset
inline DegNsepResult degnsep(const DiscreteDistribution& dist, NormSpec norm, const DegNsepOptions& opt = {}) {
  const Dataset& data = dist.dataset();
  const Mat A = data.signed_rows();
  const Vec& c = dist.weights();
  const DegNsepMethod m = resolve_degnsep_method(data.p(), norm, opt.method);
  switch (m) {
    case DegNsepMethod::CertifiedGrid:
      if (data.p() == 1) return detail::degnsep_one_dim(A, c);
      if (data.p() != 2) throw Error(ErrorCode::MethodUnavailable, "CertifiedGrid needs p <= 2, got p = " + std::to_string(data.p()));
      return detail::degnsep_grid(A, c, norm, opt);
    case DegNsepMethod::FacetExact:
      if (norm.kind != NormKind::L1 || data.p() > 12)
        throw Error(ErrorCode::MethodUnavailable, std::string("FacetExact needs the l1 norm and p <= 12, got ") + norm.name() + ", p = " + std::to_string(data.p()));
      return detail::degnsep_facets(A, c);
    case DegNsepMethod::Heuristic:
    case DegNsepMethod::Auto:
      break;
  }
  return detail::degnsep_heuristic(A, c, norm, opt);
}

inline DegNsepResult degnsep(const Dataset& data, NormSpec norm, const DegNsepOptions& opt = {}) {
  return degnsep(DiscreteDistribution::uniform(data), norm, opt);
}

// ---------------------------------------------------------------- nu*

struct NuStar {
  double value = 0.0;
  bool certified = true;
};

// min over ||beta|| = 1 of beta^T M beta
inline NuStar nu_star(const Mat& M, NormSpec norm, std::uint64_t seed = 0x5eed) {
  require_symmetric(M);
  const Eigen::Index p = M.rows();
  if (p == 1) return {M(0, 0), true};
  if (norm.kind == NormKind::L2) return {lambda_min_sym(M), true};
  auto q = [&](const Vec& b) { return b.dot(M * b); };
  if (p == 2) {
    const detail::UnitCurve2 curve{norm.kind};
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
      const Vec v0 = curve.at(2.0 * k), v1 = curve.at(2.0 * k + 2.0);
      const Vec e = v1 - v0;
      // q(v0 + t e) = a t^2 + b t + c on t in [0, 1]
      const double a = e.dot(M * e), b = 2.0 * v0.dot(M * e), c0 = v0.dot(M * v0);
      best = std::min({best, c0, a + b + c0});
      if (a > 0) {
        const double t = -b / (2.0 * a);
        if (t > 0 && t < 1) best = std::min(best, c0 + t * (b + a * t));
      }
    }
    return {best, true};
  }
  double best = std::numeric_limits<double>::infinity();
  const double step = 1.0 / std::max(lambda_max_sym(M), 1e-300);
  for (int start = 0; start < 64; ++start) {
    Rng rng(seed, static_cast<std::uint64_t>(start));
    Vec b = detail::random_unit(rng, p, norm);
    for (int it = 0; it < 2000; ++it) {
      Vec nb = b - 0.5 * step * (M * b) / std::sqrt(static_cast<double>(it + 1));
      const double nn = norm.norm(nb);
      if (nn == 0.0) break;
      b = nb / nn;
      best = std::min(best, q(b));
    }
    best = std::min(best, q(b));
  }
  return {best, false};
}

// ---------------------------------------------------------------- status, report

enum class SeparabilityStatus { Separable, NonSeparable, IllPosed };

inline const char* to_string(SeparabilityStatus s) {
  switch (s) {
    case SeparabilityStatus::Separable: return "Separable";
    case SeparabilityStatus::NonSeparable: return "NonSeparable";
    case SeparabilityStatus::IllPosed: return "IllPosed";
  }
  return "?";
}

struct ConditioningOptions {
  double tol_ill = 1e-8;
  DegSepOptions degsep;
  DegNsepOptions degnsep;
};

struct ConditioningReport {
  NormSpec norm;
  double tol_ill = 1e-8;
  DegSepResult degsep;
  DegNsepResult degnsep;
  SeparabilityStatus status = SeparabilityStatus::IllPosed;
  OperatorNorms operator_norms;
  double smoothness_L = 0.0;
  // 2 ln2 / DegNSEP and ln2 / DegNSEP, taken at the certified lower bound; +inf when unavailable
  double dist0_bound = std::numeric_limits<double>::infinity();
  double beta_star_norm_bound = std::numeric_limits<double>::infinity();
  Eigen::Index n = 0;
  Eigen::Index p = 0;
};

inline SeparabilityStatus classify(const DegSepResult& ds, const DegNsepResult& dn, double tol_ill) {
  if (ds.lower > tol_ill) return SeparabilityStatus::Separable;
  if (dn.certified() && dn.lower_bound > tol_ill) return SeparabilityStatus::NonSeparable;
  return SeparabilityStatus::IllPosed;
}

inline ConditioningReport analyze(const Dataset& data, NormSpec norm, const ConditioningOptions& opt = {}) {
  if (!(opt.tol_ill > 0)) throw Error(ErrorCode::InvalidArgument, "tol_ill must be positive");
  ConditioningReport r;
  r.norm = norm;
  r.tol_ill = opt.tol_ill;
  r.n = data.n();
  r.p = data.p();
  r.degsep = degsep(data, norm, opt.degsep);
  r.degnsep = degnsep(data, norm, opt.degnsep);
  r.status = classify(r.degsep, r.degnsep, opt.tol_ill);
  r.operator_norms = operator_norms(norm, data.X());
  r.smoothness_L = r.operator_norms.x_dot_2.value * r.operator_norms.x_dot_2.value / (4.0 * static_cast<double>(data.n()));
  if (r.degnsep.certified() && r.degnsep.lower_bound > 0) {
    r.dist0_bound = 2.0 * kLn2 / r.degnsep.lower_bound;
    r.beta_star_norm_bound = kLn2 / r.degnsep.lower_bound;
  }
  return r;
}

inline SeparabilityStatus separability_status(const Dataset& data, NormSpec norm, double tol_ill = 1e-8) {
  ConditioningOptions opt;
  opt.tol_ill = tol_ill;
  const DegSepResult ds = degsep(data, norm, opt.degsep);
  if (ds.lower > tol_ill) return SeparabilityStatus::Separable;
  return classify(ds, degnsep(data, norm, opt.degnsep), tol_ill);
}

// ---------------------------------------------------------------- perturbations

enum class PerturbationNorm { ScaledDot1, DotInf };

inline const char* to_string(PerturbationNorm k) {
  return k == PerturbationNorm::ScaledDot1 ? "ScaledDot1" : "DotInf";
}

struct Perturbation {
  Mat delta_X;
  double measured_norm = 0.0;
  PerturbationNorm norm_kind = PerturbationNorm::ScaledDot1;

  Dataset apply(const Dataset& data) const { return data.with_features(data.X() + delta_X); }
};

// Rank-one shift u s^T that makes the witness direction classify every point with margin eps.
inline Perturbation perturb_to_separable(const Dataset& data, NormSpec norm, double eps,
                                         const ConditioningOptions& opt = {}) {
  if (!(eps > 0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  const DegSepResult ds = degsep(data, norm, opt.degsep);
  if (ds.lower > opt.tol_ill) throw Error(ErrorCode::NotApplicable, "dataset is already separable");
  const DegNsepResult dn = degnsep(data, norm, opt.degnsep);
  const Vec& beta = dn.witness;
  const Vec s = unit_maximizer(norm.dual(), beta);
  const Vec t = data.classification_values(beta);
  Vec u(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) u(i) = data.label(i) * (std::max(-t(i), 0.0) + eps);
  Perturbation out;
  out.norm_kind = PerturbationNorm::ScaledDot1;
  out.delta_X = u * s.transpose();
  // ||u s^T||_{.,1} = ||u||_1 ||s||_*
  out.measured_norm = u.lpNorm<1>() * norm.dual_norm(s) / static_cast<double>(data.n());
  return out;
}

// Shift every row by -y_i z with z the minimum-norm hull point, putting 0 in the new hull.
inline Perturbation perturb_to_nonseparable(const Dataset& data, NormSpec norm, const ConditioningOptions& opt = {}) {
  const DegSepResult ds = degsep(data, norm, opt.degsep);
  if (!(ds.lower > opt.tol_ill)) throw Error(ErrorCode::NotApplicable, "dataset is not separable");
  const Vec z = data.X().transpose() * ds.lambda.cwiseProduct(data.y().cast<double>());
  Perturbation out;
  out.norm_kind = PerturbationNorm::DotInf;
  out.delta_X = -data.y().cast<double>() * z.transpose();
  out.measured_norm = max_row_dual_norm(norm, out.delta_X);
  return out;
}

}  // namespace logitcond
