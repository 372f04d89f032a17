#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "logitcond/error.hpp"

namespace logitcond {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class NormKind { L1, L2, LInf };

inline const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::L1: return "l1";
    case NormKind::L2: return "l2";
    case NormKind::LInf: return "linf";
  }
  return "?";
}

inline NormKind parse_norm(const std::string& s) {
  if (s == "l1" || s == "L1") return NormKind::L1;
  if (s == "l2" || s == "L2") return NormKind::L2;
  if (s == "linf" || s == "LInf" || s == "Linf") return NormKind::LInf;
  throw Error(ErrorCode::InvalidArgument, "unknown norm '" + s + "'");
}

inline NormKind dual_kind(NormKind k) {
  switch (k) {
    case NormKind::L1: return NormKind::LInf;
    case NormKind::L2: return NormKind::L2;
    case NormKind::LInf: return NormKind::L1;
  }
  return k;
}

inline double lp_norm(NormKind k, const Eigen::Ref<const Vec>& v) {
  switch (k) {
    case NormKind::L1: return v.lpNorm<1>();
    case NormKind::L2: return v.norm();
    case NormKind::LInf: return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

struct NormSpec {
  NormKind kind = NormKind::L2;

  NormSpec() = default;
  NormSpec(NormKind k) : kind(k) {}  // NOLINT(google-explicit-constructor)

  NormSpec dual() const { return NormSpec(dual_kind(kind)); }
  double norm(const Eigen::Ref<const Vec>& v) const { return lp_norm(kind, v); }
  double dual_norm(const Eigen::Ref<const Vec>& v) const { return lp_norm(dual_kind(kind), v); }
  const char* name() const { return to_string(kind); }
  bool operator==(const NormSpec&) const = default;
};

inline double dual_norm(NormSpec norm, const Eigen::Ref<const Vec>& v) { return norm.dual_norm(v); }

// Unit-norm d maximizing g^T d. L1 picks the lowest index of maximal |g_j|;
// LInf uses sign(0) = +1.
inline Vec unit_maximizer(NormSpec norm, const Eigen::Ref<const Vec>& g) {
  const Eigen::Index p = g.size();
  if (p == 0 || (g.array() == 0.0).all()) throw Error(ErrorCode::ZeroGradient, "unit_maximizer of zero vector");
  Vec d = Vec::Zero(p);
  switch (norm.kind) {
    case NormKind::L2:
      d = g / g.norm();
      break;
    case NormKind::L1: {
      Eigen::Index best = 0;
      double best_abs = std::abs(g(0));
      for (Eigen::Index j = 1; j < p; ++j) {
        if (std::abs(g(j)) > best_abs) {
          best_abs = std::abs(g(j));
          best = j;
        }
      }
      d(best) = g(best) < 0 ? -1.0 : 1.0;
      break;
    }
    case NormKind::LInf:
      for (Eigen::Index j = 0; j < p; ++j) d(j) = g(j) < 0 ? -1.0 : 1.0;
      break;
  }
  return d;
}

struct OperatorNormValue {
  double value = 0.0;
  bool certified = true;
};

struct OperatorNorms {
  OperatorNormValue x_dot_2;
  OperatorNormValue x_2_inf;
  OperatorNormValue x_dot_inf;
};

namespace detail {

inline void require_finite(const Mat& X, const char* what) {
  if (X.size() == 0) throw Error(ErrorCode::InvalidArgument, std::string(what) + ": empty matrix");
  if (!X.allFinite()) throw Error(ErrorCode::NonFinite, std::string(what) + ": non-finite entry");
}

// deterministic pseudo-random unit vector used to restart power iteration
inline Vec scrambled_start(Eigen::Index p, unsigned salt) {
  Vec v(p);
  std::uint64_t s = 0x2545f4914f6cdd1dULL + salt;
  for (Eigen::Index j = 0; j < p; ++j) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v(j) = static_cast<double>(s >> 11) * 0x1.0p-53 - 0.5;
  }
  return v / v.norm();
}

// Largest eigenvalue of a symmetric PSD matrix by power iteration from v0.
inline double power_iteration_psd(const Mat& A, Vec v, int max_iter = 200000) {
  double theta = 0.0;
  unsigned restarts = 0;
  for (int it = 0; it < max_iter; ++it) {
    Vec w = A * v;
    const double wn = w.norm();
    if (wn == 0.0) {
      if (restarts++ > 4) return 0.0;
      v = scrambled_start(v.size(), restarts);
      continue;
    }
    const double next = v.dot(w);
    v = w / wn;
    if (it > 2 && std::abs(next - theta) <= 1e-15 * std::abs(next)) return next;
    theta = next;
  }
  return theta;
}

}  // namespace detail

// Largest singular value of X.
inline double sigma_max(const Mat& X) {
  detail::require_finite(X, "sigma_max");
  const Mat A = X.transpose() * X;
  const Eigen::Index p = A.rows();
  if (p == 1) return std::sqrt(std::max(0.0, A(0, 0)));
  const Vec ones = Vec::Ones(p) / std::sqrt(static_cast<double>(p));
  const double a = detail::power_iteration_psd(A, ones);
  const double b = detail::power_iteration_psd(A, detail::scrambled_start(p, 0));
  return std::sqrt(std::max({a, b, 0.0}));
}

// max over ||beta|| <= 1 of ||X beta||_2
inline OperatorNormValue operator_norm_x_dot_2(NormSpec norm, const Mat& X) {
  detail::require_finite(X, "operator_norm_x_dot_2");
  switch (norm.kind) {
    case NormKind::L2:
      return {sigma_max(X), true};
    case NormKind::L1:
      return {X.colwise().norm().maxCoeff(), true};
    case NormKind::LInf:
      return {std::sqrt(static_cast<double>(X.cols())) * sigma_max(X), false};
  }
  return {};
}

inline double max_row_dual_norm(NormSpec norm, const Mat& X) {
  detail::require_finite(X, "max_row_dual_norm");
  double best = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) best = std::max(best, norm.dual_norm(X.row(i).transpose()));
  return best;
}

inline OperatorNorms operator_norms(NormSpec norm, const Mat& X) {
  OperatorNorms out;
  out.x_dot_2 = operator_norm_x_dot_2(norm, X);
  out.x_2_inf = {max_row_dual_norm(NormKind::L2, X), true};
  out.x_dot_inf = {max_row_dual_norm(norm, X), true};
  return out;
}

inline void require_symmetric(const Mat& M) {
  if (M.rows() != M.cols() || M.rows() == 0) throw Error(ErrorCode::NotSymmetric, "matrix is not square");
  if (!M.allFinite()) throw Error(ErrorCode::NonFinite, "matrix has non-finite entries");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric within 1e-12");
}

inline double lambda_min_sym(const Mat& M) {
  require_symmetric(M);
  if (M.rows() == 1) return M(0, 0);
  if (M.rows() == 2) {
    const double a = M(0, 0), d = M(1, 1), b = 0.5 * (M(0, 1) + M(1, 0));
    const double mean = 0.5 * (a + d);
    const double rad = std::hypot(0.5 * (a - d), b);
    const double lo = mean - rad;
    const double hi = mean + rad;
    // recover the small root from the product when the subtraction cancels
    if (hi != 0.0 && std::abs(lo) < 1e-4 * std::abs(hi)) return (a * d - b * b) / hi;
    return lo;
  }
  const Mat S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline double lambda_max_sym(const Mat& M) {
  require_symmetric(M);
  if (M.rows() == 1) return M(0, 0);
  const Mat S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(S.rows() - 1);
}

}  // namespace logitcond
