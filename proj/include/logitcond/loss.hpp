#pragma once

#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/Dense>

#include "logitcond/data.hpp"
#include "logitcond/error.hpp"
#include "logitcond/norms.hpp"

namespace logitcond {

// ln(1 + e^{-t})
inline double logistic_loss(double t) { return std::max(-t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

// -l'(t) = 1 / (1 + e^t)
inline double logistic_weight(double t) {
  if (t >= 0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

// l''(t) = e^t / (1 + e^t)^2
inline double logistic_curvature(double t) {
  const double a = std::exp(-std::abs(t));
  return a / ((1.0 + a) * (1.0 + a));
}

// Loss over a finite weighted sample; uniform weights give the empirical loss.
class LossContext {
 public:
  LossContext(const Dataset& data, NormSpec norm)
      : LossContext(DiscreteDistribution::uniform(data), norm) {}

  LossContext(const DiscreteDistribution& dist, NormSpec norm)
      : data_(std::make_shared<const Dataset>(dist.dataset())),
        weights_(dist.weights()),
        norm_(norm),
        uniform_(dist.is_uniform()) {
    const Mat scaled = weights_.cwiseSqrt().asDiagonal() * data_->X();
    const OperatorNormValue op = operator_norm_x_dot_2(norm_, scaled);
    smoothness_L_ = op.value * op.value / 4.0;
    smoothness_certified_ = op.certified;
  }

  const Dataset& dataset() const { return *data_; }
  const Vec& weights() const { return weights_; }
  NormSpec norm() const { return norm_; }
  bool uniform() const { return uniform_; }
  Eigen::Index n() const { return data_->n(); }
  Eigen::Index p() const { return data_->p(); }
  double smoothness_L() const { return smoothness_L_; }
  bool smoothness_certified() const { return smoothness_certified_; }

  void check_beta(const Eigen::Ref<const Vec>& beta) const {
    if (beta.size() != p()) throw Error(ErrorCode::InvalidArgument, "beta has wrong length");
  }

 private:
  std::shared_ptr<const Dataset> data_;
  Vec weights_;
  NormSpec norm_;
  bool uniform_ = true;
  double smoothness_L_ = 0.0;
  bool smoothness_certified_ = true;
};

inline double loss_value(const LossContext& ctx, const Eigen::Ref<const Vec>& beta) {
  ctx.check_beta(beta);
  const Vec t = ctx.dataset().classification_values(beta);
  double s = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) s += ctx.weights()(i) * logistic_loss(t(i));
  return s;
}

// l(a) - l(b) without the cancellation of subtracting two nearby losses
inline double logistic_loss_difference(double a, double b) {
  if (std::abs(b - a) > 30.0) return logistic_loss(a) - logistic_loss(b);
  return std::log1p(logistic_weight(b) * std::expm1(b - a));
}

// L(beta) - L(ref)
inline double loss_difference(const LossContext& ctx, const Eigen::Ref<const Vec>& beta, const Eigen::Ref<const Vec>& ref) {
  ctx.check_beta(beta);
  ctx.check_beta(ref);
  const Vec b = ctx.dataset().classification_values(ref);
  const Vec d = ctx.dataset().classification_values(beta - ref);  // a - b without rounding a and b separately
  double s = 0.0;
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    const double a = b(i) + d(i);
    s += ctx.weights()(i) * (std::abs(d(i)) > 30.0 ? logistic_loss(a) - logistic_loss(b(i))
                                                   : std::log1p(logistic_weight(b(i)) * std::expm1(-d(i))));
  }
  return s;
}

struct DualWeights {
  Vec w;

  // w_i kept inside [eps, 1 - eps] for log-safe display only
  Vec reported(double eps = 1e-300) const {
    // largest double below 1 when 1 - eps rounds to 1
    const double hi = std::min(1.0 - eps, std::nextafter(1.0, 0.0));
    return w.cwiseMax(eps).cwiseMin(hi);
  }
};

inline DualWeights dual_weights(const LossContext& ctx, const Eigen::Ref<const Vec>& beta) {
  ctx.check_beta(beta);
  const Vec t = ctx.dataset().classification_values(beta);
  DualWeights out{Vec(t.size())};
  for (Eigen::Index i = 0; i < t.size(); ++i) out.w(i) = logistic_weight(t(i));
  return out;
}

inline Vec gradient(const LossContext& ctx, const Eigen::Ref<const Vec>& beta) {
  ctx.check_beta(beta);
  const Dataset& d = ctx.dataset();
  const Vec t = d.classification_values(beta);
  Vec coef(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) coef(i) = -ctx.weights()(i) * d.label(i) * logistic_weight(t(i));
  return d.X().transpose() * coef;
}

// gradient of the single-observation loss l(y_i beta^T x_i)
inline Vec observation_gradient(const Dataset& d, Eigen::Index i, const Eigen::Ref<const Vec>& beta) {
  const double t = d.label(i) * d.X().row(i).dot(beta);
  return (-d.label(i) * logistic_weight(t)) * d.X().row(i).transpose();
}

inline double observation_loss(const Dataset& d, Eigen::Index i, const Eigen::Ref<const Vec>& beta) {
  return logistic_loss(d.label(i) * d.X().row(i).dot(beta));
}

constexpr Eigen::Index kDenseHessianLimit = 512;

inline Mat hessian(const LossContext& ctx, const Eigen::Ref<const Vec>& beta) {
  ctx.check_beta(beta);
  if (ctx.p() > kDenseHessianLimit)
    throw Error(ErrorCode::InvalidArgument, "dense Hessian limited to p <= 512; use hessian_vector_product");
  const Dataset& d = ctx.dataset();
  const Vec t = d.classification_values(beta);
  Vec g(t.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) g(i) = ctx.weights()(i) * logistic_curvature(t(i));
  Mat H = d.X().transpose() * g.asDiagonal() * d.X();
  return 0.5 * (H + H.transpose());
}

inline Vec hessian_vector_product(const LossContext& ctx, const Eigen::Ref<const Vec>& beta,
                                  const Eigen::Ref<const Vec>& v) {
  ctx.check_beta(beta);
  const Dataset& d = ctx.dataset();
  const Vec t = d.classification_values(beta);
  Vec Xv = d.X() * v;
  for (Eigen::Index i = 0; i < t.size(); ++i) Xv(i) *= ctx.weights()(i) * logistic_curvature(t(i));
  return d.X().transpose() * Xv;
}

// d(w) = sum_i c_i [w_i ln w_i + (1 - w_i) ln(1 - w_i)], 0 ln 0 := 0
inline double prox_value(const Eigen::Ref<const Vec>& w, const Eigen::Ref<const Vec>& c) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const double a = w(i), b = 1.0 - w(i);
    double term = 0.0;
    if (a > 0) term += a * std::log(a);
    if (b > 0) term += b * std::log1p(-a);
    s += c(i) * term;
  }
  return s;
}

inline Vec prox_gradient(const Eigen::Ref<const Vec>& w, const Eigen::Ref<const Vec>& c) {
  Vec g(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) g(i) = c(i) * (std::log(w(i)) - std::log1p(-w(i)));
  return g;
}

// |L(beta) - (-(w*)^T C Y X beta - d(w*))| evaluated with log-space terms
inline double fenchel_gap(const LossContext& ctx, const Eigen::Ref<const Vec>& beta) {
  ctx.check_beta(beta);
  const Vec t = ctx.dataset().classification_values(beta);
  double lhs = 0.0, rhs = 0.0;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    const double c = ctx.weights()(i);
    const double w = logistic_weight(t(i));
    const double log_w = -logistic_loss(-t(i));    // ln(1/(1+e^t))
    const double log_1mw = -logistic_loss(t(i));   // ln(e^t/(1+e^t))
    const double d = (w > 0 ? w * log_w : 0.0) + (1.0 - w > 0 ? (1.0 - w) * log_1mw : 0.0);
    lhs += c * logistic_loss(t(i));
    rhs += c * (-w * t(i) - d);
  }
  return std::abs(lhs - rhs);
}

}  // namespace logitcond
