#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "logitcond/conditioning.hpp"
#include "logitcond/data.hpp"
#include "logitcond/error.hpp"
#include "logitcond/loss.hpp"
#include "logitcond/norms.hpp"
#include "logitcond/random.hpp"

namespace logitcond {

enum class StepKind { GreedyOverL, NonSepLogit, SepL2, ConstantSGD, RCorSGD };

inline const char* to_string(StepKind k) {
  switch (k) {
    case StepKind::GreedyOverL: return "greedy";
    case StepKind::NonSepLogit: return "nonsep";
    case StepKind::SepL2: return "sepl2";
    case StepKind::ConstantSGD: return "const";
    case StepKind::RCorSGD: return "rcor";
  }
  return "?";
}

inline StepKind parse_step_kind(const std::string& s) {
  if (s == "greedy") return StepKind::GreedyOverL;
  if (s == "nonsep") return StepKind::NonSepLogit;
  if (s == "sepl2") return StepKind::SepL2;
  if (s == "const") return StepKind::ConstantSGD;
  if (s == "rcor") return StepKind::RCorSGD;
  throw Error(ErrorCode::InvalidArgument, "unknown step rule '" + s + "'");
}

struct StepRule {
  StepKind kind = StepKind::GreedyOverL;
  double L = 0.0;        // GreedyOverL
  double x_dot_2 = 0.0;  // NonSepLogit
  long n = 0;            // NonSepLogit
  double x_2_inf = 0.0;  // SepL2
  double alpha = 0.0;    // ConstantSGD, and the resolved RCorSGD step
  double R = 0.0;        // RCorSGD
  long horizon = 0;      // RCorSGD

  static StepRule greedy(double L) {
    if (!(L > 0) || !std::isfinite(L)) throw Error(ErrorCode::InvalidArgument, "smoothness constant must be positive");
    StepRule r;
    r.kind = StepKind::GreedyOverL;
    r.L = L;
    return r;
  }
  static StepRule nonsep(double x_dot_2, long n) {
    if (!(x_dot_2 > 0) || n < 1) throw Error(ErrorCode::InvalidArgument, "nonsep rule needs ||X|| > 0 and n >= 1");
    StepRule r;
    r.kind = StepKind::NonSepLogit;
    r.x_dot_2 = x_dot_2;
    r.n = n;
    return r;
  }
  static StepRule sep_l2(double x_2_inf) {
    if (!(x_2_inf > 0)) throw Error(ErrorCode::InvalidArgument, "sepl2 rule needs ||X||_{2,inf} > 0");
    StepRule r;
    r.kind = StepKind::SepL2;
    r.x_2_inf = x_2_inf;
    return r;
  }
  static StepRule constant(double alpha) {
    if (!(alpha > 0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "constant step must be positive");
    StepRule r;
    r.kind = StepKind::ConstantSGD;
    r.alpha = alpha;
    return r;
  }
  static StepRule rcor(double R, long k) {
    if (!(R > 0) || k < 0) throw Error(ErrorCode::InvalidArgument, "rcor rule needs R > 0 and k >= 0");
    StepRule r;
    r.kind = StepKind::RCorSGD;
    r.R = R;
    r.horizon = k;
    r.alpha = kLn2 / (R * R * std::sqrt(static_cast<double>(k) + 1.0));
    return r;
  }

  // rules built from the data the way the guarantees expect them
  static StepRule greedy_for(const LossContext& ctx) { return greedy(ctx.smoothness_L()); }
  static StepRule nonsep_for(const Dataset& d, NormSpec norm) {
    return nonsep(operator_norm_x_dot_2(norm, d.X()).value, static_cast<long>(d.n()));
  }
  static StepRule sep_l2_for(const Dataset& d) { return sep_l2(max_row_dual_norm(NormKind::L2, d.X())); }
  static StepRule rcor_for(const DiscreteDistribution& dist, long k) { return rcor(dist.radius(), k); }

  bool deterministic() const {
    return kind == StepKind::GreedyOverL || kind == StepKind::NonSepLogit || kind == StepKind::SepL2;
  }

  double step(double grad_dual_norm) const {
    switch (kind) {
      case StepKind::GreedyOverL: return grad_dual_norm / L;
      case StepKind::NonSepLogit: return 4.0 * static_cast<double>(n) * grad_dual_norm / (x_dot_2 * x_dot_2);
      case StepKind::SepL2: return 2.0 * grad_dual_norm / (x_2_inf * x_2_inf);
      case StepKind::ConstantSGD:
      case StepKind::RCorSGD: return alpha;
    }
    return 0.0;
  }
};

enum class SgdOption { A, B };

inline const char* to_string(SgdOption o) { return o == SgdOption::A ? "A" : "B"; }

struct IterRecord {
  long iter = 0;
  double loss = 0.0;
  double grad_dual_norm = 0.0;
  double margin = 0.0;
  double beta_norm = 0.0;
  double step_size = 0.0;
  double ref_distance = std::numeric_limits<double>::quiet_NaN();  // ||beta^k - reference|| when a reference is given
  double ref_gap = std::numeric_limits<double>::quiet_NaN();       // L(beta^k) - L(reference), computed without cancellation
  long sample = -1;  // SGD observation drawn at this iterate
};

struct Checkpoint {
  long iter = 0;
  Vec beta;
};

struct TraceMeta {
  std::string algorithm;
  NormSpec norm;
  StepRule rule;
  std::uint64_t seed = 0;
  std::optional<SgdOption> option;
  long k_max = 0;
  long checkpoint_stride = 100;
  bool stationary_exact = false;
  bool guarantees_applicable = true;
  bool full_metrics = true;
  long sampled_index = -1;  // I_k under Option B
};

struct SolverTrace {
  TraceMeta meta;
  std::vector<IterRecord> records;
  std::vector<Checkpoint> checkpoints;
  Vec final_beta;
  Vec output_beta;  // beta-hat for SGD; the last iterate for steepest descent
};

struct DescentOptions {
  long k_max = 1000;
  long checkpoint_stride = 100;
  std::optional<Vec> beta0;      // any start other than 0 marks the trace guarantees-not-applicable
  std::optional<Vec> reference;  // records ||beta^k - reference|| in the run norm
};

// beta^{k+1} = beta^k - alpha_k d^k with d^k the unit maximizer of the gradient
inline SolverTrace steepest_descent(const LossContext& ctx, const StepRule& rule, const DescentOptions& opt = {}) {
  if (!rule.deterministic()) throw Error(ErrorCode::WrongStepRule, "steepest descent needs a deterministic step rule");
  if (rule.kind == StepKind::SepL2 && ctx.norm().kind != NormKind::L2)
    throw Error(ErrorCode::WrongStepRule, "the sepl2 rule is defined for the l2 norm only");
  if (opt.k_max < 0) throw Error(ErrorCode::InvalidArgument, "k_max must be >= 0");
  const NormSpec norm = ctx.norm();
  const long stride = std::max<long>(1, opt.checkpoint_stride);
  SolverTrace tr;
  tr.meta.algorithm = "steepest_descent";
  tr.meta.norm = norm;
  tr.meta.rule = rule;
  tr.meta.k_max = opt.k_max;
  tr.meta.checkpoint_stride = stride;
  Vec beta = Vec::Zero(ctx.p());
  if (opt.beta0) {
    ctx.check_beta(*opt.beta0);
    beta = *opt.beta0;
    tr.meta.guarantees_applicable = (beta.array() == 0.0).all();
  }
  tr.records.reserve(static_cast<std::size_t>(opt.k_max) + 1);
  for (long k = 0; k <= opt.k_max; ++k) {
    IterRecord rec;
    rec.iter = k;
    rec.loss = loss_value(ctx, beta);
    const Vec g = gradient(ctx, beta);
    rec.grad_dual_norm = norm.dual_norm(g);
    rec.margin = margin(ctx.dataset(), beta);
    rec.beta_norm = norm.norm(beta);
    if (opt.reference) {
      rec.ref_distance = norm.norm(beta - *opt.reference);
      rec.ref_gap = loss_difference(ctx, beta, *opt.reference);
    }
    const bool stationary = (g.array() == 0.0).all();
    rec.step_size = stationary ? 0.0 : rule.step(rec.grad_dual_norm);
    tr.records.push_back(rec);
    if (k % stride == 0 || k == opt.k_max || stationary) tr.checkpoints.push_back({k, beta});
    if (stationary) {
      tr.meta.stationary_exact = true;
      break;
    }
    if (k == opt.k_max) break;
    beta -= rec.step_size * unit_maximizer(norm, g);
  }
  tr.final_beta = beta;
  tr.output_beta = beta;
  return tr;
}

struct SgdOptions {
  long k = 1000;
  SgdOption option = SgdOption::A;
  std::uint64_t seed = 0;
  long checkpoint_stride = 100;
  bool full_metrics = true;  // full-data loss, gradient and margin at every iterate
  std::optional<Vec> reference;
};

// Samples with replacement from the distribution; substream 0 draws observations,
// substream 1 drives the Option B index.
inline SolverTrace sgd(const DiscreteDistribution& dist, const StepRule& rule, const SgdOptions& opt) {
  if (rule.kind != StepKind::ConstantSGD && rule.kind != StepKind::RCorSGD)
    throw Error(ErrorCode::WrongStepRule, "sgd needs the const or rcor step rule");
  if (opt.k < 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 0");
  const Dataset& data = dist.dataset();
  const double alpha = rule.alpha;
  const long stride = std::max<long>(1, opt.checkpoint_stride);
  std::optional<LossContext> ctx;
  if (opt.full_metrics) ctx.emplace(dist, NormSpec(NormKind::L2));
  Rng sampler(opt.seed, 0);
  Rng picker(opt.seed, 1);

  SolverTrace tr;
  tr.meta.algorithm = "sgd";
  tr.meta.norm = NormKind::L2;
  tr.meta.rule = rule;
  tr.meta.seed = opt.seed;
  tr.meta.option = opt.option;
  tr.meta.k_max = opt.k;
  tr.meta.checkpoint_stride = stride;
  tr.meta.full_metrics = opt.full_metrics;
  tr.records.reserve(static_cast<std::size_t>(opt.k) + 1);

  Vec beta = Vec::Zero(data.p());
  Vec beta_hat = beta;
  long picked = 0;
  for (long j = 0; j <= opt.k; ++j) {
    if (j > 0) {
      if (opt.option == SgdOption::A) {
        const double w = 1.0 / static_cast<double>(j + 1);
        beta_hat = (1.0 - w) * beta_hat + w * beta;
      } else if (picker.below(static_cast<std::uint64_t>(j + 1)) == 0) {
        picked = j;
        beta_hat = beta;
      }
    }
    IterRecord rec;
    rec.iter = j;
    rec.beta_norm = beta.norm();
    rec.step_size = alpha;
    if (ctx) {
      rec.loss = loss_value(*ctx, beta);
      rec.grad_dual_norm = gradient(*ctx, beta).norm();
      rec.margin = margin(data, beta);
    } else {
      rec.loss = rec.grad_dual_norm = rec.margin = std::numeric_limits<double>::quiet_NaN();
    }
    if (opt.reference) {
      rec.ref_distance = (beta - *opt.reference).norm();
      if (ctx) rec.ref_gap = loss_difference(*ctx, beta, *opt.reference);
    }
    if (j % stride == 0 || j == opt.k) tr.checkpoints.push_back({j, beta});
    if (j < opt.k) {
      const Eigen::Index i = dist.sample(sampler);
      rec.sample = static_cast<long>(i);
      const double t = data.label(i) * data.X().row(i).dot(beta);
      beta += (alpha * data.label(i) * logistic_weight(t)) * data.X().row(i).transpose();
    }
    tr.records.push_back(rec);
  }
  tr.final_beta = beta;
  tr.output_beta = beta_hat;
  if (opt.option == SgdOption::B) tr.meta.sampled_index = picked;
  return tr;
}

struct ReferenceOptimum {
  Vec beta;
  double loss = 0.0;
  Mat hessian;
  double grad_norm = 0.0;
  int iterations = 0;
};

// Damped Newton from 0 until ||grad||_2 <= tol.
inline ReferenceOptimum reference_optimum(const LossContext& ctx, double tol = 1e-12) {
  const Dataset& data = ctx.dataset();
  const DegSepResult ds = degsep(data, NormKind::L2);
  if (ds.lower > 1e-10) throw Error(ErrorCode::NotAttained, "data are separable; the infimum is not attained");
  Vec beta = Vec::Zero(ctx.p());
  double f = loss_value(ctx, beta);
  Vec g = gradient(ctx, beta);
  ReferenceOptimum out;
  int it = 0;
  for (; it < 500 && g.norm() > tol; ++it) {
    const Mat H = hessian(ctx, beta);
    Eigen::LDLT<Mat> ldlt(H);
    Vec d = ldlt.solve(g);
    if (!d.allFinite() || d.dot(g) <= 0) d = g;  // fall back to a gradient step
    double t = 1.0;
    double fn = f;
    Vec cand = beta;
    bool moved = false;
    while (t > 1e-20) {
      cand = beta - t * d;
      // Armijo test on the cancellation-free loss difference
      if (loss_difference(ctx, cand, beta) <= -1e-4 * t * d.dot(g)) {
        fn = loss_value(ctx, cand);
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // line search exhausted: take the full step if it lowers the gradient norm
      cand = beta - d;
      const Vec gc = gradient(ctx, cand);
      if (gc.norm() < g.norm()) {
        beta = cand;
        g = gc;
        f = loss_value(ctx, beta);
        continue;
      }
      break;
    }
    beta = cand;
    f = fn;
    g = gradient(ctx, beta);
    if (beta.norm() > 1e8) throw Error(ErrorCode::NotAttained, "iterates diverge; the infimum is not attained");
  }
  if (g.norm() > std::max(tol, 1e-10)) throw Error(ErrorCode::NotAttained, "Newton did not reach the gradient tolerance");
  out.beta = beta;
  out.loss = f;
  out.hessian = hessian(ctx, beta);
  out.grad_norm = g.norm();
  out.iterations = it;
  return out;
}

}  // namespace logitcond
