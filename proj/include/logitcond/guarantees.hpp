#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "logitcond/conditioning.hpp"
#include "logitcond/data.hpp"
#include "logitcond/error.hpp"
#include "logitcond/loss.hpp"
#include "logitcond/norms.hpp"
#include "logitcond/parallel.hpp"
#include "logitcond/solvers.hpp"

namespace logitcond {

enum class Verdict { Holds, Vacuous, Fails, NotApplicable };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "Holds";
    case Verdict::Vacuous: return "Vacuous";
    case Verdict::Fails: return "Fails";
    case Verdict::NotApplicable: return "NotApplicable";
  }
  return "?";
}

// Upper: observed <= bound.  Lower: observed >= bound.
enum class Sense { Upper, Lower };

struct CheckPoint {
  long k = 0;
  double bound = 0.0;
  double observed = 0.0;
  double allowance = 0.0;  // statistical slack added to the bound side (3 standard errors)
};

struct ItemReport {
  std::string id;
  std::string label;
  Sense sense = Sense::Upper;
  Verdict verdict = Verdict::NotApplicable;
  std::vector<CheckPoint> series;
  long checks = 0;
  long vacuous = 0;
  long failures = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  double bound_at_kmax = std::numeric_limits<double>::quiet_NaN();
  double observed_at_kmax = std::numeric_limits<double>::quiet_NaN();
  std::string note;
};

struct GuaranteeReport {
  std::string guarantee;
  std::vector<ItemReport> items;
  bool holds = true;
  double min_slack = std::numeric_limits<double>::infinity();
  std::vector<std::string> notes;

  const ItemReport* item(const std::string& id) const {
    for (const auto& it : items)
      if (it.id == id) return &it;
    return nullptr;
  }
};

class ItemBuilder {
 public:
  ItemBuilder(std::string id, std::string label, Sense sense, double tol) : tol_(tol) {
    r_.id = std::move(id);
    r_.label = std::move(label);
    r_.sense = sense;
  }

  void check(long k, double bound, double observed, double allowance = 0.0) {
    r_.series.push_back({k, bound, observed, allowance});
    r_.bound_at_kmax = bound;
    r_.observed_at_kmax = observed;
    ++r_.checks;
    const bool vacuous = r_.sense == Sense::Upper ? bound == std::numeric_limits<double>::infinity()
                                                  : bound == -std::numeric_limits<double>::infinity();
    if (vacuous) {
      ++r_.vacuous;
      return;
    }
    double slack = r_.sense == Sense::Upper ? bound + allowance - observed : observed - (bound - allowance);
    if (std::isnan(slack)) slack = -std::numeric_limits<double>::infinity();
    r_.min_slack = std::min(r_.min_slack, slack);
    if (slack < -tol_) ++r_.failures;
  }

  ItemReport finish() {
    if (r_.checks == 0) r_.verdict = Verdict::NotApplicable;
    else if (r_.failures > 0) r_.verdict = Verdict::Fails;
    else if (r_.vacuous == r_.checks) r_.verdict = Verdict::Vacuous;
    else r_.verdict = Verdict::Holds;
    return std::move(r_);
  }

  static ItemReport not_applicable(std::string id, std::string label, std::string why) {
    ItemReport r;
    r.id = std::move(id);
    r.label = std::move(label);
    r.verdict = Verdict::NotApplicable;
    r.note = std::move(why);
    return r;
  }

 private:
  ItemReport r_;
  double tol_;
};

inline GuaranteeReport finalize(std::string name, std::vector<ItemReport> items, std::vector<std::string> notes = {}) {
  GuaranteeReport g;
  g.guarantee = std::move(name);
  g.items = std::move(items);
  g.notes = std::move(notes);
  for (const auto& it : g.items) {
    if (it.verdict == Verdict::Fails) g.holds = false;
    if (it.verdict == Verdict::Holds || it.verdict == Verdict::Fails) g.min_slack = std::min(g.min_slack, it.min_slack);
  }
  return g;
}

// ln(a) with ln(a <= 0) = -inf
inline double safe_log(double a) { return a > 0 ? std::log(a) : -std::numeric_limits<double>::infinity(); }

// ---------------------------------------------------------------- inputs

struct GuaranteeInputs {
  NormSpec norm;
  long n = 0;
  double degsep = 0.0;  // certified lower bound
  bool degsep_certified = false;
  double degnsep = 0.0;  // certified lower bound (possibly weighted)
  bool degnsep_certified = false;
  double smoothness_L = 0.0;
  double x_dot_2 = 0.0;
  bool x_dot_2_certified = true;
  double x_2_inf = 0.0;
  double x_dot_inf = 0.0;
  std::optional<double> loss_star;
  std::optional<Vec> beta_star;
  std::optional<double> nu_star;
  bool nu_star_certified = false;
  std::optional<double> lambda_min_hessian;
  double R = 0.0;
  double trace_sigma = 0.0;
  double tol = 1e-9;
};

struct PreparedInstance {
  ConditioningReport report;
  GuaranteeInputs inputs;
  std::optional<ReferenceOptimum> optimum;
};

inline PreparedInstance prepare_instance(const DiscreteDistribution& dist, NormSpec norm,
                                         const ConditioningOptions& opt = {}) {
  const Dataset& data = dist.dataset();
  PreparedInstance out;
  out.report = analyze(data, norm, opt);
  if (!dist.is_uniform()) out.report.degnsep = degnsep(dist, norm, opt.degnsep);
  GuaranteeInputs& in = out.inputs;
  in.norm = norm;
  in.n = static_cast<long>(data.n());
  in.degsep = out.report.degsep.lower;
  in.degsep_certified = out.report.degsep.converged;
  in.degnsep = out.report.degnsep.lower_bound;
  in.degnsep_certified = out.report.degnsep.certified();
  in.x_dot_2 = out.report.operator_norms.x_dot_2.value;
  in.x_dot_2_certified = out.report.operator_norms.x_dot_2.certified;
  in.x_2_inf = out.report.operator_norms.x_2_inf.value;
  in.x_dot_inf = out.report.operator_norms.x_dot_inf.value;
  in.R = dist.radius();
  in.trace_sigma = dist.trace_sigma();
  const LossContext ctx(dist, norm);
  in.smoothness_L = ctx.smoothness_L();
  if (out.report.status == SeparabilityStatus::NonSeparable) {
    out.optimum = reference_optimum(ctx);
    in.loss_star = out.optimum->loss;
    in.beta_star = out.optimum->beta;
    const NuStar nu = nu_star(out.optimum->hessian, norm);
    in.nu_star = nu.value;
    in.nu_star_certified = nu.certified;
    in.lambda_min_hessian = lambda_min_sym(out.optimum->hessian);
  }
  return out;
}

inline PreparedInstance prepare_instance(const Dataset& data, NormSpec norm, const ConditioningOptions& opt = {}) {
  return prepare_instance(DiscreteDistribution::uniform(data), norm, opt);
}

namespace detail {

inline void require_degnsep(const GuaranteeInputs& in) {
  if (!in.degnsep_certified) throw Error(ErrorCode::UncertifiedConditioning, "degnsep is not certified");
  if (!(in.degnsep > 0)) throw Error(ErrorCode::UncertifiedConditioning, "certified degnsep lower bound is not positive");
  if (!in.loss_star) throw Error(ErrorCode::InvalidArgument, "optimal loss is required");
}

inline void require_separable(const GuaranteeInputs& in) {
  if (!(in.degsep > 0)) throw Error(ErrorCode::NotSeparable, "data are not certified separable");
}

inline bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)}); }

// L(beta^k) - L*, preferring the cancellation-free difference recorded against the optimum
inline double observed_gap(const IterRecord& r, double fstar) {
  return std::isnan(r.ref_gap) ? r.loss - fstar : r.ref_gap;
}

// ||beta^k - target|| per record when recorded, otherwise at checkpoints
inline std::vector<std::pair<long, double>> distances_to(const SolverTrace& tr, const Vec& target, NormSpec norm) {
  std::vector<std::pair<long, double>> out;
  bool have_all = !tr.records.empty();
  for (const auto& r : tr.records)
    if (std::isnan(r.ref_distance)) have_all = false;
  if (have_all) {
    for (const auto& r : tr.records) out.emplace_back(r.iter, r.ref_distance);
  } else {
    for (const auto& c : tr.checkpoints) out.emplace_back(c.iter, norm.norm(c.beta - target));
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------- steepest descent

// Generic guarantees of steepest descent with the greedy step ||grad||_* / L.
inline GuaranteeReport eval_sd_generic(const GuaranteeInputs& in, const SolverTrace& tr) {
  detail::require_degnsep(in);
  if (tr.meta.rule.kind != StepKind::GreedyOverL) throw Error(ErrorCode::WrongStepRule, "needs the greedy step rule");
  if (!detail::same(tr.meta.rule.L, in.smoothness_L))
    throw Error(ErrorCode::WrongStepRule, "step rule constant differs from the smoothness constant");
  const std::string name = "sd-generic";
  if (!tr.meta.guarantees_applicable || tr.records.empty())
    return finalize(name, {ItemBuilder::not_applicable("i", "optimality gap", "run did not start at 0")});
  const double L = in.smoothness_L;
  const double D = 2.0 * kLn2 / in.degnsep;
  const double fstar = *in.loss_star;
  const double gap0 = std::max(0.0, detail::observed_gap(tr.records.front(), fstar));
  ItemBuilder gap("i", "optimality gap", Sense::Upper, in.tol);
  ItemBuilder grad("ii", "gradient bound I", Sense::Upper, in.tol);
  ItemBuilder dist("iii", "norm bound", Sense::Upper, in.tol);
  ItemBuilder best("iv", "gradient bound II", Sense::Upper, in.tol);
  double min_grad = std::numeric_limits<double>::infinity();
  const double c = 2.0 * L * D * D;
  for (const auto& r : tr.records) {
    const double k = static_cast<double>(r.iter);
    const double g = detail::observed_gap(r, fstar);
    gap.check(r.iter, c * gap0 / (c + k * gap0), g);
    grad.check(r.iter, std::sqrt(2.0 * L * std::max(0.0, g)), r.grad_dual_norm);
    dist.check(r.iter, std::sqrt(k) * std::sqrt(2.0 * gap0 / L), r.beta_norm);
    min_grad = std::min(min_grad, r.grad_dual_norm);
    best.check(r.iter, std::sqrt(2.0 * L * gap0 / (k + 1.0)), min_grad);
  }
  std::vector<std::string> notes;
  if (!in.x_dot_2_certified) notes.push_back("smoothness constant is an over-estimate");
  return finalize(name, {gap.finish(), grad.finish(), dist.finish(), best.finish()}, notes);
}

// Sublinear guarantees of steepest descent with step 4n ||grad||_* / ||X||^2 on non-separable data.
inline GuaranteeReport eval_nonsep_sublinear(const GuaranteeInputs& in, const SolverTrace& tr) {
  detail::require_degnsep(in);
  if (tr.meta.rule.kind != StepKind::NonSepLogit) throw Error(ErrorCode::WrongStepRule, "needs the nonsep step rule");
  const std::string name = "nonsep-sublinear";
  const double fstar = *in.loss_star;
  const double g0 = kLn2 - fstar;
  if (g0 <= 1e-15)
    return finalize(name, {ItemBuilder::not_applicable("i", "training error", "optimal loss equals ln 2"),
                           ItemBuilder::not_applicable("ii", "shrinkage", "optimal loss equals ln 2"),
                           ItemBuilder::not_applicable("iii", "gradient bound", "optimal loss equals ln 2")});
  if (!in.x_dot_2_certified || !tr.meta.guarantees_applicable)
    return finalize(name, {ItemBuilder::not_applicable("i", "training error", "operator norm not certified or nonzero start"),
                           ItemBuilder::not_applicable("ii", "shrinkage", "operator norm not certified or nonzero start"),
                           ItemBuilder::not_applicable("iii", "gradient bound", "operator norm not certified or nonzero start")});
  const double X = in.x_dot_2;
  const double n = static_cast<double>(in.n);
  const double rate = n * in.degnsep * in.degnsep / (2.0 * X * X * kLn2 * kLn2);
  ItemBuilder err("i", "training error", Sense::Upper, in.tol);
  ItemBuilder shr("ii", "shrinkage", Sense::Upper, in.tol);
  ItemBuilder grd("iii", "gradient bound", Sense::Upper, in.tol);
  for (const auto& r : tr.records) {
    const double k = static_cast<double>(r.iter);
    const double gap = detail::observed_gap(r, fstar);
    err.check(r.iter, g0 / (1.0 + g0 * k * rate), gap);
    shr.check(r.iter, std::sqrt(k) * std::sqrt(8.0 * n * g0) / X, r.beta_norm);
    grd.check(r.iter, X * std::sqrt(std::max(0.0, gap) / (2.0 * n)), r.grad_dual_norm);
  }
  return finalize(name, {err.finish(), shr.finish(), grd.finish()});
}

struct LinearRates {
  double tau_slow = 1.0;
  double tau_fast = 1.0;
  long k_check = 0;
};

inline LinearRates linear_rates(const GuaranteeInputs& in) {
  const double n = static_cast<double>(in.n);
  const double X2 = in.x_dot_2 * in.x_dot_2;
  const double nu = *in.nu_star;
  const double d = in.degnsep;
  LinearRates r;
  r.tau_slow = 1.0 - 2.0 * d * nu * n / ((d + 2.0 * kLn2 * in.x_dot_inf) * X2);
  r.tau_fast = 1.0 - nu * n / X2;
  const double kc = 16.0 * kLn2 * kLn2 * X2 * X2 * in.x_dot_inf * in.x_dot_inf / (9.0 * n * n * d * d * nu * nu);
  r.k_check = static_cast<long>(std::min(std::ceil(kc), 9.0e18));
  return r;
}

// Linear convergence of the same method: slow rate from the start, fast rate after k_check.
inline GuaranteeReport eval_nonsep_linear(const GuaranteeInputs& in, const SolverTrace& tr) {
  detail::require_degnsep(in);
  if (tr.meta.rule.kind != StepKind::NonSepLogit) throw Error(ErrorCode::WrongStepRule, "needs the nonsep step rule");
  if (!in.beta_star || !in.nu_star) throw Error(ErrorCode::InvalidArgument, "optimum and nu* are required");
  if (!in.nu_star_certified) throw Error(ErrorCode::UncertifiedConditioning, "nu* is not certified");
  const std::string name = "nonsep-linear";
  const double fstar = *in.loss_star;
  const double g0 = kLn2 - fstar;
  if (g0 <= 1e-15 || !in.x_dot_2_certified || !tr.meta.guarantees_applicable) {
    const std::string why = g0 <= 1e-15 ? "optimal loss equals ln 2" : "operator norm not certified or nonzero start";
    return finalize(name, {ItemBuilder::not_applicable("i", "training error, slow rate", why),
                           ItemBuilder::not_applicable("ii", "coefficients, slow rate", why),
                           ItemBuilder::not_applicable("iii", "training error, fast rate", why),
                           ItemBuilder::not_applicable("iv", "coefficients, fast rate", why)});
  }
  const LinearRates lr = linear_rates(in);
  const double n = static_cast<double>(in.n);
  const double X = in.x_dot_2;
  const double nu = *in.nu_star;
  const double coef_slow = (1.0 + 2.0 * kLn2 * in.x_dot_inf / in.degnsep) * (X / nu) * std::sqrt(g0 / (2.0 * n));
  ItemBuilder e1("i", "training error, slow rate", Sense::Upper, in.tol);
  ItemBuilder c1("ii", "coefficients, slow rate", Sense::Upper, in.tol);
  ItemBuilder e2("iii", "training error, fast rate", Sense::Upper, in.tol);
  ItemBuilder c2("iv", "coefficients, fast rate", Sense::Upper, in.tol);
  const auto dist = detail::distances_to(tr, *in.beta_star, in.norm);
  for (const auto& r : tr.records) e1.check(r.iter, g0 * std::pow(lr.tau_slow, static_cast<double>(r.iter)), detail::observed_gap(r, fstar));
  for (const auto& [k, d] : dist) c1.check(k, coef_slow * std::pow(lr.tau_slow, 0.5 * static_cast<double>(k)), d);
  const IterRecord* anchor = nullptr;
  for (const auto& r : tr.records)
    if (r.iter == lr.k_check) anchor = &r;
  std::vector<std::string> notes;
  if (anchor) {
    const double ga = std::max(0.0, detail::observed_gap(*anchor, fstar));
    const double coef_fast = (X / nu) * std::sqrt(2.0 * ga / n);
    for (const auto& r : tr.records)
      if (r.iter >= lr.k_check)
        e2.check(r.iter, ga * std::pow(lr.tau_fast, static_cast<double>(r.iter - lr.k_check)), detail::observed_gap(r, fstar));
    for (const auto& [k, d] : dist)
      if (k >= lr.k_check) c2.check(k, coef_fast * std::pow(lr.tau_fast, 0.5 * static_cast<double>(k - lr.k_check)), d);
  } else {
    notes.push_back("trace ends before the fast-rate iteration " + std::to_string(lr.k_check));
  }
  return finalize(name, {e1.finish(), c1.finish(), e2.finish(), c2.finish()}, notes);
}

// l2 steepest descent with step 2 ||grad||_2 / ||X||_{2,inf}^2 on separable data.
inline GuaranteeReport eval_sep_l2(const GuaranteeInputs& in, const SolverTrace& tr) {
  if (tr.meta.rule.kind != StepKind::SepL2 || tr.meta.norm.kind != NormKind::L2)
    throw Error(ErrorCode::WrongStepRule, "needs the sepl2 rule with the l2 norm");
  if (in.norm.kind != NormKind::L2) throw Error(ErrorCode::InvalidArgument, "inputs must be computed for the l2 norm");
  detail::require_separable(in);
  const std::string name = "sep-l2";
  const double d = in.degsep;
  const double n = static_cast<double>(in.n);
  const double xi = in.x_2_inf;
  ItemBuilder mar("i", "margin bound", Sense::Lower, in.tol);
  ItemBuilder shr("ii", "shrinkage", Sense::Upper, in.tol);
  ItemBuilder grd("iii", "gradient bound", Sense::Upper, in.tol);
  double best_margin = -std::numeric_limits<double>::infinity();
  double min_grad = std::numeric_limits<double>::infinity();
  for (const auto& r : tr.records) {
    min_grad = std::min(min_grad, r.grad_dual_norm);
    if (r.beta_norm > 0) best_margin = std::max(best_margin, r.margin / r.beta_norm);
    if (r.iter < 1) continue;
    const double k = static_cast<double>(r.iter);
    const double arg = d / (n * xi) * std::sqrt(3.0 * (k + 1.0) / (2.0 * kLn2)) - 1.0;
    const double lg = safe_log(arg);
    const double bound = std::isinf(lg) ? lg : d * lg / (2.0 * (std::log(k) + 1.0));
    mar.check(r.iter, bound, best_margin);
    shr.check(r.iter, 2.0 * std::log(k) / d + 2.0 / xi, r.beta_norm);
    grd.check(r.iter, xi * std::sqrt(2.0 * kLn2 / (3.0 * (k + 1.0))), min_grad);
  }
  return finalize(name, {mar.finish(), shr.finish(), grd.finish()});
}

// rho(beta) >= ln(degsep / (n ||grad||_*) - 1) at every recorded iterate.
inline GuaranteeReport eval_margin_gradient(const GuaranteeInputs& in, const SolverTrace& tr) {
  detail::require_separable(in);
  if (tr.meta.norm.kind != in.norm.kind) throw Error(ErrorCode::InvalidArgument, "trace norm differs from the inputs norm");
  ItemBuilder it("i", "margin from gradient", Sense::Lower, in.tol);
  const double n = static_cast<double>(in.n);
  for (const auto& r : tr.records) {
    if (std::isnan(r.margin) || std::isnan(r.grad_dual_norm)) continue;
    const double arg = r.grad_dual_norm > 0 ? in.degsep / (n * r.grad_dual_norm) - 1.0 : std::numeric_limits<double>::infinity();
    it.check(r.iter, safe_log(arg), r.margin);
  }
  return finalize("margin-gradient", {it.finish()});
}

// ||beta^k - b||_2^2 <= ||b||_2^2 + 2 sum_j alpha_j mean_{i in S_j} l(y_i b^T x_i) for gradient-average runs
// with unnormalized steps at most 2 / ||X||_{2,inf}^2. Checked at every checkpoint.
inline GuaranteeReport eval_iterate_distance(const Dataset& data, const SolverTrace& tr, std::span<const Vec> refs,
                                             double tol = 1e-9) {
  const std::string name = "iterate-distance";
  const std::string label = "iterate distance to reference points";
  const double xi = max_row_dual_norm(NormKind::L2, data.X());
  const double cap = 2.0 / (xi * xi) * (1.0 + 1e-12);
  const bool stochastic = tr.meta.algorithm == "sgd";
  if (!tr.meta.guarantees_applicable) return finalize(name, {ItemBuilder::not_applicable("i", label, "run did not start at 0")});
  if (!stochastic && tr.meta.norm.kind != NormKind::L2)
    return finalize(name, {ItemBuilder::not_applicable("i", label, "steps are not gradient averages outside the l2 norm")});
  // unnormalized step of iteration j
  std::vector<double> alpha(tr.records.size(), 0.0);
  for (std::size_t j = 0; j < tr.records.size(); ++j) {
    const auto& r = tr.records[j];
    if (stochastic) alpha[j] = r.step_size;
    else alpha[j] = r.grad_dual_norm > 0 ? r.step_size / r.grad_dual_norm : 0.0;
    if (static_cast<long>(j) < tr.meta.k_max && alpha[j] > cap)
      return finalize(name, {ItemBuilder::not_applicable("i", label, "step exceeds 2 / ||X||_{2,inf}^2")});
  }
  ItemBuilder item("i", label, Sense::Upper, tol);
  const double inv_n = 1.0 / static_cast<double>(data.n());
  for (const Vec& b : refs) {
    const Vec t = data.classification_values(b);
    double full = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) full += logistic_loss(t(i));
    full *= inv_n;
    double acc = 0.0;
    std::size_t next_cp = 0;
    for (std::size_t j = 0; j < tr.records.size(); ++j) {
      const long k = tr.records[j].iter;
      while (next_cp < tr.checkpoints.size() && tr.checkpoints[next_cp].iter < k) ++next_cp;
      if (next_cp < tr.checkpoints.size() && tr.checkpoints[next_cp].iter == k) {
        const double lhs = (tr.checkpoints[next_cp].beta - b).squaredNorm();
        item.check(k, b.squaredNorm() + 2.0 * acc, lhs);
      }
      if (k >= tr.meta.k_max) break;
      if (stochastic) {
        const long s = tr.records[j].sample;
        if (s < 0) break;
        acc += alpha[j] * logistic_loss(t(s));
      } else {
        acc += alpha[j] * full;
      }
    }
  }
  return finalize(name, {item.finish()});
}

// ||beta^k||_2 <= 2 ln(k) / degsep + 2 / ||X||_{2,inf} for k >= 1 along a run with admissible steps
inline ItemReport shrinkage_item(const GuaranteeInputs& in, const SolverTrace& tr, const std::string& id = "shrinkage") {
  ItemBuilder it(id, "shrinkage of raw iterates", Sense::Upper, in.tol);
  for (const auto& r : tr.records) {
    if (r.iter < 1) continue;
    it.check(r.iter, 2.0 * std::log(static_cast<double>(r.iter)) / in.degsep + 2.0 / in.x_2_inf, r.beta_norm);
  }
  return it.finish();
}

// ---------------------------------------------------------------- SGD

struct SgdTrialSummary {
  long trial = 0;
  std::uint64_t seed = 0;
  double loss_hat = 0.0;        // L(beta-hat)
  double grad_hat_sq = 0.0;     // ||grad L(beta-hat)||_2^2
  double dist_hat_sq = std::numeric_limits<double>::quiet_NaN();  // ||beta-hat - beta*||_2^2
  double normalized_margin = std::numeric_limits<double>::quiet_NaN();  // rho(beta-hat / ||beta-hat||_2)
  double hat_norm = 0.0;
  long sampled_index = -1;
  double shrink_min_slack = std::numeric_limits<double>::infinity();
  long shrink_failures = 0;
  bool shrink_checked = false;
  double distance_min_slack = std::numeric_limits<double>::infinity();
  Verdict distance_verdict = Verdict::NotApplicable;
};

struct SgdTrialConfig {
  long k = 1000;
  SgdOption option = SgdOption::A;
  std::uint64_t base_seed = 0;
  long trials = 1000;
  long checkpoint_stride = 100;
  unsigned threads = 0;
  int reference_points = 20;  // random points for the iterate-distance check; 0 disables it
};

inline std::vector<Vec> reference_points(Eigen::Index p, int count, double scale, std::uint64_t seed) {
  std::vector<Vec> out;
  for (int r = 0; r < count; ++r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    Vec b(p);
    for (Eigen::Index j = 0; j < p; ++j) b(j) = scale * rng.normal();
    out.push_back(b);
  }
  return out;
}

inline SgdTrialSummary summarize_sgd_trial(const DiscreteDistribution& dist, const GuaranteeInputs& in,
                                           const SolverTrace& tr, std::span<const Vec> refs) {
  const LossContext ctx(dist, NormKind::L2);
  SgdTrialSummary s;
  s.seed = tr.meta.seed;
  s.sampled_index = tr.meta.sampled_index;
  const Vec& bh = tr.output_beta;
  s.loss_hat = loss_value(ctx, bh);
  s.grad_hat_sq = gradient(ctx, bh).squaredNorm();
  if (in.beta_star) s.dist_hat_sq = (bh - *in.beta_star).squaredNorm();
  s.hat_norm = bh.norm();
  if (s.hat_norm > 0) s.normalized_margin = margin(dist.dataset(), bh) / s.hat_norm;
  if (in.degsep > 0) {
    const ItemReport sh = shrinkage_item(in, tr);
    s.shrink_checked = true;
    s.shrink_min_slack = sh.min_slack;
    s.shrink_failures = sh.failures;
    if (s.hat_norm > 0 && tr.meta.k_max >= 1) {
      const double bound = 2.0 * std::log(static_cast<double>(tr.meta.k_max)) / in.degsep + 2.0 / in.x_2_inf;
      s.shrink_min_slack = std::min(s.shrink_min_slack, bound - s.hat_norm);
      if (bound - s.hat_norm < -in.tol) ++s.shrink_failures;
    }
  }
  if (!refs.empty()) {
    const GuaranteeReport a = eval_iterate_distance(dist.dataset(), tr, refs, in.tol);
    s.distance_verdict = a.items.front().verdict;
    s.distance_min_slack = a.items.front().min_slack;
  }
  return s;
}

// Independent trials with seeds derived from (base_seed, trial); results are in trial order.
inline std::vector<SgdTrialSummary> run_sgd_trials(const DiscreteDistribution& dist, const StepRule& rule,
                                                   const GuaranteeInputs& in, const SgdTrialConfig& cfg) {
  std::vector<SgdTrialSummary> out(static_cast<std::size_t>(std::max<long>(0, cfg.trials)));
  const std::vector<Vec> refs =
      reference_points(dist.dataset().p(), cfg.reference_points, 1.0, substream_seed(cfg.base_seed, 0xa2a2a2ULL));
  parallel_for(
      out.size(),
      [&](std::size_t t) {
        SgdOptions so;
        so.k = cfg.k;
        so.option = cfg.option;
        so.seed = substream_seed(cfg.base_seed, t);
        so.checkpoint_stride = cfg.checkpoint_stride;
        so.full_metrics = false;
        const SolverTrace tr = sgd(dist, rule, so);
        out[t] = summarize_sgd_trial(dist, in, tr, refs);
        out[t].trial = static_cast<long>(t);
      },
      cfg.threads);
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// fixed-order reduction keeps the result bit-stable
inline MeanSe mean_se(const std::vector<double>& v) {
  MeanSe m;
  if (v.empty()) return m;
  double s = 0.0;
  for (double x : v) s += x;
  m.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double q = 0.0;
    for (double x : v) q += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(q / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
  }
  return m;
}

// Expected-loss guarantees of SGD on non-separable data, tested one-sidedly at mean + 3 SE.
inline GuaranteeReport eval_sgd_nonsep(const GuaranteeInputs& in, std::span<const SgdTrialSummary> trials,
                                       const StepRule& rule, long k, SgdOption option) {
  if (trials.size() < 1000) throw Error(ErrorCode::TooFewTrials, "need at least 1000 trials, got " + std::to_string(trials.size()));
  detail::require_degnsep(in);
  if (rule.kind != StepKind::ConstantSGD && rule.kind != StepKind::RCorSGD)
    throw Error(ErrorCode::WrongStepRule, "needs the const or rcor step rule");
  const double fstar = *in.loss_star;
  const double d = in.degnsep;
  const double a = rule.alpha;
  const double kk = static_cast<double>(k);
  std::vector<double> gaps, dists;
  for (const auto& t : trials) {
    gaps.push_back(t.loss_hat - fstar);
    dists.push_back(t.dist_hat_sq);
  }
  const MeanSe g = mean_se(gaps);
  std::vector<ItemReport> items;
  {
    ItemBuilder b("expected-gap", "expected loss gap, any constant step", Sense::Upper, 0.0);
    b.check(k, kLn2 * kLn2 / (2.0 * a * (kk + 1.0) * d * d) + a * in.trace_sigma / 2.0, g.mean, 3.0 * g.se);
    items.push_back(b.finish());
  }
  const bool rcor = rule.kind == StepKind::RCorSGD && rule.horizon == k && rule.R * rule.R >= in.trace_sigma * (1 - 1e-12);
  if (rcor) {
    ItemBuilder b("expected-gap-radius", "expected loss gap, radius step", Sense::Upper, 0.0);
    b.check(k, kLn2 / (2.0 * std::sqrt(kk + 1.0)) * (rule.R * rule.R / (d * d) + 1.0), g.mean, 3.0 * g.se);
    items.push_back(b.finish());
  } else {
    items.push_back(ItemBuilder::not_applicable("expected-gap-radius", "expected loss gap, radius step", "step is not the radius step for this horizon"));
  }
  const bool adaptive = rcor && option == SgdOption::A && in.lambda_min_hessian && in.beta_star && rule.R >= in.R * (1 - 1e-12);
  if (adaptive) {
    const double R = rule.R;
    const double lam = *in.lambda_min_hessian;
    const MeanSe dm = mean_se(dists);
    ItemBuilder b1("adaptive-gap", "averaged iterate loss gap", Sense::Upper, 0.0);
    b1.check(k, R * R / (lam * (kk + 1.0)) * std::pow(10.0 * R * kLn2 * kLn2 / d + 15.0, 4), g.mean, 3.0 * g.se);
    items.push_back(b1.finish());
    ItemBuilder b2("adaptive-distance", "averaged iterate squared distance", Sense::Upper, 0.0);
    b2.check(k, R * R / (lam * lam * (kk + 1.0)) * std::pow(12.0 * R * kLn2 * kLn2 / d + 21.0, 4), dm.mean, 3.0 * dm.se);
    items.push_back(b2.finish());
  } else {
    items.push_back(ItemBuilder::not_applicable("adaptive-gap", "averaged iterate loss gap", "needs option A with the radius step"));
    items.push_back(ItemBuilder::not_applicable("adaptive-distance", "averaged iterate squared distance", "needs option A with the radius step"));
  }
  ItemBuilder dist_item("iterate-distance", "iterate distance to reference points", Sense::Upper, in.tol);
  bool any = false;
  for (const auto& t : trials) {
    if (t.distance_verdict == Verdict::NotApplicable) continue;
    any = true;
    dist_item.check(t.trial, 0.0, -t.distance_min_slack);
  }
  items.push_back(any ? dist_item.finish()
                      : ItemBuilder::not_applicable("iterate-distance", "iterate distance to reference points", "not recorded"));
  return finalize("sgd-nonsep", std::move(items), {"trials=" + std::to_string(trials.size())});
}

// Monte-Carlo check of E||stochastic gradient||_2^2 <= Tr(Sigma) at the given points.
inline GuaranteeReport eval_second_moment(const DiscreteDistribution& dist, std::span<const Vec> points, long draws,
                                          std::uint64_t seed) {
  ItemBuilder it("second-moment", "stochastic gradient second moment", Sense::Upper, 0.0);
  const Dataset& d = dist.dataset();
  for (std::size_t q = 0; q < points.size(); ++q) {
    Rng rng(seed, q);
    std::vector<double> v(static_cast<std::size_t>(draws));
    for (long s = 0; s < draws; ++s) {
      const Eigen::Index i = dist.sample(rng);
      v[static_cast<std::size_t>(s)] = observation_gradient(d, i, points[q]).squaredNorm();
    }
    const MeanSe m = mean_se(v);
    it.check(static_cast<long>(q), dist.trace_sigma(), m.mean, 3.0 * m.se);
  }
  return finalize("second-moment", {it.finish()});
}

// Option B SGD on separable data: margin coverage per gamma, shrinkage, expected gradient norm.
inline GuaranteeReport eval_sgd_sep(const GuaranteeInputs& in, std::span<const SgdTrialSummary> trials,
                                    const StepRule& rule, long k, SgdOption option, std::span<const double> gammas) {
  if (option != SgdOption::B) throw Error(ErrorCode::WrongOption, "needs option B");
  detail::require_separable(in);
  if (trials.size() < 500) throw Error(ErrorCode::TooFewTrials, "need at least 500 trials, got " + std::to_string(trials.size()));
  if (rule.kind != StepKind::RCorSGD || rule.horizon != k) throw Error(ErrorCode::WrongStepRule, "needs the radius step for this horizon");
  const double T = static_cast<double>(trials.size());
  const double n = static_cast<double>(in.n);
  const double R = rule.R;
  const double d = in.degsep;
  const double kk = static_cast<double>(k);
  std::vector<ItemReport> items;
  for (double gamma : gammas) {
    ItemBuilder b("coverage@" + format_double(gamma), "margin bound coverage", Sense::Lower, 0.0);
    const double arg = d * std::sqrt(gamma) * std::pow(kk + 1.0, 0.25) / (n * R * std::sqrt(1.1)) - 1.0;
    const double lg = safe_log(arg);
    const double need = (1.0 - gamma) - 3.0 * std::sqrt(gamma * (1.0 - gamma) / T);
    if (std::isinf(lg) || k < 1) {
      b.check(k, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::quiet_NaN());
    } else {
      const double bound = d * lg / (2.0 * (std::log(kk) + 1.0));
      long covered = 0;
      for (const auto& t : trials)
        if (!std::isnan(t.normalized_margin) && t.normalized_margin > bound) ++covered;
      b.check(k, need, static_cast<double>(covered) / T);
    }
    items.push_back(b.finish());
  }
  if (rule.alpha <= 2.0 / (in.x_2_inf * in.x_2_inf) * (1 + 1e-12)) {
    ItemBuilder b("shrinkage", "shrinkage on every trial", Sense::Upper, in.tol);
    for (const auto& t : trials)
      if (t.shrink_checked) b.check(t.trial, 0.0, -t.shrink_min_slack);
    items.push_back(b.finish());
  } else {
    items.push_back(ItemBuilder::not_applicable("shrinkage", "shrinkage on every trial", "step exceeds 2 / ||X||_{2,inf}^2"));
  }
  {
    std::vector<double> g;
    for (const auto& t : trials) g.push_back(t.grad_hat_sq);
    const MeanSe m = mean_se(g);
    ItemBuilder b("expected-gradient", "expected squared gradient of the output", Sense::Upper, 0.0);
    b.check(k, 1.1 * R * R / std::sqrt(kk + 1.0), m.mean, 3.0 * m.se);
    items.push_back(b.finish());
  }
  ItemBuilder dist_item("iterate-distance", "iterate distance to reference points", Sense::Upper, in.tol);
  bool any = false;
  for (const auto& t : trials) {
    if (t.distance_verdict == Verdict::NotApplicable) continue;
    any = true;
    dist_item.check(t.trial, 0.0, -t.distance_min_slack);
  }
  items.push_back(any ? dist_item.finish()
                      : ItemBuilder::not_applicable("iterate-distance", "iterate distance to reference points", "not recorded"));
  return finalize("sgd-sep", std::move(items), {"trials=" + std::to_string(trials.size())});
}

}  // namespace logitcond
