#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "logitcond/guarantees.hpp"

using namespace logitcond;

namespace {

const double ln2 = std::log(2.0);
constexpr double kInf = std::numeric_limits<double>::infinity();

IterRecord rec(long k, double loss, double grad, double beta_norm, double margin = 0.0) {
  IterRecord r;
  r.iter = k;
  r.loss = loss;
  r.grad_dual_norm = grad;
  r.beta_norm = beta_norm;
  r.margin = margin;
  return r;
}

SolverTrace fake_trace(const StepRule& rule, NormKind norm, std::vector<IterRecord> records) {
  SolverTrace tr;
  tr.meta.algorithm = "steepest_descent";
  tr.meta.norm = norm;
  tr.meta.rule = rule;
  tr.meta.k_max = records.back().iter;
  tr.records = std::move(records);
  return tr;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

Dataset non_separable_instance(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  for (std::uint64_t s = seed;; ++s) {
    Dataset d = generate_logistic(n, p, Vec::Constant(p, 0.5), s);
    if (degsep(d, NormKind::L2).lower == 0.0) return d;
  }
}

void expect_bounds(const ItemReport* it, const std::vector<double>& expected, double tol = 1e-14) {
  ASSERT_NE(it, nullptr);
  ASSERT_EQ(it->series.size(), expected.size());
  for (std::size_t j = 0; j < expected.size(); ++j) {
    if (std::isinf(expected[j])) EXPECT_EQ(it->series[j].bound, expected[j]);
    else EXPECT_NEAR(it->series[j].bound, expected[j], tol * std::max(1.0, std::abs(expected[j])));
  }
}

}  // namespace

TEST(ItemBuilder, VerdictsAndSlack) {
  ItemBuilder up("u", "upper", Sense::Upper, 1e-9);
  up.check(0, 1.0, 0.5);
  up.check(1, kInf, 3.0);
  ItemReport a = up.finish();
  EXPECT_EQ(a.verdict, Verdict::Holds);
  EXPECT_DOUBLE_EQ(a.min_slack, 0.5);
  EXPECT_EQ(a.vacuous, 1);

  ItemBuilder lo("l", "lower", Sense::Lower, 0.0);
  lo.check(0, 1.0, 0.8, 0.1);
  ItemReport b = lo.finish();
  EXPECT_EQ(b.verdict, Verdict::Fails);
  EXPECT_NEAR(b.min_slack, -0.1, 1e-15);

  ItemBuilder v("v", "vacuous", Sense::Lower, 0.0);
  v.check(0, -kInf, 0.0);
  EXPECT_EQ(v.finish().verdict, Verdict::Vacuous);

  ItemBuilder edge("e", "within tolerance", Sense::Upper, 1e-9);
  edge.check(0, 1.0, 1.0 + 5e-10);
  EXPECT_EQ(edge.finish().verdict, Verdict::Holds);

  ItemBuilder nan("n", "nan observed", Sense::Upper, 1e-9);
  nan.check(0, 1.0, std::numeric_limits<double>::quiet_NaN());
  EXPECT_EQ(nan.finish().verdict, Verdict::Fails);

  const GuaranteeReport g = finalize("g", {a, b, ItemBuilder::not_applicable("x", "x", "why")});
  EXPECT_FALSE(g.holds);
  EXPECT_NEAR(g.min_slack, -0.1, 1e-15);
}

TEST(SdGeneric, HandExpandedBounds) {
  GuaranteeInputs in;
  in.smoothness_L = 0.5;
  in.degnsep = ln2;  // distance bound 2 ln2 / degnsep = 2
  in.degnsep_certified = true;
  in.loss_star = 0.4;
  const SolverTrace tr = fake_trace(StepRule::greedy(0.5), NormKind::L2,
                                    {rec(0, 0.6, 0.3, 0.0), rec(1, 0.55, 0.2, 0.5), rec(10, 0.45, 0.1, 2.0)});
  const GuaranteeReport g = eval_sd_generic(in, tr);
  // 2 L D^2 = 4 and K0 = 4 / 0.2 = 20
  expect_bounds(g.item("i"), {4.0 / 20.0, 4.0 / 21.0, 4.0 / 30.0});
  expect_bounds(g.item("ii"), {std::sqrt(0.2), std::sqrt(0.15), std::sqrt(0.05)});
  expect_bounds(g.item("iii"), {0.0, std::sqrt(0.8), std::sqrt(10.0) * std::sqrt(0.8)});
  expect_bounds(g.item("iv"), {std::sqrt(0.2), std::sqrt(0.1), std::sqrt(0.2 / 11.0)});
  EXPECT_TRUE(g.holds);
  EXPECT_EQ(g.item("iii")->verdict, Verdict::Holds);
}

TEST(SdGeneric, RefusesUncertifiedOrMismatchedInputs) {
  GuaranteeInputs in;
  in.smoothness_L = 0.5;
  in.degnsep = 0.3;
  in.loss_star = 0.4;
  const SolverTrace tr = fake_trace(StepRule::greedy(0.5), NormKind::L2, {rec(0, 0.6, 0.3, 0.0)});
  EXPECT_EQ(code_of([&] { eval_sd_generic(in, tr); }), ErrorCode::UncertifiedConditioning);
  in.degnsep_certified = true;
  in.degnsep = 0.0;
  EXPECT_EQ(code_of([&] { eval_sd_generic(in, tr); }), ErrorCode::UncertifiedConditioning);
  in.degnsep = 0.3;
  in.smoothness_L = 0.7;
  EXPECT_EQ(code_of([&] { eval_sd_generic(in, tr); }), ErrorCode::WrongStepRule);
  in.smoothness_L = 0.5;
  in.loss_star.reset();
  EXPECT_EQ(code_of([&] { eval_sd_generic(in, tr); }), ErrorCode::InvalidArgument);
}

TEST(NonsepSublinear, HandExpandedBounds) {
  GuaranteeInputs in;
  in.n = 10;
  in.x_dot_2 = 2.0;
  in.degnsep = ln2;
  in.degnsep_certified = true;
  in.loss_star = ln2 - 0.25;
  const double fs = ln2 - 0.25;
  const SolverTrace tr = fake_trace(StepRule::nonsep(2.0, 10), NormKind::L2,
                                    {rec(0, fs + 0.25, 0.2, 0.0), rec(1, fs + 0.18, 0.15, 1.0), rec(10, fs + 0.02, 0.05, 3.0)});
  const GuaranteeReport g = eval_nonsep_sublinear(in, tr);
  // n degnsep^2 / (2 X^2 ln2^2) = 10 / 8
  expect_bounds(g.item("i"), {0.25, 1.0 / 5.25, 1.0 / 16.5});
  expect_bounds(g.item("ii"), {0.0, std::sqrt(5.0), std::sqrt(50.0)});
  expect_bounds(g.item("iii"), {2.0 * std::sqrt(0.25 / 20.0), 2.0 * std::sqrt(0.18 / 20.0), 2.0 * std::sqrt(0.02 / 20.0)}, 1e-12);
  EXPECT_TRUE(g.holds);
}

TEST(NonsepSublinear, DegenerateOptimumIsNotApplicable) {
  GuaranteeInputs in;
  in.n = 2;
  in.x_dot_2 = std::sqrt(2.0);
  in.degnsep = 0.5;
  in.degnsep_certified = true;
  in.loss_star = ln2;
  const SolverTrace tr = fake_trace(StepRule::nonsep(std::sqrt(2.0), 2), NormKind::L2, {rec(0, ln2, 0.0, 0.0)});
  const GuaranteeReport g = eval_nonsep_sublinear(in, tr);
  for (const auto& it : g.items) EXPECT_EQ(it.verdict, Verdict::NotApplicable);
  EXPECT_TRUE(g.holds);
  EXPECT_EQ(code_of([&] { eval_nonsep_sublinear(in, fake_trace(StepRule::greedy(1.0), NormKind::L2, {rec(0, ln2, 0, 0)})); }),
            ErrorCode::WrongStepRule);
}

TEST(NonsepLinear, RatesAndHandExpandedBounds) {
  GuaranteeInputs in;
  in.n = 10;
  in.x_dot_2 = 2.0;
  in.x_dot_inf = 3.0;
  in.degnsep = 2.0 * ln2;
  in.degnsep_certified = true;
  in.nu_star = 0.3;
  in.nu_star_certified = true;
  in.loss_star = ln2 - 0.5;
  in.beta_star = Vec::Zero(2);
  const LinearRates lr = linear_rates(in);
  EXPECT_NEAR(lr.tau_slow, 0.625, 1e-15);
  EXPECT_NEAR(lr.tau_fast, 0.25, 1e-15);
  EXPECT_EQ(lr.k_check, 8);  // ceil(2304 / 324)
  EXPECT_LT(lr.tau_fast, lr.tau_slow);

  const double fs = ln2 - 0.5;
  std::vector<IterRecord> rs = {rec(0, fs + 0.5, 0.3, 0.0), rec(1, fs + 0.3, 0.2, 0.5), rec(8, fs + 0.01, 0.01, 1.0),
                                rec(10, fs + 0.0005, 0.005, 1.0)};
  const double dist[] = {1.0, 0.6, 0.05, 0.01};
  for (std::size_t j = 0; j < rs.size(); ++j) rs[j].ref_distance = dist[j];
  const GuaranteeReport g = eval_nonsep_linear(in, fake_trace(StepRule::nonsep(2.0, 10), NormKind::L2, rs));
  expect_bounds(g.item("i"), {0.5, 0.5 * 0.625, 0.5 * std::pow(0.625, 8), 0.5 * std::pow(0.625, 10)});
  const double cs = 4.0 * (2.0 / 0.3) * std::sqrt(0.5 / 20.0);
  expect_bounds(g.item("ii"), {cs, cs * std::sqrt(0.625), cs * std::pow(0.625, 4), cs * std::pow(0.625, 5)});
  expect_bounds(g.item("iii"), {0.01, 0.01 * 0.0625}, 1e-12);
  const double cf = (2.0 / 0.3) * std::sqrt(2.0 * 0.01 / 10.0);
  expect_bounds(g.item("iv"), {cf, cf * 0.25}, 1e-12);
  EXPECT_TRUE(g.holds);
}

TEST(NonsepLinear, ShortTraceLeavesFastItemsEmpty) {
  GuaranteeInputs in;
  in.n = 10;
  in.x_dot_2 = 2.0;
  in.x_dot_inf = 3.0;
  in.degnsep = 2.0 * ln2;
  in.degnsep_certified = true;
  in.nu_star = 0.3;
  in.nu_star_certified = true;
  in.loss_star = ln2 - 0.5;
  in.beta_star = Vec::Zero(2);
  IterRecord r0 = rec(0, ln2, 0.3, 0.0);
  r0.ref_distance = 1.0;
  const GuaranteeReport g = eval_nonsep_linear(in, fake_trace(StepRule::nonsep(2.0, 10), NormKind::L2, {r0}));
  EXPECT_EQ(g.item("iii")->verdict, Verdict::NotApplicable);
  EXPECT_FALSE(g.notes.empty());
  in.nu_star_certified = false;
  EXPECT_EQ(code_of([&] { eval_nonsep_linear(in, fake_trace(StepRule::nonsep(2.0, 10), NormKind::L2, {r0})); }),
            ErrorCode::UncertifiedConditioning);
}

TEST(SepL2, HandExpandedBounds) {
  GuaranteeInputs in;
  in.norm = NormKind::L2;
  in.n = 4;
  in.x_2_inf = 1.0;
  in.degsep = 2.0;
  in.degsep_certified = true;
  const SolverTrace tr = fake_trace(StepRule::sep_l2(1.0), NormKind::L2,
                                    {rec(0, ln2, 0.5, 0.0, 0.0), rec(1, 0.5, 0.4, 1.0, -0.2), rec(10, 0.1, 0.05, 3.0, 1.5)});
  const GuaranteeReport g = eval_sep_l2(in, tr);
  const double a1 = 0.5 * std::sqrt(6.0 / (2.0 * ln2)) - 1.0;
  const double a10 = 0.5 * std::sqrt(33.0 / (2.0 * ln2)) - 1.0;
  expect_bounds(g.item("i"), {2.0 * std::log(a1) / 2.0, 2.0 * std::log(a10) / (2.0 * (std::log(10.0) + 1.0))});
  expect_bounds(g.item("ii"), {2.0, std::log(10.0) + 2.0});
  expect_bounds(g.item("iii"), {std::sqrt(2.0 * ln2 / 6.0), std::sqrt(2.0 * ln2 / 33.0)});
  // running best normalized margin: -0.2 at k = 1, then 0.5
  EXPECT_NEAR(g.item("i")->series[1].observed, 0.5, 1e-15);
  EXPECT_EQ(g.item("i")->verdict, Verdict::Holds);
  EXPECT_TRUE(g.holds);
}

TEST(SepL2, VacuousWhileLogArgumentIsSmall) {
  GuaranteeInputs in;
  in.norm = NormKind::L2;
  in.n = 4;
  in.x_2_inf = 1.0;
  in.degsep = 0.1;
  const SolverTrace tr = fake_trace(StepRule::sep_l2(1.0), NormKind::L2, {rec(0, ln2, 0.5, 0.0), rec(1, 0.6, 0.4, 1.0, -0.5)});
  const GuaranteeReport g = eval_sep_l2(in, tr);
  EXPECT_EQ(g.item("i")->verdict, Verdict::Vacuous);
  EXPECT_EQ(g.item("i")->series[0].bound, -kInf);
  in.degsep = 0.0;
  EXPECT_EQ(code_of([&] { eval_sep_l2(in, tr); }), ErrorCode::NotSeparable);
  in.degsep = 0.1;
  EXPECT_EQ(code_of([&] { eval_sep_l2(in, fake_trace(StepRule::greedy(1.0), NormKind::L2, {rec(0, ln2, 0, 0)})); }),
            ErrorCode::WrongStepRule);
}

TEST(MarginGradient, LogConvention) {
  GuaranteeInputs in;
  in.norm = NormKind::L2;
  in.n = 2;
  in.degsep = 1.0;
  const SolverTrace tr = fake_trace(StepRule::sep_l2(1.0), NormKind::L2,
                                    {rec(0, ln2, 0.5, 0.0, 0.0), rec(1, 0.3, 0.1, 1.0, 1.5), rec(2, 0.2, 0.05, 2.0, 0.1)});
  const GuaranteeReport g = eval_margin_gradient(in, tr);
  expect_bounds(g.item("i"), {-kInf, std::log(4.0), std::log(9.0)});
  EXPECT_EQ(g.item("i")->verdict, Verdict::Fails);
  EXPECT_FALSE(g.holds);
}

TEST(MarginGradient, AtZeroIsVacuousOnRealData) {
  const PlantedMargin pm = generate_planted_margin(20, 2, 0.5, 3);
  const PreparedInstance pi = prepare_instance(pm.data, NormKind::L2);
  const LossContext ctx(pm.data, NormKind::L2);
  DescentOptions opt;
  opt.k_max = 0;
  const GuaranteeReport g = eval_margin_gradient(pi.inputs, steepest_descent(ctx, StepRule::sep_l2_for(pm.data), opt));
  EXPECT_EQ(g.item("i")->verdict, Verdict::Vacuous);
  EXPECT_GE(gradient(ctx, Vec::Zero(2)).norm(), pi.inputs.degsep / 2.0 - 1e-15);
}

TEST(SgdNonsep, HandExpandedBounds) {
  GuaranteeInputs in;
  in.degnsep = 0.5;
  in.degnsep_certified = true;
  in.loss_star = 0.3;
  in.trace_sigma = 2.0;
  in.R = 2.0;
  in.lambda_min_hessian = 0.5;
  in.beta_star = Vec::Zero(2);
  std::vector<SgdTrialSummary> ts(1000);
  for (std::size_t t = 0; t < ts.size(); ++t) {
    ts[t].trial = static_cast<long>(t);
    ts[t].loss_hat = t % 2 == 0 ? 0.4 : 0.6;
    ts[t].dist_hat_sq = 1.0;
  }
  const double se = 0.1 / std::sqrt(999.0);

  const GuaranteeReport c = eval_sgd_nonsep(in, ts, StepRule::constant(0.1), 99, SgdOption::A);
  expect_bounds(c.item("expected-gap"), {ln2 * ln2 / 5.0 + 0.1});
  EXPECT_NEAR(c.item("expected-gap")->series[0].observed, 0.2, 1e-14);
  EXPECT_NEAR(c.item("expected-gap")->series[0].allowance, 3.0 * se, 1e-14);
  EXPECT_EQ(c.item("expected-gap-radius")->verdict, Verdict::NotApplicable);
  EXPECT_EQ(c.item("adaptive-gap")->verdict, Verdict::NotApplicable);

  const StepRule rc = StepRule::rcor(2.0, 99);
  EXPECT_NEAR(rc.alpha, ln2 / 40.0, 1e-17);
  const GuaranteeReport r = eval_sgd_nonsep(in, ts, rc, 99, SgdOption::A);
  expect_bounds(r.item("expected-gap"), {ln2 * ln2 / (2.0 * (ln2 / 40.0) * 100.0 * 0.25) + (ln2 / 40.0)});
  expect_bounds(r.item("expected-gap-radius"), {ln2 / 20.0 * 17.0});
  expect_bounds(r.item("adaptive-gap"), {4.0 / 50.0 * std::pow(40.0 * ln2 * ln2 + 15.0, 4)});
  expect_bounds(r.item("adaptive-distance"), {4.0 / 25.0 * std::pow(48.0 * ln2 * ln2 + 21.0, 4)});
  EXPECT_TRUE(r.holds);

  const GuaranteeReport b = eval_sgd_nonsep(in, ts, rc, 99, SgdOption::B);
  EXPECT_EQ(b.item("expected-gap-radius")->verdict, Verdict::Holds);
  EXPECT_EQ(b.item("adaptive-gap")->verdict, Verdict::NotApplicable);
}

TEST(SgdNonsep, RadiusStepConstant) {
  EXPECT_NEAR(StepRule::rcor(3.0, 2499).alpha, ln2 / (50.0 * 9.0), 1e-17);
}

TEST(SgdNonsep, ErrorPaths) {
  GuaranteeInputs in;
  in.degnsep = 0.5;
  in.degnsep_certified = true;
  in.loss_star = 0.3;
  std::vector<SgdTrialSummary> few(999);
  EXPECT_EQ(code_of([&] { eval_sgd_nonsep(in, few, StepRule::constant(0.1), 10, SgdOption::A); }), ErrorCode::TooFewTrials);
  std::vector<SgdTrialSummary> ts(1000);
  in.degnsep_certified = false;
  EXPECT_EQ(code_of([&] { eval_sgd_nonsep(in, ts, StepRule::constant(0.1), 10, SgdOption::A); }),
            ErrorCode::UncertifiedConditioning);
  in.degnsep_certified = true;
  EXPECT_EQ(code_of([&] { eval_sgd_nonsep(in, ts, StepRule::greedy(1.0), 10, SgdOption::A); }), ErrorCode::WrongStepRule);
}

TEST(SgdSep, CoverageShrinkageAndGradient) {
  GuaranteeInputs in;
  in.n = 1;
  in.degsep = 2.0;
  in.x_2_inf = 1.0;
  const long k = 9999;
  const StepRule rule = StepRule::rcor(1.0, k);
  std::vector<SgdTrialSummary> ts(500);
  for (std::size_t t = 0; t < ts.size(); ++t) {
    ts[t].trial = static_cast<long>(t);
    ts[t].normalized_margin = t % 2 == 0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
    ts[t].grad_hat_sq = 0.001;
    ts[t].shrink_checked = true;
    ts[t].shrink_min_slack = 0.5;
  }
  const double gammas[] = {0.25, 1.0};
  const GuaranteeReport g = eval_sgd_sep(in, ts, rule, k, SgdOption::B, gammas);
  const ItemReport* c = g.item("coverage@0.25");
  ASSERT_NE(c, nullptr);
  // need = 0.75 - 3 sqrt(0.1875 / 500); half the trials are covered
  expect_bounds(c, {0.75 - 3.0 * std::sqrt(0.1875 / 500.0)});
  EXPECT_NEAR(c->series[0].observed, 0.5, 1e-15);
  EXPECT_EQ(c->verdict, Verdict::Fails);
  const ItemReport* one = g.item("coverage@1");
  ASSERT_NE(one, nullptr);
  EXPECT_NEAR(one->series[0].bound, 0.0, 1e-15);
  EXPECT_NE(one->verdict, Verdict::Fails);
  EXPECT_EQ(g.item("shrinkage")->verdict, Verdict::Holds);
  expect_bounds(g.item("expected-gradient"), {1.1 / 100.0});
  EXPECT_FALSE(g.holds);

  for (auto& t : ts) t.normalized_margin = 1.0;
  const GuaranteeReport h = eval_sgd_sep(in, ts, rule, k, SgdOption::B, gammas);
  EXPECT_TRUE(h.holds);
}

TEST(SgdSep, ErrorPaths) {
  GuaranteeInputs in;
  in.n = 1;
  in.degsep = 2.0;
  in.x_2_inf = 1.0;
  std::vector<SgdTrialSummary> ts(500);
  const double gammas[] = {0.5};
  EXPECT_EQ(code_of([&] { eval_sgd_sep(in, ts, StepRule::rcor(1.0, 10), 10, SgdOption::A, gammas); }), ErrorCode::WrongOption);
  EXPECT_EQ(code_of([&] { eval_sgd_sep(in, ts, StepRule::rcor(1.0, 11), 10, SgdOption::B, gammas); }), ErrorCode::WrongStepRule);
  std::vector<SgdTrialSummary> few(499);
  EXPECT_EQ(code_of([&] { eval_sgd_sep(in, few, StepRule::rcor(1.0, 10), 10, SgdOption::B, gammas); }), ErrorCode::TooFewTrials);
  in.degsep = 0.0;
  EXPECT_EQ(code_of([&] { eval_sgd_sep(in, ts, StepRule::rcor(1.0, 10), 10, SgdOption::B, gammas); }), ErrorCode::NotSeparable);
}

TEST(MeanSe, KnownValues) {
  const MeanSe m = mean_se({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
}

TEST(SecondMoment, HoldsOnRandomPoints) {
  const Dataset d = non_separable_instance(30, 3, 4);
  const DiscreteDistribution dist = DiscreteDistribution::uniform(d);
  const std::vector<Vec> pts = reference_points(3, 5, 1.0, 9);
  const GuaranteeReport g = eval_second_moment(dist, pts, 100000, 3);
  EXPECT_TRUE(g.holds);
  EXPECT_EQ(g.items[0].checks, 5);
}

TEST(IterateDistance, ApplicabilityRules) {
  const PlantedMargin pm = generate_planted_margin(20, 2, 0.5, 8);
  const std::vector<Vec> refs = reference_points(2, 5, 1.0, 1);
  DescentOptions opt;
  opt.k_max = 50;
  opt.checkpoint_stride = 5;
  const LossContext l1(pm.data, NormKind::L1);
  EXPECT_EQ(eval_iterate_distance(pm.data, steepest_descent(l1, StepRule::greedy_for(l1), opt), refs).items[0].verdict,
            Verdict::NotApplicable);
  const LossContext l2(pm.data, NormKind::L2);
  EXPECT_EQ(eval_iterate_distance(pm.data, steepest_descent(l2, StepRule::sep_l2_for(pm.data), opt), refs).items[0].verdict,
            Verdict::Holds);
  SgdOptions so;
  so.k = 50;
  const double x = max_row_dual_norm(NormKind::L2, pm.data.X());
  const SolverTrace big = sgd(DiscreteDistribution::uniform(pm.data), StepRule::constant(3.0 / (x * x)), so);
  EXPECT_EQ(eval_iterate_distance(pm.data, big, refs).items[0].verdict, Verdict::NotApplicable);
}

TEST(EndToEnd, CertifiedNonseparableRunsHold) {
  const Dataset d = non_separable_instance(40, 2, 31);
  for (NormKind k : {NormKind::L1, NormKind::L2}) {
    const PreparedInstance pi = prepare_instance(d, k);
    ASSERT_TRUE(pi.inputs.degnsep_certified);
    const LossContext ctx(d, k);
    DescentOptions opt;
    opt.k_max = 2000;
    opt.reference = *pi.inputs.beta_star;
    const GuaranteeReport a = eval_sd_generic(pi.inputs, steepest_descent(ctx, StepRule::greedy_for(ctx), opt));
    EXPECT_TRUE(a.holds);
    EXPECT_GE(a.min_slack, -1e-9);
    const SolverTrace nt = steepest_descent(ctx, StepRule::nonsep_for(d, k), opt);
    EXPECT_TRUE(eval_nonsep_sublinear(pi.inputs, nt).holds);
    const GuaranteeReport lin = eval_nonsep_linear(pi.inputs, nt);
    EXPECT_TRUE(lin.holds);
    EXPECT_EQ(lin.item("i")->verdict, Verdict::Holds);
    EXPECT_EQ(lin.item("ii")->verdict, Verdict::Holds);
  }
}

TEST(EndToEnd, ContradictoryPairIsStationary) {
  const PreparedInstance pi = prepare_instance(contradictory_pair(), NormKind::L2);
  const LossContext ctx(contradictory_pair(), NormKind::L2);
  const GuaranteeReport g = eval_sd_generic(pi.inputs, steepest_descent(ctx, StepRule::greedy_for(ctx)));
  EXPECT_TRUE(g.holds);
  EXPECT_EQ(g.item("i")->series[0].observed, 0.0);
}

TEST(EndToEnd, HeuristicConditioningIsRefused) {
  const Dataset d = non_separable_instance(30, 3, 41);
  const PreparedInstance pi = prepare_instance(d, NormKind::L2);
  EXPECT_FALSE(pi.inputs.degnsep_certified);
  const LossContext ctx(d, NormKind::L2);
  DescentOptions opt;
  opt.k_max = 10;
  const SolverTrace tr = steepest_descent(ctx, StepRule::greedy_for(ctx), opt);
  EXPECT_EQ(code_of([&] { eval_sd_generic(pi.inputs, tr); }), ErrorCode::UncertifiedConditioning);
}

TEST(EndToEnd, SeparableL2RunHolds) {
  const PlantedMargin pm = generate_planted_margin(20, 2, 0.8, 12);
  const PreparedInstance pi = prepare_instance(pm.data, NormKind::L2);
  const LossContext ctx(pm.data, NormKind::L2);
  DescentOptions opt;
  opt.k_max = 20000;
  const SolverTrace tr = steepest_descent(ctx, StepRule::sep_l2_for(pm.data), opt);
  const GuaranteeReport g = eval_sep_l2(pi.inputs, tr);
  EXPECT_TRUE(g.holds);
  EXPECT_EQ(g.item("ii")->verdict, Verdict::Holds);
  EXPECT_EQ(g.item("iii")->verdict, Verdict::Holds);
  EXPECT_TRUE(eval_margin_gradient(pi.inputs, tr).holds);
}

TEST(EndToEnd, OptimumBoundsFromConditioning) {
  Rng rng(61);
  const Dataset d = non_separable_instance(40, 2, 51);
  for (NormKind k : {NormKind::L1, NormKind::L2, NormKind::LInf}) {
    const PreparedInstance pi = prepare_instance(d, k);
    const NormSpec ns(k);
    const Vec& bs = *pi.inputs.beta_star;
    EXPECT_LE(ns.norm(bs), *pi.inputs.loss_star / pi.inputs.degnsep + 1e-12);
    const LossContext ctx(d, k);
    int tested = 0;
    while (tested < 100) {
      Vec b(2);
      b << rng.normal(), rng.normal();
      b *= 3.0 * rng.uniform();
      if (loss_value(ctx, b) > ln2) continue;
      ++tested;
      EXPECT_LE(ns.norm(b - bs), 2.0 * ln2 / pi.inputs.degnsep + 1e-12);
    }
  }
}

TEST(Evaluators, PureFunctionsOfInputs) {
  const Dataset d = non_separable_instance(30, 2, 71);
  const PreparedInstance pi = prepare_instance(d, NormKind::L2);
  const LossContext ctx(d, NormKind::L2);
  DescentOptions opt;
  opt.k_max = 200;
  const SolverTrace tr = steepest_descent(ctx, StepRule::nonsep_for(d, NormKind::L2), opt);
  const GuaranteeReport a = eval_nonsep_sublinear(pi.inputs, tr);
  const GuaranteeReport b = eval_nonsep_sublinear(pi.inputs, tr);
  ASSERT_EQ(a.items.size(), b.items.size());
  for (std::size_t i = 0; i < a.items.size(); ++i) {
    EXPECT_EQ(a.items[i].min_slack, b.items[i].min_slack);
    EXPECT_EQ(a.items[i].verdict, b.items[i].verdict);
  }
}
