#pragma once

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "logitcond/conditioning.hpp"
#include "logitcond/data.hpp"
#include "logitcond/guarantees.hpp"
#include "logitcond/serialize.hpp"
#include "logitcond/solvers.hpp"

namespace logitcond::cli {

enum class ExitCode : int { Success = 0, GuaranteeFailed = 1, UsageError = 2 };

struct RunConfig {
  std::string command;
  // dataset: a CSV path or generator parameters
  std::string data;
  std::string label_col;
  bool header = false;
  bool zero_one = false;
  std::string generator;  // logistic | planted
  long n = 100;
  long p = 2;
  double margin = 0.1;
  std::vector<double> beta_true;

  std::string norm = "l2";
  std::string rule;
  std::optional<double> alpha;
  long k = 1000;
  std::uint64_t seed = 0;
  long trials = 0;
  std::vector<double> gamma{0.25, 0.5};
  std::string option;
  std::string theorem = "all";
  std::string direction;  // separable | nonseparable
  double eps = 1e-3;
  long stride = 100;
  double tol_ill = 1e-8;
  std::string out;
  std::string json_out;
  std::string checkpoints_out;
  bool quiet = false;
};

inline Json config_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  if (!c.data.empty()) {
    j["data"] = c.data;
    if (!c.label_col.empty()) j["label_col"] = c.label_col;
    j["header"] = c.header;
    j["zero_one_labels"] = c.zero_one;
  } else if (!c.generator.empty()) {
    j["generator"] = c.generator;
    j["n"] = c.n;
    j["p"] = c.p;
    if (c.generator == "planted") j["margin"] = c.margin;
    else j["beta_true"] = c.beta_true;
  }
  j["norm"] = c.norm;
  if (!c.rule.empty()) j["rule"] = c.rule;
  if (c.alpha) j["alpha"] = *c.alpha;
  j["k"] = c.k;
  j["seed"] = c.seed;
  if (c.trials > 0) j["trials"] = c.trials;
  if (!c.option.empty()) j["option"] = c.option;
  if (c.command == "verify") {
    j["theorem"] = c.theorem;
    j["gamma"] = c.gamma;
  }
  if (c.command == "perturb") {
    j["direction"] = c.direction;
    j["eps"] = c.eps;
  }
  j["tol_ill"] = c.tol_ill;
  return j;
}

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  f << text;
  if (!f) throw Error(ErrorCode::Io, "write failed for '" + path + "'");
}

inline std::string with_suffix(const std::string& path, const std::string& suffix) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return path.substr(0, dot) + suffix;
  return path + suffix;
}

inline Vec beta_true_for(const RunConfig& c) {
  if (c.beta_true.empty()) return Vec::Ones(c.p);
  if (static_cast<long>(c.beta_true.size()) != c.p)
    throw Error(ErrorCode::InvalidArgument, "--beta must have p entries");
  return Eigen::Map<const Vec>(c.beta_true.data(), c.p);
}

inline Dataset generate(const RunConfig& c) {
  if (c.generator == "logistic") return generate_logistic(c.n, c.p, beta_true_for(c), c.seed);
  if (c.generator == "planted") return generate_planted_margin(c.n, c.p, c.margin, c.seed).data;
  throw Error(ErrorCode::InvalidArgument, "unknown generator '" + c.generator + "'");
}

inline Dataset load(const RunConfig& c) {
  if (c.data.empty() && c.generator.empty()) throw Error(ErrorCode::InvalidArgument, "need --data or --gen");
  if (!c.data.empty()) {
    CsvOptions opt;
    opt.header = c.header;
    opt.zero_one_labels = c.zero_one;
    if (!c.label_col.empty()) {
      long idx = 0;
      const auto [ptr, ec] = std::from_chars(c.label_col.data(), c.label_col.data() + c.label_col.size(), idx);
      if (ec == std::errc() && ptr == c.label_col.data() + c.label_col.size()) opt.label_column = idx;
      else {
        opt.label_column = c.label_col;
        opt.header = true;
      }
    }
    return load_csv(c.data, opt);
  }
  return generate(c);
}

inline ConditioningOptions conditioning_options(const RunConfig& c) {
  ConditioningOptions opt;
  opt.tol_ill = c.tol_ill;
  opt.degnsep.seed = c.seed;
  return opt;
}

inline StepRule make_rule(const RunConfig& c, StepKind kind, const Dataset& data, NormSpec norm) {
  switch (kind) {
    case StepKind::GreedyOverL: return StepRule::greedy_for(LossContext(data, norm));
    case StepKind::NonSepLogit: return StepRule::nonsep_for(data, norm);
    case StepKind::SepL2: return StepRule::sep_l2_for(data);
    case StepKind::ConstantSGD:
      if (!c.alpha) throw Error(ErrorCode::InvalidArgument, "the const rule needs --alpha");
      return StepRule::constant(*c.alpha);
    case StepKind::RCorSGD: return StepRule::rcor_for(DiscreteDistribution::uniform(data), c.k);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown rule");
}

inline SgdOption parse_option(const std::string& s, SgdOption fallback) {
  if (s.empty()) return fallback;
  if (s == "a" || s == "A") return SgdOption::A;
  if (s == "b" || s == "B") return SgdOption::B;
  throw Error(ErrorCode::InvalidArgument, "option must be a or b");
}

// numeric aliases accepted for --theorem
inline std::string canonical_theorem(const std::string& t) {
  static const std::vector<std::pair<std::string, std::string>> aliases = {
      {"3.1", "sd-generic"},       {"3.2", "nonsep-sublinear"}, {"3.3", "nonsep-linear"},
      {"3.4", "sep-l2"},           {"4.2", "sgd-nonsep"},       {"4.3", "sgd-nonsep"},
      {"4.4", "sgd-nonsep"},       {"4.5", "sgd-sep"},          {"lemma2.4", "margin-gradient"},
      {"2.4", "margin-gradient"},  {"propA.2", "iterate-distance"}, {"A.2", "iterate-distance"}};
  for (const auto& [alias, name] : aliases)
    if (t == alias) return name;
  static const std::vector<std::string> names = {"all",           "sd-generic", "nonsep-sublinear", "nonsep-linear",
                                                 "sep-l2",        "sgd-nonsep", "sgd-sep",          "margin-gradient",
                                                 "iterate-distance", "second-moment"};
  for (const auto& n : names)
    if (t == n) return n;
  throw Error(ErrorCode::InvalidArgument, "unknown guarantee '" + t + "'");
}

struct VerifyOutcome {
  std::vector<GuaranteeReport> reports;
  std::vector<std::string> skipped;
};

class Verifier {
 public:
  Verifier(const RunConfig& c, const Dataset& data, NormSpec norm)
      : c_(c), data_(data), norm_(norm), dist_(DiscreteDistribution::uniform(data)) {
    prepared_ = prepare_instance(dist_, norm_, conditioning_options(c));
  }

  const PreparedInstance& prepared() const { return prepared_; }

  VerifyOutcome run(const std::string& theorem) {
    VerifyOutcome out;
    const bool all = theorem == "all";
    std::vector<std::string> todo;
    if (!all) {
      todo.push_back(theorem);
    } else if (prepared_.report.status == SeparabilityStatus::NonSeparable) {
      todo = {"sd-generic", "nonsep-sublinear", "nonsep-linear"};
    } else if (prepared_.report.status == SeparabilityStatus::Separable) {
      if (norm_.kind == NormKind::L2) todo = {"sep-l2", "margin-gradient", "iterate-distance"};
      else todo = {"margin-gradient"};
    } else {
      out.skipped.push_back("dataset is ill-posed; no guarantee applies");
    }
    for (const auto& t : todo) {
      try {
        evaluate(t, out);
      } catch (const Error& e) {
        if (!all) throw;
        out.skipped.push_back(t + ": " + e.what());
      }
    }
    return out;
  }

 private:
  const SolverTrace& descent(StepKind kind) {
    for (auto& [k, tr] : traces_)
      if (k == kind) return tr;
    const StepRule rule = make_rule(c_, kind, data_, norm_);
    DescentOptions opt;
    opt.k_max = c_.k;
    opt.checkpoint_stride = c_.stride;
    if (prepared_.inputs.beta_star) opt.reference = *prepared_.inputs.beta_star;
    traces_.emplace_back(kind, steepest_descent(LossContext(data_, norm_), rule, opt));
    return traces_.back().second;
  }

  StepKind deterministic_rule(StepKind fallback) const {
    if (c_.rule.empty()) return fallback;
    const StepKind k = parse_step_kind(c_.rule);
    if (k == StepKind::ConstantSGD || k == StepKind::RCorSGD)
      throw Error(ErrorCode::WrongStepRule, "this guarantee needs a deterministic step rule");
    return k;
  }

  StepRule sgd_rule() const {
    const StepKind k = c_.rule.empty() ? StepKind::RCorSGD : parse_step_kind(c_.rule);
    if (k != StepKind::ConstantSGD && k != StepKind::RCorSGD)
      throw Error(ErrorCode::WrongStepRule, "this guarantee needs the const or rcor rule");
    return make_rule(c_, k, data_, norm_);
  }

  std::vector<SgdTrialSummary> trials(const StepRule& rule, SgdOption option, long count) {
    SgdTrialConfig cfg;
    cfg.k = c_.k;
    cfg.option = option;
    cfg.base_seed = c_.seed;
    cfg.trials = count;
    cfg.checkpoint_stride = c_.stride;
    return run_sgd_trials(dist_, rule, prepared_.inputs, cfg);
  }

  void evaluate(const std::string& t, VerifyOutcome& out) {
    const GuaranteeInputs& in = prepared_.inputs;
    if (t == "sd-generic") {
      out.reports.push_back(eval_sd_generic(in, descent(deterministic_rule(StepKind::GreedyOverL))));
    } else if (t == "nonsep-sublinear") {
      out.reports.push_back(eval_nonsep_sublinear(in, descent(deterministic_rule(StepKind::NonSepLogit))));
    } else if (t == "nonsep-linear") {
      out.reports.push_back(eval_nonsep_linear(in, descent(deterministic_rule(StepKind::NonSepLogit))));
    } else if (t == "sep-l2") {
      out.reports.push_back(eval_sep_l2(in, descent(deterministic_rule(StepKind::SepL2))));
    } else if (t == "margin-gradient") {
      const StepKind fallback = norm_.kind == NormKind::L2 ? StepKind::SepL2 : StepKind::GreedyOverL;
      out.reports.push_back(eval_margin_gradient(in, descent(deterministic_rule(fallback))));
    } else if (t == "iterate-distance") {
      const std::vector<Vec> refs = reference_points(data_.p(), 20, 1.0, substream_seed(c_.seed, 0xa2a2a2ULL));
      const bool stochastic = !c_.rule.empty() && !StepRule{parse_step_kind(c_.rule)}.deterministic();
      if (stochastic) {
        SgdOptions so;
        so.k = c_.k;
        so.option = parse_option(c_.option, SgdOption::A);
        so.seed = c_.seed;
        so.checkpoint_stride = c_.stride;
        out.reports.push_back(eval_iterate_distance(data_, sgd(dist_, sgd_rule(), so), refs));
      } else {
        out.reports.push_back(eval_iterate_distance(data_, descent(deterministic_rule(StepKind::SepL2)), refs));
      }
    } else if (t == "sgd-nonsep") {
      const StepRule rule = sgd_rule();
      const SgdOption option = parse_option(c_.option, SgdOption::A);
      const auto tr = trials(rule, option, c_.trials > 0 ? c_.trials : 1000);
      out.reports.push_back(eval_sgd_nonsep(in, tr, rule, c_.k, option));
      evaluate("second-moment", out);
    } else if (t == "sgd-sep") {
      const StepRule rule = sgd_rule();
      const SgdOption option = parse_option(c_.option, SgdOption::B);
      const auto tr = trials(rule, option, c_.trials > 0 ? c_.trials : 500);
      out.reports.push_back(eval_sgd_sep(in, tr, rule, c_.k, option, c_.gamma));
    } else if (t == "second-moment") {
      const std::vector<Vec> pts = reference_points(data_.p(), 5, 1.0, substream_seed(c_.seed, 0x5ec0dULL));
      out.reports.push_back(eval_second_moment(dist_, pts, 100000, substream_seed(c_.seed, 0x5ec0eULL)));
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown guarantee '" + t + "'");
    }
  }

  const RunConfig& c_;
  const Dataset& data_;
  NormSpec norm_;
  DiscreteDistribution dist_;
  PreparedInstance prepared_;
  std::vector<std::pair<StepKind, SolverTrace>> traces_;
};

}  // namespace detail

inline int run_analyze(const RunConfig& c) {
  const Dataset data = detail::load(c);
  const ConditioningReport r = analyze(data, parse_norm(c.norm), detail::conditioning_options(c));
  detail::write_text(c.out, dump_json(envelope("analyze", config_json(c), c.seed, to_json(r))) + "\n");
  return 0;
}

inline int run_generate(const RunConfig& c) {
  if (c.generator.empty()) throw Error(ErrorCode::InvalidArgument, "generate needs --gen");
  std::ostringstream os;
  write_csv(os, detail::generate(c), c.header);
  detail::write_text(c.out, os.str());
  return 0;
}

inline int run_solve(const RunConfig& c) {
  if (c.out.empty()) throw Error(ErrorCode::InvalidArgument, "solve needs --out for the trace CSV");
  if (c.rule.empty()) throw Error(ErrorCode::InvalidArgument, "solve needs --rule");
  const Dataset data = detail::load(c);
  const NormSpec norm = parse_norm(c.norm);
  const StepKind kind = parse_step_kind(c.rule);
  const StepRule rule = detail::make_rule(c, kind, data, norm);
  SolverTrace tr;
  if (rule.deterministic()) {
    if (!c.option.empty()) throw Error(ErrorCode::InvalidArgument, "--option applies to SGD rules only");
    DescentOptions opt;
    opt.k_max = c.k;
    opt.checkpoint_stride = c.stride;
    tr = steepest_descent(LossContext(data, norm), rule, opt);
    tr.meta.seed = c.seed;
  } else {
    if (norm.kind != NormKind::L2) throw Error(ErrorCode::InvalidArgument, "SGD runs use the l2 norm");
    SgdOptions opt;
    opt.k = c.k;
    opt.option = detail::parse_option(c.option, SgdOption::A);
    opt.seed = c.seed;
    opt.checkpoint_stride = c.stride;
    tr = sgd(DiscreteDistribution::uniform(data), rule, opt);
  }
  std::ostringstream csv, cps;
  write_trace_csv(csv, tr);
  write_checkpoints_csv(cps, tr);
  detail::write_text(c.out, csv.str());
  const std::string jpath = c.json_out.empty() ? detail::with_suffix(c.out, ".json") : c.json_out;
  const std::string cpath = c.checkpoints_out.empty() ? detail::with_suffix(c.out, ".checkpoints.csv") : c.checkpoints_out;
  detail::write_text(jpath, dump_json(envelope("solve", config_json(c), c.seed, to_json(tr))) + "\n");
  detail::write_text(cpath, cps.str());
  return 0;
}

inline int run_verify(const RunConfig& c) {
  const std::string theorem = detail::canonical_theorem(c.theorem);
  const Dataset data = detail::load(c);
  const NormSpec norm = parse_norm(c.norm);
  if (!c.option.empty()) detail::parse_option(c.option, SgdOption::A);
  detail::Verifier v(c, data, norm);
  const detail::VerifyOutcome res = v.run(theorem);
  bool failed = false;
  Json reports = Json::array();
  for (const auto& g : res.reports) {
    if (!g.holds) failed = true;
    reports.push_back(to_json(g));
    if (!c.quiet) std::cout << guarantee_table(g) << '\n';
  }
  for (const auto& s : res.skipped)
    if (!c.quiet) std::cout << "skipped: " << s << '\n';
  Json body;
  body["conditioning"] = to_json(v.prepared().report);
  body["holds"] = !failed;
  body["reports"] = reports;
  body["skipped"] = res.skipped;
  if (!c.out.empty()) detail::write_text(c.out, dump_json(envelope("verify", config_json(c), c.seed, body)) + "\n");
  return failed ? 1 : 0;
}

inline int run_perturb(const RunConfig& c) {
  if (c.out.empty()) throw Error(ErrorCode::InvalidArgument, "perturb needs --out for the dataset CSV");
  const Dataset data = detail::load(c);
  const NormSpec norm = parse_norm(c.norm);
  const ConditioningOptions opt = detail::conditioning_options(c);
  std::string direction = c.direction;
  if (direction.empty())
    direction = separability_status(data, norm, c.tol_ill) == SeparabilityStatus::Separable ? "nonseparable" : "separable";
  Perturbation pert;
  if (direction == "separable") pert = perturb_to_separable(data, norm, c.eps, opt);
  else if (direction == "nonseparable") pert = perturb_to_nonseparable(data, norm, opt);
  else throw Error(ErrorCode::InvalidArgument, "direction must be separable or nonseparable");
  const Dataset moved = pert.apply(data);
  std::ostringstream os;
  write_csv(os, moved, c.header);
  detail::write_text(c.out, os.str());
  Json body = to_json(pert);
  body["direction"] = direction;
  body["status_after"] = to_string(separability_status(moved, norm, c.tol_ill));
  const std::string jpath = c.json_out.empty() ? detail::with_suffix(c.out, ".json") : c.json_out;
  detail::write_text(jpath, dump_json(envelope("perturb", config_json(c), c.seed, body)) + "\n");
  return 0;
}

inline int run(const RunConfig& c) {
  if (c.command == "analyze") return run_analyze(c);
  if (c.command == "generate") return run_generate(c);
  if (c.command == "solve") return run_solve(c);
  if (c.command == "verify") return run_verify(c);
  if (c.command == "perturb") return run_perturb(c);
  throw Error(ErrorCode::InvalidArgument, "unknown command '" + c.command + "'");
}

inline void add_data_options(CLI::App* sub, RunConfig& c) {
  auto* data = sub->add_option("--data", c.data, "dataset CSV (label column last unless --label-col)")->check(CLI::ExistingFile);
  sub->add_option("--label-col", c.label_col, "label column index or header name")->needs(data);
  sub->add_flag("--header", c.header, "CSV has a header row");
  sub->add_flag("--zero-one", c.zero_one, "labels are 0/1 instead of -1/+1");
  auto* gen = sub->add_option("--gen", c.generator, "generate instead of loading: logistic or planted")
                   ->check(CLI::IsMember({"logistic", "planted"}));
  gen->excludes(data);
  sub->add_option("--n", c.n, "generated observations")->check(CLI::PositiveNumber);
  sub->add_option("--p", c.p, "generated features")->check(CLI::PositiveNumber);
  sub->add_option("--margin", c.margin, "planted margin")->check(CLI::PositiveNumber);
  sub->add_option("--beta", c.beta_true, "true coefficients for the logistic generator")->delimiter(',');
}

// Parses argv and runs; returns the process exit status.
inline int main(int argc, char** argv, std::ostream& err = std::cerr) {
  CLI::App app{"Condition numbers and convergence guarantees for logistic regression"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  RunConfig c;
  const auto norms = CLI::IsMember({"l1", "l2", "linf"});
  const auto rules = CLI::IsMember({"greedy", "nonsep", "sepl2", "const", "rcor"});

  auto* analyze_cmd = app.add_subcommand("analyze", "condition numbers and separability status");
  add_data_options(analyze_cmd, c);
  analyze_cmd->add_option("--norm", c.norm)->check(norms);
  analyze_cmd->add_option("--tol-ill", c.tol_ill)->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--seed", c.seed);
  analyze_cmd->add_option("--out", c.out, "report JSON (stdout when omitted)");

  auto* generate_cmd = app.add_subcommand("generate", "write a synthetic dataset CSV");
  add_data_options(generate_cmd, c);
  generate_cmd->add_option("--seed", c.seed);
  generate_cmd->add_option("--out", c.out, "dataset CSV (stdout when omitted)");

  auto* solve_cmd = app.add_subcommand("solve", "steepest descent or SGD run");
  add_data_options(solve_cmd, c);
  solve_cmd->add_option("--norm", c.norm)->check(norms);
  solve_cmd->add_option("--rule", c.rule)->required()->check(rules);
  solve_cmd->add_option("--alpha", c.alpha)->check(CLI::PositiveNumber);
  solve_cmd->add_option("--k", c.k)->check(CLI::NonNegativeNumber);
  solve_cmd->add_option("--seed", c.seed);
  solve_cmd->add_option("--option", c.option)->check(CLI::IsMember({"a", "b", "A", "B"}));
  solve_cmd->add_option("--stride", c.stride, "checkpoint stride")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--out", c.out, "trace CSV")->required();
  solve_cmd->add_option("--json", c.json_out, "trace JSON (default: next to --out)");
  solve_cmd->add_option("--checkpoints", c.checkpoints_out, "checkpoint CSV (default: next to --out)");

  auto* verify_cmd = app.add_subcommand("verify", "run solvers and check guarantees");
  add_data_options(verify_cmd, c);
  verify_cmd->add_option("--theorem", c.theorem, "guarantee name or numeric alias; default all");
  verify_cmd->add_option("--norm", c.norm)->check(norms);
  verify_cmd->add_option("--rule", c.rule)->check(rules);
  verify_cmd->add_option("--alpha", c.alpha)->check(CLI::PositiveNumber);
  verify_cmd->add_option("--k", c.k)->check(CLI::NonNegativeNumber);
  verify_cmd->add_option("--seed", c.seed);
  verify_cmd->add_option("--trials", c.trials)->check(CLI::PositiveNumber);
  verify_cmd->add_option("--gamma", c.gamma)->delimiter(',')->check(CLI::Range(0.0, 1.0));
  verify_cmd->add_option("--option", c.option)->check(CLI::IsMember({"a", "b", "A", "B"}));
  verify_cmd->add_option("--stride", c.stride, "checkpoint stride")->check(CLI::PositiveNumber);
  verify_cmd->add_option("--tol-ill", c.tol_ill)->check(CLI::PositiveNumber);
  verify_cmd->add_option("--out", c.out, "report JSON");
  verify_cmd->add_flag("--quiet", c.quiet, "suppress the table");

  auto* perturb_cmd = app.add_subcommand("perturb", "smallest perturbation flipping separability");
  add_data_options(perturb_cmd, c);
  perturb_cmd->add_option("--norm", c.norm)->check(norms);
  perturb_cmd->add_option("--direction", c.direction)->check(CLI::IsMember({"separable", "nonseparable"}));
  perturb_cmd->add_option("--eps", c.eps)->check(CLI::PositiveNumber);
  perturb_cmd->add_option("--seed", c.seed);
  perturb_cmd->add_option("--tol-ill", c.tol_ill)->check(CLI::PositiveNumber);
  perturb_cmd->add_option("--out", c.out, "perturbed dataset CSV")->required();
  perturb_cmd->add_option("--json", c.json_out, "perturbation JSON (default: next to --out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::UsageError);
  }
  for (auto* sub : app.get_subcommands()) c.command = sub->get_name();
  if (c.rule == "const" && !c.alpha) {
    err << "error: --rule const requires --alpha\n";
    return static_cast<int>(ExitCode::UsageError);
  }
  if (c.alpha && c.rule != "const") {
    err << "error: --alpha applies to --rule const only\n";
    return static_cast<int>(ExitCode::UsageError);
  }
  try {
    return run(c);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::UsageError);
  }
}

}  // namespace logitcond::cli
