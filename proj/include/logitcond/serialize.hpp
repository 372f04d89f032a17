#pragma once

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "logitcond/conditioning.hpp"
#include "logitcond/data.hpp"
#include "logitcond/guarantees.hpp"
#include "logitcond/solvers.hpp"

namespace logitcond {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

namespace detail {

inline void dump_string(std::string& out, const std::string& s) {
  // reuse the library escaper for strings
  out += Json(s).dump();
}

inline void dump_value(std::string& out, const Json& j, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        dump_string(out, it.key());
        out += indent < 0 ? ":" : ": ";
        dump_value(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // numeric arrays stay on one line
      bool flat = true;
      for (const auto& e : j)
        if (e.is_object() || e.is_array()) flat = false;
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat && indent >= 0 ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        dump_value(out, e, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_double(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

// Floats are written with 17 significant digits; non-finite values become null.
inline std::string dump_json(const Json& j, int indent = 2) {
  std::string out;
  detail::dump_value(out, j, indent, 0);
  return out;
}

inline Json to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json to_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vec(m.row(i).transpose())));
  return a;
}

inline Json to_json(const DegSepResult& r) {
  Json j;
  j["value"] = r.value;
  j["lower"] = r.lower;
  j["gap"] = r.gap;
  j["method"] = to_string(r.method);
  j["converged"] = r.converged;
  j["beta"] = to_json(r.beta);
  j["lambda"] = to_json(r.lambda);
  return j;
}

inline Json to_json(const DegNsepResult& r) {
  Json j;
  j["value"] = r.value;
  j["lower_bound"] = r.lower_bound;
  j["method"] = to_string(r.method);
  j["certified"] = r.certified();
  j["witness"] = to_json(r.witness);
  return j;
}

inline Json to_json(const OperatorNormValue& v) {
  Json j;
  j["value"] = v.value;
  j["certified"] = v.certified;
  return j;
}

inline Json to_json(const ConditioningReport& r) {
  Json j;
  j["norm"] = r.norm.name();
  j["n"] = static_cast<long>(r.n);
  j["p"] = static_cast<long>(r.p);
  j["status"] = to_string(r.status);
  j["tol_ill"] = r.tol_ill;
  j["degsep"] = to_json(r.degsep);
  j["degnsep"] = to_json(r.degnsep);
  Json ops;
  ops["x_dot_2"] = to_json(r.operator_norms.x_dot_2);
  ops["x_2_inf"] = to_json(r.operator_norms.x_2_inf);
  ops["x_dot_inf"] = to_json(r.operator_norms.x_dot_inf);
  j["operator_norms"] = ops;
  j["smoothness_L"] = r.smoothness_L;
  j["dist0_bound"] = r.dist0_bound;
  j["beta_star_norm_bound"] = r.beta_star_norm_bound;
  return j;
}

inline Json to_json(const Perturbation& p) {
  Json j;
  j["norm_kind"] = to_string(p.norm_kind);
  j["measured_norm"] = p.measured_norm;
  j["delta_X"] = to_json(p.delta_X);
  return j;
}

inline Json to_json(const StepRule& r) {
  Json j;
  j["kind"] = to_string(r.kind);
  switch (r.kind) {
    case StepKind::GreedyOverL: j["L"] = r.L; break;
    case StepKind::NonSepLogit:
      j["x_dot_2"] = r.x_dot_2;
      j["n"] = r.n;
      break;
    case StepKind::SepL2: j["x_2_inf"] = r.x_2_inf; break;
    case StepKind::ConstantSGD: j["alpha"] = r.alpha; break;
    case StepKind::RCorSGD:
      j["R"] = r.R;
      j["horizon"] = r.horizon;
      j["alpha"] = r.alpha;
      break;
  }
  return j;
}

inline Json to_json(const TraceMeta& m) {
  Json j;
  j["algorithm"] = m.algorithm;
  j["norm"] = m.norm.name();
  j["rule"] = to_json(m.rule);
  j["seed"] = m.seed;
  j["option"] = m.option ? Json(to_string(*m.option)) : Json(nullptr);
  j["k_max"] = m.k_max;
  j["checkpoint_stride"] = m.checkpoint_stride;
  j["stationary_exact"] = m.stationary_exact;
  j["guarantees_applicable"] = m.guarantees_applicable;
  j["sampled_index"] = m.sampled_index >= 0 ? Json(m.sampled_index) : Json(nullptr);
  return j;
}

inline Json to_json(const SolverTrace& t) {
  Json j;
  j["meta"] = to_json(t.meta);
  j["iterations"] = static_cast<long>(t.records.size());
  if (!t.records.empty()) {
    const IterRecord& last = t.records.back();
    Json f;
    f["iter"] = last.iter;
    f["loss"] = last.loss;
    f["grad_dual_norm"] = last.grad_dual_norm;
    f["margin"] = last.margin;
    f["beta_norm"] = last.beta_norm;
    j["final"] = f;
  }
  j["final_beta"] = to_json(t.final_beta);
  j["output_beta"] = to_json(t.output_beta);
  j["checkpoints"] = static_cast<long>(t.checkpoints.size());
  return j;
}

inline Json to_json(const ItemReport& it) {
  Json j;
  j["id"] = it.id;
  j["label"] = it.label;
  j["sense"] = it.sense == Sense::Upper ? "upper" : "lower";
  j["verdict"] = to_string(it.verdict);
  j["checks"] = it.checks;
  j["vacuous"] = it.vacuous;
  j["failures"] = it.failures;
  j["min_slack"] = it.min_slack;
  j["bound_at_kmax"] = it.bound_at_kmax;
  j["observed_at_kmax"] = it.observed_at_kmax;
  if (!it.note.empty()) j["note"] = it.note;
  Json s = Json::array();
  for (const auto& c : it.series) {
    Json row = Json::array({c.k, c.bound, c.observed});
    if (c.allowance != 0.0) row.push_back(c.allowance);
    s.push_back(row);
  }
  j["series"] = s;
  return j;
}

inline Json to_json(const GuaranteeReport& g) {
  Json j;
  j["guarantee"] = g.guarantee;
  j["holds"] = g.holds;
  j["min_slack"] = g.min_slack;
  Json items = Json::array();
  for (const auto& it : g.items) items.push_back(to_json(it));
  j["items"] = items;
  j["notes"] = g.notes;
  return j;
}

// Artifact wrapper carrying the tool version, the run configuration and the seed.
inline Json envelope(const std::string& command, const Json& config, std::uint64_t seed, Json body) {
  Json j;
  j["version"] = kVersion;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config;
  j["result"] = std::move(body);
  return j;
}

inline void write_trace_csv(std::ostream& out, const SolverTrace& t) {
  out << "iter,loss,grad_dual_norm,margin,beta_norm,step_size\n";
  for (const auto& r : t.records)
    out << r.iter << ',' << format_double(r.loss) << ',' << format_double(r.grad_dual_norm) << ','
        << format_double(r.margin) << ',' << format_double(r.beta_norm) << ',' << format_double(r.step_size) << '\n';
}

inline void write_checkpoints_csv(std::ostream& out, const SolverTrace& t) {
  const Eigen::Index p = t.final_beta.size();
  out << "iter";
  for (Eigen::Index j = 0; j < p; ++j) out << ",beta_" << j;
  out << '\n';
  for (const auto& c : t.checkpoints) {
    out << c.iter;
    for (Eigen::Index j = 0; j < c.beta.size(); ++j) out << ',' << format_double(c.beta(j));
    out << '\n';
  }
}

inline std::string short_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string guarantee_table(const GuaranteeReport& g) {
  std::ostringstream os;
  os << g.guarantee << '\n';
  os << std::left << std::setw(22) << "item" << std::setw(16) << "bound@kmax" << std::setw(16) << "observed@kmax"
     << std::setw(16) << "min_slack" << "verdict\n";
  for (const auto& it : g.items) {
    const bool slack_known = it.verdict == Verdict::Holds || it.verdict == Verdict::Fails;
    os << std::setw(22) << it.id << std::setw(16) << short_number(it.bound_at_kmax) << std::setw(16)
       << short_number(it.observed_at_kmax) << std::setw(16) << (slack_known ? short_number(it.min_slack) : "-")
       << to_string(it.verdict);
    if (!it.note.empty()) os << "  (" << it.note << ')';
    os << '\n';
  }
  for (const auto& n : g.notes) os << "note: " << n << '\n';
  return os.str();
}

}  // namespace logitcond
