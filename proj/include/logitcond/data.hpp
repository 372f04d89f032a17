#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "logitcond/error.hpp"
#include "logitcond/norms.hpp"
#include "logitcond/random.hpp"

namespace logitcond {

using IVec = Eigen::VectorXi;

class Dataset {
 public:
  Dataset() = default;
  Dataset(Mat X, IVec y) : X_(std::move(X)), y_(std::move(y)) { validate(); }

  const Mat& X() const { return X_; }
  const IVec& y() const { return y_; }
  Eigen::Index n() const { return X_.rows(); }
  Eigen::Index p() const { return X_.cols(); }
  double label(Eigen::Index i) const { return static_cast<double>(y_(i)); }

  // y_i x_i as a row vector; Y is never materialized
  Vec signed_row(Eigen::Index i) const { return label(i) * X_.row(i).transpose(); }
  Mat signed_rows() const { return y_.cast<double>().asDiagonal() * X_; }

  // y_i beta^T x_i for every i
  Vec classification_values(const Eigen::Ref<const Vec>& beta) const {
    return (X_ * beta).cwiseProduct(y_.cast<double>());
  }

  Dataset with_features(Mat X) const { return Dataset(std::move(X), y_); }

  bool operator==(const Dataset& o) const { return X_ == o.X_ && y_ == o.y_; }

 private:
  void validate() const {
    if (X_.rows() < 1 || X_.cols() < 1) throw Error(ErrorCode::InvalidArgument, "dataset needs n >= 1 and p >= 1");
    if (y_.size() != X_.rows()) throw Error(ErrorCode::InvalidArgument, "label count does not match rows");
    if (!X_.allFinite()) throw Error(ErrorCode::NonFinite, "dataset has non-finite features");
    for (Eigen::Index i = 0; i < y_.size(); ++i)
      if (y_(i) != 1 && y_(i) != -1) throw BadLabel(static_cast<long>(i + 1), std::to_string(y_(i)));
  }

  Mat X_;
  IVec y_;
};

// min_i y_i beta^T x_i
inline double margin(const Dataset& data, const Eigen::Ref<const Vec>& beta) {
  if (beta.size() != data.p()) throw Error(ErrorCode::InvalidArgument, "beta has wrong length");
  return data.classification_values(beta).minCoeff();
}

class DiscreteDistribution {
 public:
  DiscreteDistribution(Dataset data, Vec weights) : data_(std::move(data)), weights_(std::move(weights)) {
    if (weights_.size() != data_.n()) throw Error(ErrorCode::InvalidArgument, "weights length must equal n");
    if (!weights_.allFinite() || (weights_.array() < 0.0).any())
      throw Error(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
    if (std::abs(weights_.sum() - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "weights must sum to 1");
    second_moment_ = data_.X().transpose() * weights_.asDiagonal() * data_.X();
    second_moment_ = 0.5 * (second_moment_ + second_moment_.transpose()).eval();
    trace_sigma_ = second_moment_.trace();
    radius_ = data_.X().rowwise().norm().maxCoeff();
    cumulative_.resize(static_cast<std::size_t>(data_.n()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < data_.n(); ++i) {
      acc += weights_(i);
      cumulative_[static_cast<std::size_t>(i)] = acc;
    }
    uniform_ = (weights_.array() == weights_(0)).all();
  }

  static DiscreteDistribution uniform(const Dataset& data) {
    return DiscreteDistribution(data, Vec::Constant(data.n(), 1.0 / static_cast<double>(data.n())));
  }

  const Dataset& dataset() const { return data_; }
  const Vec& weights() const { return weights_; }
  const Mat& second_moment() const { return second_moment_; }
  double trace_sigma() const { return trace_sigma_; }
  double radius() const { return radius_; }
  bool is_uniform() const { return uniform_; }

  Eigen::Index sample(Rng& rng) const {
    if (uniform_) return static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(data_.n())));
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    auto idx = static_cast<Eigen::Index>(it - cumulative_.begin());
    idx = std::min(idx, data_.n() - 1);
    // skip zero-weight atoms that can only be hit through rounding
    while (weights_(idx) == 0.0 && idx > 0) --idx;
    return idx;
  }

 private:
  Dataset data_;
  Vec weights_;
  Mat second_moment_;
  double trace_sigma_ = 0.0;
  double radius_ = 0.0;
  std::vector<double> cumulative_;
  bool uniform_ = true;
};

// ---------------------------------------------------------------- CSV

struct CsvOptions {
  bool header = false;
  bool zero_one_labels = false;
  // label column by index (negative counts from the end) or by header name
  std::variant<long, std::string> label_column = -1L;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view tok) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return std::nullopt;
  return v;
}

}  // namespace detail

inline Dataset read_csv(std::istream& in, const CsvOptions& opt = {}) {
  std::string line;
  long row = 0;
  std::vector<std::string_view> header_names;
  std::string header_line;
  long label_col = -1;
  long width = -1;
  std::vector<double> feats;
  std::vector<int> labels;

  auto resolve_label = [&](long ncols) {
    if (const long* idx = std::get_if<long>(&opt.label_column)) {
      long c = *idx < 0 ? ncols + *idx : *idx;
      if (c < 0 || c >= ncols) throw Error(ErrorCode::InvalidArgument, "label column index out of range");
      return c;
    }
    const std::string& name = std::get<std::string>(opt.label_column);
    for (long c = 0; c < static_cast<long>(header_names.size()); ++c)
      if (header_names[static_cast<std::size_t>(c)] == name) return c;
    throw Error(ErrorCode::InvalidArgument, "label column '" + name + "' not found in header");
  };

  bool header_pending = opt.header;
  if (!opt.header && std::holds_alternative<std::string>(opt.label_column))
    throw Error(ErrorCode::InvalidArgument, "label column by name requires a header");

  while (std::getline(in, line)) {
    ++row;
    std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    if (header_pending) {
      header_line = std::string(sv);
      header_names = detail::split_commas(header_line);
      header_pending = false;
      width = static_cast<long>(header_names.size());
      label_col = resolve_label(width);
      continue;
    }
    auto toks = detail::split_commas(sv);
    const long ncols = static_cast<long>(toks.size());
    if (width < 0) {
      width = ncols;
      label_col = resolve_label(width);
    }
    if (ncols != width) throw ParseError(row, 0, "expected " + std::to_string(width) + " fields, got " + std::to_string(ncols));
    if (width < 2) throw ParseError(row, 0, "need at least one feature and one label column");
    for (long c = 0; c < ncols; ++c) {
      const auto tok = toks[static_cast<std::size_t>(c)];
      if (c == label_col) {
        auto v = detail::parse_double(tok);
        int lab = 0;
        if (v && *v == 1.0) lab = 1;
        else if (v && *v == -1.0) lab = -1;
        else if (v && *v == 0.0 && opt.zero_one_labels) lab = -1;
        else throw BadLabel(row, std::string(tok));
        labels.push_back(lab);
      } else {
        auto v = detail::parse_double(tok);
        if (!v) throw ParseError(row, c + 1, "cannot parse '" + std::string(tok) + "' as a number");
        if (!std::isfinite(*v)) throw ParseError(row, c + 1, "non-finite value");
        feats.push_back(*v);
      }
    }
  }
  if (labels.empty()) throw Error(ErrorCode::InvalidArgument, "no data rows");
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  const Eigen::Index p = width - 1;
  Mat X(n, p);
  IVec y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = feats[static_cast<std::size_t>(i * p + j)];
    y(i) = labels[static_cast<std::size_t>(i)];
  }
  return Dataset(std::move(X), std::move(y));
}

inline Dataset load_csv(const std::string& path, const CsvOptions& opt = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return read_csv(in, opt);
}

// features first, label last
inline void write_csv(std::ostream& out, const Dataset& data, bool header = false) {
  if (header) {
    for (Eigen::Index j = 0; j < data.p(); ++j) out << 'x' << (j + 1) << ',';
    out << "y\n";
  }
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) out << format_double(data.X()(i, j)) << ',';
    out << data.y()(i) << '\n';
  }
}

inline void save_csv(const std::string& path, const Dataset& data, bool header = false) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  write_csv(out, data, header);
}

// ---------------------------------------------------------------- generators

inline double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Observation i draws from substream (seed, i): p normals, then one uniform for the label.
inline Dataset generate_logistic(Eigen::Index n, Eigen::Index p, const Vec& beta_true, std::uint64_t seed) {
  if (n < 1 || p < 1) throw Error(ErrorCode::InvalidArgument, "n and p must be >= 1");
  if (beta_true.size() != p) throw Error(ErrorCode::InvalidArgument, "beta_true must have length p");
  Mat X(n, p);
  IVec y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i));
    for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
    const double t = X.row(i).dot(beta_true);
    y(i) = rng.uniform() < sigmoid(t) ? 1 : -1;
  }
  return Dataset(std::move(X), std::move(y));
}

struct PlantedMargin {
  Dataset data;
  Vec certificate;  // unit l2 vector with min_i y_i c^T x_i == margin
};

// Substream 0 draws the certificate direction; observation i uses substream i + 1.
// Observation 0 sits exactly on the margin.
inline PlantedMargin generate_planted_margin(Eigen::Index n, Eigen::Index p, double margin, std::uint64_t seed) {
  if (n < 1 || p < 1) throw Error(ErrorCode::InvalidArgument, "n and p must be >= 1");
  if (!(margin > 0)) throw Error(ErrorCode::InvalidArgument, "margin must be positive");
  Vec c(p);
  {
    Rng rng(seed, 0);
    do {
      for (Eigen::Index j = 0; j < p; ++j) c(j) = rng.normal();
    } while (c.norm() == 0.0);
    c /= c.norm();
  }
  Mat X(n, p);
  IVec y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Rng rng(seed, static_cast<std::uint64_t>(i) + 1);
    Vec z(p);
    for (Eigen::Index j = 0; j < p; ++j) z(j) = rng.normal();
    z -= z.dot(c) * c;
    const int lab = rng.uniform() < 0.5 ? -1 : 1;
    const double extra = i == 0 ? 0.0 : std::abs(rng.normal());
    X.row(i) = (z + static_cast<double>(lab) * (margin + extra) * c).transpose();
    y(i) = lab;
  }
  // re-anchor observation 0 exactly on the margin after rounding
  const double t0 = static_cast<double>(y(0)) * X.row(0).dot(c);
  X.row(0) += (static_cast<double>(y(0)) * (margin - t0)) * c.transpose();
  return {Dataset(std::move(X), std::move(y)), std::move(c)};
}

inline Dataset ill_posed_fixture() {
  Mat X(4, 3);
  X << 1, 0, -1,
       0, -1, 1,
       -1, -2, 3,
       2, 1, -3;
  IVec y(4);
  y << 1, -1, 1, -1;
  return Dataset(std::move(X), std::move(y));
}

// x = 1 observed with both labels
inline Dataset contradictory_pair() {
  Mat X(2, 1);
  X << 1, 1;
  IVec y(2);
  y << 1, -1;
  return Dataset(std::move(X), std::move(y));
}

// rows (1,0) with +1 and (-1,0) with -1
inline Dataset two_point_separable() {
  Mat X(2, 2);
  X << 1, 0, -1, 0;
  IVec y(2);
  y << 1, -1;
  return Dataset(std::move(X), std::move(y));
}

}  // namespace logitcond
