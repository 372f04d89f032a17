#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "logitcond/error.hpp"
#include "logitcond/norms.hpp"

namespace logitcond {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
  LpStatus status = LpStatus::IterationLimit;
  Vec x;
  double objective = std::numeric_limits<double>::quiet_NaN();
};

// Dense two-phase tableau simplex for  min c^T x  s.t.  A x = b, x >= 0.
// Dantzig pricing, falling back to Bland's rule while the objective stalls.
class DenseSimplex {
 public:
  DenseSimplex(Mat A, Vec b, Vec c) : A_(std::move(A)), b_(std::move(b)), c_(std::move(c)) {
    if (A_.rows() != b_.size() || A_.cols() != c_.size())
      throw Error(ErrorCode::InvalidArgument, "LP dimensions do not agree");
  }

  LpResult solve(long max_pivots = 200000) {
    const Eigen::Index m = A_.rows(), nv = A_.cols();
    const Eigen::Index width = nv + m + 1;
    T_ = Mat::Zero(m + 1, width);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double s = b_(i) < 0 ? -1.0 : 1.0;
      T_.row(i).head(nv) = s * A_.row(i);
      T_(i, nv + i) = 1.0;
      T_(i, width - 1) = s * b_(i);
    }
    basis_.assign(static_cast<std::size_t>(m), 0);
    for (Eigen::Index i = 0; i < m; ++i) basis_[static_cast<std::size_t>(i)] = nv + i;
    scale_ = std::max(1.0, T_.cwiseAbs().maxCoeff());

    // phase 1: minimize the sum of artificials
    Vec cost1 = Vec::Zero(width - 1);
    cost1.tail(m).setOnes();
    load_costs(cost1);
    LpResult res;
    const LpStatus s1 = iterate(nv + m, max_pivots);
    if (s1 == LpStatus::IterationLimit) return res;
    if (-T_(m, width - 1) > 1e-9 * scale_ * std::max<double>(1.0, static_cast<double>(m))) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    // drive remaining artificials out of the basis where possible
    for (Eigen::Index i = 0; i < m; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < nv) continue;
      Eigen::Index col = -1;
      double best = 1e-9;
      for (Eigen::Index j = 0; j < nv; ++j)
        if (std::abs(T_(i, j)) > best) {
          best = std::abs(T_(i, j));
          col = j;
        }
      if (col >= 0) pivot(i, col);
    }

    Vec cost2 = Vec::Zero(width - 1);
    cost2.head(nv) = c_;
    load_costs(cost2);
    const LpStatus s2 = iterate(nv, max_pivots);
    res.status = s2;
    if (s2 != LpStatus::Optimal) return res;
    res.x = Vec::Zero(nv);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Eigen::Index j = basis_[static_cast<std::size_t>(i)];
      if (j < nv) res.x(j) = std::max(0.0, T_(i, width - 1));
    }
    res.objective = c_.dot(res.x);
    return res;
  }

 private:
  void load_costs(const Vec& cost) {
    const Eigen::Index m = A_.rows();
    T_.row(m).setZero();
    T_.row(m).head(cost.size()) = cost.transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double cb = cost(basis_[static_cast<std::size_t>(i)]);
      if (cb != 0.0) T_.row(m) -= cb * T_.row(i);
    }
  }

  void pivot(Eigen::Index r, Eigen::Index col) {
    T_.row(r) /= T_(r, col);
    for (Eigen::Index i = 0; i < T_.rows(); ++i) {
      if (i == r) continue;
      const double f = T_(i, col);
      if (f != 0.0) {
        T_.row(i) -= f * T_.row(r);
        T_(i, col) = 0.0;
      }
    }
    basis_[static_cast<std::size_t>(r)] = col;
  }

  // columns >= allowed never enter
  LpStatus iterate(Eigen::Index allowed, long max_pivots) {
    const Eigen::Index m = A_.rows();
    const Eigen::Index rhs = T_.cols() - 1;
    const double cost_tol = 1e-11 * scale_;
    double last_obj = std::numeric_limits<double>::infinity();
    int stall = 0;
    for (long it = 0; it < max_pivots; ++it) {
      const bool bland = stall > 30;
      Eigen::Index col = -1;
      double most = -cost_tol;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        const double r = T_(m, j);
        if (r < most) {
          col = j;
          if (bland) break;
          most = r;
        }
      }
      if (col < 0) return LpStatus::Optimal;
      Eigen::Index row = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < m; ++i) {
        const double a = T_(i, col);
        if (a <= 1e-12 * scale_) continue;
        const double ratio = T_(i, rhs) / a;
        if (ratio < best_ratio - 1e-14 ||
            (ratio <= best_ratio + 1e-14 && row >= 0 &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(row)])) {
          best_ratio = std::min(ratio, best_ratio);
          row = i;
        }
      }
      if (row < 0) return LpStatus::Unbounded;
      pivot(row, col);
      const double obj = -T_(m, rhs);
      if (obj < last_obj - 1e-13 * scale_) {
        last_obj = obj;
        stall = 0;
      } else {
        ++stall;
      }
    }
    return LpStatus::IterationLimit;
  }

  Mat A_;
  Vec b_;
  Vec c_;
  Mat T_;
  std::vector<Eigen::Index> basis_;
  double scale_ = 1.0;
};

inline LpResult solve_lp(const Mat& A, const Vec& b, const Vec& c) { return DenseSimplex(A, b, c).solve(); }

}  // namespace logitcond
