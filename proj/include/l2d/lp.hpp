// SPDX-License-Identifier: Apache-2.0
#pragma once

// Bounded-variable revised primal simplex on sparse columns.
//
//   maximize c'x  s.t.  rows (<=, >=, =),  lb <= x <= ub  (all bounds finite)
//
// Rows get a slack each (inequalities); rows whose slack cannot absorb the
// starting residual get an artificial, removed in phase 1. The basis is kept
// as a sparse LU plus a product-form eta file, refactored every so often.
// Entering choice is Dantzig with lowest-index ties, switching to Bland's rule
// after a run of degenerate pivots. Fully deterministic.

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace l2d::lp {

enum class Sense { kLe, kGe, kEq };

struct Row {
  std::vector<int> index;
  std::vector<double> value;
  Sense sense = Sense::kLe;
  double rhs = 0;
};

struct Problem {
  std::vector<double> objective;  // maximized
  std::vector<double> lower, upper;
  std::vector<Row> rows;
  int num_vars() const { return static_cast<int>(objective.size()); }
};

enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct Result {
  Status status = Status::kInfeasible;
  double objective = 0;
  std::vector<double> x;
};

struct Options {
  double tol = 1e-9;
  double pivot_tol = 1e-9;
  int max_iterations = 500000;
  int degenerate_switch = 50;
  int refactor_every = 64;
};

class RevisedSimplex {
 public:
  RevisedSimplex(const Problem& p, const Options& opt) : opt_(opt) {
    n_ = p.num_vars();
    m_ = static_cast<int>(p.rows.size());
    lo_ = p.lower;
    hi_ = p.upper;
    cols_.assign(n_, {});
    for (int i = 0; i < m_; ++i)
      for (size_t k = 0; k < p.rows[i].index.size(); ++k)
        if (p.rows[i].value[k] != 0) cols_[p.rows[i].index[k]].push_back({i, p.rows[i].value[k]});
    // Merge duplicate entries in a column.
    for (auto& col : cols_) {
      std::sort(col.begin(), col.end(), [](const Entry& a, const Entry& b) { return a.row < b.row; });
      std::vector<Entry> merged;
      for (const Entry& e : col) {
        if (!merged.empty() && merged.back().row == e.row) merged.back().value += e.value;
        else merged.push_back(e);
      }
      col = std::move(merged);
    }

    x_.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) x_[j] = std::abs(lo_[j]) <= std::abs(hi_[j]) ? lo_[j] : hi_[j];
    rhs_.resize(m_);
    std::vector<double> residual(m_);
    for (int i = 0; i < m_; ++i) residual[i] = rhs_[i] = p.rows[i].rhs;
    for (int j = 0; j < n_; ++j)
      if (x_[j] != 0)
        for (const Entry& e : cols_[j]) residual[e.row] -= e.value * x_[j];

    basis_.assign(m_, -1);
    // Slacks: +1 on <= rows, -1 on >= rows, both in [0, inf).
    for (int i = 0; i < m_; ++i) {
      const Sense s = p.rows[i].sense;
      if (s == Sense::kEq) continue;
      const double sign = s == Sense::kLe ? 1.0 : -1.0;
      add_column({{i, sign}}, 0, kBig, 0);
      if (residual[i] * sign >= 0) {
        basis_[i] = static_cast<int>(cols_.size()) - 1;
        x_.back() = residual[i] * sign;
      }
    }
    first_art_ = static_cast<int>(cols_.size());
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] >= 0) continue;
      const double sign = residual[i] >= 0 ? 1.0 : -1.0;
      add_column({{i, sign}}, 0, kBig, residual[i] * sign);
      basis_[i] = static_cast<int>(cols_.size()) - 1;
    }
    total_ = static_cast<int>(cols_.size());
    is_basic_.assign(total_, -1);
    for (int i = 0; i < m_; ++i) is_basic_[basis_[i]] = i;
  }

  Result solve(const std::vector<double>& objective) {
    Result res;
    if (!refactor()) {
      res.status = Status::kIterationLimit;
      return res;
    }
    if (first_art_ < total_) {
      std::vector<double> phase1(total_, 0.0);
      for (int j = first_art_; j < total_; ++j) phase1[j] = -1.0;
      const Status s = iterate(phase1);
      if (s == Status::kIterationLimit) {
        res.status = s;
        return res;
      }
      double infeas = 0;
      for (int j = first_art_; j < total_; ++j) infeas += x_[j];
      if (infeas > opt_.tol * std::max(1.0, static_cast<double>(m_))) {
        res.status = Status::kInfeasible;
        return res;
      }
      // Artificials still basic sit at zero and can only leave from here on.
      for (int j = first_art_; j < total_; ++j) {
        hi_[j] = 0;
        if (is_basic_[j] < 0) x_[j] = 0;
      }
    }
    std::vector<double> c(total_, 0.0);
    std::copy(objective.begin(), objective.end(), c.begin());
    res.status = iterate(c);
    if (res.status != Status::kOptimal) return res;
    res.x.assign(x_.begin(), x_.begin() + n_);
    for (int j = 0; j < n_; ++j) {
      res.x[j] = std::clamp(res.x[j], lo_[j], hi_[j]);
      res.objective += objective[j] * res.x[j];
    }
    return res;
  }

 private:
  static constexpr double kBig = std::numeric_limits<double>::infinity();

  struct Entry {
    int row;
    double value;
  };
  struct Eta {
    int r;
    std::vector<double> alpha;  // dense, length m
  };

  void add_column(std::vector<Entry> col, double lo, double hi, double x) {
    cols_.push_back(std::move(col));
    lo_.push_back(lo);
    hi_.push_back(hi);
    x_.push_back(x);
  }

  bool refactor() {
    etas_.clear();
    if (m_ == 0) return true;
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < m_; ++i)
      for (const Entry& e : cols_[basis_[i]]) trip.emplace_back(e.row, i, e.value);
    Eigen::SparseMatrix<double> B(m_, m_);
    B.setFromTriplets(trip.begin(), trip.end());
    B.makeCompressed();
    lu_.analyzePattern(B);
    lu_.factorize(B);
    if (lu_.info() != Eigen::Success) return false;
    // Basic values from scratch: B x_B = b - N x_N.
    Eigen::VectorXd rhs = rhs_;
    for (int j = 0; j < total_; ++j)
      if (is_basic_[j] < 0 && x_[j] != 0)
        for (const Entry& e : cols_[j]) rhs[e.row] -= e.value * x_[j];
    const Eigen::VectorXd xb = lu_.solve(rhs);
    for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
    return true;
  }

  Eigen::VectorXd ftran(const Eigen::VectorXd& a) {
    Eigen::VectorXd v = lu_.solve(a);
    for (const Eta& eta : etas_) {
      const double vr = v[eta.r] / eta.alpha[eta.r];
      if (vr != 0)
        for (int i = 0; i < m_; ++i) v[i] -= eta.alpha[i] * vr;
      v[eta.r] = vr;
    }
    return v;
  }

  Eigen::VectorXd btran(Eigen::VectorXd w) {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double s = w[it->r];
      for (int i = 0; i < m_; ++i)
        if (i != it->r) s -= it->alpha[i] * w[i];
      w[it->r] = s / it->alpha[it->r];
    }
    return lu_.transpose().solve(w);
  }

  Status iterate(const std::vector<double>& c) {
    int degenerate_run = 0;
    for (int iter = 0; iter < opt_.max_iterations; ++iter) {
      Eigen::VectorXd cb(m_);
      for (int i = 0; i < m_; ++i) cb[i] = c[basis_[i]];
      const Eigen::VectorXd y = m_ ? btran(cb) : Eigen::VectorXd();
      const bool bland = degenerate_run >= opt_.degenerate_switch;
      int e = -1;
      double best = 0, de = 0;
      for (int j = 0; j < total_; ++j) {
        if (is_basic_[j] >= 0 || lo_[j] == hi_[j]) continue;
        double d = c[j];
        for (const Entry& en : cols_[j]) d -= y[en.row] * en.value;
        double gain = 0;
        if (d > opt_.tol && x_[j] < hi_[j]) gain = d;
        else if (d < -opt_.tol && x_[j] > lo_[j]) gain = -d;
        if (gain <= 0) continue;
        if (bland) {
          e = j;
          de = d;
          break;
        }
        if (gain > best) {
          best = gain;
          e = j;
          de = d;
        }
      }
      if (e < 0) return Status::kOptimal;
      const double dir = de > 0 ? 1.0 : -1.0;
      Eigen::VectorXd a = Eigen::VectorXd::Zero(m_);
      for (const Entry& en : cols_[e]) a[en.row] = en.value;
      const Eigen::VectorXd alpha = m_ ? ftran(a) : Eigen::VectorXd();

      double theta = hi_[e] - lo_[e];
      int leave = -1;
      bool leave_to_upper = false;
      for (int i = 0; i < m_; ++i) {
        const double ai = alpha[i];
        if (std::abs(ai) <= opt_.pivot_tol) continue;
        const int b = basis_[i];
        const double rate = -dir * ai;  // change of x_b per unit step
        double limit;
        bool to_upper;
        if (rate < 0) {
          limit = (x_[b] - lo_[b]) / -rate;
          to_upper = false;
        } else {
          if (hi_[b] == kBig) continue;
          limit = (hi_[b] - x_[b]) / rate;
          to_upper = true;
        }
        limit = std::max(limit, 0.0);
        bool take;
        if (leave < 0) {
          take = limit < theta;
        } else if (limit < theta - 1e-12) {
          take = true;
        } else if (limit <= theta + 1e-12) {
          // Ties: Bland keeps the lowest column; otherwise the larger pivot.
          take = bland ? b < basis_[leave]
                       : std::abs(ai) > std::abs(alpha[leave]) + 1e-12 ||
                             (std::abs(ai) >= std::abs(alpha[leave]) - 1e-12 && b < basis_[leave]);
        } else {
          take = false;
        }
        if (take) {
          theta = std::min(theta, limit);
          leave = i;
          leave_to_upper = to_upper;
        }
      }
      if (theta == kBig) return Status::kUnbounded;
      degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;
      for (int i = 0; i < m_; ++i)
        if (alpha[i] != 0) x_[basis_[i]] -= dir * alpha[i] * theta;
      x_[e] += dir * theta;
      if (leave < 0) {
        x_[e] = dir > 0 ? hi_[e] : lo_[e];  // bound flip
        continue;
      }
      const int b = basis_[leave];
      x_[b] = leave_to_upper ? hi_[b] : lo_[b];
      is_basic_[b] = -1;
      basis_[leave] = e;
      is_basic_[e] = leave;
      etas_.push_back({leave, std::vector<double>(alpha.data(), alpha.data() + m_)});
      if (static_cast<int>(etas_.size()) >= opt_.refactor_every && !refactor())
        return Status::kIterationLimit;
    }
    return Status::kIterationLimit;
  }

  Options opt_;
  int n_ = 0, m_ = 0, total_ = 0, first_art_ = 0;
  std::vector<std::vector<Entry>> cols_;
  std::vector<double> lo_, hi_, x_;
  std::vector<int> basis_, is_basic_;
  Eigen::VectorXd rhs_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
};

inline Result solve(const Problem& problem, const Options& options = {}) {
  for (int j = 0; j < problem.num_vars(); ++j)
    if (problem.lower[j] > problem.upper[j]) return {Status::kInfeasible, 0, {}};
  RevisedSimplex s(problem, options);
  return s.solve(problem.objective);
}

}  // namespace l2d::lp
