#pragma once

// Dense bounded-variable primal simplex with dual extraction.
//
// Every row gets a slack column so that A x + s = b holds with bounds on s
// chosen by the row relation. Phase one minimises the sum of artificials,
// phase two the real objective. Pricing is Dantzig's rule with a fallback to
// Bland's rule after a run of degenerate pivots, which rules out cycling.
// The basis is refactored periodically and once more at the end so the
// reported primal values and duals come from a fresh factorisation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "evcs/lp/program.hpp"

namespace evcs::lp {

enum class Status { optimal, infeasible, unbounded, numerical_failure, iteration_limit };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::numerical_failure: return "numerical_failure";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

struct SolverOptions {
  double feas_tol = 1e-8;
  double cost_tol = 1e-9;
  double pivot_tol = 1e-9;
  std::size_t max_iterations = 0;  // 0 picks a limit from the problem size
  std::size_t degenerate_run = 50;
};

// Dual values follow the sensitivity convention: duals[i] is the rate of
// change of the optimal objective per unit increase of rhs[i]. Hence a <=
// row of a maximisation has a non-negative dual and a >= row of a
// minimisation too. reduced_costs[j] = cost[j] - sum_i A[i][j] * duals[i].
struct LpSolution {
  Status status = Status::numerical_failure;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> x;
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  // Infeasible: phase-one row multipliers (a Farkas-type certificate).
  std::vector<double> farkas;
  // Unbounded: improving primal direction.
  std::vector<double> ray;
  std::size_t iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::string message;

  bool optimal() const { return status == Status::optimal; }
};

namespace detail {

class DenseSimplex {
 public:
  DenseSimplex(const LinearProgram& lp, const SolverOptions& opt)
      : lp_(lp), opt_(opt), m_(lp.num_constraints()), n_(lp.num_variables()) {}

  LpSolution run() {
    LpSolution out;
    setup();
    max_iter_ = opt_.max_iterations ? opt_.max_iterations : 50 * (m_ + ncols_) + 1000;

    if (num_art_ > 0) {
      set_phase_costs(true);
      if (!reinvert()) return fail(out, Status::numerical_failure, "singular basis in phase one");
      Status s = iterate(true);
      if (s != Status::optimal) return fail(out, s, "phase one did not finish");
      double infeas = 0.0;
      for (std::size_t k = art_begin_; k < ncols_; ++k) infeas += val_[k];
      if (infeas > opt_.feas_tol * std::max(1.0, bnorm_)) {
        out.farkas = y_;
        return fail(out, Status::infeasible, "phase one optimum is positive");
      }
      drive_out_artificials();
    }

    set_phase_costs(false);
    if (!reinvert()) return fail(out, Status::numerical_failure, "singular basis in phase two");
    for (int round = 0; round < 4; ++round) {
      Status s = iterate(false);
      if (s == Status::unbounded) {
        out.ray = ray_;
        return fail(out, s, "objective unbounded along a ray");
      }
      if (s != Status::optimal) return fail(out, s, "phase two did not finish");
      if (!reinvert()) return fail(out, Status::numerical_failure, "singular final basis");
      if (!has_entering()) break;
    }
    if (has_entering()) return fail(out, Status::numerical_failure, "reduced costs unstable");
    return finish(out);
  }

 private:
  const LinearProgram& lp_;
  SolverOptions opt_;
  std::size_t m_, n_;
  std::size_t ncols_ = 0, art_begin_ = 0, num_art_ = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> cols_;
  std::vector<double> b_, lo_, up_, cost_, real_cost_, val_, d_, y_, tab_, ray_;
  std::vector<long> basis_, pos_;
  std::size_t iterations_ = 0, since_refactor_ = 0, max_iter_ = 0;
  double bnorm_ = 0.0;

  double& T(std::size_t i, std::size_t j) { return tab_[i * ncols_ + j]; }

  void setup() {
    const double sign = lp_.sense() == Sense::maximize ? -1.0 : 1.0;
    cols_ = lp_.columns();
    b_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      b_[i] = lp_.constraint(i).rhs;
      bnorm_ = std::max(bnorm_, std::abs(b_[i]));
    }
    std::vector<double> lo, up, cost, val;
    for (std::size_t j = 0; j < n_; ++j) {
      const auto& v = lp_.variable(j);
      lo.push_back(v.lower);
      up.push_back(v.upper);
      cost.push_back(sign * v.cost);
      val.push_back(std::clamp(0.0, v.lower, v.upper));
    }
    for (std::size_t i = 0; i < m_; ++i) {
      switch (lp_.constraint(i).relation) {
        case Relation::less_equal: lo.push_back(0.0); up.push_back(kInf); break;
        case Relation::greater_equal: lo.push_back(-kInf); up.push_back(0.0); break;
        case Relation::equal: lo.push_back(0.0); up.push_back(0.0); break;
      }
      cost.push_back(0.0);
      val.push_back(0.0);
      cols_.push_back({{i, 1.0}});
    }
    art_begin_ = n_ + m_;
    basis_.assign(m_, -1);
    for (std::size_t i = 0; i < m_; ++i) {
      double r = b_[i] - lp_.activity(i, std::span<const double>(val.data(), n_));
      const std::size_t slack = n_ + i;
      if (r >= lo[slack] && r <= up[slack]) {
        val[slack] = r;
        basis_[i] = static_cast<long>(slack);
      } else {
        const double sigma = r >= 0.0 ? 1.0 : -1.0;
        cols_.push_back({{i, sigma}});
        lo.push_back(0.0);
        up.push_back(kInf);
        cost.push_back(0.0);
        val.push_back(std::abs(r));
        basis_[i] = static_cast<long>(cols_.size() - 1);
      }
    }
    ncols_ = cols_.size();
    num_art_ = ncols_ - art_begin_;
    lo_ = std::move(lo);
    up_ = std::move(up);
    real_cost_ = std::move(cost);
    val_ = std::move(val);
    pos_.assign(ncols_, -1);
    for (std::size_t i = 0; i < m_; ++i) pos_[basis_[i]] = static_cast<long>(i);
  }

  void set_phase_costs(bool phase_one) {
    if (phase_one) {
      cost_.assign(ncols_, 0.0);
      for (std::size_t k = art_begin_; k < ncols_; ++k) cost_[k] = 1.0;
    } else {
      cost_ = real_cost_;
      cost_.resize(ncols_, 0.0);
    }
  }

  // Recomputes B^-1 A, basic values, duals and reduced costs from scratch.
  bool reinvert() {
    since_refactor_ = 0;
    std::vector<double> B(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      for (const auto& [r, a] : cols_[basis_[i]]) B[r * m_ + i] = a;
    }
    std::vector<double> inv(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
    // Gauss-Jordan with partial pivoting.
    for (std::size_t c = 0; c < m_; ++c) {
      std::size_t p = c;
      double best = std::abs(B[c * m_ + c]);
      for (std::size_t r = c + 1; r < m_; ++r) {
        double a = std::abs(B[r * m_ + c]);
        if (a > best) { best = a; p = r; }
      }
      if (best < 1e-12) return false;
      if (p != c) {
        for (std::size_t k = 0; k < m_; ++k) {
          std::swap(B[p * m_ + k], B[c * m_ + k]);
          std::swap(inv[p * m_ + k], inv[c * m_ + k]);
        }
      }
      const double piv = B[c * m_ + c];
      for (std::size_t k = 0; k < m_; ++k) {
        B[c * m_ + k] /= piv;
        inv[c * m_ + k] /= piv;
      }
      for (std::size_t r = 0; r < m_; ++r) {
        if (r == c) continue;
        const double f = B[r * m_ + c];
        if (f == 0.0) continue;
        for (std::size_t k = 0; k < m_; ++k) {
          B[r * m_ + k] -= f * B[c * m_ + k];
          inv[r * m_ + k] -= f * inv[c * m_ + k];
        }
      }
    }
    tab_.assign(m_ * ncols_, 0.0);
    for (std::size_t j = 0; j < ncols_; ++j) {
      for (const auto& [r, a] : cols_[j]) {
        for (std::size_t i = 0; i < m_; ++i) T(i, j) += inv[i * m_ + r] * a;
      }
    }
    // Basic values from the nonbasic ones.
    std::vector<double> rhs = b_;
    for (std::size_t j = 0; j < ncols_; ++j) {
      if (pos_[j] >= 0 || val_[j] == 0.0) continue;
      for (const auto& [r, a] : cols_[j]) rhs[r] -= a * val_[j];
    }
    for (std::size_t i = 0; i < m_; ++i) {
      double v = 0.0;
      for (std::size_t r = 0; r < m_; ++r) v += inv[i * m_ + r] * rhs[r];
      val_[basis_[i]] = v;
    }
    // y^T = c_B^T B^-1, d = c - A^T y.
    y_.assign(m_, 0.0);
    for (std::size_t r = 0; r < m_; ++r) {
      double s = 0.0;
      for (std::size_t i = 0; i < m_; ++i) s += cost_[basis_[i]] * inv[i * m_ + r];
      y_[r] = s;
    }
    d_.assign(ncols_, 0.0);
    for (std::size_t j = 0; j < ncols_; ++j) {
      if (pos_[j] >= 0) continue;
      double s = cost_[j];
      for (const auto& [r, a] : cols_[j]) s -= a * y_[r];
      d_[j] = s;
    }
    return true;
  }

  bool eligible(std::size_t j, int& dir) const {
    if (pos_[j] >= 0 || !(up_[j] > lo_[j])) return false;
    const double dj = d_[j];
    if (dj < -opt_.cost_tol && val_[j] < up_[j]) { dir = 1; return true; }
    if (dj > opt_.cost_tol && val_[j] > lo_[j]) { dir = -1; return true; }
    return false;
  }

  bool has_entering() const {
    int dir = 0;
    for (std::size_t j = 0; j < ncols_; ++j) {
      if (eligible(j, dir)) return true;
    }
    return false;
  }

  // Slack columns are unit vectors with zero cost, so y_i = -d_slack.
  void refresh_y() {
    for (std::size_t i = 0; i < m_; ++i) y_[i] = cost_[n_ + i] - d_[n_ + i];
  }

  Status iterate(bool phase_one) {
    std::size_t degenerate = 0;
    bool bland = false;
    const std::size_t refactor_every = std::max<std::size_t>(100, m_);
    for (;;) {
      if (iterations_ >= max_iter_) return Status::iteration_limit;
      if (since_refactor_ >= refactor_every && !reinvert()) return Status::numerical_failure;

      long q = -1;
      int qdir = 0;
      double qscore = 0.0;
      for (std::size_t j = 0; j < ncols_; ++j) {
        int dir = 0;
        if (!eligible(j, dir)) continue;
        if (bland) { q = static_cast<long>(j); qdir = dir; break; }
        const double score = std::abs(d_[j]);
        if (score > qscore) { qscore = score; q = static_cast<long>(j); qdir = dir; }
      }
      if (q < 0) {
        refresh_y();
        return Status::optimal;
      }
      ++iterations_;

      const std::size_t jq = static_cast<std::size_t>(q);
      const double own = qdir > 0 ? up_[jq] - val_[jq] : val_[jq] - lo_[jq];
      long r = -1;
      double best = kInf, best_alpha = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double alpha = qdir * T(i, jq);
        if (std::abs(alpha) <= opt_.pivot_tol) continue;
        const std::size_t k = basis_[i];
        double lim = kInf;
        if (alpha > 0.0) {
          if (lo_[k] > -kInf) lim = (val_[k] - lo_[k]) / alpha;
        } else {
          if (up_[k] < kInf) lim = (up_[k] - val_[k]) / -alpha;
        }
        if (lim == kInf) continue;
        lim = std::max(lim, 0.0);
        bool take = false;
        if (r < 0 || lim < best - 1e-12) {
          take = true;
        } else if (lim <= best + 1e-12) {
          take = bland ? basis_[i] < basis_[r] : std::abs(alpha) > std::abs(best_alpha);
        }
        if (take) { r = static_cast<long>(i); best = lim; best_alpha = alpha; }
      }
      if (r < 0 && own == kInf) {
        if (phase_one) return Status::numerical_failure;
        ray_.assign(n_, 0.0);
        if (jq < n_) ray_[jq] = qdir;
        for (std::size_t i = 0; i < m_; ++i) {
          if (static_cast<std::size_t>(basis_[i]) < n_) ray_[basis_[i]] = -qdir * T(i, jq);
        }
        return Status::unbounded;
      }
      const bool flip = own <= best;
      const double t = flip ? own : best;
      if (t > 0.0) {
        val_[jq] += qdir * t;
        for (std::size_t i = 0; i < m_; ++i) {
          const double a = T(i, jq);
          if (a != 0.0) val_[basis_[i]] -= qdir * a * t;
        }
      }
      if (t <= 1e-12) {
        if (++degenerate >= opt_.degenerate_run) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
      if (flip) {
        val_[jq] = qdir > 0 ? up_[jq] : lo_[jq];
        continue;
      }
      const std::size_t leave = basis_[r];
      val_[leave] = best_alpha > 0.0 ? lo_[leave] : up_[leave];
      pivot(static_cast<std::size_t>(r), jq);
    }
  }

  void pivot(std::size_t r, std::size_t q) {
    ++since_refactor_;
    const double p = T(r, q);
    std::vector<std::size_t> nz;
    for (std::size_t j = 0; j < ncols_; ++j) {
      double& v = T(r, j);
      if (v != 0.0) {
        v /= p;
        nz.push_back(j);
      }
    }
    T(r, q) = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = T(i, q);
      if (f == 0.0) continue;
      for (std::size_t j : nz) T(i, j) -= f * T(r, j);
      T(i, q) = 0.0;
    }
    const double f = d_[q];
    if (f != 0.0) {
      for (std::size_t j : nz) d_[j] -= f * T(r, j);
    }
    d_[q] = 0.0;
    const std::size_t leave = basis_[r];
    pos_[leave] = -1;
    basis_[r] = static_cast<long>(q);
    pos_[q] = static_cast<long>(r);
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t k = basis_[i];
      if (k < art_begin_) continue;
      long best = -1;
      double mag = 1e-7;
      for (std::size_t j = 0; j < art_begin_; ++j) {
        if (pos_[j] >= 0) continue;
        const double a = std::abs(T(i, j));
        if (a > mag) { mag = a; best = static_cast<long>(j); }
      }
      if (best >= 0) {
        val_[k] = 0.0;
        pivot(i, static_cast<std::size_t>(best));
      }
    }
    for (std::size_t k = art_begin_; k < ncols_; ++k) {
      lo_[k] = 0.0;
      up_[k] = 0.0;
      if (pos_[k] < 0) val_[k] = 0.0;
    }
  }

  LpSolution& fail(LpSolution& out, Status s, std::string msg) {
    out.status = s;
    out.iterations = iterations_;
    out.message = std::move(msg);
    return out;
  }

  LpSolution& finish(LpSolution& out) {
    const double sign = lp_.sense() == Sense::maximize ? -1.0 : 1.0;
    out.x.assign(val_.begin(), val_.begin() + n_);
    for (std::size_t j = 0; j < n_; ++j) {
      // Snap nonbasic values onto their bound exactly.
      if (pos_[j] < 0) continue;
      const auto& v = lp_.variable(j);
      if (out.x[j] < v.lower && out.x[j] > v.lower - opt_.feas_tol) out.x[j] = v.lower;
      if (out.x[j] > v.upper && out.x[j] < v.upper + opt_.feas_tol) out.x[j] = v.upper;
    }
    out.duals.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) out.duals[i] = sign * y_[i];
    out.reduced_costs.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      double s = lp_.variable(j).cost;
      for (const auto& [r, a] : cols_[j]) s -= a * out.duals[r];
      out.reduced_costs[j] = s;
    }
    out.objective = lp_.objective_value(out.x);
    out.primal_residual = lp_.max_violation(out.x).amount;
    // Dual residual: reduced cost pointing out of an open side of the box.
    double dres = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const auto& v = lp_.variable(j);
      double dj = sign * out.reduced_costs[j];  // minimisation view
      const bool at_lower = out.x[j] <= v.lower + opt_.feas_tol;
      const bool at_upper = out.x[j] >= v.upper - opt_.feas_tol;
      if (dj > 0.0 && !at_lower) dres = std::max(dres, dj);
      if (dj < 0.0 && !at_upper) dres = std::max(dres, -dj);
    }
    out.dual_residual = dres;
    out.iterations = iterations_;
    const double scale = std::max(1.0, bnorm_);
    if (out.primal_residual > opt_.feas_tol * scale * 100.0) {
      out.status = Status::numerical_failure;
      out.message = "primal residual above tolerance after refactoring";
      return out;
    }
    out.status = Status::optimal;
    return out;
  }
};

}  // namespace detail

// Solves lp. A non-optimal outcome is always an explicit status.
inline LpSolution solve(const LinearProgram& lp, const SolverOptions& opt = {}) {
  try {
    lp.validate();
  } catch (const ModelError& e) {
    LpSolution bad;
    bad.status = Status::numerical_failure;
    bad.message = e.what();
    return bad;
  }
  if (lp.num_constraints() == 0) {
    // Each variable sits at whichever bound its cost prefers.
    LpSolution out;
    const double sign = lp.sense() == Sense::maximize ? -1.0 : 1.0;
    out.x.resize(lp.num_variables());
    for (std::size_t j = 0; j < lp.num_variables(); ++j) {
      const auto& v = lp.variable(j);
      const double c = sign * v.cost;
      double x = std::clamp(0.0, v.lower, v.upper);
      if (c > 0.0) x = v.lower;
      if (c < 0.0) x = v.upper;
      if (!std::isfinite(x)) {
        out.status = Status::unbounded;
        out.ray.assign(lp.num_variables(), 0.0);
        out.ray[j] = c > 0.0 ? -1.0 : 1.0;
        out.message = "objective unbounded along a ray";
        return out;
      }
      out.x[j] = x;
    }
    out.reduced_costs.resize(lp.num_variables());
    for (std::size_t j = 0; j < lp.num_variables(); ++j) out.reduced_costs[j] = lp.variable(j).cost;
    out.objective = lp.objective_value(out.x);
    out.status = Status::optimal;
    return out;
  }
  return detail::DenseSimplex(lp, opt).run();
}

}  // namespace evcs::lp
