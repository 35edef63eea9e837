#pragma once

// LP dualisation and duality verification.
//
// The dual built here uses explicit multipliers for every finite variable
// bound, so each primal column maps to one equality row of the dual:
//
//   max c'x  s.t. A x (<=,=,>=) b, l <= x <= u
//   min b'y + u'beta - l'alpha  s.t. A'y + beta - alpha = c
//       y >= 0 on <= rows, y <= 0 on >= rows, y free on = rows
//
//   min c'x  s.t. A x (<=,=,>=) b, l <= x <= u
//   max b'y + l'alpha - u'beta  s.t. A'y + alpha - beta = c
//       y <= 0 on <= rows, y >= 0 on >= rows, y free on = rows
//
// alpha, beta >= 0. With this orientation y coincides with the sensitivity
// duals reported by solve(). Dual variables are named y[row], lb[var] and
// ub[var]; dual rows carry the primal variable names.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "evcs/lp/program.hpp"
#include "evcs/lp/simplex.hpp"

namespace evcs::lp {

inline LinearProgram dualize(const LinearProgram& lp) {
  const bool max = lp.sense() == Sense::maximize;
  LinearProgram dual(max ? Sense::minimize : Sense::maximize);
  std::vector<std::vector<Term>> rows(lp.num_variables());

  for (std::size_t i = 0; i < lp.num_constraints(); ++i) {
    const auto& r = lp.constraint(i);
    double lo = -kInf, up = kInf;
    if (r.relation == Relation::less_equal) (max ? lo : up) = 0.0;
    if (r.relation == Relation::greater_equal) (max ? up : lo) = 0.0;
    const std::size_t y = dual.add_variable("y[" + r.name + "]", lo, up, r.rhs);
    for (const auto& t : r.terms) rows[t.var].push_back({y, t.coef});
  }
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const auto& v = lp.variable(j);
    if (std::isfinite(v.lower)) {
      const std::size_t a = dual.add_variable("lb[" + v.name + "]", 0.0, kInf,
                                              max ? -v.lower : v.lower);
      rows[j].push_back({a, max ? -1.0 : 1.0});
    }
    if (std::isfinite(v.upper)) {
      const std::size_t b = dual.add_variable("ub[" + v.name + "]", 0.0, kInf,
                                              max ? v.upper : -v.upper);
      rows[j].push_back({b, max ? 1.0 : -1.0});
    }
  }
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    dual.add_constraint(lp.variable(j).name, std::move(rows[j]), Relation::equal,
                        lp.variable(j).cost);
  }
  return dual;
}

// Maps a primal solution's duals onto the variables of dualize(lp). Bound
// multipliers are split from the reduced cost c - A'y; a multiplier that
// would sit on an infinite bound is left at zero, which shows up later as a
// dual row residual.
inline std::vector<double> dual_values_from(const LinearProgram& lp,
                                            const std::vector<double>& row_duals) {
  const bool max = lp.sense() == Sense::maximize;
  std::vector<double> d(lp.num_variables());
  for (std::size_t j = 0; j < lp.num_variables(); ++j) d[j] = lp.variable(j).cost;
  for (std::size_t i = 0; i < lp.num_constraints(); ++i) {
    for (const auto& t : lp.constraint(i).terms) d[t.var] -= t.coef * row_duals.at(i);
  }
  std::vector<double> out(row_duals.begin(), row_duals.end());
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    const auto& v = lp.variable(j);
    // max: beta - alpha = d; min: alpha - beta = d
    const double toward_lower = max ? std::max(-d[j], 0.0) : std::max(d[j], 0.0);
    const double toward_upper = max ? std::max(d[j], 0.0) : std::max(-d[j], 0.0);
    if (std::isfinite(v.lower)) out.push_back(toward_lower);
    if (std::isfinite(v.upper)) out.push_back(toward_upper);
  }
  return out;
}

struct DualityReport {
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;           // |primal - dual|
  double relative_gap = 0.0;  // gap / max(1, |primal|)
  double complementarity = 0.0;
  std::string complementarity_where;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  std::string dual_infeasibility_where;
  bool pass = false;

  std::string summary() const {
    std::ostringstream os;
    os << "primal=" << primal_objective << " dual=" << dual_objective
       << " gap=" << gap << " cs=" << complementarity;
    if (!complementarity_where.empty()) os << " (" << complementarity_where << ")";
    os << " dual_infeas=" << dual_infeasibility;
    if (!dual_infeasibility_where.empty()) os << " (" << dual_infeasibility_where << ")";
    os << (pass ? " PASS" : " FAIL");
    return os.str();
  }
};

// Checks a primal point against dual values laid out like dualize(primal).
// Everything is recomputed from the raw values; stored objectives are ignored.
inline DualityReport check_strong_duality(const LinearProgram& primal,
                                          const std::vector<double>& x,
                                          const std::vector<double>& dual_values,
                                          double tol) {
  const LinearProgram dual = dualize(primal);
  if (dual_values.size() != dual.num_variables()) {
    throw std::invalid_argument("dual vector does not match the dual layout");
  }
  if (x.size() != primal.num_variables()) {
    throw std::invalid_argument("primal vector does not match the program");
  }
  DualityReport rep;
  rep.primal_objective = primal.objective_value(x);
  rep.dual_objective = dual.objective_value(dual_values);
  rep.gap = std::abs(rep.primal_objective - rep.dual_objective);
  rep.relative_gap = rep.gap / std::max(1.0, std::abs(rep.primal_objective));
  rep.primal_infeasibility = primal.max_violation(x).amount;
  const Violation dv = dual.max_violation(dual_values);
  rep.dual_infeasibility = dv.amount;
  rep.dual_infeasibility_where = dv.amount > 0.0 ? dv.where : "";

  auto note = [&](double v, const std::string& where) {
    if (v > rep.complementarity) {
      rep.complementarity = v;
      rep.complementarity_where = where;
    }
  };
  for (std::size_t i = 0; i < primal.num_constraints(); ++i) {
    const double slack = primal.activity(i, x) - primal.constraint(i).rhs;
    note(std::abs(dual_values[i] * slack), "row " + primal.constraint(i).name);
  }
  std::size_t k = primal.num_constraints();
  for (std::size_t j = 0; j < primal.num_variables(); ++j) {
    const auto& v = primal.variable(j);
    if (std::isfinite(v.lower)) {
      note(std::abs(dual_values[k] * (x[j] - v.lower)), "lower bound " + v.name);
      ++k;
    }
    if (std::isfinite(v.upper)) {
      note(std::abs(dual_values[k] * (v.upper - x[j])), "upper bound " + v.name);
      ++k;
    }
  }
  rep.pass = rep.relative_gap <= tol && rep.complementarity <= tol &&
             rep.dual_infeasibility <= tol && rep.primal_infeasibility <= tol;
  return rep;
}

// Strong-duality check of a primal solution against a solution of
// dualize(primal). Both must be optimal.
inline DualityReport check_strong_duality(const LinearProgram& primal,
                                          const LpSolution& psol,
                                          const LpSolution& dsol, double tol) {
  if (!psol.optimal() || !dsol.optimal()) {
    throw std::invalid_argument("strong duality check needs two optimal solutions");
  }
  return check_strong_duality(primal, psol.x, dsol.x, tol);
}

// Same check using the duals the solver attached to psol.
inline DualityReport check_strong_duality(const LinearProgram& primal,
                                          const LpSolution& psol, double tol) {
  if (!psol.optimal()) {
    throw std::invalid_argument("strong duality check needs an optimal solution");
  }
  return check_strong_duality(primal, psol.x, dual_values_from(primal, psol.duals), tol);
}

// Renaming used to compare two programs: `name` in the left program equals
// `scale` times `name` in the right one.
struct Renaming {
  std::string name;
  double scale = 1.0;
};

// Lists every structural difference between `left` and `right` after
// substituting variables and rows through the maps. An empty result means
// the two programs are the same LP up to renaming and sign flips.
inline std::vector<std::string> structural_diff(
    const LinearProgram& left, const LinearProgram& right,
    const std::unordered_map<std::string, Renaming>& var_map,
    const std::unordered_map<std::string, Renaming>& row_map, double tol = 1e-12) {
  std::vector<std::string> diffs;
  auto close = [&](double a, double b) {
    if (a == b) return true;
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
  };
  if (left.sense() != right.sense()) diffs.push_back("objective sense differs");
  if (left.num_variables() != right.num_variables()) {
    diffs.push_back("variable count " + std::to_string(left.num_variables()) + " vs " +
                    std::to_string(right.num_variables()));
  }
  if (left.num_constraints() != right.num_constraints()) {
    diffs.push_back("constraint count " + std::to_string(left.num_constraints()) + " vs " +
                    std::to_string(right.num_constraints()));
  }
  std::vector<long> to_right(left.num_variables(), -1);
  std::vector<double> vscale(left.num_variables(), 1.0);
  for (std::size_t j = 0; j < left.num_variables(); ++j) {
    const auto& v = left.variable(j);
    auto it = var_map.find(v.name);
    if (it == var_map.end()) {
      diffs.push_back("unmapped variable " + v.name);
      continue;
    }
    auto rj = right.find_variable(it->second.name);
    if (!rj) {
      diffs.push_back("variable " + v.name + " maps to missing " + it->second.name);
      continue;
    }
    to_right[j] = static_cast<long>(*rj);
    const double s = it->second.scale;
    vscale[j] = s;
    const auto& w = right.variable(*rj);
    // left = s * right  =>  right bounds are left bounds / s
    double lo = v.lower / s, up = v.upper / s;
    if (s < 0) std::swap(lo, up);
    if (!close(lo, w.lower) || !close(up, w.upper)) {
      diffs.push_back("bounds of " + v.name + " differ from " + w.name);
    }
    if (!close(v.cost * s, w.cost)) {
      std::ostringstream os;
      os << "objective coefficient of " << v.name << " (" << v.cost * s << ") vs "
         << w.name << " (" << w.cost << ")";
      diffs.push_back(os.str());
    }
  }
  for (std::size_t i = 0; i < left.num_constraints(); ++i) {
    const auto& r = left.constraint(i);
    auto it = row_map.find(r.name);
    if (it == row_map.end()) {
      diffs.push_back("unmapped row " + r.name);
      continue;
    }
    auto ri = right.find_constraint(it->second.name);
    if (!ri) {
      diffs.push_back("row " + r.name + " maps to missing " + it->second.name);
      continue;
    }
    const double rs = it->second.scale;
    const auto& w = right.constraint(*ri);
    Relation rel = r.relation;
    if (rs < 0 && rel != Relation::equal) {
      rel = rel == Relation::less_equal ? Relation::greater_equal : Relation::less_equal;
    }
    if (rel != w.relation) diffs.push_back("relation of row " + r.name + " differs");
    if (!close(r.rhs * rs, w.rhs)) {
      std::ostringstream os;
      os << "rhs of row " << r.name << " (" << r.rhs * rs << ") vs " << w.name << " ("
         << w.rhs << ")";
      diffs.push_back(os.str());
    }
    std::unordered_map<std::size_t, double> mapped;
    for (const auto& t : r.terms) {
      if (to_right[t.var] < 0) continue;
      mapped[static_cast<std::size_t>(to_right[t.var])] += t.coef * vscale[t.var] * rs;
    }
    for (const auto& t : w.terms) {
      auto m = mapped.find(t.var);
      const double lv = m == mapped.end() ? 0.0 : m->second;
      if (!close(lv, t.coef)) {
        std::ostringstream os;
        os << "coefficient of " << right.variable(t.var).name << " in row " << r.name
           << " (" << lv << ") vs " << w.name << " (" << t.coef << ")";
        diffs.push_back(os.str());
      }
      if (m != mapped.end()) mapped.erase(m);
    }
    for (const auto& [var, coef] : mapped) {
      if (coef == 0.0) continue;
      std::ostringstream os;
      os << "coefficient of " << right.variable(var).name << " in row " << r.name << " ("
         << coef << ") missing from " << w.name;
      diffs.push_back(os.str());
    }
  }
  return diffs;
}

}  // namespace evcs::lp
