#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace evcs::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { minimize, maximize };
enum class Relation { less_equal, equal, greater_equal };

inline const char* to_string(Relation rel) {
  switch (rel) {
    case Relation::less_equal: return "<=";
    case Relation::equal: return "=";
    case Relation::greater_equal: return ">=";
  }
  return "?";
}

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  double cost = 0.0;
};

struct Term {
  std::size_t var;
  double coef;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Relation relation = Relation::equal;
  double rhs = 0.0;
};

// Where a primal value breaks the model, and by how much.
struct Violation {
  double amount = 0.0;
  std::string where;
};

// A linear program with named variables and constraints. Names are unique so
// duals can be addressed by the constraint they belong to.
class LinearProgram {
 public:
  explicit LinearProgram(Sense sense = Sense::minimize) : sense_(sense) {}

  Sense sense() const { return sense_; }
  void set_sense(Sense sense) { sense_ = sense; }

  std::size_t add_variable(std::string name, double lower, double upper,
                           double cost = 0.0) {
    if (var_index_.count(name)) {
      throw ModelError("duplicate variable name: " + name);
    }
    var_index_.emplace(name, vars_.size());
    vars_.push_back({std::move(name), lower, upper, cost});
    return vars_.size() - 1;
  }

  // Duplicate terms on the same variable are merged; zero coefficients dropped.
  std::size_t add_constraint(std::string name, std::vector<Term> terms,
                             Relation relation, double rhs) {
    if (row_index_.count(name)) {
      throw ModelError("duplicate constraint name: " + name);
    }
    std::map<std::size_t, double> merged;
    for (const auto& t : terms) {
      if (t.var >= vars_.size()) {
        throw ModelError("constraint " + name + " references undeclared variable");
      }
      merged[t.var] += t.coef;
    }
    std::vector<Term> clean;
    clean.reserve(merged.size());
    for (const auto& [v, c] : merged) {
      if (c != 0.0) clean.push_back({v, c});
    }
    row_index_.emplace(name, rows_.size());
    rows_.push_back({std::move(name), std::move(clean), relation, rhs});
    return rows_.size() - 1;
  }

  void set_cost(std::size_t var, double cost) { vars_.at(var).cost = cost; }
  void set_bounds(std::size_t var, double lower, double upper) {
    vars_.at(var).lower = lower;
    vars_.at(var).upper = upper;
  }
  void set_rhs(std::size_t row, double rhs) { rows_.at(row).rhs = rhs; }

  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_constraints() const { return rows_.size(); }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const Variable& variable(std::size_t j) const { return vars_.at(j); }
  const Constraint& constraint(std::size_t i) const { return rows_.at(i); }

  std::optional<std::size_t> find_variable(const std::string& name) const {
    auto it = var_index_.find(name);
    if (it == var_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> find_constraint(const std::string& name) const {
    auto it = row_index_.find(name);
    if (it == row_index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t variable_index(const std::string& name) const {
    auto idx = find_variable(name);
    if (!idx) throw ModelError("unknown variable: " + name);
    return *idx;
  }
  std::size_t constraint_index(const std::string& name) const {
    auto idx = find_constraint(name);
    if (!idx) throw ModelError("unknown constraint: " + name);
    return *idx;
  }

  // Throws ModelError on non-finite data or inverted bounds.
  void validate() const {
    for (const auto& v : vars_) {
      if (std::isnan(v.lower) || std::isnan(v.upper) || !std::isfinite(v.cost)) {
        throw ModelError("non-finite data on variable " + v.name);
      }
      if (v.lower == kInf || v.upper == -kInf) {
        throw ModelError("infinite bound on the wrong side for " + v.name);
      }
      if (v.lower > v.upper) {
        throw ModelError("lower bound above upper bound for " + v.name);
      }
    }
    for (const auto& r : rows_) {
      if (!std::isfinite(r.rhs)) throw ModelError("non-finite rhs on " + r.name);
      for (const auto& t : r.terms) {
        if (!std::isfinite(t.coef)) {
          throw ModelError("non-finite coefficient in " + r.name);
        }
      }
    }
  }

  double objective_value(std::span<const double> x) const {
    double z = 0.0;
    for (std::size_t j = 0; j < vars_.size(); ++j) z += vars_[j].cost * x[j];
    return z;
  }

  double activity(std::size_t row, std::span<const double> x) const {
    double a = 0.0;
    for (const auto& t : rows_[row].terms) a += t.coef * x[t.var];
    return a;
  }

  // Signed amount by which `activity` breaks the row (0 when satisfied).
  double row_violation(std::size_t row, double activity) const {
    const auto& r = rows_[row];
    switch (r.relation) {
      case Relation::less_equal: return std::max(0.0, activity - r.rhs);
      case Relation::greater_equal: return std::max(0.0, r.rhs - activity);
      case Relation::equal: return std::abs(activity - r.rhs);
    }
    return 0.0;
  }

  // Largest bound or row violation of x, with the offending name.
  Violation max_violation(std::span<const double> x) const {
    Violation worst;
    if (x.size() != vars_.size()) {
      return {kInf, "primal vector has wrong length"};
    }
    for (std::size_t j = 0; j < vars_.size(); ++j) {
      const auto& v = vars_[j];
      double amount = 0.0;
      if (!std::isfinite(x[j])) amount = kInf;
      else amount = std::max({0.0, v.lower - x[j], x[j] - v.upper});
      if (amount > worst.amount) worst = {amount, "bound " + v.name};
    }
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      double amount = row_violation(i, activity(i, x));
      if (amount > worst.amount) worst = {amount, "row " + rows_[i].name};
    }
    return worst;
  }

  // Column-major view: for every variable the (row, coef) pairs.
  std::vector<std::vector<std::pair<std::size_t, double>>> columns() const {
    std::vector<std::vector<std::pair<std::size_t, double>>> cols(vars_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      for (const auto& t : rows_[i].terms) cols[t.var].emplace_back(i, t.coef);
    }
    return cols;
  }

 private:
  Sense sense_;
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::unordered_map<std::string, std::size_t> var_index_;
  std::unordered_map<std::string, std::size_t> row_index_;
};

}  // namespace evcs::lp
