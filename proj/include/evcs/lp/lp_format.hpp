#pragma once

// Writes a LinearProgram in a fixed, line-oriented text layout modelled on
// the CPLEX LP format. The exact layout is described in docs/lp_format.md.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "evcs/lp/program.hpp"

namespace evcs::lp {

inline std::string format_number(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {
inline void write_terms(std::ostream& os, const std::vector<Term>& terms,
                        const LinearProgram& lp) {
  if (terms.empty()) {
    os << " 0";
    return;
  }
  for (const auto& t : terms) {
    os << (t.coef < 0 ? " - " : " + ") << format_number(std::abs(t.coef)) << ' '
       << lp.variable(t.var).name;
  }
}
}  // namespace detail

inline void write_lp(std::ostream& os, const LinearProgram& lp,
                     const std::string& title = "evcs") {
  os << "\\Problem: " << title << '\n';
  os << (lp.sense() == Sense::maximize ? "Maximize" : "Minimize") << '\n';
  std::vector<Term> obj;
  for (std::size_t j = 0; j < lp.num_variables(); ++j) {
    if (lp.variable(j).cost != 0.0) obj.push_back({j, lp.variable(j).cost});
  }
  os << " obj:";
  detail::write_terms(os, obj, lp);
  os << '\n' << "Subject To\n";
  for (const auto& r : lp.constraints()) {
    os << ' ' << r.name << ':';
    detail::write_terms(os, r.terms, lp);
    os << ' ' << to_string(r.relation) << ' ' << format_number(r.rhs) << '\n';
  }
  os << "Bounds\n";
  for (const auto& v : lp.variables()) {
    const bool lo = std::isfinite(v.lower), up = std::isfinite(v.upper);
    os << ' ';
    if (!lo && !up) {
      os << v.name << " free";
    } else if (lo && up && v.lower == v.upper) {
      os << v.name << " = " << format_number(v.lower);
    } else if (lo && !up) {
      os << v.name << " >= " << format_number(v.lower);
    } else {
      os << format_number(v.lower) << " <= " << v.name << " <= " << format_number(v.upper);
    }
    os << '\n';
  }
  os << "End\n";
}

inline std::string to_lp_string(const LinearProgram& lp, const std::string& title = "evcs") {
  std::ostringstream os;
  write_lp(os, lp, title);
  return os.str();
}

}  // namespace evcs::lp
