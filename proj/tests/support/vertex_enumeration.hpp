#pragma once

// Brute-force LP oracle for tiny programs: intersect every n-subset of the
// constraint hyperplanes (bounds included), keep the feasible points and
// return the best objective. Independent of the simplex code path.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "evcs/lp/program.hpp"

namespace evcs::testing {

struct Halfspace {
  std::vector<double> a;
  double b;  // a.x <= b
};

struct VertexOptimum {
  double objective;
  std::vector<double> x;
};

inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> M,
                                                       std::vector<double> r) {
  const std::size_t n = r.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t i = c + 1; i < n; ++i) {
      if (std::abs(M[i][c]) > std::abs(M[p][c])) p = i;
    }
    if (std::abs(M[p][c]) < 1e-11) return std::nullopt;
    std::swap(M[p], M[c]);
    std::swap(r[p], r[c]);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c) continue;
      const double f = M[i][c] / M[c][c];
      for (std::size_t k = c; k < n; ++k) M[i][k] -= f * M[c][k];
      r[i] -= f * r[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = r[i] / M[i][i];
  return x;
}

// Returns nullopt when no vertex is feasible. Assumes the feasible set is a
// bounded polytope (every variable boxed), so the optimum sits at a vertex.
inline std::optional<VertexOptimum> enumerate_vertices(const lp::LinearProgram& lp) {
  const std::size_t n = lp.num_variables();
  std::vector<Halfspace> hs;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& v = lp.variable(j);
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    if (std::isfinite(v.upper)) hs.push_back({e, v.upper});
    e[j] = -1.0;
    if (std::isfinite(v.lower)) hs.push_back({e, -v.lower});
  }
  for (const auto& r : lp.constraints()) {
    std::vector<double> a(n, 0.0);
    for (const auto& t : r.terms) a[t.var] = t.coef;
    if (r.relation != lp::Relation::greater_equal) hs.push_back({a, r.rhs});
    if (r.relation != lp::Relation::less_equal) {
      std::vector<double> neg(n);
      for (std::size_t j = 0; j < n; ++j) neg[j] = -a[j];
      hs.push_back({neg, -r.rhs});
    }
  }
  const double sign = lp.sense() == lp::Sense::maximize ? 1.0 : -1.0;
  std::optional<VertexOptimum> best;
  std::vector<std::size_t> pick(n);
  auto feasible = [&](const std::vector<double>& x) {
    for (const auto& h : hs) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += h.a[j] * x[j];
      if (s > h.b + 1e-8 * (1.0 + std::abs(h.b))) return false;
    }
    return true;
  };
  // Lexicographic walk over n-combinations of hs.
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  if (hs.size() < n) return std::nullopt;
  for (;;) {
    std::vector<std::vector<double>> M;
    std::vector<double> r;
    for (std::size_t i : pick) {
      M.push_back(hs[i].a);
      r.push_back(hs[i].b);
    }
    if (auto x = solve_square(M, r); x && feasible(*x)) {
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) z += lp.variable(j).cost * (*x)[j];
      if (!best || sign * z > sign * best->objective) best = VertexOptimum{z, *x};
    }
    std::size_t k = n;
    while (k > 0 && pick[k - 1] == hs.size() - n + (k - 1)) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t i = k; i < n; ++i) pick[i] = pick[i - 1] + 1;
  }
  return best;
}

}  // namespace evcs::testing
