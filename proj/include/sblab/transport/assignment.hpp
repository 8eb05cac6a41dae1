#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "sblab/core/errors.hpp"

namespace sblab {

struct AssignmentResult {
  std::vector<std::size_t> col_for_row;
  double cost = 0.0;
};

/// Square linear assignment by shortest augmenting paths (Jonker-Volgenant
/// style dual updates). Costs are evaluated on the fly, so no n x n matrix
/// is stored: `row_costs(i, out)` fills a whole row (used once per row for
/// the column reduction that seeds duals and a partial matching), and
/// `cost(i, j)` serves the Dijkstra sweeps over the unscanned columns.
template <typename RowFn, typename CostFn>
AssignmentResult solve_assignment_rows(std::size_t n, RowFn&& row_costs, CostFn&& cost) {
  AssignmentResult res;
  if (n == 0) return res;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n, 0.0), v(n, inf), row(n);
  std::vector<std::size_t> argmin(n, 0);
  constexpr std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> col4row(n, none), row4col(n, none);

  // column reduction: v_j = min_i c_ij
  for (std::size_t i = 0; i < n; ++i) {
    row_costs(i, row.data());
    for (std::size_t j = 0; j < n; ++j)
      if (row[j] < v[j]) {
        v[j] = row[j];
        argmin[j] = i;
      }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t i = argmin[j];
    if (col4row[i] == none) {
      col4row[i] = j;
      row4col[j] = i;
    }
  }

  std::vector<double> spc(n);
  std::vector<std::size_t> path(n), remaining(n);
  std::vector<char> sr(n), sc(n);
  for (std::size_t cur = 0; cur < n; ++cur) {
    if (col4row[cur] != none) continue;
    std::fill(spc.begin(), spc.end(), inf);
    std::fill(sr.begin(), sr.end(), 0);
    std::fill(sc.begin(), sc.end(), 0);
    std::size_t left = n;
    for (std::size_t k = 0; k < n; ++k) remaining[k] = n - k - 1;
    double min_val = 0.0;
    std::size_t i = cur, sink = none;
    while (sink == none) {
      sr[i] = 1;
      std::size_t index = none;
      double lowest = inf;
      for (std::size_t k = 0; k < left; ++k) {
        const std::size_t j = remaining[k];
        const double r = min_val + cost(i, j) - u[i] - v[j];
        if (r < spc[j]) {
          path[j] = i;
          spc[j] = r;
        }
        if (spc[j] < lowest || (spc[j] == lowest && row4col[j] == none)) {
          lowest = spc[j];
          index = k;
        }
      }
      min_val = lowest;
      if (!std::isfinite(min_val)) throw DomainError("assignment: infeasible cost matrix");
      const std::size_t j = remaining[index];
      if (row4col[j] == none)
        sink = j;
      else
        i = row4col[j];
      sc[j] = 1;
      remaining[index] = remaining[--left];
    }
    u[cur] += min_val;
    for (std::size_t r = 0; r < n; ++r)
      if (sr[r] && r != cur) u[r] += min_val - spc[col4row[r]];
    for (std::size_t c = 0; c < n; ++c)
      if (sc[c]) v[c] -= min_val - spc[c];
    std::size_t j = sink;
    for (;;) {
      const std::size_t r = path[j];
      row4col[j] = r;
      std::swap(col4row[r], j);
      if (r == cur) break;
    }
  }
  res.col_for_row = col4row;
  return res;
}

/// Assignment with an elementwise cost functor; the returned cost is the
/// sum of cost(i, col_for_row[i]).
template <typename CostFn>
AssignmentResult solve_assignment(std::size_t n, CostFn&& cost) {
  AssignmentResult r = solve_assignment_rows(
      n, [&](std::size_t i, double* out) {
        for (std::size_t j = 0; j < n; ++j) out[j] = cost(i, j);
      },
      cost);
  for (std::size_t i = 0; i < n; ++i) r.cost += cost(i, r.col_for_row[i]);
  return r;
}

}  // namespace sblab
