#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "sblab/core/errors.hpp"

namespace sblab {

struct TransportResult {
  double cost = 0.0;
  std::size_t pivots = 0;
  // nonzero entries of the optimal plan (row, col, mass)
  struct Entry {
    std::size_t i, j;
    double mass;
  };
  std::vector<Entry> plan;
};

/// Transportation problem min sum c_ij p_ij subject to row sums `supply` and
/// column sums `demand` (equal totals), solved by the primal network simplex
/// on the complete bipartite graph. Uses an artificial root, block pricing
/// and the strongly feasible leaving-arc rule; the spanning tree is rebuilt
/// after every pivot (O(m + k) per pivot, fine at the sizes used here).
template <typename CostFn>
TransportResult solve_transport(const std::vector<double>& supply, const std::vector<double>& demand,
                                CostFn&& cost) {
  const std::size_t m = supply.size(), k = demand.size();
  if (m == 0 || k == 0) throw DomainError("transport: empty marginal");
  double ts = 0, td = 0;
  for (double s : supply) ts += s;
  for (double d : demand) td += d;
  if (std::abs(ts - td) > 1e-9 * std::max(1.0, ts)) throw MassError("transport: marginals carry different mass");

  const std::size_t nodes = m + k + 1, root = m + k;
  double cmax = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) cmax = std::max(cmax, cost(i, j));
  const double big = (cmax + 1.0) * static_cast<double>(nodes);
  const double flow_eps = 1e-15 * std::max(1.0, ts);
  const double cost_eps = 1e-12 * std::max(1.0, cmax);

  // Tree arcs, one per non-root node after a rebuild. An arc is either real
  // (i -> m + j) or artificial (i -> root, root -> m + j).
  struct Arc {
    std::size_t from, to;
    double c, flow;
  };
  std::vector<Arc> tree;
  tree.reserve(m + k);
  for (std::size_t i = 0; i < m; ++i) tree.push_back({i, root, big, supply[i]});
  for (std::size_t j = 0; j < k; ++j) tree.push_back({root, m + j, big, demand[j]});

  std::vector<std::size_t> parent(nodes), parc(nodes), depth(nodes);
  std::vector<double> pot(nodes);
  std::vector<std::vector<std::size_t>> adj(nodes);
  std::vector<std::size_t> queue(nodes);
  auto rebuild = [&] {
    for (auto& a : adj) a.clear();
    for (std::size_t a = 0; a < tree.size(); ++a) {
      adj[tree[a].from].push_back(a);
      adj[tree[a].to].push_back(a);
    }
    std::size_t head = 0, tail = 0;
    queue[tail++] = root;
    parent[root] = root;
    depth[root] = 0;
    pot[root] = 0.0;
    std::vector<char> seen(nodes, 0);
    seen[root] = 1;
    while (head < tail) {
      const std::size_t p = queue[head++];
      for (std::size_t a : adj[p]) {
        const Arc& arc = tree[a];
        const std::size_t v = arc.from == p ? arc.to : arc.from;
        if (seen[v]) continue;
        seen[v] = 1;
        parent[v] = p;
        parc[v] = a;
        depth[v] = depth[p] + 1;
        // reduced cost c + pot[from] - pot[to] vanishes on tree arcs
        pot[v] = arc.from == v ? pot[p] - arc.c : pot[p] + arc.c;
        queue[tail++] = v;
      }
    }
    if (tail != nodes) throw DomainError("transport: spanning tree lost connectivity");
  };
  rebuild();

  TransportResult res;
  const std::size_t arcs = m * k;
  const std::size_t block = std::max<std::size_t>(std::sqrt(static_cast<double>(arcs)), 10);
  std::size_t next = 0;
  const std::size_t max_pivots = 50 * arcs + 1000;
  for (;;) {
    // block pricing
    double best = -cost_eps;
    std::size_t enter = arcs, scanned = 0, in_block = 0;
    while (scanned < arcs) {
      const std::size_t a = next;
      next = next + 1 == arcs ? 0 : next + 1;
      ++scanned;
      const std::size_t i = a / k, j = a % k;
      const double rc = cost(i, j) + pot[i] - pot[m + j];
      if (rc < best) {
        best = rc;
        enter = a;
      }
      if (++in_block == block) {
        if (enter != arcs) break;
        in_block = 0;
      }
    }
    if (enter == arcs) break;
    if (++res.pivots > max_pivots) throw NonConvergenceError("transport: pivot limit reached", {}, 0.0);

    const std::size_t x = enter / k, y = m + enter % k;
    // walk both endpoints to the apex
    std::vector<std::size_t> up_y, down_x;  // tree arcs on y->apex and x->apex (bottom to top)
    std::size_t a = y, b = x;
    while (a != b) {
      if (depth[a] >= depth[b]) {
        up_y.push_back(a);
        a = parent[a];
      } else {
        down_x.push_back(b);
        b = parent[b];
      }
    }
    // flow goes x -> y, then y up to the apex, then the apex down to x
    double delta = std::numeric_limits<double>::infinity();
    auto blocking_up = [&](std::size_t v) { return tree[parc[v]].from != v; };  // arc parent -> v, traversed backwards
    auto blocking_down = [&](std::size_t v) { return tree[parc[v]].from == v; };  // arc v -> parent, traversed backwards
    for (std::size_t v : up_y)
      if (blocking_up(v)) delta = std::min(delta, tree[parc[v]].flow);
    for (std::size_t v : down_x)
      if (blocking_down(v)) delta = std::min(delta, tree[parc[v]].flow);
    if (!std::isfinite(delta)) throw DomainError("transport: unbounded cycle");
    // leaving arc: last blocking arc met when traversing the cycle from the apex
    std::size_t leave_node = nodes;
    for (auto it = up_y.rbegin(); it != up_y.rend() && leave_node == nodes; ++it)
      if (blocking_up(*it) && tree[parc[*it]].flow <= delta + flow_eps) leave_node = *it;
    if (leave_node == nodes)
      for (std::size_t v : down_x)
        if (blocking_down(v) && tree[parc[v]].flow <= delta + flow_eps) {
          leave_node = v;
          break;
        }
    for (std::size_t v : up_y) tree[parc[v]].flow += blocking_up(v) ? -delta : delta;
    for (std::size_t v : down_x) tree[parc[v]].flow += blocking_down(v) ? -delta : delta;
    const std::size_t la = parc[leave_node];
    tree[la] = Arc{x, y, cost(x, enter % k), delta};
    for (Arc& t : tree)
      if (std::abs(t.flow) < flow_eps) t.flow = 0.0;
    rebuild();
  }

  for (const Arc& t : tree) {
    if (t.from == root || t.to == root) {
      if (t.flow > 1e-9 * std::max(1.0, ts)) throw MassError("transport: artificial arc carries flow");
      continue;
    }
    if (t.flow > 0.0) {
      res.cost += t.flow * t.c;
      res.plan.push_back({t.from, t.to - m, t.flow});
    }
  }
  return res;
}

}  // namespace sblab
