#pragma once

// Exact Earth Mover's Distance between discrete probability mass functions.
// The ground metric is the Euclidean distance between bin index coordinates.
// The transportation problem is solved to optimality with successive
// shortest augmenting paths over the nonzero bins (Dijkstra with node
// potentials); supports are typically far smaller than the full grid.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "lagan/error.hpp"

namespace lagan {

struct PmfWindow {
  double m_min = 0.0, m_max = 1.0;
  double t_min = 0.0, t_max = 1.0;
};

/// 40x40 equispaced probability mass function over an (m, tau21) window.
struct PmfGrid {
  static constexpr int kExtent = 40;
  std::vector<double> mass;  // kExtent * kExtent, sums to 1
  PmfWindow window;
  long clipped = 0;  // samples clamped into edge bins
  long count = 0;    // samples binned

  double total() const {
    double s = 0.0;
    for (double v : mass) s += v;
    return s;
  }
};

/// Histogram samples into the window and normalize to total mass one.
/// Out-of-window samples are clamped to the nearest edge bin and counted.
inline PmfGrid build_pmf(const std::vector<std::pair<double, double>>& samples,
                         const PmfWindow& window) {
  require(!samples.empty(), ErrorCategory::empty_input,
          "cannot build a PMF from zero samples");
  require(window.m_max > window.m_min && window.t_max > window.t_min, ErrorCategory::config,
          "PMF window must have positive extent in both coordinates");
  PmfGrid grid;
  grid.window = window;
  grid.mass.assign(PmfGrid::kExtent * PmfGrid::kExtent, 0.0);
  const int E = PmfGrid::kExtent;
  for (const auto& [m, t] : samples) {
    if (m < window.m_min || m > window.m_max || t < window.t_min || t > window.t_max)
      ++grid.clipped;
    int i = static_cast<int>(std::floor((m - window.m_min) / (window.m_max - window.m_min) * E));
    int j = static_cast<int>(std::floor((t - window.t_min) / (window.t_max - window.t_min) * E));
    i = std::clamp(i, 0, E - 1);
    j = std::clamp(j, 0, E - 1);
    grid.mass[static_cast<size_t>(i * E + j)] += 1.0;
    ++grid.count;
  }
  const double inv = 1.0 / static_cast<double>(grid.count);
  for (double& v : grid.mass) v *= inv;
  return grid;
}

/// Sparse view of a PMF: integer bin coordinates with positive masses.
struct SparsePmf {
  std::vector<std::pair<int, int>> coords;
  std::vector<double> mass;

  static SparsePmf from_grid(const std::vector<double>& mass, int extent) {
    SparsePmf s;
    for (int i = 0; i < extent; ++i)
      for (int j = 0; j < extent; ++j) {
        double v = mass[static_cast<size_t>(i * extent + j)];
        if (v > 0.0) {
          s.coords.emplace_back(i, j);
          s.mass.push_back(v);
        }
      }
    return s;
  }
};

namespace detail {

inline double index_distance(std::pair<int, int> a, std::pair<int, int> b) {
  const double di = a.first - b.first;
  const double dj = a.second - b.second;
  return std::sqrt(di * di + dj * dj);
}

/// Min-cost transport between equal-mass sparse distributions by successive
/// shortest augmenting paths. Exact up to floating-point arithmetic.
inline double solve_transport(const SparsePmf& supply, const SparsePmf& demand) {
  const int ns = static_cast<int>(supply.mass.size());
  const int nd = static_cast<int>(demand.mass.size());
  if (ns == 0 || nd == 0) return 0.0;

  std::vector<double> cost(static_cast<size_t>(ns) * nd);
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nd; ++j)
      cost[static_cast<size_t>(i) * nd + j] = index_distance(supply.coords[i], demand.coords[j]);

  std::vector<double> remaining_supply = supply.mass;
  std::vector<double> remaining_demand = demand.mass;
  std::vector<double> flow(static_cast<size_t>(ns) * nd, 0.0);
  // node potentials (sources then sinks); reduced cost of arc a->b is
  // cost(a,b) + pot[a] - pot[b], kept non-negative across rounds
  std::vector<double> pot(static_cast<size_t>(ns) + nd, 0.0);

  double total_demand = 0.0;
  for (double v : remaining_demand) total_demand += v;
  const double mass_eps = total_demand * 1e-14;

  const int V = ns + nd;
  std::vector<double> dist(static_cast<size_t>(V));
  std::vector<int> prev(static_cast<size_t>(V));
  std::vector<char> done(static_cast<size_t>(V));

  long guard = 64L * (ns + nd) + 4096;
  while (total_demand > mass_eps && guard-- > 0) {
    // Multi-source Dijkstra in reduced costs. Seeding open sources at
    // maxpot - pot[i] models zero-cost virtual arcs from a super-source with
    // potential maxpot, keeping all initial labels non-negative.
    double maxpot = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < ns; ++i)
      if (remaining_supply[i] > 0.0) maxpot = std::max(maxpot, pot[i]);

    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (int i = 0; i < ns; ++i)
      if (remaining_supply[i] > 0.0) dist[static_cast<size_t>(i)] = maxpot - pot[i];

    int target = -1;
    for (int iter = 0; iter < V; ++iter) {
      int u = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int v = 0; v < V; ++v)
        if (!done[v] && dist[v] < best) {
          best = dist[v];
          u = v;
        }
      if (u < 0) break;
      done[u] = 1;
      if (u >= ns && remaining_demand[u - ns] > 0.0) {
        target = u;
        break;  // nearest open sink reached; its label is final
      }
      if (u < ns) {
        for (int j = 0; j < nd; ++j) {
          const int v = ns + j;
          if (done[v]) continue;
          double rc = cost[static_cast<size_t>(u) * nd + j] + pot[u] - pot[v];
          if (rc < 0.0) rc = 0.0;  // floating-point dust
          if (dist[u] + rc < dist[v]) {
            dist[v] = dist[u] + rc;
            prev[v] = u;
          }
        }
      } else {
        const int j = u - ns;
        for (int i = 0; i < ns; ++i) {
          if (done[i] || flow[static_cast<size_t>(i) * nd + j] <= 0.0) continue;
          double rc = -cost[static_cast<size_t>(i) * nd + j] + pot[u] - pot[i];
          if (rc < 0.0) rc = 0.0;
          if (dist[u] + rc < dist[i]) {
            dist[i] = dist[u] + rc;
            prev[i] = u;
          }
        }
      }
    }
    require(target >= 0, ErrorCategory::numeric, "transport solver found no augmenting path");

    // bottleneck: remaining demand at the target, remaining supply at the
    // path head, and flow on every backward arc along the path
    int head = target;
    while (prev[head] >= 0) head = prev[head];
    double push = std::min(remaining_demand[target - ns], remaining_supply[head]);
    for (int v = target; prev[v] >= 0; v = prev[v]) {
      int u = prev[v];
      if (u >= ns && v < ns) push = std::min(push, flow[static_cast<size_t>(v) * nd + (u - ns)]);
    }

    for (int v = target; prev[v] >= 0; v = prev[v]) {
      int u = prev[v];
      if (u < ns && v >= ns)
        flow[static_cast<size_t>(u) * nd + (v - ns)] += push;
      else if (u >= ns && v < ns)
        flow[static_cast<size_t>(v) * nd + (u - ns)] -= push;
    }
    remaining_supply[head] -= push;
    remaining_demand[target - ns] -= push;
    total_demand -= push;

    const double dt = dist[target];
    for (int v = 0; v < V; ++v) pot[v] += std::min(dist[v], dt);
  }
  require(total_demand <= std::max(mass_eps, 1e-9), ErrorCategory::numeric,
          "transport solver did not satisfy all demand");

  double total_cost = 0.0;
  for (int i = 0; i < ns; ++i)
    for (int j = 0; j < nd; ++j)
      total_cost += flow[static_cast<size_t>(i) * nd + j] * cost[static_cast<size_t>(i) * nd + j];
  return total_cost;
}

}  // namespace detail

namespace detail {

/// Sort by coordinate and merge duplicate bins.
inline SparsePmf canonical(const SparsePmf& in) {
  std::vector<size_t> order(in.coords.size());
  for (size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return in.coords[a] < in.coords[b]; });
  SparsePmf out;
  for (size_t k : order) {
    if (!out.coords.empty() && out.coords.back() == in.coords[k])
      out.mass.back() += in.mass[k];
    else {
      out.coords.push_back(in.coords[k]);
      out.mass.push_back(in.mass[k]);
    }
  }
  return out;
}

}  // namespace detail

/// EMD between two sparse PMFs on the same index grid. Mass shared at a bin
/// never needs to move (the index metric satisfies the triangle inequality),
/// so common mass is cancelled before solving.
inline double emd_sparse(const SparsePmf& p_in, const SparsePmf& q_in) {
  double pt = 0.0, qt = 0.0;
  for (double v : p_in.mass) pt += v;
  for (double v : q_in.mass) qt += v;
  require(std::abs(pt - qt) <= 1e-9, ErrorCategory::config,
          "EMD inputs must carry equal total mass");
  const SparsePmf p = detail::canonical(p_in);
  const SparsePmf q = detail::canonical(q_in);

  SparsePmf supply, demand;
  size_t i = 0, j = 0;
  while (i < p.coords.size() || j < q.coords.size()) {
    if (j >= q.coords.size() || (i < p.coords.size() && p.coords[i] < q.coords[j])) {
      supply.coords.push_back(p.coords[i]);
      supply.mass.push_back(p.mass[i]);
      ++i;
    } else if (i >= p.coords.size() || q.coords[j] < p.coords[i]) {
      demand.coords.push_back(q.coords[j]);
      demand.mass.push_back(q.mass[j]);
      ++j;
    } else {
      const double common = std::min(p.mass[i], q.mass[j]);
      if (p.mass[i] - common > 0.0) {
        supply.coords.push_back(p.coords[i]);
        supply.mass.push_back(p.mass[i] - common);
      }
      if (q.mass[j] - common > 0.0) {
        demand.coords.push_back(q.coords[j]);
        demand.mass.push_back(q.mass[j] - common);
      }
      ++i;
      ++j;
    }
  }
  return detail::solve_transport(supply, demand);
}

/// EMD between two normalized 40x40 PMFs built on the same window.
inline double emd(const PmfGrid& p, const PmfGrid& q) {
  require(std::abs(p.total() - 1.0) <= 1e-9 && std::abs(q.total() - 1.0) <= 1e-9,
          ErrorCategory::config, "EMD inputs must be normalized to total mass 1");
  require(p.window.m_min == q.window.m_min && p.window.m_max == q.window.m_max &&
              p.window.t_min == q.window.t_min && p.window.t_max == q.window.t_max,
          ErrorCategory::config, "EMD inputs must share one window");
  return emd_sparse(SparsePmf::from_grid(p.mass, PmfGrid::kExtent),
                    SparsePmf::from_grid(q.mass, PmfGrid::kExtent));
}

}  // namespace lagan
