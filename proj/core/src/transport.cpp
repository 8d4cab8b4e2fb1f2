// Exact discrete optimal transport for the Wasserstein diagnostics.
//
// One dimension uses the monotone (quantile) coupling. Higher dimensions solve
// the balanced transportation problem with a primal network simplex: the
// northwest-corner rule gives the initial spanning-tree basis, entering arcs
// come from a block search over reduced costs, and potentials are rebuilt by
// a tree traversal after each pivot.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "fpksl/measure.hpp"

namespace fpksl {

namespace {

class TransportSimplex {
 public:
  TransportSimplex(std::span<const double> supply, std::span<const double> demand, std::span<const double> cost)
      : n_(supply.size()), m_(demand.size()), cost_(cost), flow_(n_ * m_, 0.0), basic_(n_ * m_, 0),
        adj_(n_ + m_), parent_arc_(n_ + m_), parent_(n_ + m_), depth_(n_ + m_), pot_(n_ + m_) {
    northwest_corner(supply, demand);
    double cmax = 0.0;
    for (double c : cost_) cmax = std::max(cmax, std::abs(c));
    eps_ = 1e-12 * std::max(1.0, cmax);
  }

  double solve() {
    const std::size_t arcs = n_ * m_;
    const std::size_t block = std::max<std::size_t>(16, static_cast<std::size_t>(std::sqrt(static_cast<double>(arcs))));
    const std::size_t max_pivots = 50 * arcs + 1000;
    std::size_t cursor = 0;
    rebuild_tree();
    for (std::size_t pivots = 0;; ++pivots) {
      if (pivots > max_pivots) throw SolverError("transport simplex: pivot limit exceeded");
      // Block search: most negative reduced cost within the first block that has one.
      std::size_t entering = arcs;
      double best = -eps_;
      std::size_t scanned = 0;
      while (scanned < arcs) {
        const std::size_t stop = std::min(arcs, scanned + block);
        for (; scanned < stop; ++scanned) {
          const std::size_t a = cursor;
          cursor = cursor + 1 == arcs ? 0 : cursor + 1;
          if (basic_[a]) continue;
          const double rc = cost_[a] - pot_[a / m_] - pot_[n_ + a % m_];
          if (rc < best) {
            best = rc;
            entering = a;
          }
        }
        if (entering != arcs) break;
      }
      if (entering == arcs) break;
      pivot(entering);
      rebuild_tree();
    }
    double total = 0.0;
    for (std::size_t a = 0; a < arcs; ++a) {
      if (basic_[a]) total += flow_[a] * cost_[a];
    }
    return total;
  }

 private:
  void add_basic(std::size_t arc, double f) {
    basic_[arc] = 1;
    flow_[arc] = f;
    adj_[arc / m_].push_back(arc);
    adj_[n_ + arc % m_].push_back(arc);
  }

  void remove_basic(std::size_t arc) {
    basic_[arc] = 0;
    flow_[arc] = 0.0;
    for (std::size_t node : {arc / m_, n_ + arc % m_}) {
      auto& v = adj_[node];
      v.erase(std::find(v.begin(), v.end(), arc));
    }
  }

  void northwest_corner(std::span<const double> supply, std::span<const double> demand) {
    std::vector<double> ra(supply.begin(), supply.end());
    std::vector<double> rb(demand.begin(), demand.end());
    std::size_t i = 0, j = 0;
    while (true) {
      const double f = std::max(0.0, std::min(ra[i], rb[j]));
      add_basic(i * m_ + j, f);
      ra[i] -= f;
      rb[j] -= f;
      if (i + 1 == n_ && j + 1 == m_) break;
      if (j + 1 == m_ || (i + 1 < n_ && ra[i] <= rb[j])) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void rebuild_tree() {
    const std::size_t nodes = n_ + m_;
    std::fill(depth_.begin(), depth_.end(), -1);
    std::vector<std::size_t> queue;
    queue.reserve(nodes);
    queue.push_back(0);
    depth_[0] = 0;
    pot_[0] = 0.0;
    parent_[0] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t u = queue[head];
      for (std::size_t arc : adj_[u]) {
        const std::size_t s = arc / m_;
        const std::size_t d = n_ + arc % m_;
        const std::size_t v = (u == s) ? d : s;
        if (depth_[v] >= 0) continue;
        depth_[v] = depth_[u] + 1;
        parent_[v] = u;
        parent_arc_[v] = arc;
        // u_s + v_d = c on basic arcs
        pot_[v] = cost_[arc] - pot_[u];
        queue.push_back(v);
      }
    }
    if (queue.size() != nodes) throw SolverError("transport simplex: basis is not a spanning tree");
  }

  void pivot(std::size_t entering) {
    const std::size_t s = entering / m_;
    const std::size_t d = n_ + entering % m_;
    // Cycle: entering arc s->d, then tree path d -> ... -> s. Moving from a
    // demand node to its supply neighbour traverses the arc backwards.
    std::vector<std::pair<std::size_t, int>> path_d;  // arcs on the d side, sign of change
    std::vector<std::pair<std::size_t, int>> path_s;
    std::size_t a = d, b = s;
    auto sign_of_step = [&](std::size_t from) {
      // Step from `from` to its parent along parent_arc_[from].
      return from >= n_ ? -1 : +1;
    };
    while (depth_[a] > depth_[b]) {
      path_d.emplace_back(parent_arc_[a], sign_of_step(a));
      a = parent_[a];
    }
    while (depth_[b] > depth_[a]) {
      path_s.emplace_back(parent_arc_[b], -sign_of_step(b));
      b = parent_[b];
    }
    while (a != b) {
      path_d.emplace_back(parent_arc_[a], sign_of_step(a));
      a = parent_[a];
      path_s.emplace_back(parent_arc_[b], -sign_of_step(b));
      b = parent_[b];
    }
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leaving = entering;
    auto consider = [&](const std::pair<std::size_t, int>& e) {
      if (e.second < 0 && flow_[e.first] < theta) {
        theta = flow_[e.first];
        leaving = e.first;
      }
    };
    for (const auto& e : path_d) consider(e);
    for (auto it = path_s.rbegin(); it != path_s.rend(); ++it) consider(*it);
    if (leaving == entering) throw SolverError("transport simplex: unbounded cycle");
    for (const auto& e : path_d) flow_[e.first] = std::max(0.0, flow_[e.first] + e.second * theta);
    for (const auto& e : path_s) flow_[e.first] = std::max(0.0, flow_[e.first] + e.second * theta);
    remove_basic(leaving);
    add_basic(entering, theta);
  }

  std::size_t n_, m_;
  std::span<const double> cost_;
  std::vector<double> flow_;
  std::vector<char> basic_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<std::size_t> parent_arc_;
  std::vector<std::size_t> parent_;
  std::vector<long> depth_;
  std::vector<double> pot_;
  double eps_ = 1e-12;
};

struct Active {
  std::vector<std::size_t> nodes;
  std::vector<double> mass;
};

Active active_nodes(const GridMeasure& m) {
  Active a;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.weight(i) > 0.0) {
      a.nodes.push_back(i);
      a.mass.push_back(m.weight(i));
    }
  }
  return a;
}

double wasserstein_p(const GridMeasure& a, const GridMeasure& b, int p) {
  if (a.lattice_ptr() != b.lattice_ptr() && !(a.lattice() == b.lattice())) {
    throw InvalidArgument("wasserstein: measures live on different lattices");
  }
  if (std::abs(a.mass() - b.mass()) > 1e-9) {
    std::ostringstream msg;
    msg << "wasserstein: masses differ (" << a.mass() << " vs " << b.mass() << ")";
    throw InvalidArgument(msg.str());
  }
  const Lattice& lat = a.lattice();
  auto ground = [&](std::size_t i, std::size_t j) {
    const Point x = lat.node(i), y = lat.node(j);
    double s = 0.0;
    for (int k = 0; k < lat.dim(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return p == 1 ? std::sqrt(s) : s;
  };
  Active sa = active_nodes(a), sb = active_nodes(b);
  if (sa.nodes.empty() || sb.nodes.empty()) return 0.0;
  const double ma = std::accumulate(sa.mass.begin(), sa.mass.end(), 0.0);
  const double mb = std::accumulate(sb.mass.begin(), sb.mass.end(), 0.0);
  for (auto& w : sb.mass) w *= ma / mb;

  double cost = 0.0;
  if (lat.dim() == 1) {
    // Monotone coupling; node order is coordinate order.
    std::size_t i = 0, j = 0;
    double ra = sa.mass[0], rb = sb.mass[0];
    while (i < sa.nodes.size() && j < sb.nodes.size()) {
      const double f = std::min(ra, rb);
      cost += f * ground(sa.nodes[i], sb.nodes[j]);
      ra -= f;
      rb -= f;
      if (ra <= rb) {
        if (++i < sa.nodes.size()) ra = sa.mass[i];
      } else {
        if (++j < sb.nodes.size()) rb = sb.mass[j];
      }
    }
  } else {
    if (sa.nodes.size() > kTransportNodeCap || sb.nodes.size() > kTransportNodeCap) {
      std::ostringstream msg;
      msg << "wasserstein: " << std::max(sa.nodes.size(), sb.nodes.size()) << " active nodes exceeds the cap of "
          << kTransportNodeCap << "; subsample or coarsen the measures";
      throw InvalidArgument(msg.str());
    }
    std::vector<double> c(sa.nodes.size() * sb.nodes.size());
    for (std::size_t i = 0; i < sa.nodes.size(); ++i) {
      for (std::size_t j = 0; j < sb.nodes.size(); ++j) c[i * sb.nodes.size() + j] = ground(sa.nodes[i], sb.nodes[j]);
    }
    cost = transport_cost(sa.mass, sb.mass, c);
  }
  cost = std::max(cost, 0.0);
  return p == 1 ? cost : std::sqrt(cost);
}

}  // namespace

double transport_cost(std::span<const double> supply, std::span<const double> demand, std::span<const double> cost) {
  if (supply.empty() || demand.empty()) throw InvalidArgument("transport_cost: empty marginal");
  if (cost.size() != supply.size() * demand.size()) throw InvalidArgument("transport_cost: cost matrix size mismatch");
  for (double s : supply) {
    if (!(s >= 0.0)) throw InvalidArgument("transport_cost: negative supply");
  }
  for (double s : demand) {
    if (!(s >= 0.0)) throw InvalidArgument("transport_cost: negative demand");
  }
  TransportSimplex simplex(supply, demand, cost);
  return simplex.solve();
}

double wasserstein1(const GridMeasure& a, const GridMeasure& b) { return wasserstein_p(a, b, 1); }
double wasserstein2(const GridMeasure& a, const GridMeasure& b) { return wasserstein_p(a, b, 2); }

}  // namespace fpksl
