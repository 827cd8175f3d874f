#include "recon/global.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace recon {

std::vector<std::vector<std::pair<int, double>>> ProximityGraph::adjacency() const {
  std::vector<std::vector<std::pair<int, double>>> adj(node_count);
  for (const auto& e : edges) {
    adj[e.i].push_back({e.j, e.weight});
    adj[e.j].push_back({e.i, e.weight});
  }
  return adj;
}

const LocalChart* ChartCache::get(int i0) {
  auto done = attempted_.find(i0);
  if (done != attempted_.end()) {
    if (!done->second) return nullptr;
    return &charts_.at(i0);
  }
  try {
    charts_.emplace(i0, build_chart(view_, *da_, i0));
    attempted_[i0] = true;
    return &charts_.at(i0);
  } catch (const Error&) {
    attempted_[i0] = false;
    failures_.push_back(i0);
    return nullptr;
  }
}

ProximityGraph build_graph(const BundleView& view, const SurrogateYDistances& da, ChartCache& cache,
                           const std::vector<int>& nodes) {
  const auto& prm = *view.params;
  prm.validate();

  ProximityGraph g;
  if (!nodes.empty()) {
    for (int id : nodes)
      if (id < 0 || id >= view.I()) throw InputError("graph node index out of range");
    g.node_ids = nodes;
  }
  g.node_count = nodes.empty() ? view.I() : static_cast<int>(nodes.size());
  g.rho = prm.rho();
  g.hop_cap = static_cast<int>(std::ceil(1.0 + prm.bounds.lambda / g.rho));

  // Admission: the chain threshold, tightened by the coordinate-domain guard
  // rho0 so every admitted pair is inside both endpoint charts' domains.
  const double threshold =
      std::min(g.rho + prm.constant("C0") * std::sqrt(prm.eps1) + 2.0 * prm.eps1, prm.rho0);

  auto edge_weight = [&](int i, int j, bool& have) -> double {
    double w = std::numeric_limits<double>::infinity();
    have = false;
    if (const LocalChart* ci = cache.get(i)) {
      try {
        w = std::min(w, local_distance(*ci, compute_coordinates(*ci, view, j)));
        have = true;
      } catch (const Error&) {
      }
    }
    if (const LocalChart* cj = cache.get(j)) {
      try {
        w = std::min(w, local_distance(*cj, compute_coordinates(*cj, view, i)));
        have = true;
      } catch (const Error&) {
      }
    }
    return w;
  };

  auto id = [&](int k) { return g.node_ids.empty() ? k : g.node_ids[k]; };
  for (int i = 0; i < g.node_count; ++i) {
    for (int j = i + 1; j < g.node_count; ++j) {
      const double sup = sup_distance_above(view.vec(id(i)), view.vec(id(j)), threshold);
      if (sup > threshold || sup >= prm.rho0) continue;
      bool have = false;
      const double w = edge_weight(id(i), id(j), have);
      if (!have) {
        g.dropped_pairs.push_back({i, j});
        continue;
      }
      g.edges.push_back({i, j, w, threshold - sup});
    }
  }
  g.failed_charts = cache.failures();
  return g;
}

std::vector<int> DistanceMatrix::chain(int s, int j) const {
  std::vector<int> out;
  if (!std::isfinite(values[s][j])) return out;
  int cur = j;
  while (cur != -1) {
    out.push_back(cur);
    cur = parents[s][cur];
    if (out.size() > values[s].size()) return {}; // defensive: malformed tree
  }
  std::reverse(out.begin(), out.end());
  return out;
}

namespace {

// Exact hop-capped single source distances: two-array relaxation rounds, so a
// round-r value is the best over chains of <= r edges.
void hop_capped_source(const std::vector<std::vector<std::pair<int, double>>>& adj, int src,
                       int max_edges, std::vector<double>& dist, std::vector<int>& hop,
                       std::vector<int>& parent) {
  const int n = static_cast<int>(adj.size());
  dist.assign(n, std::numeric_limits<double>::infinity());
  hop.assign(n, -1);
  parent.assign(n, -1);
  dist[src] = 0.0;
  hop[src] = 0;
  std::vector<double> prev = dist;
  for (int round = 1; round <= max_edges; ++round) {
    bool changed = false;
    std::vector<double> next = dist;
    for (int u = 0; u < n; ++u) {
      if (!std::isfinite(prev[u])) continue;
      for (auto [v, w] : adj[u]) {
        if (prev[u] + w < next[v]) {
          next[v] = prev[u] + w;
          hop[v] = round;
          parent[v] = u;
          changed = true;
        }
      }
    }
    prev = next;
    dist = std::move(next);
    if (!changed) break;
  }
}

// Dijkstra fast path; valid when the shortest-path tree respects the hop cap.
bool dijkstra_source(const std::vector<std::vector<std::pair<int, double>>>& adj, int src,
                     int max_edges, std::vector<double>& dist, std::vector<int>& hop,
                     std::vector<int>& parent) {
  const int n = static_cast<int>(adj.size());
  dist.assign(n, std::numeric_limits<double>::infinity());
  hop.assign(n, -1);
  parent.assign(n, -1);
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
  dist[src] = 0.0;
  hop[src] = 0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (auto [v, w] : adj[u]) {
      if (dist[u] + w < dist[v]) {
        dist[v] = dist[u] + w;
        hop[v] = hop[u] + 1;
        parent[v] = u;
        pq.push({dist[v], v});
      }
    }
  }
  for (int v = 0; v < n; ++v)
    if (std::isfinite(dist[v]) && hop[v] > max_edges) return false;
  return true;
}

} // namespace

DistanceMatrix chain_distances(const ProximityGraph& graph, std::vector<int> sources) {
  DistanceMatrix m;
  m.node_count = graph.node_count;
  m.node_ids = graph.node_ids;
  if (sources.empty()) {
    sources.resize(graph.node_count);
    for (int i = 0; i < graph.node_count; ++i) sources[i] = i;
  }
  m.sources = std::move(sources);

  const auto adj = graph.adjacency();
  const int max_edges = graph.hop_cap + 1;
  m.values.resize(m.sources.size());
  m.hops.resize(m.sources.size());
  m.parents.resize(m.sources.size());

  for (std::size_t s = 0; s < m.sources.size(); ++s) {
    const int src = m.sources[s];
    if (src < 0 || src >= graph.node_count) throw InputError("source index out of range");
    if (!dijkstra_source(adj, src, max_edges, m.values[s], m.hops[s], m.parents[s]))
      hop_capped_source(adj, src, max_edges, m.values[s], m.hops[s], m.parents[s]);
    for (int v = 0; v < graph.node_count; ++v)
      if (!std::isfinite(m.values[s][v])) m.unreachable.push_back({src, v});
  }
  return m;
}

DistanceMatrix brute_force_chain_distances(const ProximityGraph& graph) {
  if (graph.node_count > 12) throw ResourceError("brute-force chain enumeration is capped at 12 nodes");
  const auto adj = graph.adjacency();
  const int max_edges = graph.hop_cap + 1;

  DistanceMatrix m;
  m.node_count = graph.node_count;
  m.node_ids = graph.node_ids;
  m.sources.resize(graph.node_count);
  for (int i = 0; i < graph.node_count; ++i) m.sources[i] = i;
  m.values.assign(graph.node_count,
                  std::vector<double>(graph.node_count, std::numeric_limits<double>::infinity()));
  m.hops.assign(graph.node_count, std::vector<int>(graph.node_count, -1));
  m.parents.assign(graph.node_count, std::vector<int>(graph.node_count, -1));

  for (int src = 0; src < graph.node_count; ++src) {
    auto& dist = m.values[src];
    auto& hops = m.hops[src];
    // Visited-state memo (node, edges used) -> best cost; prunes re-walks of
    // dominated prefixes without assuming anything about hop budgets.
    std::vector<std::vector<double>> seen(
        graph.node_count,
        std::vector<double>(max_edges + 1, std::numeric_limits<double>::infinity()));
    std::vector<int> chain{src};
    std::function<void(int, double, int)> dfs = [&](int u, double acc, int edges) {
      if (acc >= seen[u][edges]) return;
      seen[u][edges] = acc;
      if (acc < dist[u] || (acc == dist[u] && (hops[u] < 0 || edges < hops[u]))) {
        dist[u] = acc;
        hops[u] = edges;
        m.parents[src][u] = chain.size() >= 2 ? chain[chain.size() - 2] : -1;
      }
      if (edges == max_edges) return;
      for (auto [v, w] : adj[u]) {
        chain.push_back(v);
        dfs(v, acc + w, edges + 1);
        chain.pop_back();
      }
    };
    dfs(src, 0.0, 0);
    for (int v = 0; v < graph.node_count; ++v)
      if (!std::isfinite(dist[v])) m.unreachable.push_back({src, v});
  }
  return m;
}

MatrixEvalReport evaluate_matrix(const DistanceMatrix& matrix, const DataBundle& bundle,
                                 std::size_t probe_count, std::uint64_t seed) {
  if (!bundle.provenance) throw CapabilityError("evaluate_matrix needs synthetic provenance");
  const auto& prov = *bundle.provenance;

  MatrixEvalReport rep;
  auto id = [&](int k) { return matrix.node_ids.empty() ? k : matrix.node_ids[k]; };
  double sum = 0.0;
  for (std::size_t s = 0; s < matrix.sources.size(); ++s) {
    const int i = matrix.sources[s];
    for (int j = 0; j < matrix.node_count; ++j) {
      if (j == i) continue;
      const double truth = geodesic_distance(prov.spec, prov.x_points[id(i)], prov.x_points[id(j)]);
      if (!std::isfinite(matrix.values[s][j])) {
        ++rep.unreachable_pairs;
        continue;
      }
      const double err = std::abs(matrix.values[s][j] - truth);
      rep.max_error = std::max(rep.max_error, err);
      sum += err;
      ++rep.pairs;
      ++rep.hop_histogram[matrix.hops[s][j]];
    }
  }
  rep.mean_error = rep.pairs ? sum / double(rep.pairs) : 0.0;

  // Prop 4.2(2) shape: the hidden points form an eps2-net at C0 * sqrt(eps1).
  rep.eps2_bound = bundle.params.constant("C0") * std::sqrt(bundle.params.eps1);
  std::mt19937_64 rng(seed);
  for (std::size_t p = 0; p < probe_count; ++p) {
    PointRep probe = sample_uniform_point(prov.spec, rng);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : prov.x_points) best = std::min(best, geodesic_distance(prov.spec, probe, x));
    rep.eps2_worst = std::max(rep.eps2_worst, best);
  }
  rep.eps2_pass = rep.eps2_worst <= rep.eps2_bound;
  return rep;
}

} // namespace recon
