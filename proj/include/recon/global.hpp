#pragma once

#include <functional>
#include <map>

#include "recon/local.hpp"

namespace recon {

struct GraphEdge {
  int i = 0;
  int j = 0;
  double weight = 0.0;
  double margin = 0.0; // threshold minus sup-distance at admission time
};

struct ProximityGraph {
  int node_count = 0;
  std::vector<GraphEdge> edges;
  double rho = 0.0;
  int hop_cap = 0; // N_max = ceil(1 + lambda/rho); chains may use N_max+1 edges
  std::vector<int> node_ids;        // graph node -> bundle vector index; empty = identity
  std::vector<int> failed_charts;   // centers whose chart construction failed
  std::vector<std::pair<int, int>> dropped_pairs; // admissible pairs with no usable chart

  std::vector<std::vector<std::pair<int, double>>> adjacency() const;
};

// Charts built lazily per center; a failed chart is cached as absent.
class ChartCache {
 public:
  ChartCache(const BundleView& view, const SurrogateYDistances& da) : view_(view), da_(&da) {}

  const LocalChart* get(int i0);
  const std::vector<int>& failures() const { return failures_; }

 private:
  BundleView view_;
  const SurrogateYDistances* da_;
  std::map<int, LocalChart> charts_;
  std::map<int, bool> attempted_;
  std::vector<int> failures_;
};

// nodes restricts the graph to a subset of bundle vectors (empty = all);
// witnesses outside the subset still back the surrogate distances and charts.
ProximityGraph build_graph(const BundleView& view, const SurrogateYDistances& da, ChartCache& cache,
                           const std::vector<int>& nodes = {});

struct DistanceMatrix {
  int node_count = 0;
  std::vector<int> node_ids; // graph node -> bundle vector index; empty = identity
  std::vector<int> sources; // row s corresponds to node sources[s]
  std::vector<std::vector<double>> values; // infinity = unreachable within the hop cap
  std::vector<std::vector<int>> hops;      // edges used; -1 unreachable
  std::vector<std::vector<int>> parents;   // witness tree per source; -1 at roots/unreachable
  std::vector<std::pair<int, int>> unreachable;

  double value(int s, int j) const { return values[s][j]; }
  std::vector<int> chain(int s, int j) const; // node chain source..j, empty if unreachable
};

// Hop-capped chain minimization from each source (default: all nodes).
DistanceMatrix chain_distances(const ProximityGraph& graph, std::vector<int> sources = {});

// Exhaustive chain enumeration, exponential; the small-instance test oracle.
DistanceMatrix brute_force_chain_distances(const ProximityGraph& graph);

struct MatrixEvalReport {
  double max_error = 0.0;
  double mean_error = 0.0;
  std::size_t pairs = 0;
  std::size_t unreachable_pairs = 0;
  std::map<int, std::size_t> hop_histogram;
  double eps2_worst = 0.0; // worst probe-to-X distance
  double eps2_bound = 0.0; // C0 * eps1^{1/2}
  bool eps2_pass = false;
};

MatrixEvalReport evaluate_matrix(const DistanceMatrix& matrix, const DataBundle& bundle,
                                 std::size_t probe_count, std::uint64_t seed);

} // namespace recon
