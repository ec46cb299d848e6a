#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vidgraph/graph.hpp"

namespace vidgraph {

struct WalkConfig {
  int dimension = 128;
  int hops = 4;  // skip-gram context window radius, in walk steps
  double p = 1.0;  // return parameter
  double q = 1.0;  // in-out parameter
  int walks_per_node = 10;
  int walk_length = 20;
  int negative_samples = 5;
  int epochs = 5;
  double learning_rate = 0.025;
  double min_learning_rate = 0.0001;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-node outgoing transition tables. Self-loops are not walkable;
/// zero-weight edges walk with unit pseudo-weight so gamma=0 negative
/// edges still steer walks.
struct TransitionTable {
  // neighbors[v] sorted ascending; probs[v] the normalized unbiased
  // step probabilities (edge weight over total outgoing weight)
  std::vector<std::vector<int>> neighbors;
  std::vector<std::vector<double>> probs;

  int nodes() const { return static_cast<int>(neighbors.size()); }
  bool has_edge(int src, int dst) const;
};

TransitionTable walk_transition_probs(const VideoGraph& graph,
                                      const WalkConfig& config);

// (p,q)-biased second-order step distribution out of `cur` given the node
// walked from; renormalized. First steps use the unbiased table directly.
std::vector<double> biased_step_probs(const TransitionTable& table, int prev,
                                      int cur, const WalkConfig& config);

/// walks_per_node passes over all nodes; walk r of node v is driven by a
/// generator seeded from (config.seed, r * T + v), so the multiset of
/// walks is independent of generation order.
std::vector<std::vector<int>> generate_walks(const VideoGraph& graph,
                                             const TransitionTable& table,
                                             const WalkConfig& config);

// center/context index pairs within `hops` walk positions
std::vector<std::pair<int, int>> context_pairs(const std::vector<int>& walk,
                                               int hops);

/// Skip-gram with negative sampling over node ids; returns the input-vector
/// matrix, node_count x dimension.
Matrix train_skipgram(const std::vector<std::vector<int>>& walks,
                      int node_count, const WalkConfig& config);

Matrix embed_structure(const VideoGraph& graph, const WalkConfig& config);

}  // namespace vidgraph
