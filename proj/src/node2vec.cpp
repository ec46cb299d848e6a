#include "vidgraph/node2vec.hpp"

#include <algorithm>
#include <cmath>

#include "vidgraph/rng.hpp"

namespace vidgraph {

void WalkConfig::validate() const {
  if (dimension < 1) fail("walk config: dimension must be >= 1");
  if (hops < 1) fail("walk config: hops must be >= 1");
  if (walk_length < 2) fail("walk config: walk length must be >= 2");
  if (walks_per_node < 1 || negative_samples < 1 || epochs < 1)
    fail("walk config: counts must be >= 1");
  if (p <= 0.0 || q <= 0.0) fail("walk config: p and q must be > 0");
}

bool TransitionTable::has_edge(int src, int dst) const {
  const auto& ns = neighbors[static_cast<std::size_t>(src)];
  return std::binary_search(ns.begin(), ns.end(), dst);
}

TransitionTable walk_transition_probs(const VideoGraph& graph,
                                      const WalkConfig& config) {
  config.validate();
  TransitionTable table;
  table.neighbors.resize(static_cast<std::size_t>(graph.node_count));
  table.probs.resize(static_cast<std::size_t>(graph.node_count));

  // graph edges are sorted by (src, dst, kind), so per-node lists come out
  // sorted by dst
  for (const Edge& e : graph.edges) {
    if (e.kind == EdgeKind::SelfLoop) continue;
    const double w = e.weight == 0.0 ? 1.0 : e.weight;
    table.neighbors[static_cast<std::size_t>(e.src)].push_back(e.dst);
    table.probs[static_cast<std::size_t>(e.src)].push_back(w);
  }
  for (auto& probs : table.probs) {
    double total = 0.0;
    for (double w : probs) total += w;
    if (total > 0.0)
      for (double& w : probs) w /= total;
  }
  return table;
}

std::vector<double> biased_step_probs(const TransitionTable& table, int prev,
                                      int cur, const WalkConfig& config) {
  const auto& ns = table.neighbors[static_cast<std::size_t>(cur)];
  const auto& base = table.probs[static_cast<std::size_t>(cur)];
  std::vector<double> biased(base.size());
  double total = 0.0;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    double alpha;
    if (ns[k] == prev)
      alpha = 1.0 / config.p;
    else if (table.has_edge(prev, ns[k]))
      alpha = 1.0;
    else
      alpha = 1.0 / config.q;
    biased[k] = base[k] * alpha;
    total += biased[k];
  }
  if (total > 0.0)
    for (double& w : biased) w /= total;
  return biased;
}

std::vector<std::vector<int>> generate_walks(const VideoGraph& graph,
                                             const TransitionTable& table,
                                             const WalkConfig& config) {
  config.validate();
  const int t = graph.node_count;
  std::vector<std::vector<int>> walks;
  walks.reserve(static_cast<std::size_t>(config.walks_per_node) *
                static_cast<std::size_t>(t));

  for (int r = 0; r < config.walks_per_node; ++r) {
    for (int v = 0; v < t; ++v) {
      const std::uint64_t walk_index =
          static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(t) +
          static_cast<std::uint64_t>(v);
      Rng rng(derive_seed(config.seed, walk_index));
      std::vector<int> walk{v};
      while (static_cast<int>(walk.size()) < config.walk_length) {
        const int cur = walk.back();
        const auto& ns = table.neighbors[static_cast<std::size_t>(cur)];
        if (ns.empty()) break;  // sink: terminate early
        std::size_t pick;
        if (walk.size() == 1) {
          pick = rng.categorical(table.probs[static_cast<std::size_t>(cur)], 1.0);
        } else {
          const auto probs =
              biased_step_probs(table, walk[walk.size() - 2], cur, config);
          pick = rng.categorical(probs, 1.0);
        }
        walk.push_back(ns[pick]);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

std::vector<std::pair<int, int>> context_pairs(const std::vector<int>& walk,
                                               int hops) {
  std::vector<std::pair<int, int>> pairs;
  const int n = static_cast<int>(walk.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - hops);
    const int hi = std::min(n - 1, i + hops);
    for (int j = lo; j <= hi; ++j)
      if (j != i) pairs.emplace_back(i, j);
  }
  return pairs;
}

Matrix train_skipgram(const std::vector<std::vector<int>>& walks,
                      int node_count, const WalkConfig& config) {
  config.validate();
  if (walks.empty()) fail("skip-gram: no walks");
  const int dim = config.dimension;

  // noise distribution: unigram frequency over walks to the 0.75 power
  std::vector<double> noise(static_cast<std::size_t>(node_count), 0.0);
  std::size_t total_positions = 0;
  for (const auto& walk : walks) {
    total_positions += walk.size();
    for (int v : walk) noise[static_cast<std::size_t>(v)] += 1.0;
  }
  double noise_total = 0.0;
  for (double& w : noise) {
    w = std::pow(w, 0.75);
    noise_total += w;
  }

  Rng rng(derive_seed(config.seed, 0x5b3d9a11ULL));
  Matrix input(node_count, dim);
  for (int v = 0; v < node_count; ++v)
    for (int d = 0; d < dim; ++d)
      input(v, d) = (rng.uniform() - 0.5) / dim;
  Matrix output = Matrix::Zero(node_count, dim);

  const std::size_t total_steps =
      static_cast<std::size_t>(config.epochs) * total_positions;
  std::size_t step = 0;
  Vector accum(dim);

  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& walk : walks) {
      for (int i = 0; i < static_cast<int>(walk.size()); ++i, ++step) {
        const double progress =
            static_cast<double>(step) / static_cast<double>(total_steps);
        const double lr = std::max(config.min_learning_rate,
                                   config.learning_rate * (1.0 - progress));
        const int center = walk[static_cast<std::size_t>(i)];
        const int lo = std::max(0, i - config.hops);
        const int hi = std::min(static_cast<int>(walk.size()) - 1, i + config.hops);
        for (int j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const int context = walk[static_cast<std::size_t>(j)];
          accum.setZero();
          // positive pair
          {
            const double score = sigmoid(input.row(center).dot(output.row(context)));
            const double g = (1.0 - score) * lr;
            accum += g * output.row(context).transpose();
            output.row(context) += g * input.row(center);
          }
          // negative samples; draws that hit the positive target are skipped
          for (int s = 0; s < config.negative_samples; ++s) {
            const int neg = static_cast<int>(rng.categorical(noise, noise_total));
            if (neg == context) continue;
            const double score = sigmoid(input.row(center).dot(output.row(neg)));
            const double g = -score * lr;
            accum += g * output.row(neg).transpose();
            output.row(neg) += g * input.row(center);
          }
          input.row(center) += accum.transpose();
        }
      }
    }
  }
  return input;
}

Matrix embed_structure(const VideoGraph& graph, const WalkConfig& config) {
  const auto table = walk_transition_probs(graph, config);
  const auto walks = generate_walks(graph, table, config);
  return train_skipgram(walks, graph.node_count, config);
}

}  // namespace vidgraph
