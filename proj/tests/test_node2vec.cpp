#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "vidgraph/node2vec.hpp"

using namespace vidgraph;

namespace {

FrameSequence seq_of(std::vector<int> labels) {
  FrameSequence s;
  s.video_id = "test";
  s.labels = std::move(labels);
  return s;
}

WalkConfig small_config(std::uint64_t seed) {
  WalkConfig c;
  c.dimension = 16;
  c.hops = 3;
  c.walks_per_node = 5;
  c.walk_length = 10;
  c.epochs = 2;
  c.seed = seed;
  return c;
}

double mean_cosine(const Matrix& emb, const std::vector<int>& a,
                   const std::vector<int>& b) {
  double total = 0.0;
  int count = 0;
  for (int i : a)
    for (int j : b) {
      if (i == j) continue;
      const double denom = emb.row(i).norm() * emb.row(j).norm();
      if (denom > 0.0) {
        total += emb.row(i).dot(emb.row(j)) / denom;
        ++count;
      }
    }
  return total / count;
}

}  // namespace

TEST_SUITE("node2vec") {

TEST_CASE("transition tables follow edge weights") {
  WalkConfig config = small_config(1);

  SUBCASE("uniform over two unit-weight out-edges") {
    VideoGraph g;
    g.node_count = 3;
    g.labels = {0, 0, 0};
    g.edges = {{0, 1, EdgeKind::PositiveSemantic, 1.0},
               {0, 2, EdgeKind::PositiveSemantic, 1.0}};
    const auto table = walk_transition_probs(g, config);
    REQUIRE(table.neighbors[0] == std::vector<int>{1, 2});
    CHECK(table.probs[0][0] == doctest::Approx(0.5));
    CHECK(table.probs[0][1] == doctest::Approx(0.5));
  }

  SUBCASE("weights 1 and 3 give 0.25 / 0.75") {
    VideoGraph g;
    g.node_count = 3;
    g.labels = {0, 0, 0};
    g.edges = {{0, 1, EdgeKind::Temporal, 1.0},
               {0, 2, EdgeKind::NegativeSemantic, 3.0}};
    const auto table = walk_transition_probs(g, config);
    CHECK(table.probs[0][0] == doctest::Approx(0.25));
    CHECK(table.probs[0][1] == doctest::Approx(0.75));
  }

  SUBCASE("zero-weight negative edge walks with unit pseudo-weight") {
    VideoGraph g;
    g.node_count = 3;
    g.labels = {0, 0, 1};
    g.edges = {{0, 1, EdgeKind::Temporal, 1.0},
               {0, 2, EdgeKind::NegativeSemantic, 0.0}};
    const auto table = walk_transition_probs(g, config);
    CHECK(table.probs[0][0] == doctest::Approx(0.5));
    CHECK(table.probs[0][1] == doctest::Approx(0.5));
  }

  SUBCASE("self-loops are not walkable") {
    const VideoGraph g = build_graph(seq_of({0}), 0.0);
    const auto table = walk_transition_probs(g, config);
    CHECK(table.neighbors[0].empty());
  }
}

TEST_CASE("walks on a single node stay put") {
  const VideoGraph g = build_graph(seq_of({0}), 0.0);
  const WalkConfig config = small_config(3);
  const auto walks = generate_walks(g, walk_transition_probs(g, config), config);
  REQUIRE(walks.size() == static_cast<std::size_t>(config.walks_per_node));
  for (const auto& walk : walks) CHECK(walk == std::vector<int>{0});
}

TEST_CASE("forced path graph walks are deterministic") {
  // three different labels, adjacent runs only: pure temporal chain
  const VideoGraph g = build_graph(seq_of({0, 1, 2}), 0.0);
  WalkConfig config = small_config(4);
  config.walk_length = 5;
  const auto walks = generate_walks(g, walk_transition_probs(g, config), config);
  for (std::size_t w = 0; w < walks.size(); ++w) {
    if (walks[w].front() == 0) CHECK(walks[w] == std::vector<int>{0, 1, 2});
    if (walks[w].front() == 1) CHECK(walks[w] == std::vector<int>{1, 2});
    if (walks[w].front() == 2) CHECK(walks[w] == std::vector<int>{2});
  }
}

TEST_CASE("walks are reproducible and valid") {
  Rng rng(55);
  const auto labels = oracles::random_runny_labels(rng, 60, 3, 5, 20);
  const VideoGraph g = build_graph(seq_of(labels), 0.0);
  const WalkConfig config = small_config(99);
  const auto table = walk_transition_probs(g, config);
  const auto walks1 = generate_walks(g, table, config);
  const auto walks2 = generate_walks(g, table, config);
  CHECK(walks1 == walks2);

  for (const auto& walk : walks1) {
    REQUIRE(!walk.empty());
    for (std::size_t i = 0; i + 1 < walk.size(); ++i)
      CHECK(table.has_edge(walk[i], walk[i + 1]));
  }
  CHECK(walks1.size() ==
        static_cast<std::size_t>(config.walks_per_node) * g.node_count);
  for (int r = 0; r < config.walks_per_node; ++r)
    for (int v = 0; v < g.node_count; ++v)
      CHECK(walks1[static_cast<std::size_t>(r) * g.node_count + v].front() == v);
}

TEST_CASE("context pairs stay within the hop window") {
  const std::vector<int> walk{3, 1, 4, 1, 5, 9, 2, 6};
  const auto pairs = context_pairs(walk, 2);
  for (const auto& [i, j] : pairs) {
    CHECK(i != j);
    CHECK(std::abs(i - j) <= 2);
  }
  // every in-window pair is present exactly once
  std::set<std::pair<int, int>> seen(pairs.begin(), pairs.end());
  CHECK(seen.size() == pairs.size());
  int expected = 0;
  for (int i = 0; i < 8; ++i)
    for (int j = std::max(0, i - 2); j <= std::min(7, i + 2); ++j)
      if (i != j) ++expected;
  CHECK(static_cast<int>(pairs.size()) == expected);
}

TEST_CASE("skip-gram embeddings: shape and determinism") {
  Rng rng(7);
  const auto labels = oracles::random_runny_labels(rng, 40, 3, 6, 15);
  const VideoGraph g = build_graph(seq_of(labels), 0.0);
  const WalkConfig config = small_config(12);
  const Matrix a = embed_structure(g, config);
  const Matrix b = embed_structure(g, config);
  CHECK(a.rows() == g.node_count);
  CHECK(a.cols() == config.dimension);
  CHECK(oracles::exact_equal(a, b));  // bitwise
  CHECK(a.allFinite());
}

TEST_CASE("isolated cliques separate in embedding space") {
  // two 6-node cliques with no connecting edges
  VideoGraph g;
  g.node_count = 12;
  g.labels.assign(12, 0);
  for (int base : {0, 6})
    for (int i = base; i < base + 6; ++i)
      for (int j = i + 1; j < base + 6; ++j)
        g.edges.push_back({i, j, EdgeKind::PositiveSemantic, 1.0});
  WalkConfig config = small_config(21);
  config.epochs = 5;
  const Matrix emb = embed_structure(g, config);

  const std::vector<int> left{0, 1, 2, 3, 4, 5}, right{6, 7, 8, 9, 10, 11};
  const double intra =
      0.5 * (mean_cosine(emb, left, left) + mean_cosine(emb, right, right));
  const double inter = mean_cosine(emb, left, right);
  CHECK(intra > inter);
}

TEST_CASE("run-structured graphs separate runs in most seeded trials") {
  int successes = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(1000 + static_cast<std::uint64_t>(trial));
    // 2-4 whole runs of length >= 10 each (the property's precondition)
    std::vector<int> labels;
    const int n_runs = 2 + static_cast<int>(rng.uniform_int(3));
    int prev = -1;
    for (int r = 0; r < n_runs; ++r) {
      int cls = static_cast<int>(rng.uniform_int(3));
      while (cls == prev) cls = static_cast<int>(rng.uniform_int(3));
      const int len = 12 + static_cast<int>(rng.uniform_int(9));
      labels.insert(labels.end(), static_cast<std::size_t>(len), cls);
      prev = cls;
    }
    const auto runs = segment_runs(labels);
    const VideoGraph g = build_graph(seq_of(labels), 0.0);
    WalkConfig config = small_config(500 + static_cast<std::uint64_t>(trial));
    config.walks_per_node = 8;
    config.walk_length = 15;
    config.epochs = 5;
    const Matrix emb = embed_structure(g, config);

    double intra = 0.0, inter = 0.0;
    int intra_n = 0, inter_n = 0;
    for (std::size_t a = 0; a < runs.size(); ++a) {
      std::vector<int> na;
      for (int i = runs[a].start; i <= runs[a].end; ++i) na.push_back(i);
      intra += mean_cosine(emb, na, na);
      ++intra_n;
      for (std::size_t b = a + 1; b < runs.size(); ++b) {
        std::vector<int> nb;
        for (int i = runs[b].start; i <= runs[b].end; ++i) nb.push_back(i);
        inter += mean_cosine(emb, na, nb);
        ++inter_n;
      }
    }
    if (intra / intra_n > inter / inter_n) ++successes;
  }
  CHECK(successes >= 95);
}

TEST_CASE("seven-frame example embeds to a finite matrix") {
  const VideoGraph g = build_graph(seq_of({0, 0, 0, 0, 1, 1, 2}), 0.0);
  WalkConfig config;
  config.seed = 3;
  const Matrix emb = embed_structure(g, config);
  CHECK(emb.rows() == 7);
  CHECK(emb.cols() == 128);
  CHECK(emb.allFinite());
}

TEST_CASE("config validation") {
  WalkConfig bad;
  bad.dimension = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = WalkConfig{};
  bad.walk_length = 1;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = WalkConfig{};
  bad.p = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

}  // TEST_SUITE
