#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "vidgraph/graph.hpp"

using namespace vidgraph;

namespace {

std::set<std::pair<int, int>> pairs_of(const VideoGraph& g, EdgeKind kind) {
  std::set<std::pair<int, int>> out;
  for (const Edge& e : g.edges_of(kind)) out.insert({e.src, e.dst});
  return out;
}

FrameSequence seq_of(std::vector<int> labels) {
  FrameSequence s;
  s.video_id = "test";
  s.labels = std::move(labels);
  return s;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("segment_runs basic examples") {
  const auto runs = segment_runs({0, 0, 0, 0, 1, 1, 2});
  REQUIRE(runs.size() == 3);
  CHECK(runs[0] == Run{0, 0, 3});
  CHECK(runs[1] == Run{1, 4, 5});
  CHECK(runs[2] == Run{2, 6, 6});

  const auto single = segment_runs({5});
  REQUIRE(single.size() == 1);
  CHECK(single[0] == Run{5, 0, 0});

  CHECK_THROWS_WITH_AS(segment_runs({}), "empty sequence", Error);
}

TEST_CASE("segment_runs matches the scanning oracle on random sequences") {
  Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const auto labels = oracles::random_labels(rng, 50, 4);
    const auto runs = segment_runs(labels);
    const auto ids = oracles::run_ids(labels);
    // runs partition [0, T) and agree with the run-id oracle
    int pos = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      CHECK(runs[k].start == pos);
      for (int t = runs[k].start; t <= runs[k].end; ++t) {
        CHECK(ids[static_cast<std::size_t>(t)] == static_cast<int>(k));
        CHECK(labels[static_cast<std::size_t>(t)] == runs[k].label);
      }
      pos = runs[k].end + 1;
    }
    CHECK(pos == static_cast<int>(labels.size()));
  }
}

TEST_CASE("worked seven-frame example produces the expected edge sets") {
  const VideoGraph g = build_graph(seq_of({0, 0, 0, 0, 1, 1, 2}), 0.0);
  CHECK(pairs_of(g, EdgeKind::PositiveSemantic) ==
        std::set<std::pair<int, int>>{{0, 2}, {0, 3}, {1, 3}});
  CHECK(pairs_of(g, EdgeKind::NegativeSemantic) ==
        std::set<std::pair<int, int>>{{0, 4}, {1, 4}, {2, 4}, {4, 6}});
  CHECK(g.count_of(EdgeKind::Temporal) == 6);
  CHECK(g.count_of(EdgeKind::SelfLoop) == 7);
}

TEST_CASE("single frame gives a lone self-loop") {
  const VideoGraph g = build_graph(seq_of({0}), 0.0);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].kind == EdgeKind::SelfLoop);
  CHECK(g.edges[0].src == 0);
  CHECK(g.edges[0].dst == 0);
}

TEST_CASE("three equal frames") {
  const VideoGraph g = build_graph(seq_of({0, 0, 0}), 0.0);
  CHECK(pairs_of(g, EdgeKind::Temporal) ==
        std::set<std::pair<int, int>>{{0, 1}, {1, 2}});
  CHECK(pairs_of(g, EdgeKind::PositiveSemantic) ==
        std::set<std::pair<int, int>>{{0, 2}});
  CHECK(g.count_of(EdgeKind::SelfLoop) == 3);
  CHECK(g.count_of(EdgeKind::NegativeSemantic) == 0);
}

TEST_CASE("build_graph rejects bad inputs") {
  CHECK_THROWS_AS(build_graph(seq_of({0, 1}), 1.0), Error);
  CHECK_THROWS_AS(build_graph(seq_of({0, 1}), -0.1), Error);
  CHECK_THROWS_AS(build_graph(seq_of({}), 0.0), Error);
}

TEST_CASE("build_graph equals the pairwise brute force on random sequences") {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const auto labels = oracles::random_labels(rng, 120, 6);
    const VideoGraph g = build_graph(seq_of(labels), 0.3);
    const auto expected = oracles::brute_force_semantic(labels);
    CHECK(pairs_of(g, EdgeKind::PositiveSemantic) == expected.positive);
    CHECK(pairs_of(g, EdgeKind::NegativeSemantic) == expected.negative);
    CHECK(g.count_of(EdgeKind::Temporal) == labels.size() - 1);
    CHECK(g.count_of(EdgeKind::SelfLoop) == labels.size());
  }
}

TEST_CASE("edge-count closed forms hold on random sequences") {
  Rng rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    const auto labels = oracles::random_labels(rng, 150, 5);
    const VideoGraph g = build_graph(seq_of(labels), 0.2);
    const auto runs = segment_runs(labels);

    std::size_t expect_pos = 0, expect_neg = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const std::size_t len = static_cast<std::size_t>(runs[k].length());
      if (len >= 2) expect_pos += (len - 1) * (len - 2) / 2;
      if (k + 1 < runs.size()) expect_neg += len - 1;
    }
    CHECK(g.count_of(EdgeKind::PositiveSemantic) == expect_pos);
    CHECK(g.count_of(EdgeKind::NegativeSemantic) == expect_neg);
  }
}

TEST_CASE("edges are duplicate-free and forward in time") {
  Rng rng(99);
  const auto labels = oracles::random_runny_labels(rng, 80, 4, 2, 12);
  const VideoGraph g = build_graph(seq_of(labels), 0.4);
  std::set<std::tuple<int, int, int>> seen;
  for (const Edge& e : g.edges) {
    CHECK(seen.insert({e.src, e.dst, static_cast<int>(e.kind)}).second);
    if (e.kind == EdgeKind::SelfLoop) CHECK(e.src == e.dst);
    else CHECK(e.src < e.dst);
  }
}

TEST_CASE("chunk splits at fixed boundaries") {
  Rng rng(5);
  SUBCASE("1321 frames at 500") {
    const auto labels = oracles::random_labels(rng, 1, 3);
    FrameSequence seq = seq_of(std::vector<int>(1321, 0));
    const Matrix features = Matrix::Zero(1321, 2);
    const auto pieces = chunk(seq, features, 500);
    REQUIRE(pieces.size() == 3);
    CHECK(pieces[0].seq.frames() == 500);
    CHECK(pieces[1].seq.frames() == 500);
    CHECK(pieces[2].seq.frames() == 321);
  }
  SUBCASE("exact fit") {
    const auto pieces =
        chunk(seq_of(std::vector<int>(500, 1)), Matrix::Zero(500, 3), 500);
    REQUIRE(pieces.size() == 1);
    CHECK(pieces[0].seq.frames() == 500);
  }
  SUBCASE("7 frames at 3") {
    const auto pieces =
        chunk(seq_of({0, 1, 2, 3, 4, 5, 6}), Matrix::Zero(7, 1), 3);
    REQUIRE(pieces.size() == 3);
    CHECK(pieces[0].seq.labels == std::vector<int>{0, 1, 2});
    CHECK(pieces[1].seq.labels == std::vector<int>{3, 4, 5});
    CHECK(pieces[2].seq.labels == std::vector<int>{6});
  }
  SUBCASE("row mismatch is an error") {
    CHECK_THROWS_AS(chunk(seq_of({0, 1, 2}), Matrix::Zero(2, 1), 500), Error);
  }
  SUBCASE("concatenation restores the input") {
    const auto labels = oracles::random_labels(rng, 137, 4);
    Matrix features(labels.size(), 2);
    for (Eigen::Index r = 0; r < features.rows(); ++r)
      features.row(r) << static_cast<double>(r), -static_cast<double>(r);
    const auto pieces = chunk(seq_of(labels), features, 50);
    std::vector<int> glued;
    Eigen::Index row = 0;
    for (const auto& piece : pieces) {
      glued.insert(glued.end(), piece.seq.labels.begin(), piece.seq.labels.end());
      for (Eigen::Index r = 0; r < piece.features.rows(); ++r, ++row)
        CHECK(oracles::exact_equal(piece.features.row(r), features.row(row)));
    }
    CHECK(glued == labels);
  }
}

TEST_CASE("chunk graphs never cross chunk boundaries") {
  Rng rng(8);
  const auto labels = oracles::random_runny_labels(rng, 90, 3, 5, 30);
  const auto pieces = chunk(seq_of(labels), Matrix::Zero(90, 1), 40);
  for (const auto& piece : pieces) {
    const VideoGraph g = build_graph(piece.seq, 0.0);
    for (const Edge& e : g.edges) {
      CHECK(e.src >= 0);
      CHECK(e.dst < piece.seq.frames());
    }
  }
}

TEST_CASE("adjacency matches the edge enumeration") {
  SUBCASE("two equal frames") {
    const AdjacencyMatrix adj = adjacency(build_graph(seq_of({0, 0}), 0.0));
    Matrix expected(2, 2);
    expected << 1, 1, 0, 1;
    CHECK(oracles::exact_equal(adj.a, expected));
  }
  SUBCASE("seven-frame example, gamma 0") {
    const AdjacencyMatrix adj =
        adjacency(build_graph(seq_of({0, 0, 0, 0, 1, 1, 2}), 0.0));
    Matrix expected = Matrix::Zero(7, 7);
    for (int i = 0; i < 7; ++i) expected(i, i) = 1;
    for (int i = 0; i < 6; ++i) expected(i, i + 1) = 1;
    for (auto [i, j] : {std::pair{0, 2}, {0, 3}, {1, 3}}) expected(i, j) = 1;
    CHECK(oracles::exact_equal(adj.a, expected));
  }
  SUBCASE("seven-frame example, gamma 0.1") {
    const AdjacencyMatrix adj =
        adjacency(build_graph(seq_of({0, 0, 0, 0, 1, 1, 2}), 0.1));
    for (auto [i, j] : {std::pair{0, 4}, {1, 4}, {2, 4}, {4, 6}})
      CHECK(adj.a(i, j) == 0.1);
    CHECK(adj.a(0, 2) == 1.0);
    CHECK(adj.a(3, 4) == 1.0);
  }
}

TEST_CASE("adjacency is upper triangular with unit diagonal, values in {0,gamma,1}") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const double gamma = 0.25;
    const auto labels = oracles::random_labels(rng, 60, 4);
    const AdjacencyMatrix adj = adjacency(build_graph(seq_of(labels), gamma));
    for (Eigen::Index i = 0; i < adj.a.rows(); ++i) {
      CHECK(adj.a(i, i) == 1.0);
      for (Eigen::Index j = 0; j < adj.a.cols(); ++j) {
        if (j < i && i != j) CHECK(adj.a(i, j) == 0.0);
        const double v = adj.a(i, j);
        CHECK((v == 0.0 || v == gamma || v == 1.0));
      }
    }
  }
}

TEST_CASE("graph serialization is deterministic and round-trips") {
  Rng rng(17);
  const auto labels = oracles::random_labels(rng, 40, 3);
  const VideoGraph g = build_graph(seq_of(labels), 0.1, 2);
  const std::string a = graph_to_json(g);
  const std::string b = graph_to_json(g);
  CHECK(a == b);

  const VideoGraph back = graph_from_json(a);
  CHECK(back.video_id == g.video_id);
  CHECK(back.chunk_index == g.chunk_index);
  CHECK(back.node_count == g.node_count);
  CHECK(back.labels == g.labels);
  CHECK(back.gamma == g.gamma);
  CHECK(back.edges == g.edges);
}

TEST_CASE("label map parses, validates and resolves") {
  LabelMap map;
  map.entries = {{"pour", 0}, {"cut", 1}, {"stir", 2}};
  map.validate();
  CHECK(map.id("cut") == 1);
  CHECK(map.token(2) == "stir");
  CHECK_THROWS_AS(map.id("unknown"), Error);

  LabelMap bad;
  bad.entries = {{"a", 0}, {"b", 2}};
  CHECK_THROWS_AS(bad.validate(), Error);
}

}  // TEST_SUITE
