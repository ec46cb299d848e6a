#include "vidgraph/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace vidgraph {

const std::string& LabelMap::token(int id) const {
  for (const auto& [tok, i] : entries)
    if (i == id) return tok;
  fail("label map: unknown class id " + std::to_string(id));
}

int LabelMap::id(const std::string& token) const {
  for (const auto& [tok, i] : entries)
    if (tok == token) return i;
  fail("label map: unknown label token \"" + token + "\"");
}

void LabelMap::validate() const {
  const int c = size();
  std::vector<bool> seen(static_cast<std::size_t>(c), false);
  for (const auto& [tok, id] : entries) {
    if (id < 0 || id >= c) fail("label map: id " + std::to_string(id) + " out of range 0.." + std::to_string(c - 1));
    if (seen[static_cast<std::size_t>(id)]) fail("label map: duplicate id " + std::to_string(id));
    seen[static_cast<std::size_t>(id)] = true;
    for (const auto& [tok2, id2] : entries)
      if (&tok != &tok2 && tok == tok2) fail("label map: duplicate token \"" + tok + "\"");
  }
  if (background_id && (*background_id < 0 || *background_id >= c))
    fail("label map: background id out of range");
}

LabelMap LabelMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open label map file: " + path);
  LabelMap map;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      fail(path + ":" + std::to_string(lineno) + ": expected \"token<TAB>id\"");
    map.entries.emplace_back(line.substr(0, tab), std::stoi(line.substr(tab + 1)));
  }
  map.validate();
  return map;
}

void LabelMap::to_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail("cannot write label map file: " + path);
  for (const auto& [tok, id] : entries) out << tok << '\t' << id << '\n';
}

std::vector<Edge> VideoGraph::edges_of(EdgeKind kind) const {
  std::vector<Edge> out;
  for (const Edge& e : edges)
    if (e.kind == kind) out.push_back(e);
  return out;
}

std::size_t VideoGraph::count_of(EdgeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(edges.begin(), edges.end(),
                    [&](const Edge& e) { return e.kind == kind; }));
}

std::vector<Run> segment_runs(const std::vector<int>& labels) {
  if (labels.empty()) fail("empty sequence");
  std::vector<Run> runs;
  int start = 0;
  for (int t = 1; t <= static_cast<int>(labels.size()); ++t) {
    if (t == static_cast<int>(labels.size()) || labels[static_cast<std::size_t>(t)] != labels[static_cast<std::size_t>(start)]) {
      runs.push_back({labels[static_cast<std::size_t>(start)], start, t - 1});
      start = t;
    }
  }
  return runs;
}

static void sort_edges(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.src != b.src) return a.src < b.src;
    if (a.dst != b.dst) return a.dst < b.dst;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });
}

VideoGraph build_graph(const FrameSequence& seq, double gamma, int chunk_index) {
  if (gamma < 0.0 || gamma >= 1.0) fail("gamma must be in [0, 1)");
  const auto runs = segment_runs(seq.labels);  // throws on empty
  const int t = seq.frames();

  VideoGraph g;
  g.video_id = seq.video_id;
  g.chunk_index = chunk_index;
  g.node_count = t;
  g.labels = seq.labels;
  g.gamma = gamma;

  for (int i = 0; i + 1 < t; ++i)
    g.edges.push_back({i, i + 1, EdgeKind::Temporal, 1.0});

  // positive semantic: within each run, all pairs at distance >= 2
  for (const Run& r : runs)
    for (int i = r.start; i <= r.end; ++i)
      for (int j = i + 2; j <= r.end; ++j)
        g.edges.push_back({i, j, EdgeKind::PositiveSemantic, 1.0});

  // negative semantic: previous-run nodes to the next run's first node,
  // adjacent pair excluded
  for (std::size_t k = 0; k + 1 < runs.size(); ++k) {
    const int boundary = runs[k + 1].start;
    for (int i = runs[k].start; i <= runs[k].end; ++i)
      if (boundary - i >= 2)
        g.edges.push_back({i, boundary, EdgeKind::NegativeSemantic, gamma});
  }

  for (int i = 0; i < t; ++i)
    g.edges.push_back({i, i, EdgeKind::SelfLoop, 1.0});

  sort_edges(g.edges);
  return g;
}

std::vector<ChunkPiece> chunk(const FrameSequence& seq, const Matrix& features,
                              int chunk_size) {
  if (chunk_size < 2) fail("chunk size must be >= 2");
  if (seq.labels.empty()) fail("empty sequence");
  if (features.rows() != seq.frames())
    fail("feature row count " + std::to_string(features.rows()) +
         " does not match frame count " + std::to_string(seq.frames()) +
         " for video " + seq.video_id);

  std::vector<ChunkPiece> pieces;
  const int t = seq.frames();
  for (int start = 0; start < t; start += chunk_size) {
    const int len = std::min(chunk_size, t - start);
    ChunkPiece piece;
    piece.seq.video_id = seq.video_id;
    piece.seq.is_pseudo = seq.is_pseudo;
    piece.seq.labels.assign(seq.labels.begin() + start,
                            seq.labels.begin() + start + len);
    piece.features = features.middleRows(start, len);
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

AdjacencyMatrix adjacency(const VideoGraph& graph) {
  AdjacencyMatrix adj;
  adj.gamma = graph.gamma;
  adj.a = Matrix::Zero(graph.node_count, graph.node_count);
  for (const Edge& e : graph.edges) adj.a(e.src, e.dst) = e.weight;
  return adj;
}

std::string graph_to_json(const VideoGraph& graph) {
  nlohmann::ordered_json j;
  j["video_id"] = graph.video_id;
  j["chunk"] = graph.chunk_index;
  j["T"] = graph.node_count;
  j["labels"] = graph.labels;
  j["gamma"] = graph.gamma;
  auto& edges = j["edges"] = nlohmann::ordered_json::array();
  for (const Edge& e : graph.edges)
    edges.push_back({e.src, e.dst, static_cast<int>(e.kind), e.weight});
  return j.dump(2) + "\n";
}

VideoGraph graph_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  VideoGraph g;
  g.video_id = j.at("video_id").get<std::string>();
  g.chunk_index = j.at("chunk").get<int>();
  g.node_count = j.at("T").get<int>();
  g.labels = j.at("labels").get<std::vector<int>>();
  g.gamma = j.at("gamma").get<double>();
  for (const auto& row : j.at("edges")) {
    Edge e;
    e.src = row.at(0).get<int>();
    e.dst = row.at(1).get<int>();
    e.kind = static_cast<EdgeKind>(row.at(2).get<int>());
    e.weight = row.at(3).get<double>();
    g.edges.push_back(e);
  }
  return g;
}

void write_graph(const VideoGraph& graph, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write graph file: " + path);
  out << graph_to_json(graph);
}

VideoGraph read_graph(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open graph file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return graph_from_json(ss.str());
}

std::vector<int> read_label_file(const std::string& path, const LabelMap& map) {
  std::ifstream in(path);
  if (!in) fail("cannot open label file: " + path);
  std::vector<int> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty())
      fail(path + ":" + std::to_string(lineno) + ": blank lines forbidden in label files");
    labels.push_back(map.id(line));
  }
  if (labels.empty()) fail("empty label file: " + path);
  return labels;
}

void write_label_file(const std::string& path, const std::vector<int>& labels,
                      const LabelMap& map) {
  std::ofstream out(path);
  if (!out) fail("cannot write label file: " + path);
  for (int id : labels) out << map.token(id) << '\n';
}

}  // namespace vidgraph
