#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vidgraph/common.hpp"

namespace vidgraph {

/// Label vocabulary: ordered (token, id) pairs with ids exactly 0..C-1.
struct LabelMap {
  std::vector<std::pair<std::string, int>> entries;
  std::optional<int> background_id;

  int size() const { return static_cast<int>(entries.size()); }
  const std::string& token(int id) const;
  int id(const std::string& token) const;  // throws if unknown

  void validate() const;

  // one "token<TAB>id" per line
  static LabelMap from_file(const std::string& path);
  void to_file(const std::string& path) const;
};

/// Frame-level class-id sequence for one video (or one chunk of one).
struct FrameSequence {
  std::string video_id;
  std::vector<int> labels;
  bool is_pseudo = false;

  int frames() const { return static_cast<int>(labels.size()); }
};

enum class EdgeKind : int {
  Temporal = 0,
  PositiveSemantic = 1,
  NegativeSemantic = 2,
  SelfLoop = 3,
};

struct Edge {
  int src = 0;
  int dst = 0;
  EdgeKind kind = EdgeKind::Temporal;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Maximal run of identical labels, [start, end] inclusive.
struct Run {
  int label = 0;
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  friend bool operator==(const Run&, const Run&) = default;
};

/// Directed frame graph of one <= chunk-size piece of a video.
/// Edges are stored once, forward in time, sorted by (src, dst, kind).
struct VideoGraph {
  std::string video_id;
  int chunk_index = 0;
  int node_count = 0;
  std::vector<int> labels;
  double gamma = 0.0;
  std::vector<Edge> edges;

  std::vector<Edge> edges_of(EdgeKind kind) const;
  std::size_t count_of(EdgeKind kind) const;
};

/// Dense weighted adjacency; upper triangular plus unit diagonal,
/// off-diagonal values in {0, 1, gamma}.
struct AdjacencyMatrix {
  Matrix a;
  double gamma = 0.0;
};

std::vector<Run> segment_runs(const std::vector<int>& labels);

VideoGraph build_graph(const FrameSequence& seq, double gamma,
                       int chunk_index = 0);

struct ChunkPiece {
  FrameSequence seq;
  Matrix features;  // rows aligned with seq.labels
};

std::vector<ChunkPiece> chunk(const FrameSequence& seq, const Matrix& features,
                              int chunk_size = 500);

AdjacencyMatrix adjacency(const VideoGraph& graph);

// JSON graph file: {video_id, chunk, T, labels, gamma, edges:[[src,dst,kind,w],...]}
std::string graph_to_json(const VideoGraph& graph);
VideoGraph graph_from_json(const std::string& text);
void write_graph(const VideoGraph& graph, const std::string& path);
VideoGraph read_graph(const std::string& path);

// Label file: one token per line, line n = frame n; blank lines forbidden.
std::vector<int> read_label_file(const std::string& path, const LabelMap& map);
void write_label_file(const std::string& path, const std::vector<int>& labels,
                      const LabelMap& map);

}  // namespace vidgraph
