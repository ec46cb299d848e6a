#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vidgraph/dgcn.hpp"
#include "vidgraph/graph.hpp"
#include "vidgraph/metrics.hpp"
#include "vidgraph/node2vec.hpp"
#include "vidgraph/semantic.hpp"

namespace vidgraph {

struct EdgeSwitches {
  bool self_loop = true;
  bool positive = true;
  bool negative = true;
  // each enabled semantic edge is kept with probability 1 - random_drop;
  // temporal and self-loop edges are never dropped
  double random_drop = 0.0;
};

struct ModalitySwitches {
  bool visual = true;
  bool structural = true;
  bool semantic = true;
};

struct RunConfig {
  // dataset paths
  std::string labels_dir;
  std::string features_dir;
  std::string label_map;
  std::string pseudo_dir;        // optional: test-time pseudo-label files
  std::string embedding_table;   // optional: semantic Table backend
  std::string train_split;       // optional: file of video ids, one per line
  std::string test_split;

  // graph settings
  double gamma = 0.0;
  int chunk_size = 500;
  EdgeSwitches edges;

  // structural features
  WalkConfig walk;

  // semantic features
  std::string prompt_template = "ensemble";
  int semantic_dim = 512;

  // model + training
  Eigen::Index hidden = 512;
  Eigen::Index mlp_hidden = 512;
  HyperParams hyper;

  // ablation switches
  ModalitySwitches modalities;
  bool strip_semantic_at_eval = false;  // drop semantic edges + zero the block
                                        // on test graphs only
  bool eval_graphs_from_gt = false;     // oracle runs: ignore pseudo-labels

  std::uint64_t seed = 0;
  std::string out_dir = "out";

  static RunConfig from_json_file(const std::string& path);
  static RunConfig from_json(const std::string& text);
  std::string to_json() const;

  void validate_paths() const;
};

struct VideoRecord {
  FrameSequence gt;
  std::optional<std::vector<int>> pseudo_labels;
  Matrix visual;
};

struct Dataset {
  LabelMap label_map;
  std::vector<VideoRecord> videos;  // sorted by video id
};

Dataset ingest(const RunConfig& config);

/// One chunk through the full feature pipeline, ready for the model.
struct PreparedChunk {
  std::string video_id;
  int chunk_index = 0;
  int start_frame = 0;
  VideoGraph graph;
  GraphInstance instance;
  std::vector<int> gt_labels;  // scoring labels for this chunk
};

// graph construction + structural/semantic embedding + fusion for every
// chunk of `record`; eval mode builds graphs (and semantic rows) from
// pseudo-labels when present
std::vector<PreparedChunk> prepare_video(const VideoRecord& record,
                                         const LabelMap& map,
                                         const RunConfig& config,
                                         bool for_eval);

// Table 7 edge ablation applied to a fully built graph
VideoGraph apply_edge_switches(const VideoGraph& graph,
                               const EdgeSwitches& switches,
                               std::uint64_t drop_seed);

struct TrainOutput {
  std::string checkpoint_dir;
  std::string loss_log_path;
  std::string manifest_path;
};

TrainOutput run_train(const RunConfig& config);

struct EvalOutput {
  MetricsReport report;
  std::string report_path;
  std::vector<VideoEval> videos;
};

EvalOutput run_eval(const RunConfig& config, const std::string& checkpoint_dir);

struct AblationCell {
  std::string name;
  RunConfig config;
};

std::vector<AblationCell> edge_ablation_grid(const RunConfig& base);
std::vector<AblationCell> modality_ablation_grid(const RunConfig& base);
std::vector<AblationCell> hop_ablation_grid(const RunConfig& base);

struct AblationRow {
  std::string cell;
  bool ok = false;
  std::string error;
  MetricsReport report;
};

// trains and evaluates every cell with the shared seed; failures are
// recorded and the sweep continues
std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& grid);
void write_ablation_table(const std::vector<AblationRow>& rows,
                          const std::string& dir);

}  // namespace vidgraph
