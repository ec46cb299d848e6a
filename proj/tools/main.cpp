#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "vidgraph/log.hpp"
#include "vidgraph/matrix_io.hpp"
#include "vidgraph/node2vec.hpp"
#include "vidgraph/pipeline.hpp"
#include "vidgraph/semantic.hpp"
#include "vidgraph/synthetic.hpp"
#include "vidgraph/visualize.hpp"

namespace fs = std::filesystem;
using namespace vidgraph;

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "run config JSON file");
  cmd->add_option("--seed", flags.seed, "seed override");
  cmd->add_option("--out", flags.out, "output directory override");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig config;
  if (!flags.config_path.empty())
    config = RunConfig::from_json_file(flags.config_path);
  if (flags.seed) config.seed = *flags.seed;
  if (flags.out) config.out_dir = *flags.out;
  return config;
}

std::vector<int> load_labels(const std::string& path, const LabelMap& map) {
  return read_label_file(path, map);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frame-graph action segmentation pipeline"};
  app.require_subcommand(1);

  // build-graph
  auto* build_cmd = app.add_subcommand(
      "build-graph", "convert a label file into chunked graph JSON files");
  CommonFlags build_flags;
  std::string build_labels, build_map;
  double build_gamma = 0.0;
  int build_chunk = 500;
  build_cmd->add_option("--labels", build_labels, "label file")->required();
  build_cmd->add_option("--label-map", build_map, "label map file")->required();
  build_cmd->add_option("--gamma", build_gamma, "negative edge weight");
  build_cmd->add_option("--chunk-size", build_chunk, "frames per graph");
  add_common(build_cmd, build_flags);

  // embed-structure
  auto* struct_cmd = app.add_subcommand(
      "embed-structure", "structural embedding of a graph JSON file");
  CommonFlags struct_flags;
  std::string struct_graph, struct_out = "structural.bin";
  WalkConfig struct_walk;
  struct_cmd->add_option("--graph", struct_graph, "graph JSON file")->required();
  struct_cmd->add_option("--dim", struct_walk.dimension, "embedding dimension");
  struct_cmd->add_option("--hops", struct_walk.hops, "context window radius");
  struct_cmd->add_option("--walks-per-node", struct_walk.walks_per_node, "");
  struct_cmd->add_option("--walk-length", struct_walk.walk_length, "");
  struct_cmd->add_option("--p", struct_walk.p, "return parameter");
  struct_cmd->add_option("--q", struct_walk.q, "in-out parameter");
  struct_cmd->add_option("--epochs", struct_walk.epochs, "");
  struct_cmd->add_option("--out-file", struct_out, "output matrix path");
  add_common(struct_cmd, struct_flags);

  // embed-semantic
  auto* sem_cmd = app.add_subcommand(
      "embed-semantic", "prompt-based semantic embedding of a label file");
  CommonFlags sem_flags;
  std::string sem_labels, sem_map, sem_backend = "stub";
  std::string sem_template = "ensemble", sem_table, sem_out = "semantic.bin";
  int sem_dim = 512;
  sem_cmd->add_option("--labels", sem_labels, "label file")->required();
  sem_cmd->add_option("--label-map", sem_map, "label map file")->required();
  sem_cmd->add_option("--backend", sem_backend, "stub|table");
  sem_cmd->add_option("--template", sem_template,
                      "prefix|cloze|suffix|ensemble|raw");
  sem_cmd->add_option("--table", sem_table, "embedding table JSON (backend=table)");
  sem_cmd->add_option("--dim", sem_dim, "stub dimension");
  sem_cmd->add_option("--out-file", sem_out, "output matrix path");
  add_common(sem_cmd, sem_flags);

  // train / eval
  auto* train_cmd = app.add_subcommand("train", "train from a run config");
  CommonFlags train_flags;
  add_common(train_cmd, train_flags);

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  CommonFlags eval_flags;
  std::string eval_checkpoint;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint directory")
      ->required();
  add_common(eval_cmd, eval_flags);

  // visualize
  auto* viz_cmd = app.add_subcommand(
      "visualize", "render ground truth vs prediction bars as SVG");
  CommonFlags viz_flags;
  std::string viz_gt, viz_pred, viz_map, viz_out = "segmentation.svg";
  viz_cmd->add_option("--gt", viz_gt, "ground-truth label file")->required();
  viz_cmd->add_option("--pred", viz_pred, "predicted label file")->required();
  viz_cmd->add_option("--label-map", viz_map, "label map file")->required();
  viz_cmd->add_option("--out-file", viz_out, "output SVG path");
  add_common(viz_cmd, viz_flags);

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "run an ablation grid");
  CommonFlags ablate_flags;
  std::string ablate_grid = "edges";
  ablate_cmd->add_option("--grid", ablate_grid, "edges|modalities|hops");
  add_common(ablate_cmd, ablate_flags);

  // gen-synthetic
  auto* gen_cmd = app.add_subcommand(
      "gen-synthetic", "write a synthetic desk-scale dataset + run config");
  CommonFlags gen_flags;
  SynthConfig synth;
  int gen_test_videos = 1;
  gen_cmd->add_option("--videos", synth.videos, "");
  gen_cmd->add_option("--frames", synth.frames, "frames per video");
  gen_cmd->add_option("--classes", synth.classes, "");
  gen_cmd->add_option("--visual-dim", synth.visual_dim, "");
  gen_cmd->add_option("--noise", synth.noise, "feature noise sigma");
  gen_cmd->add_option("--pseudo-noise", synth.pseudo_noise,
                      "fraction of pseudo-label frames corrupted");
  gen_cmd->add_option("--test-videos", gen_test_videos, "videos held out");
  add_common(gen_cmd, gen_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build_cmd) {
      const RunConfig config = resolve_config(build_flags);
      const LabelMap map = LabelMap::from_file(build_map);
      FrameSequence seq;
      seq.video_id = fs::path(build_labels).stem().string();
      seq.labels = load_labels(build_labels, map);
      const Matrix dummy = Matrix::Zero(seq.frames(), 1);
      const std::string out_dir = config.out_dir;
      fs::create_directories(out_dir);
      const auto pieces = chunk(seq, dummy, build_chunk);
      for (std::size_t k = 0; k < pieces.size(); ++k) {
        const VideoGraph g =
            build_graph(pieces[k].seq, build_gamma, static_cast<int>(k));
        const std::string path = out_dir + "/" + seq.video_id + "_" +
                                 std::to_string(k) + ".json";
        write_graph(g, path);
        std::printf("%s\n", path.c_str());
      }
    } else if (*struct_cmd) {
      const RunConfig config = resolve_config(struct_flags);
      struct_walk.seed = config.seed;
      const VideoGraph g = read_graph(struct_graph);
      const Matrix emb = embed_structure(g, struct_walk);
      fs::create_directories(config.out_dir);
      const std::string path = config.out_dir + "/" + struct_out;
      save_matrix_f32(path, emb);
      std::printf("%s\n", path.c_str());
    } else if (*sem_cmd) {
      const RunConfig config = resolve_config(sem_flags);
      const LabelMap map = LabelMap::from_file(sem_map);
      FrameSequence seq;
      seq.video_id = fs::path(sem_labels).stem().string();
      seq.labels = load_labels(sem_labels, map);
      EncoderBackend backend;
      if (sem_backend == "stub")
        backend = EncoderBackend::make_stub(sem_dim, config.seed);
      else if (sem_backend == "table")
        backend = EncoderBackend::make_table(EmbeddingTable::from_file(sem_table));
      else
        fail("unknown backend \"" + sem_backend + "\" (expected stub|table)");
      const Matrix emb = embed_semantic(
          seq, map, prompt_template_from_string(sem_template), backend);
      fs::create_directories(config.out_dir);
      const std::string path = config.out_dir + "/" + sem_out;
      save_matrix_f32(path, emb);
      std::printf("%s\n", path.c_str());
    } else if (*train_cmd) {
      const RunConfig config = resolve_config(train_flags);
      const TrainOutput out = run_train(config);
      std::printf("checkpoint: %s\nloss log: %s\nmanifest: %s\n",
                  out.checkpoint_dir.c_str(), out.loss_log_path.c_str(),
                  out.manifest_path.c_str());
    } else if (*eval_cmd) {
      const RunConfig config = resolve_config(eval_flags);
      const EvalOutput out = run_eval(config, eval_checkpoint);
      std::printf("%s\n", out.report.to_json().c_str());
      std::printf("report: %s\n", out.report_path.c_str());
    } else if (*viz_cmd) {
      const RunConfig config = resolve_config(viz_flags);
      const LabelMap map = LabelMap::from_file(viz_map);
      const auto gt = load_labels(viz_gt, map);
      const auto pred = load_labels(viz_pred, map);
      fs::create_directories(config.out_dir);
      const std::string path = config.out_dir + "/" + viz_out;
      write_segmentation_svg(gt, pred, map, path);
      std::printf("%s\n", path.c_str());
    } else if (*ablate_cmd) {
      const RunConfig config = resolve_config(ablate_flags);
      std::vector<AblationCell> grid;
      if (ablate_grid == "edges") grid = edge_ablation_grid(config);
      else if (ablate_grid == "modalities") grid = modality_ablation_grid(config);
      else if (ablate_grid == "hops") grid = hop_ablation_grid(config);
      else fail("unknown grid \"" + ablate_grid + "\"");
      const auto rows = run_ablation(grid);
      write_ablation_table(rows, config.out_dir);
      for (const AblationRow& row : rows)
        std::printf("%-32s %s\n", row.cell.c_str(),
                    row.ok ? "ok" : ("FAILED: " + row.error).c_str());
    } else if (*gen_cmd) {
      const RunConfig config = resolve_config(gen_flags);
      synth.seed = config.seed;
      const SynthDataset data = generate_synthetic(synth);
      write_synthetic(data, config.out_dir, gen_test_videos);

      // ready-to-run config pointing at the generated files
      RunConfig run;
      run.labels_dir = config.out_dir + "/labels";
      run.features_dir = config.out_dir + "/features";
      run.label_map = config.out_dir + "/label_map.txt";
      run.pseudo_dir = config.out_dir + "/pseudo";
      run.train_split = config.out_dir + "/splits/train.txt";
      run.test_split = config.out_dir + "/splits/test.txt";
      run.chunk_size = std::max(2, synth.frames);
      run.walk.dimension = 16;
      run.walk.walks_per_node = 5;
      run.walk.walk_length = 10;
      run.walk.epochs = 3;
      run.semantic_dim = 16;
      run.hidden = 64;
      run.mlp_hidden = 64;
      run.hyper.epochs = 60;
      run.hyper.batch_size = 8;
      run.seed = config.seed;
      run.out_dir = config.out_dir + "/run";
      const std::string config_path = config.out_dir + "/config.json";
      std::ofstream out(config_path, std::ios::binary);
      out << run.to_json() << "\n";
      std::printf("%s\n", config_path.c_str());
    }
  } catch (const std::exception& e) {
    log::error(e.what());
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
