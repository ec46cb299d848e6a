#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "vidgraph/matrix_io.hpp"
#include "vidgraph/pipeline.hpp"
#include "vidgraph/synthetic.hpp"
#include "vidgraph/visualize.hpp"

using namespace vidgraph;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

SynthConfig tiny_synth() {
  SynthConfig s;
  s.videos = 3;
  s.frames = 60;
  s.classes = 3;
  s.run_min = 8;
  s.run_max = 20;
  s.visual_dim = 8;
  s.noise = 0.4;
  s.pseudo_noise = 0.1;
  s.pseudo_window = 6;
  s.seed = 99;
  return s;
}

RunConfig tiny_run(const std::string& data_dir, const std::string& out_dir) {
  RunConfig c;
  c.labels_dir = data_dir + "/labels";
  c.features_dir = data_dir + "/features";
  c.label_map = data_dir + "/label_map.txt";
  c.pseudo_dir = data_dir + "/pseudo";
  c.train_split = data_dir + "/splits/train.txt";
  c.test_split = data_dir + "/splits/test.txt";
  c.chunk_size = 30;
  c.walk.dimension = 8;
  c.walk.walks_per_node = 3;
  c.walk.walk_length = 8;
  c.walk.epochs = 2;
  c.semantic_dim = 8;
  c.hidden = 16;
  c.mlp_hidden = 16;
  c.hyper.epochs = 8;
  c.hyper.batch_size = 4;
  c.seed = 13;
  c.out_dir = out_dir;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config JSON round-trips and flags override") {
  RunConfig c;
  c.labels_dir = "x/labels";
  c.gamma = 0.25;
  c.edges.negative = false;
  c.walk.hops = 3;
  c.hyper.epochs = 12;
  c.modalities.structural = false;
  c.seed = 42;
  const RunConfig back = RunConfig::from_json(c.to_json());
  CHECK(back.labels_dir == c.labels_dir);
  CHECK(back.gamma == c.gamma);
  CHECK(back.edges.negative == false);
  CHECK(back.walk.hops == 3);
  CHECK(back.hyper.epochs == 12);
  CHECK(back.modalities.structural == false);
  CHECK(back.seed == 42);

  CHECK_THROWS_AS(RunConfig{}.validate_paths(), Error);
}

TEST_CASE("ingest reads a generated dataset and validates it") {
  TempDir dir("vidgraph_ingest_test");
  const SynthDataset data = generate_synthetic(tiny_synth());
  write_synthetic(data, dir.str(), 1);

  RunConfig config = tiny_run(dir.str(), dir.str() + "/out");
  const Dataset loaded = ingest(config);
  CHECK(loaded.videos.size() == 3);
  CHECK(loaded.label_map.size() == 3);
  for (const VideoRecord& rec : loaded.videos) {
    CHECK(rec.gt.frames() == 60);
    CHECK(rec.visual.rows() == 60);
    CHECK(rec.pseudo_labels.has_value());
  }

  SUBCASE("feature row mismatch names the video") {
    // truncate one feature file by rewriting it with fewer rows
    const Matrix m = Matrix::Zero(59, 8);
    save_matrix_f32((dir.path / "features" / "synth_01.bin").string(), m);
    CHECK_THROWS_WITH_AS(ingest(config),
                         "video synth_01: 59 feature rows vs 60 labels", Error);
  }

  SUBCASE("unknown label token is reported") {
    std::ofstream out(dir.path / "labels" / "synth_00.txt",
                      std::ios::app | std::ios::binary);
    out << "not_a_real_action\n";
    out.close();
    CHECK_THROWS_AS(ingest(config), Error);
  }

  SUBCASE("blank label lines are forbidden") {
    std::ofstream out(dir.path / "labels" / "synth_00.txt", std::ios::binary);
    out << "pour\n\npour\n";
    out.close();
    CHECK_THROWS_AS(ingest(config), Error);
  }
}

TEST_CASE("edge switches filter kinds and never touch temporal edges") {
  Rng rng(3);
  const auto labels = oracles::random_runny_labels(rng, 50, 3, 6, 15);
  FrameSequence seq;
  seq.video_id = "v";
  seq.labels = labels;
  const VideoGraph full = build_graph(seq, 0.0);

  EdgeSwitches none;
  none.self_loop = false;
  none.positive = false;
  none.negative = false;
  const VideoGraph bare = apply_edge_switches(full, none, 7);
  CHECK(bare.count_of(EdgeKind::Temporal) == full.count_of(EdgeKind::Temporal));
  CHECK(bare.count_of(EdgeKind::SelfLoop) == 0);
  CHECK(bare.count_of(EdgeKind::PositiveSemantic) == 0);
  CHECK(bare.count_of(EdgeKind::NegativeSemantic) == 0);

  EdgeSwitches drop_half;
  drop_half.random_drop = 0.5;
  const VideoGraph dropped = apply_edge_switches(full, drop_half, 7);
  // temporal and self-loop counts are never altered by the drop
  CHECK(dropped.count_of(EdgeKind::Temporal) == full.count_of(EdgeKind::Temporal));
  CHECK(dropped.count_of(EdgeKind::SelfLoop) == full.count_of(EdgeKind::SelfLoop));
  CHECK(dropped.count_of(EdgeKind::PositiveSemantic) <
        full.count_of(EdgeKind::PositiveSemantic));
  // deterministic under the same seed
  const VideoGraph dropped2 = apply_edge_switches(full, drop_half, 7);
  CHECK(dropped.edges == dropped2.edges);
}

TEST_CASE("train then eval end to end, deterministically") {
  TempDir dir("vidgraph_e2e_test");
  const SynthDataset data = generate_synthetic(tiny_synth());
  write_synthetic(data, dir.str(), 1);

  RunConfig config = tiny_run(dir.str(), dir.str() + "/run1");
  const TrainOutput t1 = run_train(config);
  CHECK(fs::exists(t1.checkpoint_dir + "/manifest.json"));
  CHECK(fs::exists(t1.loss_log_path));
  CHECK(fs::exists(t1.manifest_path));

  // loss log parses as CSV with the documented header
  const std::string log_text = slurp(t1.loss_log_path);
  CHECK(log_text.rfind("epoch,batch,loss_cls,loss_edge,loss_total\n", 0) == 0);

  const EvalOutput e1 = run_eval(config, t1.checkpoint_dir);
  CHECK(fs::exists(e1.report_path));
  CHECK(e1.videos.size() == 1);  // one test video
  CHECK(e1.report.accuracy >= 0.0);

  SUBCASE("identical config and seed reproduce checkpoint and report bytes") {
    RunConfig config2 = tiny_run(dir.str(), dir.str() + "/run2");
    const TrainOutput t2 = run_train(config2);
    for (const auto& entry : fs::directory_iterator(t1.checkpoint_dir)) {
      const std::string name = entry.path().filename().string();
      CHECK(slurp(entry.path().string()) ==
            slurp(t2.checkpoint_dir + "/" + name));
    }
    const EvalOutput e2 = run_eval(config2, t2.checkpoint_dir);
    CHECK(slurp(e1.report_path) == slurp(e2.report_path));
  }

  SUBCASE("checkpoint with mismatched width is rejected") {
    RunConfig wrong = config;
    wrong.modalities.structural = false;  // narrower features
    wrong.out_dir = dir.str() + "/wrong";
    CHECK_THROWS_AS(run_eval(wrong, t1.checkpoint_dir), Error);
  }
}

TEST_CASE("prepared eval chunks use pseudo-labels for graphs and semantics") {
  TempDir dir("vidgraph_pseudo_test");
  SynthConfig synth = tiny_synth();
  synth.pseudo_noise = 0.3;  // make pseudo clearly different from gt
  const SynthDataset data = generate_synthetic(synth);
  write_synthetic(data, dir.str(), 1);

  RunConfig config = tiny_run(dir.str(), dir.str() + "/out");
  const Dataset loaded = ingest(config);
  const VideoRecord& rec = loaded.videos.back();
  REQUIRE(rec.pseudo_labels.has_value());
  REQUIRE(*rec.pseudo_labels != rec.gt.labels);

  const auto eval_chunks = prepare_video(rec, loaded.label_map, config, true);
  std::vector<int> glued;
  for (const auto& c : eval_chunks)
    glued.insert(glued.end(), c.graph.labels.begin(), c.graph.labels.end());
  CHECK(glued == *rec.pseudo_labels);

  // gt labels ride along for scoring
  std::vector<int> gt_glued;
  for (const auto& c : eval_chunks)
    gt_glued.insert(gt_glued.end(), c.gt_labels.begin(), c.gt_labels.end());
  CHECK(gt_glued == rec.gt.labels);

  SUBCASE("oracle flag switches graphs back to ground truth") {
    RunConfig oracle = config;
    oracle.eval_graphs_from_gt = true;
    const auto chunks = prepare_video(rec, loaded.label_map, oracle, true);
    std::vector<int> labels;
    for (const auto& c : chunks)
      labels.insert(labels.end(), c.graph.labels.begin(), c.graph.labels.end());
    CHECK(labels == rec.gt.labels);
  }

  SUBCASE("stripping semantics at eval removes semantic edges only at eval") {
    RunConfig strip = config;
    strip.strip_semantic_at_eval = true;
    const auto train_chunks = prepare_video(rec, loaded.label_map, strip, false);
    const auto eval_stripped = prepare_video(rec, loaded.label_map, strip, true);
    std::size_t train_sem = 0, eval_sem = 0;
    for (const auto& c : train_chunks)
      train_sem += c.graph.count_of(EdgeKind::PositiveSemantic) +
                   c.graph.count_of(EdgeKind::NegativeSemantic);
    for (const auto& c : eval_stripped)
      eval_sem += c.graph.count_of(EdgeKind::PositiveSemantic) +
                  c.graph.count_of(EdgeKind::NegativeSemantic);
    CHECK(train_sem > 0);
    CHECK(eval_sem == 0);
    // semantic feature block is zeroed: fused width unchanged
    CHECK(eval_stripped.front().instance.x.cols() ==
          train_chunks.front().instance.x.cols());
    const Eigen::Index sem_cols = config.semantic_dim;
    const Matrix sem_block = eval_stripped.front().instance.x.rightCols(sem_cols);
    CHECK(sem_block.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("ablation grids match the published row sets") {
  RunConfig base;
  base.out_dir = "grid";

  const auto edges = edge_ablation_grid(base);
  REQUIRE(edges.size() == 8);
  CHECK(edges[0].name == "temporal");
  CHECK(edges[5].name == "all");
  CHECK(edges[6].config.edges.random_drop == 0.5);
  // the temporal cell turns every non-temporal kind off
  CHECK(edges[0].config.edges.self_loop == false);
  CHECK(edges[0].config.edges.positive == false);
  CHECK(edges[0].config.edges.negative == false);

  const auto modalities = modality_ablation_grid(base);
  REQUIRE(modalities.size() == 7);
  CHECK(modalities[0].name == "vis");
  CHECK(modalities[6].name == "vis+str+sem");
  CHECK(modalities[3].config.modalities.semantic == false);

  const auto hops = hop_ablation_grid(base);
  REQUIRE(hops.size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(hops[i].config.walk.hops == static_cast<int>(i) + 2);
}

TEST_CASE("a small ablation sweep runs, records failures, writes tables") {
  TempDir dir("vidgraph_ablate_test");
  const SynthDataset data = generate_synthetic(tiny_synth());
  write_synthetic(data, dir.str(), 1);

  RunConfig base = tiny_run(dir.str(), dir.str() + "/ablate");
  base.hyper.epochs = 3;

  std::vector<AblationCell> grid;
  grid.push_back({"all", base});
  RunConfig broken = base;
  broken.label_map = dir.str() + "/missing.txt";
  broken.out_dir = dir.str() + "/ablate/broken";
  grid.push_back({"broken", broken});

  const auto rows = run_ablation(grid);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].ok);
  CHECK(!rows[1].ok);
  CHECK(!rows[1].error.empty());

  write_ablation_table(rows, dir.str() + "/ablate");
  CHECK(fs::exists(dir.path / "ablate" / "ablation.csv"));
  CHECK(fs::exists(dir.path / "ablate" / "ablation.json"));
  const std::string csv = slurp((dir.path / "ablate" / "ablation.csv").string());
  CHECK(csv.find("all,1,") != std::string::npos);
  CHECK(csv.find("broken,0,") != std::string::npos);
}

TEST_CASE("SVG rendering is deterministic and segment-shaped") {
  LabelMap map;
  map.entries = {{"pour", 0}, {"cut", 1}, {"stir", 2}};

  const std::vector<int> gt{0, 0, 0, 0, 1, 1, 2};
  const std::vector<int> pred{0, 0, 1, 1, 1, 1, 2};

  const std::string svg1 = render_segmentation_svg(gt, pred, map);
  const std::string svg2 = render_segmentation_svg(gt, pred, map);
  CHECK(svg1 == svg2);

  // 3 gt rects + 3 pred rects + 3 legend swatches
  std::size_t rects = 0, at = 0;
  while ((at = svg1.find("<rect", at)) != std::string::npos) {
    ++rects;
    at += 5;
  }
  CHECK(rects == 9);

  SUBCASE("identical sequences render identical bars") {
    const std::string same = render_segmentation_svg(gt, gt, map);
    // the two bars differ only by their fixed y offsets
    CHECK(same.find("y=\"10.00\"") != std::string::npos);
    CHECK(same.find("y=\"60.00\"") != std::string::npos);
  }
  SUBCASE("length mismatch is an error") {
    CHECK_THROWS_AS(render_segmentation_svg({0, 1}, {0}, map), Error);
  }
}

}  // TEST_SUITE
