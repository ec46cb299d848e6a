#include "vidgraph/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vidgraph/log.hpp"
#include "vidgraph/matrix_io.hpp"
#include "vidgraph/visualize.hpp"

namespace vidgraph {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::uint64_t stable_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void maybe_get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  RunConfig c;
  maybe_get(j, "labels_dir", c.labels_dir);
  maybe_get(j, "features_dir", c.features_dir);
  maybe_get(j, "label_map", c.label_map);
  maybe_get(j, "pseudo_dir", c.pseudo_dir);
  maybe_get(j, "embedding_table", c.embedding_table);
  maybe_get(j, "train_split", c.train_split);
  maybe_get(j, "test_split", c.test_split);
  maybe_get(j, "gamma", c.gamma);
  maybe_get(j, "chunk_size", c.chunk_size);
  if (j.contains("edges")) {
    const auto& e = j.at("edges");
    maybe_get(e, "self_loop", c.edges.self_loop);
    maybe_get(e, "positive", c.edges.positive);
    maybe_get(e, "negative", c.edges.negative);
    maybe_get(e, "random_drop", c.edges.random_drop);
  }
  if (j.contains("walk")) {
    const auto& w = j.at("walk");
    maybe_get(w, "dimension", c.walk.dimension);
    maybe_get(w, "hops", c.walk.hops);
    maybe_get(w, "p", c.walk.p);
    maybe_get(w, "q", c.walk.q);
    maybe_get(w, "walks_per_node", c.walk.walks_per_node);
    maybe_get(w, "walk_length", c.walk.walk_length);
    maybe_get(w, "negative_samples", c.walk.negative_samples);
    maybe_get(w, "epochs", c.walk.epochs);
    maybe_get(w, "learning_rate", c.walk.learning_rate);
  }
  maybe_get(j, "prompt_template", c.prompt_template);
  maybe_get(j, "semantic_dim", c.semantic_dim);
  std::int64_t hidden = c.hidden, mlp_hidden = c.mlp_hidden;
  maybe_get(j, "hidden", hidden);
  maybe_get(j, "mlp_hidden", mlp_hidden);
  c.hidden = hidden;
  c.mlp_hidden = mlp_hidden;
  if (j.contains("hyper")) {
    const auto& h = j.at("hyper");
    maybe_get(h, "learning_rate", c.hyper.learning_rate);
    maybe_get(h, "weight_decay", c.hyper.weight_decay);
    maybe_get(h, "dropout", c.hyper.dropout);
    maybe_get(h, "batch_size", c.hyper.batch_size);
    maybe_get(h, "epochs", c.hyper.epochs);
    maybe_get(h, "lambda_edge", c.hyper.lambda_edge);
    maybe_get(h, "leaky_slope", c.hyper.leaky_slope);
  }
  if (j.contains("modalities")) {
    const auto& m = j.at("modalities");
    maybe_get(m, "visual", c.modalities.visual);
    maybe_get(m, "structural", c.modalities.structural);
    maybe_get(m, "semantic", c.modalities.semantic);
  }
  maybe_get(j, "strip_semantic_at_eval", c.strip_semantic_at_eval);
  maybe_get(j, "eval_graphs_from_gt", c.eval_graphs_from_gt);
  maybe_get(j, "seed", c.seed);
  maybe_get(j, "out_dir", c.out_dir);
  return c;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string RunConfig::to_json() const {
  ordered_json j;
  j["labels_dir"] = labels_dir;
  j["features_dir"] = features_dir;
  j["label_map"] = label_map;
  j["pseudo_dir"] = pseudo_dir;
  j["embedding_table"] = embedding_table;
  j["train_split"] = train_split;
  j["test_split"] = test_split;
  j["gamma"] = gamma;
  j["chunk_size"] = chunk_size;
  j["edges"] = {{"self_loop", edges.self_loop},
                {"positive", edges.positive},
                {"negative", edges.negative},
                {"random_drop", edges.random_drop}};
  j["walk"] = {{"dimension", walk.dimension},
               {"hops", walk.hops},
               {"p", walk.p},
               {"q", walk.q},
               {"walks_per_node", walk.walks_per_node},
               {"walk_length", walk.walk_length},
               {"negative_samples", walk.negative_samples},
               {"epochs", walk.epochs},
               {"learning_rate", walk.learning_rate}};
  j["prompt_template"] = prompt_template;
  j["semantic_dim"] = semantic_dim;
  j["hidden"] = static_cast<std::int64_t>(hidden);
  j["mlp_hidden"] = static_cast<std::int64_t>(mlp_hidden);
  j["hyper"] = {{"learning_rate", hyper.learning_rate},
                {"weight_decay", hyper.weight_decay},
                {"dropout", hyper.dropout},
                {"batch_size", hyper.batch_size},
                {"epochs", hyper.epochs},
                {"lambda_edge", hyper.lambda_edge},
                {"leaky_slope", hyper.leaky_slope}};
  j["modalities"] = {{"visual", modalities.visual},
                     {"structural", modalities.structural},
                     {"semantic", modalities.semantic}};
  j["strip_semantic_at_eval"] = strip_semantic_at_eval;
  j["eval_graphs_from_gt"] = eval_graphs_from_gt;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  return j.dump(2);
}

void RunConfig::validate_paths() const {
  for (const std::string& p : {labels_dir, features_dir, label_map})
    if (p.empty() || !fs::exists(p))
      fail("config path does not exist: \"" + p + "\"");
  for (const std::string& p :
       {pseudo_dir, embedding_table, train_split, test_split})
    if (!p.empty() && !fs::exists(p))
      fail("config path does not exist: \"" + p + "\"");
}

namespace {

std::vector<std::string> read_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open split file: " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::string feature_path(const RunConfig& config, const std::string& video_id) {
  const fs::path bin = fs::path(config.features_dir) / (video_id + ".bin");
  if (fs::exists(bin)) return bin.string();
  const fs::path tsv = fs::path(config.features_dir) / (video_id + ".tsv");
  if (fs::exists(tsv)) return tsv.string();
  fail("missing feature file for video " + video_id + " under " +
       config.features_dir);
}

}  // namespace

Dataset ingest(const RunConfig& config) {
  config.validate_paths();
  Dataset data;
  data.label_map = LabelMap::from_file(config.label_map);

  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(config.labels_dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path p = entry.path();
    if (p.extension() != ".txt") continue;
    ids.push_back(p.stem().string());
  }
  std::sort(ids.begin(), ids.end());
  if (ids.empty()) fail("no label files under " + config.labels_dir);

  for (const std::string& id : ids) {
    VideoRecord rec;
    rec.gt.video_id = id;
    rec.gt.labels = read_label_file(
        (fs::path(config.labels_dir) / (id + ".txt")).string(), data.label_map);
    rec.visual = load_matrix(feature_path(config, id));
    if (rec.visual.rows() != rec.gt.frames())
      fail("video " + id + ": " + std::to_string(rec.visual.rows()) +
           " feature rows vs " + std::to_string(rec.gt.frames()) + " labels");
    if (!config.pseudo_dir.empty()) {
      const fs::path p = fs::path(config.pseudo_dir) / (id + ".txt");
      if (fs::exists(p)) {
        auto pseudo = read_label_file(p.string(), data.label_map);
        if (static_cast<int>(pseudo.size()) != rec.gt.frames())
          fail("video " + id + ": pseudo-label length mismatch");
        rec.pseudo_labels = std::move(pseudo);
      }
    }
    data.videos.push_back(std::move(rec));
  }
  log::info("ingested " + std::to_string(data.videos.size()) + " videos, " +
            std::to_string(data.label_map.size()) + " classes");
  return data;
}

VideoGraph apply_edge_switches(const VideoGraph& graph,
                               const EdgeSwitches& switches,
                               std::uint64_t drop_seed) {
  VideoGraph out = graph;
  out.edges.clear();
  Rng rng(drop_seed);
  for (const Edge& e : graph.edges) {
    bool keep = true;
    bool droppable = false;
    switch (e.kind) {
      case EdgeKind::Temporal: break;
      case EdgeKind::SelfLoop: keep = switches.self_loop; break;
      case EdgeKind::PositiveSemantic:
        keep = switches.positive;
        droppable = true;
        break;
      case EdgeKind::NegativeSemantic:
        keep = switches.negative;
        droppable = true;
        break;
    }
    if (keep && droppable && switches.random_drop > 0.0 &&
        rng.uniform() < switches.random_drop)
      keep = false;
    if (keep) out.edges.push_back(e);
  }
  return out;
}

namespace {

EncoderBackend make_backend(const RunConfig& config) {
  if (!config.embedding_table.empty())
    return EncoderBackend::make_table(
        EmbeddingTable::from_file(config.embedding_table));
  return EncoderBackend::make_stub(config.semantic_dim, config.seed);
}

}  // namespace

std::vector<PreparedChunk> prepare_video(const VideoRecord& record,
                                         const LabelMap& map,
                                         const RunConfig& config,
                                         bool for_eval) {
  const bool use_pseudo =
      for_eval && record.pseudo_labels.has_value() && !config.eval_graphs_from_gt;
  FrameSequence source = record.gt;
  if (use_pseudo) {
    source.labels = *record.pseudo_labels;
    source.is_pseudo = true;
  }

  EdgeSwitches switches = config.edges;
  const bool strip = for_eval && config.strip_semantic_at_eval;
  if (strip) {
    switches.positive = false;
    switches.negative = false;
  }

  const EncoderBackend backend = make_backend(config);
  const PromptTemplate tmpl =
      prompt_template_from_string(config.prompt_template);

  std::vector<PreparedChunk> chunks;
  const auto pieces = chunk(source, record.visual, config.chunk_size);
  int start_frame = 0;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    const ChunkPiece& piece = pieces[k];
    PreparedChunk out;
    out.video_id = record.gt.video_id;
    out.chunk_index = static_cast<int>(k);
    out.start_frame = start_frame;

    const std::uint64_t chunk_seed = derive_seed(
        config.seed, stable_hash(record.gt.video_id) ^ (0x9e37u + k));
    VideoGraph full = build_graph(piece.seq, config.gamma, out.chunk_index);
    out.graph = apply_edge_switches(full, switches, chunk_seed);

    std::vector<const Matrix*> blocks;
    Matrix structural, semantic;
    if (config.modalities.visual) blocks.push_back(&piece.features);
    if (config.modalities.structural) {
      WalkConfig walk = config.walk;
      walk.seed = derive_seed(chunk_seed, 0x57ULL);
      structural = embed_structure(out.graph, walk);
      blocks.push_back(&structural);
    }
    if (config.modalities.semantic) {
      semantic = embed_semantic(piece.seq, map, tmpl, backend);
      if (strip) semantic.setZero();
      blocks.push_back(&semantic);
    }
    Matrix fused = concat_columns(blocks);

    out.instance = make_instance(out.graph, std::move(fused));
    // ground truth aligned to this chunk for scoring
    out.gt_labels.assign(
        record.gt.labels.begin() + start_frame,
        record.gt.labels.begin() + start_frame + piece.seq.frames());
    start_frame += piece.seq.frames();
    chunks.push_back(std::move(out));
  }
  return chunks;
}

namespace {

struct StageTimer {
  ordered_json& stages;
  std::string name;
  Clock::time_point t0 = Clock::now();
  ordered_json outputs = ordered_json::array();

  StageTimer(ordered_json& stages_, std::string name_)
      : stages(stages_), name(std::move(name_)) {}

  void add_output(const std::string& path) {
    outputs.push_back({{"path", path}, {"fnv64", file_fnv64(path)}});
  }

  void finish() {
    stages.push_back({{"name", name},
                      {"wall_ms", ms_since(t0)},
                      {"outputs", outputs}});
  }
};

ordered_json manifest_header(const RunConfig& config) {
  ordered_json m;
  m["schema_version"] = 1;
  m["tool_version"] = kToolVersion;
  m["seed"] = config.seed;
  m["thread_count"] = Eigen::nbThreads();
  m["config"] = json::parse(config.to_json());
  m["stages"] = ordered_json::array();
  return m;
}

void write_manifest(const ordered_json& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write manifest: " + path);
  out << manifest.dump(2) << "\n";
}

std::vector<const VideoRecord*> select_videos(const Dataset& data,
                                              const std::string& split_path) {
  std::vector<const VideoRecord*> selected;
  if (split_path.empty()) {
    for (const VideoRecord& rec : data.videos) selected.push_back(&rec);
    return selected;
  }
  const auto ids = read_split(split_path);
  const std::set<std::string> wanted(ids.begin(), ids.end());
  for (const VideoRecord& rec : data.videos)
    if (wanted.count(rec.gt.video_id) > 0) selected.push_back(&rec);
  if (selected.empty()) fail("split file selects no videos: " + split_path);
  return selected;
}

Eigen::Index input_width(const RunConfig& config, const Dataset& data) {
  Eigen::Index width = 0;
  if (config.modalities.visual && !data.videos.empty())
    width += data.videos.front().visual.cols();
  if (config.modalities.structural) width += config.walk.dimension;
  if (config.modalities.semantic) {
    if (!config.embedding_table.empty())
      width += make_backend(config).dimension();
    else
      width += config.semantic_dim;
  }
  return width;
}

}  // namespace

TrainOutput run_train(const RunConfig& config) {
  Dataset data = ingest(config);
  const auto selected = select_videos(data, config.train_split);

  ordered_json manifest = manifest_header(config);
  auto& stages = manifest["stages"];
  fs::create_directories(config.out_dir);
  const fs::path out_root(config.out_dir);

  // stage: graphs + features
  StageTimer prep_stage(stages, "prepare");
  std::vector<GraphInstance> dataset;
  fs::create_directories(out_root / "cache" / "graphs");
  fs::create_directories(out_root / "cache" / "structural");
  for (const VideoRecord* rec : selected) {
    auto chunks = prepare_video(*rec, data.label_map, config, false);
    for (PreparedChunk& c : chunks) {
      const std::string graph_path =
          (out_root / "cache" / "graphs" /
           (c.video_id + "_" + std::to_string(c.chunk_index) + ".json"))
              .string();
      write_graph(c.graph, graph_path);
      prep_stage.add_output(graph_path);
      dataset.push_back(std::move(c.instance));
    }
  }
  prep_stage.finish();

  // stage: training
  StageTimer train_stage(stages, "train");
  ModelDims dims;
  dims.d_in = input_width(config, data);
  dims.hidden = config.hidden;
  dims.mlp_hidden = config.mlp_hidden;
  dims.classes = data.label_map.size();
  HyperParams hyper = config.hyper;
  hyper.seed = config.seed;
  TrainResult result = train(dataset, dims, hyper);

  TrainOutput output;
  output.checkpoint_dir = (out_root / "checkpoint").string();
  save_checkpoint(output.checkpoint_dir, result.params, result.state, hyper,
                  hyper.epochs);
  output.loss_log_path = (out_root / "loss_log.csv").string();
  {
    std::ofstream loss_out(output.loss_log_path, std::ios::binary);
    loss_out << loss_log_csv(result.log);
  }
  train_stage.add_output(output.loss_log_path);
  train_stage.add_output(output.checkpoint_dir + "/manifest.json");
  train_stage.finish();

  output.manifest_path = (out_root / "manifest.json").string();
  write_manifest(manifest, output.manifest_path);
  log::info("training finished: " + output.checkpoint_dir);
  return output;
}

EvalOutput run_eval(const RunConfig& config, const std::string& checkpoint_dir) {
  Dataset data = ingest(config);
  const auto selected = select_videos(data, config.test_split);
  const Checkpoint ckpt = load_checkpoint(checkpoint_dir);

  const Eigen::Index expect_width = input_width(config, data);
  if (ckpt.params.dims.d_in != expect_width)
    fail("checkpoint d_in " + std::to_string(ckpt.params.dims.d_in) +
         " does not match configured feature width " +
         std::to_string(expect_width));
  if (ckpt.params.dims.classes != data.label_map.size())
    fail("checkpoint classes " + std::to_string(ckpt.params.dims.classes) +
         " does not match label map size " +
         std::to_string(data.label_map.size()));

  ordered_json manifest = manifest_header(config);
  auto& stages = manifest["stages"];
  fs::create_directories(config.out_dir);
  const fs::path out_root(config.out_dir);
  fs::create_directories(out_root / "predictions");

  StageTimer eval_stage(stages, "eval");
  EvalOutput output;
  for (const VideoRecord* rec : selected) {
    VideoEval ve;
    ve.video_id = rec->gt.video_id;
    ve.gt = rec->gt.labels;
    ve.pred.resize(rec->gt.labels.size());
    ve.logp.resize(rec->gt.frames(), data.label_map.size());

    auto chunks = prepare_video(*rec, data.label_map, config, true);
    for (const PreparedChunk& c : chunks) {
      const Prediction pred = predict(c.instance, ckpt.params, ckpt.hyper);
      for (Eigen::Index i = 0; i < pred.logp.rows(); ++i) {
        ve.pred[static_cast<std::size_t>(c.start_frame + i)] =
            pred.labels[static_cast<std::size_t>(i)];
        ve.logp.row(c.start_frame + i) = pred.logp.row(i);
      }
    }

    const std::string pred_path =
        (out_root / "predictions" / (ve.video_id + ".txt")).string();
    write_label_file(pred_path, ve.pred, data.label_map);
    eval_stage.add_output(pred_path);
    output.videos.push_back(std::move(ve));
  }

  // background frames stay included; exclusion is a scoring option callers
  // opt into when re-scoring
  ReportOptions options;
  output.report = full_report(output.videos, options);

  // report JSON with per-video breakdown
  ordered_json report_json = json::parse(output.report.to_json());
  auto& per_video = report_json["videos"] = ordered_json::object();
  for (const VideoEval& ve : output.videos) {
    std::vector<VideoEval> one{ve};
    const MetricsReport r = full_report(one, options);
    per_video[ve.video_id] = json::parse(r.to_json());
  }
  output.report_path = (out_root / "report.json").string();
  {
    std::ofstream out(output.report_path, std::ios::binary);
    out << report_json.dump(2) << "\n";
  }
  eval_stage.add_output(output.report_path);
  eval_stage.finish();
  write_manifest(manifest, (out_root / "manifest.json").string());
  return output;
}

std::vector<AblationCell> edge_ablation_grid(const RunConfig& base) {
  auto cell = [&base](const std::string& name, bool self_loop, bool positive,
                      bool negative, double drop) {
    AblationCell c{name, base};
    c.config.edges = {self_loop, positive, negative, drop};
    c.config.out_dir = base.out_dir + "/" + name;
    return c;
  };
  return {
      cell("temporal", false, false, false, 0.0),
      cell("temporal+selfloop", true, false, false, 0.0),
      cell("temporal+positive", false, true, false, 0.0),
      cell("temporal+negative", false, false, true, 0.0),
      cell("temporal+semantic", false, true, true, 0.0),
      cell("all", true, true, true, 0.0),
      cell("temporal+semantic_random50", false, true, true, 0.5),
      cell("all_random50", true, true, true, 0.5),
  };
}

std::vector<AblationCell> modality_ablation_grid(const RunConfig& base) {
  auto cell = [&base](const std::string& name, bool vis, bool str, bool sem) {
    AblationCell c{name, base};
    c.config.modalities = {vis, str, sem};
    c.config.out_dir = base.out_dir + "/" + name;
    return c;
  };
  return {
      cell("vis", true, false, false),
      cell("str", false, true, false),
      cell("sem", false, false, true),
      cell("vis+str", true, true, false),
      cell("vis+sem", true, false, true),
      cell("str+sem", false, true, true),
      cell("vis+str+sem", true, true, true),
  };
}

std::vector<AblationCell> hop_ablation_grid(const RunConfig& base) {
  std::vector<AblationCell> grid;
  for (int hop : {2, 3, 4, 5}) {
    AblationCell c{"hop" + std::to_string(hop), base};
    c.config.walk.hops = hop;
    c.config.out_dir = base.out_dir + "/hop" + std::to_string(hop);
    grid.push_back(std::move(c));
  }
  return grid;
}

std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& grid) {
  std::vector<AblationRow> rows;
  for (const AblationCell& cell : grid) {
    AblationRow row;
    row.cell = cell.name;
    try {
      const TrainOutput trained = run_train(cell.config);
      const EvalOutput evaluated = run_eval(cell.config, trained.checkpoint_dir);
      row.report = evaluated.report;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
      log::warn("ablation cell " + cell.name + " failed: " + row.error);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_ablation_table(const std::vector<AblationRow>& rows,
                          const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream csv(fs::path(dir) / "ablation.csv", std::ios::binary);
  csv << "cell,ok,accuracy,edit,f1_10,f1_25,f1_50,top1,top5,error\n";
  csv.precision(6);
  ordered_json j = ordered_json::array();
  for (const AblationRow& row : rows) {
    csv << row.cell << ',' << (row.ok ? 1 : 0) << ',';
    if (row.ok) {
      csv << std::fixed;
      csv << row.report.accuracy << ',' << row.report.edit << ','
          << row.report.f1.at(0.10) << ',' << row.report.f1.at(0.25) << ','
          << row.report.f1.at(0.50) << ',' << row.report.top1 << ','
          << row.report.top5 << ',';
    } else {
      csv << ",,,,,,,";
    }
    csv << row.error << '\n';

    ordered_json entry;
    entry["cell"] = row.cell;
    entry["ok"] = row.ok;
    if (row.ok) entry["report"] = json::parse(row.report.to_json());
    else entry["error"] = row.error;
    j.push_back(std::move(entry));
  }
  std::ofstream jout(fs::path(dir) / "ablation.json", std::ios::binary);
  jout << j.dump(2) << "\n";
}

}  // namespace vidgraph
