#include "vidgraph/synthetic.hpp"

#include <filesystem>
#include <fstream>

#include "vidgraph/matrix_io.hpp"
#include "vidgraph/rng.hpp"

namespace vidgraph {

namespace fs = std::filesystem;

namespace {

// enough distinct tokens for a 50Salads-sized label set
const char* kActionTokens[] = {
    "background", "pour",  "cut",   "stir",  "open",  "close", "peel",
    "mix",        "place", "take",  "shake", "spread", "flip",  "crack",
    "serve",      "wash",  "chop",  "fold",  "scoop", "press", "roll",
    "squeeze",    "grate", "whisk", "drain", "slice", "dip",   "wrap",
};

}  // namespace

void SynthConfig::validate() const {
  if (videos < 1 || frames < 1) fail("synthetic: videos and frames must be >= 1");
  if (classes < 2) fail("synthetic: need at least 2 classes");
  if (classes > static_cast<int>(std::size(kActionTokens)))
    fail("synthetic: at most " + std::to_string(std::size(kActionTokens)) + " classes");
  if (run_min < 1 || run_max < run_min) fail("synthetic: bad run length range");
  if (visual_dim < 1) fail("synthetic: visual_dim must be >= 1");
  if (pseudo_noise < 0.0 || pseudo_noise > 1.0)
    fail("synthetic: pseudo_noise must be in [0, 1]");
  if (pseudo_window < 1) fail("synthetic: pseudo_window must be >= 1");
}

SynthDataset generate_synthetic(const SynthConfig& config) {
  config.validate();
  SynthDataset data;
  for (int c = 0; c < config.classes; ++c)
    data.label_map.entries.emplace_back(kActionTokens[c], c);
  data.label_map.background_id = 0;
  data.label_map.validate();

  Rng mean_rng(derive_seed(config.seed, 0xc1a5));
  Matrix class_means(config.classes, config.visual_dim);
  for (int c = 0; c < config.classes; ++c)
    for (int d = 0; d < config.visual_dim; ++d)
      class_means(c, d) = config.cluster_scale * mean_rng.normal();

  for (int v = 0; v < config.videos; ++v) {
    Rng rng(derive_seed(config.seed, 0x51d0 + static_cast<std::uint64_t>(v)));
    SynthVideo video;
    video.seq.video_id = "synth_" + std::string(v < 10 ? "0" : "") + std::to_string(v);

    int prev = -1;
    while (static_cast<int>(video.seq.labels.size()) < config.frames) {
      int cls = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.classes)));
      while (cls == prev)
        cls = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.classes)));
      const int len = config.run_min +
                      static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(
                          config.run_max - config.run_min + 1)));
      for (int i = 0; i < len && static_cast<int>(video.seq.labels.size()) < config.frames; ++i)
        video.seq.labels.push_back(cls);
      prev = cls;
    }

    video.visual.resize(config.frames, config.visual_dim);
    for (int t = 0; t < config.frames; ++t)
      for (int d = 0; d < config.visual_dim; ++d)
        video.visual(t, d) = class_means(video.seq.labels[static_cast<std::size_t>(t)], d) +
                             config.noise * rng.normal();

    // pseudo-labels: corrupt whole windows so segment structure stays sane
    video.pseudo_labels = video.seq.labels;
    const int corrupt_windows = static_cast<int>(
        config.pseudo_noise * config.frames / config.pseudo_window + 0.5);
    for (int w = 0; w < corrupt_windows; ++w) {
      const int at = static_cast<int>(rng.uniform_int(
          static_cast<std::uint64_t>(std::max(1, config.frames - config.pseudo_window))));
      int wrong = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.classes)));
      while (wrong == video.seq.labels[static_cast<std::size_t>(at)])
        wrong = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.classes)));
      for (int i = at; i < std::min(config.frames, at + config.pseudo_window); ++i)
        video.pseudo_labels[static_cast<std::size_t>(i)] = wrong;
    }

    data.videos.push_back(std::move(video));
  }
  return data;
}

void write_synthetic(const SynthDataset& dataset, const std::string& dir,
                     int test_videos) {
  const fs::path root(dir);
  fs::create_directories(root / "labels");
  fs::create_directories(root / "features");
  fs::create_directories(root / "pseudo");
  fs::create_directories(root / "splits");

  dataset.label_map.to_file((root / "label_map.txt").string());
  std::ofstream train_split(root / "splits" / "train.txt");
  std::ofstream test_split(root / "splits" / "test.txt");
  const int total = static_cast<int>(dataset.videos.size());
  for (int v = 0; v < total; ++v) {
    const SynthVideo& video = dataset.videos[static_cast<std::size_t>(v)];
    write_label_file((root / "labels" / (video.seq.video_id + ".txt")).string(),
                     video.seq.labels, dataset.label_map);
    save_matrix_f32((root / "features" / (video.seq.video_id + ".bin")).string(),
                    video.visual);
    write_label_file((root / "pseudo" / (video.seq.video_id + ".txt")).string(),
                     video.pseudo_labels, dataset.label_map);
    if (v < total - test_videos)
      train_split << video.seq.video_id << '\n';
    else
      test_split << video.seq.video_id << '\n';
  }
}

}  // namespace vidgraph
