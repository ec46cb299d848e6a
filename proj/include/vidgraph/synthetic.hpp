#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vidgraph/graph.hpp"

namespace vidgraph {

/// Desk-scale dataset: per-class Gaussian feature clusters over random
/// run-structured label sequences, plus blockwise-corrupted pseudo-labels
/// standing in for an external frame classifier.
struct SynthConfig {
  int videos = 4;
  int frames = 200;
  int classes = 3;
  int run_min = 10;
  int run_max = 40;
  int visual_dim = 32;
  double cluster_scale = 1.0;   // class mean magnitude
  double noise = 0.5;           // per-frame feature noise sigma
  double pseudo_noise = 0.1;    // fraction of frames corrupted
  int pseudo_window = 10;       // corruption happens in blocks
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthVideo {
  FrameSequence seq;
  Matrix visual;
  std::vector<int> pseudo_labels;
};

struct SynthDataset {
  LabelMap label_map;
  std::vector<SynthVideo> videos;
};

SynthDataset generate_synthetic(const SynthConfig& config);

// writes label_map.txt, labels/, features/, pseudo/ and splits/ under dir;
// the last `test_videos` videos form the test split
void write_synthetic(const SynthDataset& dataset, const std::string& dir,
                     int test_videos);

}  // namespace vidgraph
