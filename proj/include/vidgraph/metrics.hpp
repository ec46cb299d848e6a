#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vidgraph/common.hpp"

namespace vidgraph {

/// Contiguous same-class segments covering [0, T); consecutive segments
/// carry different class ids.
struct Segment {
  int label = 0;
  int start = 0;
  int end = 0;  // inclusive

  int length() const { return end - start + 1; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

using SegmentList = std::vector<Segment>;

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double edit = 0.0;
  std::map<double, double> f1;       // threshold -> percent (per-video mean)
  std::map<double, F1Result> counts; // threshold -> pooled TP/FP/FN
  double top1 = 0.0;
  double top5 = 0.0;

  std::string to_json() const;
};

double frame_accuracy(const std::vector<int>& pred, const std::vector<int>& gt,
                      std::optional<int> exclude_background = std::nullopt);

SegmentList extract_segments(const std::vector<int>& labels);

// 100 * (1 - Levenshtein(pred classes, gt classes) / max(|pred|, |gt|));
// both empty scores 100, exactly one empty scores 0
double edit_score(const SegmentList& pred, const SegmentList& gt);

// greedy in prediction order: best frame-IoU over still-unmatched same-class
// ground-truth segments, true positive when >= tau
F1Result f1_at(const SegmentList& pred, const SegmentList& gt, double tau);

double top_k(const Matrix& scores, const std::vector<int>& gt, int k);

struct VideoEval {
  std::string video_id;
  std::vector<int> pred;
  std::vector<int> gt;
  Matrix logp;  // optional: zero rows disables top-k
};

struct ReportOptions {
  std::vector<double> thresholds{0.10, 0.25, 0.50};
  std::optional<int> exclude_background;
};

// Acc and Top-k pool frames across videos; Edit and F1 are computed per
// video then averaged unweighted.
MetricsReport full_report(const std::vector<VideoEval>& videos,
                          const ReportOptions& options = {});

}  // namespace vidgraph
