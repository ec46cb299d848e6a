#include "vidgraph/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace vidgraph {

double frame_accuracy(const std::vector<int>& pred, const std::vector<int>& gt,
                      std::optional<int> exclude_background) {
  if (pred.size() != gt.size())
    fail("frame accuracy: length mismatch (" + std::to_string(pred.size()) +
         " vs " + std::to_string(gt.size()) + ")");
  if (gt.empty()) fail("frame accuracy: empty sequences");
  long counted = 0;
  long correct = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (exclude_background && gt[i] == *exclude_background) continue;
    ++counted;
    if (pred[i] == gt[i]) ++correct;
  }
  if (counted == 0) return 100.0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(counted);
}

SegmentList extract_segments(const std::vector<int>& labels) {
  if (labels.empty()) fail("empty sequence");
  SegmentList segments;
  int start = 0;
  for (int t = 1; t <= static_cast<int>(labels.size()); ++t) {
    if (t == static_cast<int>(labels.size()) ||
        labels[static_cast<std::size_t>(t)] != labels[static_cast<std::size_t>(start)]) {
      segments.push_back({labels[static_cast<std::size_t>(start)], start, t - 1});
      start = t;
    }
  }
  return segments;
}

namespace {

// two-row Levenshtein with unit costs
int levenshtein(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = b.size();
  std::vector<int> prev(n + 1), cur(n + 1);
  for (std::size_t j = 0; j <= n; ++j) prev[j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= n; ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

std::vector<int> class_sequence(const SegmentList& segments) {
  std::vector<int> out;
  out.reserve(segments.size());
  for (const Segment& s : segments) out.push_back(s.label);
  return out;
}

double frame_iou(const Segment& a, const Segment& b) {
  const int inter = std::min(a.end, b.end) - std::max(a.start, b.start) + 1;
  if (inter <= 0) return 0.0;
  const int uni = std::max(a.end, b.end) - std::min(a.start, b.start) + 1;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

double edit_score(const SegmentList& pred, const SegmentList& gt) {
  if (pred.empty() && gt.empty()) return 100.0;
  if (pred.empty() || gt.empty()) return 0.0;
  const int dist = levenshtein(class_sequence(pred), class_sequence(gt));
  const auto denom = static_cast<double>(std::max(pred.size(), gt.size()));
  return 100.0 * (1.0 - static_cast<double>(dist) / denom);
}

F1Result f1_at(const SegmentList& pred, const SegmentList& gt, double tau) {
  if (tau <= 0.0 || tau > 1.0) fail("f1_at: tau must be in (0, 1]");
  F1Result res;
  std::vector<bool> matched(gt.size(), false);
  for (const Segment& p : pred) {
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (matched[j] || gt[j].label != p.label) continue;
      const double iou = frame_iou(p, gt[j]);
      if (iou > best) {
        best = iou;
        best_idx = j;
      }
    }
    if (best >= tau) {
      ++res.tp;
      matched[best_idx] = true;
    } else {
      ++res.fp;
    }
  }
  res.fn = static_cast<int>(std::count(matched.begin(), matched.end(), false));

  if (pred.empty() && gt.empty()) {
    res.precision = res.recall = res.f1 = 100.0;
    return res;
  }
  res.precision =
      res.tp + res.fp > 0 ? 100.0 * res.tp / static_cast<double>(res.tp + res.fp) : 0.0;
  res.recall =
      res.tp + res.fn > 0 ? 100.0 * res.tp / static_cast<double>(res.tp + res.fn) : 0.0;
  res.f1 = res.precision + res.recall > 0.0
               ? 2.0 * res.precision * res.recall / (res.precision + res.recall)
               : 0.0;
  return res;
}

namespace {

long top_k_hits(const Matrix& scores, const std::vector<int>& gt, int k) {
  if (k < 1) fail("top_k: k must be >= 1");
  if (static_cast<Eigen::Index>(gt.size()) != scores.rows())
    fail("top_k: label count does not match rows");
  long hits = 0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const int y = gt[static_cast<std::size_t>(i)];
    if (y < 0 || y >= scores.cols()) fail("top_k: label out of range");
    // rank = classes scoring strictly higher, plus equal-scoring classes
    // with a smaller id (ties break toward the smaller id)
    int rank = 0;
    for (Eigen::Index c = 0; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, y)) ++rank;
      else if (scores(i, c) == scores(i, y) && c < y) ++rank;
    }
    if (rank < k) ++hits;
  }
  return hits;
}

}  // namespace

double top_k(const Matrix& scores, const std::vector<int>& gt, int k) {
  return 100.0 * static_cast<double>(top_k_hits(scores, gt, k)) /
         static_cast<double>(scores.rows());
}

MetricsReport full_report(const std::vector<VideoEval>& videos,
                          const ReportOptions& options) {
  if (videos.empty()) fail("full report: no videos");
  MetricsReport report;

  long frames = 0, correct = 0, top1_hits = 0, top5_hits = 0, scored_frames = 0;
  double edit_sum = 0.0;
  std::map<double, double> f1_sum;
  for (double tau : options.thresholds) {
    f1_sum[tau] = 0.0;
    report.counts[tau] = {};
  }

  for (const VideoEval& v : videos) {
    if (v.pred.size() != v.gt.size())
      fail("full report: prediction/ground-truth length mismatch for video " +
           v.video_id);
    for (std::size_t i = 0; i < v.gt.size(); ++i) {
      if (options.exclude_background && v.gt[i] == *options.exclude_background)
        continue;
      ++frames;
      if (v.pred[i] == v.gt[i]) ++correct;
    }

    const SegmentList pred_segs = extract_segments(v.pred);
    const SegmentList gt_segs = extract_segments(v.gt);
    edit_sum += edit_score(pred_segs, gt_segs);
    for (double tau : options.thresholds) {
      const F1Result r = f1_at(pred_segs, gt_segs, tau);
      f1_sum[tau] += r.f1;
      report.counts[tau].tp += r.tp;
      report.counts[tau].fp += r.fp;
      report.counts[tau].fn += r.fn;
    }

    if (v.logp.rows() > 0) {
      scored_frames += static_cast<long>(v.gt.size());
      top1_hits += top_k_hits(v.logp, v.gt, 1);
      top5_hits += top_k_hits(v.logp, v.gt, 5);
    }
  }

  report.accuracy = frames > 0 ? 100.0 * static_cast<double>(correct) /
                                     static_cast<double>(frames)
                               : 100.0;
  report.edit = edit_sum / static_cast<double>(videos.size());
  for (double tau : options.thresholds)
    report.f1[tau] = f1_sum[tau] / static_cast<double>(videos.size());
  if (scored_frames > 0) {
    report.top1 = 100.0 * static_cast<double>(top1_hits) / static_cast<double>(scored_frames);
    report.top5 = 100.0 * static_cast<double>(top5_hits) / static_cast<double>(scored_frames);
  }

  // pooled precision/recall alongside the raw counts
  for (auto& [tau, r] : report.counts) {
    r.precision = r.tp + r.fp > 0 ? 100.0 * r.tp / static_cast<double>(r.tp + r.fp) : 0.0;
    r.recall = r.tp + r.fn > 0 ? 100.0 * r.tp / static_cast<double>(r.tp + r.fn) : 0.0;
    r.f1 = r.precision + r.recall > 0.0
               ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
               : 0.0;
  }
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["accuracy"] = accuracy;
  j["edit"] = edit;
  auto& jf = j["f1"] = nlohmann::ordered_json::object();
  for (const auto& [tau, value] : f1) {
    char key[16];
    std::snprintf(key, sizeof key, "%.2f", tau);
    jf[key] = value;
  }
  j["top1"] = top1;
  j["top5"] = top5;
  auto& jc = j["counts"] = nlohmann::ordered_json::object();
  for (const auto& [tau, r] : counts) {
    char key[16];
    std::snprintf(key, sizeof key, "%.2f", tau);
    jc[key] = {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn},
               {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
  }
  return j.dump(2);
}

}  // namespace vidgraph
