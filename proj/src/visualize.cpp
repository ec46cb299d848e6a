#include "vidgraph/visualize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vidgraph/metrics.hpp"

namespace vidgraph {

namespace {

std::string hsv_to_hex(double h, double s, double v) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround((r + m) * 255.0)),
                static_cast<int>(std::lround((g + m) * 255.0)),
                static_cast<int>(std::lround((b + m) * 255.0)));
  return buf;
}

void emit_bar(std::ostringstream& out, const SegmentList& segments, int total,
              double x0, double y0, double width, double height) {
  for (const Segment& s : segments) {
    const double x = x0 + width * s.start / total;
    const double w = width * s.length() / total;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "  <rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                  "fill=\"%s\"/>\n",
                  x, y0, w, height, class_color(s.label).c_str());
    out << buf;
  }
}

}  // namespace

std::string class_color(int class_id) {
  const double hue = std::fmod(class_id * 137.50776405003785, 360.0);
  return hsv_to_hex(hue, 0.65, 0.90);
}

std::string render_segmentation_svg(const std::vector<int>& gt,
                                    const std::vector<int>& pred,
                                    const LabelMap& map) {
  if (gt.size() != pred.size())
    fail("visualize: prediction/ground-truth length mismatch");
  if (gt.empty()) fail("visualize: empty sequences");

  const SegmentList gt_segs = extract_segments(gt);
  const SegmentList pred_segs = extract_segments(pred);
  const int total = static_cast<int>(gt.size());

  const double width = 800.0, bar_height = 40.0, margin = 10.0;
  const double label_width = 50.0;
  const double legend_rows = map.size();
  const double height = margin * 3 + bar_height * 2 + legend_rows * 20.0 + 10.0;

  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                width + label_width + margin * 2, height,
                width + label_width + margin * 2, height);
  out << buf;
  out << "  <style>text { font-family: monospace; font-size: 12px; }</style>\n";

  out << "  <text x=\"" << margin << "\" y=\"" << margin + bar_height / 2
      << "\">GT</text>\n";
  emit_bar(out, gt_segs, total, label_width, margin, width, bar_height);
  out << "  <text x=\"" << margin << "\" y=\""
      << margin * 2 + bar_height + bar_height / 2 << "\">Pred</text>\n";
  emit_bar(out, pred_segs, total, label_width, margin * 2 + bar_height, width,
           bar_height);

  double legend_y = margin * 3 + bar_height * 2 + 10.0;
  for (const auto& [token, id] : map.entries) {
    std::snprintf(buf, sizeof buf,
                  "  <rect x=\"%.2f\" y=\"%.2f\" width=\"14\" height=\"14\" "
                  "fill=\"%s\"/>\n",
                  label_width, legend_y, class_color(id).c_str());
    out << buf;
    std::snprintf(buf, sizeof buf, "  <text x=\"%.2f\" y=\"%.2f\">%s</text>\n",
                  label_width + 20.0, legend_y + 12.0, token.c_str());
    out << buf;
    legend_y += 20.0;
  }
  out << "</svg>\n";
  return out.str();
}

void write_segmentation_svg(const std::vector<int>& gt,
                            const std::vector<int>& pred, const LabelMap& map,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write SVG file: " + path);
  out << render_segmentation_svg(gt, pred, map);
}

}  // namespace vidgraph
