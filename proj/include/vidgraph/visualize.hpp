#pragma once

#include <string>
#include <vector>

#include "vidgraph/graph.hpp"

namespace vidgraph {

// Two horizontal segmentation bars (ground truth above, prediction below),
// one rectangle per segment proportional to duration, plus a legend.
// Output is deterministic: fixed palette keyed by class id, fixed float
// formatting.
std::string render_segmentation_svg(const std::vector<int>& gt,
                                    const std::vector<int>& pred,
                                    const LabelMap& map);

void write_segmentation_svg(const std::vector<int>& gt,
                            const std::vector<int>& pred, const LabelMap& map,
                            const std::string& path);

// deterministic palette: golden-angle hue rotation keyed by class id
std::string class_color(int class_id);

}  // namespace vidgraph
