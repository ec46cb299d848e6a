#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vidgraph/dgcn.hpp"
#include "vidgraph/graph.hpp"
#include "vidgraph/metrics.hpp"
#include "vidgraph/node2vec.hpp"
#include "vidgraph/semantic.hpp"
#include "vidgraph/visualize.hpp"

namespace py = pybind11;
using namespace vidgraph;

namespace {

FrameSequence make_sequence(const std::vector<int>& labels,
                            const std::string& video_id) {
  FrameSequence seq;
  seq.video_id = video_id;
  seq.labels = labels;
  return seq;
}

LabelMap make_label_map(const std::vector<std::string>& tokens) {
  LabelMap map;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    map.entries.emplace_back(tokens[i], static_cast<int>(i));
  map.validate();
  return map;
}

SegmentList segments_from_labels(const std::vector<int>& labels) {
  return extract_segments(labels);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "frame-graph action segmentation core";

  py::enum_<EdgeKind>(m, "EdgeKind")
      .value("TEMPORAL", EdgeKind::Temporal)
      .value("POSITIVE_SEMANTIC", EdgeKind::PositiveSemantic)
      .value("NEGATIVE_SEMANTIC", EdgeKind::NegativeSemantic)
      .value("SELF_LOOP", EdgeKind::SelfLoop);

  py::class_<Edge>(m, "Edge")
      .def_readonly("src", &Edge::src)
      .def_readonly("dst", &Edge::dst)
      .def_readonly("kind", &Edge::kind)
      .def_readonly("weight", &Edge::weight)
      .def("__repr__", [](const Edge& e) {
        return "Edge(" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
               ", kind=" + std::to_string(static_cast<int>(e.kind)) +
               ", w=" + std::to_string(e.weight) + ")";
      });

  py::class_<VideoGraph>(m, "VideoGraph")
      .def_readonly("video_id", &VideoGraph::video_id)
      .def_readonly("node_count", &VideoGraph::node_count)
      .def_readonly("labels", &VideoGraph::labels)
      .def_readonly("gamma", &VideoGraph::gamma)
      .def_readonly("edges", &VideoGraph::edges)
      .def("edges_of", &VideoGraph::edges_of)
      .def("to_json", &graph_to_json);

  m.def(
      "segment_runs",
      [](const std::vector<int>& labels) {
        std::vector<std::tuple<int, int, int>> out;
        for (const Run& r : segment_runs(labels))
          out.emplace_back(r.label, r.start, r.end);
        return out;
      },
      py::arg("labels"), "maximal (label, start, end) runs");

  m.def(
      "build_graph",
      [](const std::vector<int>& labels, double gamma, const std::string& id) {
        return build_graph(make_sequence(labels, id), gamma);
      },
      py::arg("labels"), py::arg("gamma") = 0.0, py::arg("video_id") = "video");

  m.def(
      "adjacency",
      [](const VideoGraph& g) { return adjacency(g).a; }, py::arg("graph"),
      "dense weighted adjacency matrix");

  m.def(
      "dgc_operators",
      [](const VideoGraph& g) {
        const DgcOperators ops = dgc_operators(adjacency(g));
        return py::make_tuple(ops.m_out, ops.m_in);
      },
      py::arg("graph"), "(m_out, m_in) convolution operators");

  m.def(
      "embed_structure",
      [](const VideoGraph& g, int dimension, int hops, int walks_per_node,
         int walk_length, int epochs, std::uint64_t seed) {
        WalkConfig config;
        config.dimension = dimension;
        config.hops = hops;
        config.walks_per_node = walks_per_node;
        config.walk_length = walk_length;
        config.epochs = epochs;
        config.seed = seed;
        return embed_structure(g, config);
      },
      py::arg("graph"), py::arg("dimension") = 128, py::arg("hops") = 4,
      py::arg("walks_per_node") = 10, py::arg("walk_length") = 20,
      py::arg("epochs") = 5, py::arg("seed") = 0);

  m.def(
      "prompt_fill",
      [](const std::string& token, const std::string& tmpl) {
        return prompt_fill(token, prompt_template_from_string(tmpl));
      },
      py::arg("token"), py::arg("template_name"));

  m.def(
      "embed_semantic",
      [](const std::vector<int>& labels, const std::vector<std::string>& tokens,
         const std::string& tmpl, int dimension, std::uint64_t seed) {
        const LabelMap map = make_label_map(tokens);
        return embed_semantic(make_sequence(labels, "video"), map,
                              prompt_template_from_string(tmpl),
                              EncoderBackend::make_stub(dimension, seed));
      },
      py::arg("labels"), py::arg("tokens"), py::arg("template_name") = "ensemble",
      py::arg("dimension") = 512, py::arg("seed") = 0);

  m.def(
      "fuse_features",
      [](const Matrix& visual, const Matrix& structural, const Matrix& semantic) {
        return fuse_features(visual, structural, semantic).fused;
      },
      py::arg("visual"), py::arg("structural"), py::arg("semantic"));

  py::class_<ModelParams>(m, "ModelParams");

  m.def(
      "train",
      [](const std::vector<std::pair<VideoGraph, Matrix>>& dataset,
         Eigen::Index hidden, int epochs, int batch_size, double learning_rate,
         double lambda_edge, double dropout, std::uint64_t seed) {
        std::vector<GraphInstance> instances;
        Eigen::Index classes = 0, d_in = 0;
        for (const auto& [graph, features] : dataset) {
          instances.push_back(make_instance(graph, features));
          d_in = features.cols();
          for (int y : graph.labels)
            classes = std::max<Eigen::Index>(classes, y + 1);
        }
        ModelDims dims{d_in, hidden, hidden, classes};
        HyperParams hyper;
        hyper.epochs = epochs;
        hyper.batch_size = batch_size;
        hyper.learning_rate = learning_rate;
        hyper.lambda_edge = lambda_edge;
        hyper.dropout = dropout;
        hyper.seed = seed;
        return train(instances, dims, hyper).params;
      },
      py::arg("dataset"), py::arg("hidden") = 64, py::arg("epochs") = 30,
      py::arg("batch_size") = 8, py::arg("learning_rate") = 0.004,
      py::arg("lambda_edge") = 0.1, py::arg("dropout") = 0.5,
      py::arg("seed") = 0);

  m.def(
      "predict",
      [](const VideoGraph& graph, const Matrix& features,
         const ModelParams& params) {
        const Prediction pred =
            predict(make_instance(graph, features), params, HyperParams{});
        return py::make_tuple(pred.logp, pred.labels);
      },
      py::arg("graph"), py::arg("features"), py::arg("params"),
      "(log_probs, argmax_labels)");

  m.def(
      "frame_accuracy",
      [](const std::vector<int>& pred, const std::vector<int>& gt) {
        return frame_accuracy(pred, gt);
      },
      py::arg("pred"), py::arg("gt"));

  m.def(
      "edit_score",
      [](const std::vector<int>& pred, const std::vector<int>& gt) {
        return edit_score(segments_from_labels(pred), segments_from_labels(gt));
      },
      py::arg("pred"), py::arg("gt"));

  m.def(
      "f1_at",
      [](const std::vector<int>& pred, const std::vector<int>& gt, double tau) {
        const F1Result r =
            f1_at(segments_from_labels(pred), segments_from_labels(gt), tau);
        return py::make_tuple(r.f1, r.tp, r.fp, r.fn);
      },
      py::arg("pred"), py::arg("gt"), py::arg("tau"),
      "(f1, tp, fp, fn) at overlap threshold tau");

  m.def(
      "render_svg",
      [](const std::vector<int>& gt, const std::vector<int>& pred,
         const std::vector<std::string>& tokens) {
        return render_segmentation_svg(gt, pred, make_label_map(tokens));
      },
      py::arg("gt"), py::arg("pred"), py::arg("tokens"));

  m.attr("__version__") = "0.1.0";
}
