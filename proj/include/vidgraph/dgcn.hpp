#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vidgraph/graph.hpp"
#include "vidgraph/rng.hpp"

namespace vidgraph {

/// Symmetrized degree-normalized convolution operators of the directed
/// graph: M = D~^(-1/2) (A~ + A~^T) D~^(-1/2) / 2 with A~ = A + I, using
/// out-degrees for m_out and in-degrees for m_in. Both symmetric with
/// nonnegative entries; the D~ diagonals are >= 2 so no division blows up.
struct DgcOperators {
  Matrix m_out;
  Matrix m_in;
};

DgcOperators dgc_operators(const AdjacencyMatrix& adj);

struct ModelDims {
  Eigen::Index d_in = 2816;
  Eigen::Index hidden = 512;
  Eigen::Index mlp_hidden = 512;
  Eigen::Index classes = 0;
};

/// Two-layer directed GCN + MLP head. Layer 0 feeds batch-norm and
/// LeakyReLU; dropped-out activations feed layer 1; the head is
/// linear -> dropout -> linear -> log-softmax.
struct ModelParams {
  ModelDims dims;
  Matrix w1_0, w2_0;                  // d_in x hidden
  Vector bn_scale, bn_shift;          // hidden
  Vector bn_running_mean, bn_running_var;
  Matrix w1_1, w2_1;                  // hidden x hidden
  Matrix mlp_w1;                      // hidden x mlp_hidden
  Vector mlp_b1;
  Matrix mlp_w2;                      // mlp_hidden x classes
  Vector mlp_b2;

  static ModelParams init(const ModelDims& dims, std::uint64_t seed);
};

/// Gradient (or Adam moment) holder mirroring the trainable tensors.
struct ParamGrads {
  Matrix w1_0, w2_0;
  Vector bn_scale, bn_shift;
  Matrix w1_1, w2_1;
  Matrix mlp_w1;
  Vector mlp_b1;
  Matrix mlp_w2;
  Vector mlp_b2;

  static ParamGrads zeros_like(const ModelParams& params);
};

// applies f(name, tensor, is_weight_matrix) to every trainable tensor;
// running batch-norm statistics are state, not parameters
template <typename P, typename F>
void visit_params(P& p, F&& f) {
  f("w1_0", p.w1_0, true);
  f("w2_0", p.w2_0, true);
  f("bn_scale", p.bn_scale, false);
  f("bn_shift", p.bn_shift, false);
  f("w1_1", p.w1_1, true);
  f("w2_1", p.w2_1, true);
  f("mlp_w1", p.mlp_w1, true);
  f("mlp_b1", p.mlp_b1, false);
  f("mlp_w2", p.mlp_w2, true);
  f("mlp_b2", p.mlp_b2, false);
}

struct HyperParams {
  double learning_rate = 0.004;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  int batch_size = 8;  // graphs per batch
  int epochs = 30;
  double lambda_edge = 0.1;
  double leaky_slope = 0.01;
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One graph ready for the model: operators, fused features, labels and
/// the row-normalized (A + I) edge-loss target.
struct GraphInstance {
  DgcOperators ops;
  Matrix x;
  std::vector<int> labels;
  Matrix p_target;
  Eigen::Index nodes = 0;
};

GraphInstance make_instance(const VideoGraph& graph, Matrix fused_features);

/// Everything backward needs; filled by forward, consumed by backward.
struct ForwardCache {
  bool ready = false;
  bool train = false;
  double dropout = 0.0;
  std::vector<Eigen::Index> offsets;  // per-graph start row, plus total
  Matrix z0, xhat, bn_out, h0, mask0, h_drop, z1, u1, mask1, u1_drop;
  Vector mu, var;
  Matrix logp, probs;
};

// Batched forward over whole graphs; rows of the result follow the batch
// order. In train mode batch-norm uses batch statistics and dropout draws
// masks from rng; eval mode uses running stats, no rng.
Matrix forward(const std::vector<const GraphInstance*>& batch,
               const ModelParams& params, const HyperParams& hyper, bool train,
               Rng* rng, ForwardCache* cache);

// folds the cache's batch statistics into the running mean/var
void update_running_stats(ModelParams& params, const ForwardCache& cache,
                          const HyperParams& hyper);

double loss_cls(const Matrix& logp, const std::vector<int>& labels);
double loss_edge(const Matrix& logp, const AdjacencyMatrix& adj);
double loss_total(double cls, double edge, double lambda);

// row-normalized (A + I)
Matrix edge_loss_target(const AdjacencyMatrix& adj);

ParamGrads backward(const ForwardCache& cache,
                    const std::vector<const GraphInstance*>& batch,
                    const ModelParams& params, const HyperParams& hyper,
                    double lambda);

struct AdamState {
  ParamGrads m, v;
  long step = 0;

  static AdamState init(const ModelParams& params);
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias correction); weight decay
// is coupled L2 on weight matrices only
void adam_step(ModelParams& params, const ParamGrads& grads, AdamState& state,
               const HyperParams& hyper);

struct LossRow {
  int epoch = 0;
  int batch = 0;
  double cls = 0.0;
  double edge = 0.0;
  double total = 0.0;
};

struct TrainResult {
  ModelParams params;
  AdamState state;
  std::vector<LossRow> log;
};

TrainResult train(const std::vector<GraphInstance>& dataset,
                  const ModelDims& dims, const HyperParams& hyper);

// "epoch,batch,loss_cls,loss_edge,loss_total"
std::string loss_log_csv(const std::vector<LossRow>& log);

struct Prediction {
  Matrix logp;
  std::vector<int> labels;  // argmax, ties toward the smaller class id
};

Prediction predict(const GraphInstance& instance, const ModelParams& params,
                   const HyperParams& hyper);

// checkpoint directory: manifest.json + one little-endian f64 blob per tensor
void save_checkpoint(const std::string& dir, const ModelParams& params,
                     const AdamState& state, const HyperParams& hyper,
                     int epoch);

struct Checkpoint {
  ModelParams params;
  AdamState state;
  HyperParams hyper;
  int epoch = 0;
};

Checkpoint load_checkpoint(const std::string& dir);

}  // namespace vidgraph
