#include "vidgraph/dgcn.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "vidgraph/matrix_io.hpp"

namespace vidgraph {

namespace fs = std::filesystem;

void HyperParams::validate() const {
  if (dropout < 0.0 || dropout >= 1.0) fail("hyper: dropout must be in [0, 1)");
  if (learning_rate <= 0.0) fail("hyper: learning rate must be positive");
  if (batch_size < 1 || epochs < 1) fail("hyper: counts must be >= 1");
  if (weight_decay < 0.0 || lambda_edge < 0.0) fail("hyper: negative rate");
}

DgcOperators dgc_operators(const AdjacencyMatrix& adj) {
  const Eigen::Index t = adj.a.rows();
  const Matrix tilde = adj.a + Matrix::Identity(t, t);
  const Matrix sym = tilde + tilde.transpose();
  const Vector scale_out = tilde.rowwise().sum().array().rsqrt().matrix();
  const Vector scale_in =
      tilde.colwise().sum().transpose().array().rsqrt().matrix();

  DgcOperators ops;
  ops.m_out = 0.5 * (scale_out.asDiagonal() * sym * scale_out.asDiagonal());
  ops.m_in = 0.5 * (scale_in.asDiagonal() * sym * scale_in.asDiagonal());
  return ops;
}

Matrix edge_loss_target(const AdjacencyMatrix& adj) {
  const Eigen::Index t = adj.a.rows();
  const Matrix p = adj.a + Matrix::Identity(t, t);
  const Vector row_sums = p.rowwise().sum();
  return row_sums.cwiseInverse().asDiagonal() * p;
}

GraphInstance make_instance(const VideoGraph& graph, Matrix fused_features) {
  if (fused_features.rows() != graph.node_count)
    fail("feature row count does not match graph node count");
  GraphInstance inst;
  const AdjacencyMatrix adj = adjacency(graph);
  inst.ops = dgc_operators(adj);
  inst.p_target = edge_loss_target(adj);
  inst.x = std::move(fused_features);
  inst.labels = graph.labels;
  inst.nodes = graph.node_count;
  return inst;
}

ModelParams ModelParams::init(const ModelDims& dims, std::uint64_t seed) {
  if (dims.classes < 1) fail("model dims: classes must be >= 1");
  ModelParams p;
  p.dims = dims;
  Rng rng(derive_seed(seed, 0x70a1));

  auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        m(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
    return m;
  };

  p.w1_0 = glorot(dims.d_in, dims.hidden);
  p.w2_0 = glorot(dims.d_in, dims.hidden);
  p.bn_scale = Vector::Ones(dims.hidden);
  p.bn_shift = Vector::Zero(dims.hidden);
  p.bn_running_mean = Vector::Zero(dims.hidden);
  p.bn_running_var = Vector::Ones(dims.hidden);
  p.w1_1 = glorot(dims.hidden, dims.hidden);
  p.w2_1 = glorot(dims.hidden, dims.hidden);
  p.mlp_w1 = glorot(dims.hidden, dims.mlp_hidden);
  p.mlp_b1 = Vector::Zero(dims.mlp_hidden);
  p.mlp_w2 = glorot(dims.mlp_hidden, dims.classes);
  p.mlp_b2 = Vector::Zero(dims.classes);
  return p;
}

ParamGrads ParamGrads::zeros_like(const ModelParams& params) {
  ParamGrads g;
  g.w1_0 = Matrix::Zero(params.w1_0.rows(), params.w1_0.cols());
  g.w2_0 = Matrix::Zero(params.w2_0.rows(), params.w2_0.cols());
  g.bn_scale = Vector::Zero(params.bn_scale.size());
  g.bn_shift = Vector::Zero(params.bn_shift.size());
  g.w1_1 = Matrix::Zero(params.w1_1.rows(), params.w1_1.cols());
  g.w2_1 = Matrix::Zero(params.w2_1.rows(), params.w2_1.cols());
  g.mlp_w1 = Matrix::Zero(params.mlp_w1.rows(), params.mlp_w1.cols());
  g.mlp_b1 = Vector::Zero(params.mlp_b1.size());
  g.mlp_w2 = Matrix::Zero(params.mlp_w2.rows(), params.mlp_w2.cols());
  g.mlp_b2 = Vector::Zero(params.mlp_b2.size());
  return g;
}

namespace {

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    const double lse = std::log((logits.row(r).array() - m).exp().sum()) + m;
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

Matrix draw_dropout_mask(Eigen::Index rows, Eigen::Index cols, double p,
                         Rng& rng) {
  const double keep_scale = 1.0 / (1.0 - p);
  Matrix mask(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      mask(r, c) = rng.uniform() < p ? 0.0 : keep_scale;
  return mask;
}

// (m_out X W1 + m_in X W2) / 2 graph by graph, stacked. X*W goes first to
// keep the big product at T x D x H instead of T x T x D, and every GEMM
// is a plain dst = A*B / dst += A*B so Eigen takes its blocked parallel
// path (the fused expression form is twice as slow at these sizes).
Matrix gcn_layer(const std::vector<const GraphInstance*>& batch,
                 const std::vector<Eigen::Index>& offsets, const Matrix& input,
                 const Matrix& w1, const Matrix& w2) {
  Matrix out(input.rows(), w1.cols());
  for (std::size_t g = 0; g < batch.size(); ++g) {
    const auto rows = batch[g]->nodes;
    const auto at = offsets[g];
    const auto block = input.middleRows(at, rows);
    const Matrix xw1 = block * w1;
    const Matrix xw2 = block * w2;
    Matrix mixed = batch[g]->ops.m_out * xw1;
    mixed.noalias() += batch[g]->ops.m_in * xw2;
    out.middleRows(at, rows) = 0.5 * mixed;
  }
  return out;
}

}  // namespace

Matrix forward(const std::vector<const GraphInstance*>& batch,
               const ModelParams& params, const HyperParams& hyper, bool train,
               Rng* rng, ForwardCache* cache) {
  if (batch.empty()) fail("forward: empty batch");
  std::vector<Eigen::Index> offsets;
  Eigen::Index total = 0;
  for (const GraphInstance* inst : batch) {
    if (inst->x.cols() != params.w1_0.rows())
      fail("forward: feature width " + std::to_string(inst->x.cols()) +
           " does not match model d_in " + std::to_string(params.w1_0.rows()));
    offsets.push_back(total);
    total += inst->nodes;
  }
  offsets.push_back(total);

  Matrix x(total, batch.front()->x.cols());
  for (std::size_t g = 0; g < batch.size(); ++g)
    x.middleRows(offsets[g], batch[g]->nodes) = batch[g]->x;

  const bool use_dropout = train && hyper.dropout > 0.0;
  if (use_dropout && rng == nullptr)
    fail("forward: train-mode dropout needs an rng");

  Matrix z0 = gcn_layer(batch, offsets, x, params.w1_0, params.w2_0);

  // 1d batch norm over all nodes of the batch jointly
  Vector mu, var;
  if (train) {
    const double n = static_cast<double>(z0.rows());
    mu = z0.colwise().mean().transpose();
    Matrix centered = z0;
    centered.rowwise() -= mu.transpose();
    var = (centered.array().square().colwise().sum() / n).matrix().transpose();
  } else {
    mu = params.bn_running_mean;
    var = params.bn_running_var;
  }
  const Vector inv_sigma = (var.array() + hyper.bn_eps).rsqrt().matrix();
  Matrix xhat = z0;
  xhat.rowwise() -= mu.transpose();
  xhat = xhat * inv_sigma.asDiagonal();

  Matrix bn_out = xhat * params.bn_scale.asDiagonal();
  bn_out.rowwise() += params.bn_shift.transpose();

  Matrix h0 = bn_out.array().max(bn_out.array() * hyper.leaky_slope).matrix();

  Matrix mask0, h_drop;
  if (use_dropout) {
    mask0 = draw_dropout_mask(h0.rows(), h0.cols(), hyper.dropout, *rng);
    h_drop = h0.cwiseProduct(mask0);
  } else {
    h_drop = h0;
  }

  Matrix z1 = gcn_layer(batch, offsets, h_drop, params.w1_1, params.w2_1);

  Matrix u1 = z1 * params.mlp_w1;
  u1.rowwise() += params.mlp_b1.transpose();
  Matrix mask1, u1_drop;
  if (use_dropout) {
    mask1 = draw_dropout_mask(u1.rows(), u1.cols(), hyper.dropout, *rng);
    u1_drop = u1.cwiseProduct(mask1);
  } else {
    u1_drop = u1;
  }
  Matrix logits = u1_drop * params.mlp_w2;
  logits.rowwise() += params.mlp_b2.transpose();
  Matrix logp = log_softmax_rows(logits);

  if (cache != nullptr) {
    cache->ready = true;
    cache->train = train;
    cache->dropout = use_dropout ? hyper.dropout : 0.0;
    cache->offsets = std::move(offsets);
    cache->z0 = std::move(z0);
    cache->mu = std::move(mu);
    cache->var = std::move(var);
    cache->xhat = std::move(xhat);
    cache->bn_out = std::move(bn_out);
    cache->h0 = std::move(h0);
    cache->mask0 = std::move(mask0);
    cache->h_drop = std::move(h_drop);
    cache->z1 = std::move(z1);
    cache->u1 = std::move(u1);
    cache->mask1 = std::move(mask1);
    cache->u1_drop = std::move(u1_drop);
    cache->probs = logp.array().exp().matrix();
    cache->logp = logp;
  }
  return logp;
}

void update_running_stats(ModelParams& params, const ForwardCache& cache,
                          const HyperParams& hyper) {
  if (!cache.ready || !cache.train)
    fail("running stats update needs a train-mode forward cache");
  const double n = static_cast<double>(cache.offsets.back());
  const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
  params.bn_running_mean = (1.0 - hyper.bn_momentum) * params.bn_running_mean +
                           hyper.bn_momentum * cache.mu;
  params.bn_running_var = (1.0 - hyper.bn_momentum) * params.bn_running_var +
                          hyper.bn_momentum * (unbias * cache.var);
}

double loss_cls(const Matrix& logp, const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logp.rows())
    fail("loss_cls: label count does not match rows");
  double total = 0.0;
  for (Eigen::Index i = 0; i < logp.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logp.cols()) fail("loss_cls: label out of range");
    total -= logp(i, y);
  }
  return total / static_cast<double>(logp.rows());
}

namespace {

constexpr double kEdgeEps = 1e-8;

// sum over rows of KL(P_i || Q_i) for one graph block, Q = row-normalized
// (p p^T + eps)
double edge_kl_sum(const Matrix& probs, const Matrix& p_target) {
  Matrix s = probs * probs.transpose();
  s.array() += kEdgeEps;
  const Vector row_sums = s.rowwise().sum();
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      const double p = p_target(i, j);
      if (p > 0.0) total += p * (std::log(p) - std::log(s(i, j) / row_sums(i)));
    }
  return total;
}

// d(edge KL sum * coeff)/d logp for one graph block
Matrix edge_kl_backward(const Matrix& probs, const Matrix& p_target,
                        double coeff) {
  Matrix s = probs * probs.transpose();
  s.array() += kEdgeEps;
  const Vector row_sums = s.rowwise().sum();
  Matrix g = p_target.cwiseQuotient(s);
  g -= row_sums.cwiseInverse().replicate(1, s.cols());
  g *= -coeff;
  Matrix dp = (g + g.transpose()) * probs;
  return dp.cwiseProduct(probs);  // chain through p = exp(logp)
}

}  // namespace

double loss_edge(const Matrix& logp, const AdjacencyMatrix& adj) {
  if (logp.rows() != adj.a.rows()) fail("loss_edge: row count mismatch");
  const Matrix probs = logp.array().exp().matrix();
  const Matrix p_target = edge_loss_target(adj);
  return edge_kl_sum(probs, p_target) / (2.0 * static_cast<double>(logp.rows()));
}

double loss_total(double cls, double edge, double lambda) {
  return cls + lambda * edge;
}

ParamGrads backward(const ForwardCache& cache,
                    const std::vector<const GraphInstance*>& batch,
                    const ModelParams& params, const HyperParams& hyper,
                    double lambda) {
  if (!cache.ready) fail("backward: stale forward cache");
  if (cache.offsets.size() != batch.size() + 1)
    fail("backward: cache does not match batch");
  for (std::size_t g = 0; g < batch.size(); ++g)
    if (cache.offsets[g + 1] - cache.offsets[g] != batch[g]->nodes)
      fail("backward: cache does not match batch");

  const Eigen::Index total = cache.offsets.back();
  const double n = static_cast<double>(total);

  // d loss / d logp: classification mean plus lambda-weighted edge term
  Matrix dlogp = Matrix::Zero(total, cache.logp.cols());
  for (std::size_t g = 0; g < batch.size(); ++g) {
    const auto at = cache.offsets[g];
    for (Eigen::Index i = 0; i < batch[g]->nodes; ++i) {
      const int y = batch[g]->labels[static_cast<std::size_t>(i)];
      dlogp(at + i, y) -= 1.0 / n;
    }
    if (lambda != 0.0) {
      const Matrix probs_block = cache.probs.middleRows(at, batch[g]->nodes);
      dlogp.middleRows(at, batch[g]->nodes) +=
          lambda *
          edge_kl_backward(probs_block, batch[g]->p_target, 1.0 / (2.0 * n));
    }
  }

  // log-softmax: dlogits = dlogp - diag(rowsum(dlogp)) * probs
  const Vector row_dot = dlogp.rowwise().sum();
  Matrix dlogits = dlogp - row_dot.asDiagonal() * cache.probs;

  ParamGrads grads = ParamGrads::zeros_like(params);

  // MLP head
  grads.mlp_w2 = cache.u1_drop.transpose() * dlogits;
  grads.mlp_b2 = dlogits.colwise().sum().transpose();
  Matrix du1 = dlogits * params.mlp_w2.transpose();
  if (cache.mask1.size() > 0) du1 = du1.cwiseProduct(cache.mask1);
  grads.mlp_w1 = cache.z1.transpose() * du1;
  grads.mlp_b1 = du1.colwise().sum().transpose();
  Matrix dz1 = du1 * params.mlp_w1.transpose();

  // layer-1 graph convolution
  Matrix dh_drop(total, params.w1_1.rows());
  for (std::size_t g = 0; g < batch.size(); ++g) {
    const auto at = cache.offsets[g];
    const auto rows = batch[g]->nodes;
    const Matrix m_out_dz =
        batch[g]->ops.m_out.transpose() * dz1.middleRows(at, rows);
    const Matrix m_in_dz =
        batch[g]->ops.m_in.transpose() * dz1.middleRows(at, rows);
    const auto h_block = cache.h_drop.middleRows(at, rows);
    grads.w1_1.noalias() += 0.5 * (h_block.transpose() * m_out_dz);
    grads.w2_1.noalias() += 0.5 * (h_block.transpose() * m_in_dz);
    Matrix back = m_out_dz * params.w1_1.transpose();
    back.noalias() += m_in_dz * params.w2_1.transpose();
    dh_drop.middleRows(at, rows) = 0.5 * back;
  }

  Matrix dh0 = std::move(dh_drop);
  if (cache.mask0.size() > 0) dh0 = dh0.cwiseProduct(cache.mask0);

  // LeakyReLU: 1 where the pre-activation was positive, slope elsewhere
  const Matrix relu_grad = ((cache.bn_out.array() > 0.0).cast<double>() *
                                (1.0 - hyper.leaky_slope) +
                            hyper.leaky_slope)
                               .matrix();
  Matrix dbn_out = dh0.cwiseProduct(relu_grad);

  // batch norm
  grads.bn_scale = dbn_out.cwiseProduct(cache.xhat).colwise().sum().transpose();
  grads.bn_shift = dbn_out.colwise().sum().transpose();
  Matrix dxhat = dbn_out * params.bn_scale.asDiagonal();
  const Vector inv_sigma = (cache.var.array() + hyper.bn_eps).rsqrt().matrix();
  Matrix dz0;
  if (cache.train) {
    const RowVector sum_dxhat = dxhat.colwise().sum();
    const RowVector sum_dxhat_xhat =
        dxhat.cwiseProduct(cache.xhat).colwise().sum();
    dz0 = n * dxhat;
    dz0.rowwise() -= sum_dxhat;
    dz0 -= cache.xhat * sum_dxhat_xhat.transpose().asDiagonal();
    dz0 = (dz0 * inv_sigma.asDiagonal()) / n;
  } else {
    dz0 = dxhat * inv_sigma.asDiagonal();
  }

  // layer-0 graph convolution
  for (std::size_t g = 0; g < batch.size(); ++g) {
    const auto at = cache.offsets[g];
    const auto rows = batch[g]->nodes;
    const auto dz_block = dz0.middleRows(at, rows);
    const Matrix m_out_dz = batch[g]->ops.m_out.transpose() * dz_block;
    const Matrix m_in_dz = batch[g]->ops.m_in.transpose() * dz_block;
    grads.w1_0.noalias() += 0.5 * (batch[g]->x.transpose() * m_out_dz);
    grads.w2_0.noalias() += 0.5 * (batch[g]->x.transpose() * m_in_dz);
  }

  return grads;
}

AdamState AdamState::init(const ModelParams& params) {
  AdamState state;
  state.m = ParamGrads::zeros_like(params);
  state.v = ParamGrads::zeros_like(params);
  state.step = 0;
  return state;
}

void adam_step(ModelParams& params, const ParamGrads& grads, AdamState& state,
               const HyperParams& hyper) {
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));

  auto update = [&](auto& param, const auto& grad, auto& m, auto& v,
                    bool is_weight) {
    auto g = grad.eval();
    if (is_weight && hyper.weight_decay != 0.0) g += hyper.weight_decay * param;
    m = beta1 * m + (1.0 - beta1) * g;
    v = (beta2 * v.array() + (1.0 - beta2) * g.array().square()).matrix();
    param.array() -=
        hyper.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  };

  update(params.w1_0, grads.w1_0, state.m.w1_0, state.v.w1_0, true);
  update(params.w2_0, grads.w2_0, state.m.w2_0, state.v.w2_0, true);
  update(params.bn_scale, grads.bn_scale, state.m.bn_scale, state.v.bn_scale, false);
  update(params.bn_shift, grads.bn_shift, state.m.bn_shift, state.v.bn_shift, false);
  update(params.w1_1, grads.w1_1, state.m.w1_1, state.v.w1_1, true);
  update(params.w2_1, grads.w2_1, state.m.w2_1, state.v.w2_1, true);
  update(params.mlp_w1, grads.mlp_w1, state.m.mlp_w1, state.v.mlp_w1, true);
  update(params.mlp_b1, grads.mlp_b1, state.m.mlp_b1, state.v.mlp_b1, false);
  update(params.mlp_w2, grads.mlp_w2, state.m.mlp_w2, state.v.mlp_w2, true);
  update(params.mlp_b2, grads.mlp_b2, state.m.mlp_b2, state.v.mlp_b2, false);
}

TrainResult train(const std::vector<GraphInstance>& dataset,
                  const ModelDims& dims, const HyperParams& hyper) {
  hyper.validate();
  if (dataset.empty()) fail("train: empty dataset");

  TrainResult result;
  result.params = ModelParams::init(dims, hyper.seed);
  result.state = AdamState::init(result.params);
  Rng rng(derive_seed(hyper.seed, 0xd60b));

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    int batch_index = 0;
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(hyper.batch_size), ++batch_index) {
      std::vector<const GraphInstance*> batch;
      std::vector<int> labels;
      const std::size_t end =
          std::min(order.size(), at + static_cast<std::size_t>(hyper.batch_size));
      for (std::size_t k = at; k < end; ++k) {
        batch.push_back(&dataset[order[k]]);
        labels.insert(labels.end(), dataset[order[k]].labels.begin(),
                      dataset[order[k]].labels.end());
      }

      ForwardCache cache;
      const Matrix logp = forward(batch, result.params, hyper, true, &rng, &cache);
      update_running_stats(result.params, cache, hyper);

      const double cls = loss_cls(logp, labels);
      double edge = 0.0;
      if (hyper.lambda_edge != 0.0) {
        double kl = 0.0;
        for (std::size_t g = 0; g < batch.size(); ++g) {
          const Matrix block =
              cache.probs.middleRows(cache.offsets[g], batch[g]->nodes);
          kl += edge_kl_sum(block, batch[g]->p_target);
        }
        edge = kl / (2.0 * static_cast<double>(logp.rows()));
      }
      result.log.push_back({epoch, batch_index, cls, edge,
                            loss_total(cls, edge, hyper.lambda_edge)});

      const ParamGrads grads =
          backward(cache, batch, result.params, hyper, hyper.lambda_edge);
      adam_step(result.params, grads, result.state, hyper);
    }
  }
  return result;
}

std::string loss_log_csv(const std::vector<LossRow>& log) {
  std::ostringstream out;
  out << "epoch,batch,loss_cls,loss_edge,loss_total\n";
  out.precision(17);
  for (const LossRow& row : log)
    out << row.epoch << ',' << row.batch << ',' << row.cls << ',' << row.edge
        << ',' << row.total << '\n';
  return out.str();
}

Prediction predict(const GraphInstance& instance, const ModelParams& params,
                   const HyperParams& hyper) {
  Prediction pred;
  const std::vector<const GraphInstance*> batch{&instance};
  pred.logp = forward(batch, params, hyper, false, nullptr, nullptr);
  pred.labels.resize(static_cast<std::size_t>(pred.logp.rows()));
  for (Eigen::Index i = 0; i < pred.logp.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < pred.logp.cols(); ++c)
      if (pred.logp(i, c) > pred.logp(i, best)) best = static_cast<int>(c);
    pred.labels[static_cast<std::size_t>(i)] = best;
  }
  return pred;
}

namespace {

nlohmann::ordered_json hyper_to_json(const HyperParams& hyper) {
  return {{"learning_rate", hyper.learning_rate},
          {"weight_decay", hyper.weight_decay},
          {"dropout", hyper.dropout},
          {"batch_size", hyper.batch_size},
          {"epochs", hyper.epochs},
          {"lambda_edge", hyper.lambda_edge},
          {"leaky_slope", hyper.leaky_slope},
          {"bn_momentum", hyper.bn_momentum},
          {"bn_eps", hyper.bn_eps},
          {"seed", hyper.seed}};
}

HyperParams hyper_from_json(const nlohmann::json& j) {
  HyperParams h;
  h.learning_rate = j.at("learning_rate").get<double>();
  h.weight_decay = j.at("weight_decay").get<double>();
  h.dropout = j.at("dropout").get<double>();
  h.batch_size = j.at("batch_size").get<int>();
  h.epochs = j.at("epochs").get<int>();
  h.lambda_edge = j.at("lambda_edge").get<double>();
  h.leaky_slope = j.at("leaky_slope").get<double>();
  h.bn_momentum = j.at("bn_momentum").get<double>();
  h.bn_eps = j.at("bn_eps").get<double>();
  h.seed = j.at("seed").get<std::uint64_t>();
  return h;
}

void save_tensor(const fs::path& dir, const std::string& name, const Matrix& m,
                 nlohmann::ordered_json& tensors) {
  const std::string file = name + ".bin";
  save_blob_f64((dir / file).string(), m);
  tensors.push_back({{"name", name},
                     {"rows", m.rows()},
                     {"cols", m.cols()},
                     {"dtype", "f64"},
                     {"file", file}});
}

}  // namespace

void save_checkpoint(const std::string& dir, const ModelParams& params,
                     const AdamState& state, const HyperParams& hyper,
                     int epoch) {
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["schema_version"] = 1;
  manifest["dims"] = {{"d_in", params.dims.d_in},
                      {"hidden", params.dims.hidden},
                      {"mlp_hidden", params.dims.mlp_hidden},
                      {"classes", params.dims.classes}};
  manifest["hyper"] = hyper_to_json(hyper);
  manifest["seed"] = hyper.seed;
  manifest["epoch"] = epoch;
  manifest["adam_step"] = state.step;

  auto& tensors = manifest["tensors"] = nlohmann::ordered_json::array();
  visit_params(params, [&](const char* name, const auto& tensor, bool) {
    save_tensor(dir, name, tensor, tensors);
  });
  save_tensor(dir, "bn_running_mean", params.bn_running_mean, tensors);
  save_tensor(dir, "bn_running_var", params.bn_running_var, tensors);
  visit_params(state.m, [&](const char* name, const auto& tensor, bool) {
    save_tensor(dir, std::string("adam_m_") + name, tensor, tensors);
  });
  visit_params(state.v, [&](const char* name, const auto& tensor, bool) {
    save_tensor(dir, std::string("adam_v_") + name, tensor, tensors);
  });

  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!out) fail("cannot write checkpoint manifest in " + dir);
  out << manifest.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) fail("cannot open checkpoint manifest in " + dir);
  nlohmann::json manifest;
  in >> manifest;
  if (manifest.at("schema_version").get<int>() != 1)
    fail("unsupported checkpoint schema version");

  Checkpoint ckpt;
  ckpt.hyper = hyper_from_json(manifest.at("hyper"));
  ckpt.epoch = manifest.at("epoch").get<int>();

  ModelDims dims;
  dims.d_in = manifest.at("dims").at("d_in").get<Eigen::Index>();
  dims.hidden = manifest.at("dims").at("hidden").get<Eigen::Index>();
  dims.mlp_hidden = manifest.at("dims").at("mlp_hidden").get<Eigen::Index>();
  dims.classes = manifest.at("dims").at("classes").get<Eigen::Index>();

  std::map<std::string, std::pair<Eigen::Index, Eigen::Index>> shapes;
  std::map<std::string, std::string> files;
  for (const auto& t : manifest.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    shapes[name] = {t.at("rows").get<Eigen::Index>(),
                    t.at("cols").get<Eigen::Index>()};
    files[name] = t.at("file").get<std::string>();
  }
  auto load = [&](const std::string& name) {
    auto it = shapes.find(name);
    if (it == shapes.end()) fail("checkpoint missing tensor " + name);
    return load_blob_f64((fs::path(dir) / files[name]).string(),
                         it->second.first, it->second.second);
  };

  ckpt.params.dims = dims;
  visit_params(ckpt.params,
               [&](const char* name, auto& tensor, bool) { tensor = load(name); });
  ckpt.params.bn_running_mean = load("bn_running_mean");
  ckpt.params.bn_running_var = load("bn_running_var");
  ckpt.state.step = manifest.at("adam_step").get<long>();
  visit_params(ckpt.state.m, [&](const char* name, auto& tensor, bool) {
    tensor = load(std::string("adam_m_") + name);
  });
  visit_params(ckpt.state.v, [&](const char* name, auto& tensor, bool) {
    tensor = load(std::string("adam_v_") + name);
  });
  return ckpt;
}

}  // namespace vidgraph
