#include "graphreason/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graphreason/error.hpp"

namespace graphreason {

namespace {

void fill_uniform(Eigen::MatrixXd& m, double lo, double hi, Rng& rng) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.uniform(lo, hi);
    }
  }
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::Validation,
                std::string(what) + ": non-finite value");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

SageParams SageParams::init(const std::vector<int>& dims, Rng& rng) {
  if (dims.size() < 2) {
    throw Error(ErrorKind::Config, "encoder needs at least one layer");
  }
  SageParams params;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    SageLayer layer;
    layer.w_self.resize(dims[l + 1], dims[l]);
    layer.w_neigh.resize(dims[l + 1], dims[l]);
    fill_uniform(layer.w_self, -bound, bound, rng);
    fill_uniform(layer.w_neigh, -bound, bound, rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

int SageParams::input_dim() const {
  return static_cast<int>(layers.front().w_self.cols());
}

int SageParams::output_dim() const {
  return static_cast<int>(layers.back().w_self.rows());
}

void SageParams::validate() const {
  if (layers.empty()) {
    throw Error(ErrorKind::Validation, "encoder has no layers");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.w_self.rows() != layer.w_neigh.rows() ||
        layer.w_self.cols() != layer.w_neigh.cols()) {
      throw Error(ErrorKind::Validation,
                  "layer " + std::to_string(l) + ": w_self/w_neigh shapes differ");
    }
    if (l > 0 && layers[l - 1].w_self.rows() != layer.w_self.cols()) {
      throw Error(ErrorKind::Validation,
                  "layer " + std::to_string(l) + ": dimension chain broken");
    }
    check_finite(layer.w_self, "w_self");
    check_finite(layer.w_neigh, "w_neigh");
  }
}

Projector Projector::init(int tokens, int token_dim, int enc_dim, Rng& rng) {
  if (tokens < 1 || token_dim < 1 || enc_dim < 1) {
    throw Error(ErrorKind::Config, "projector dimensions must be positive");
  }
  Projector proj;
  proj.tokens = tokens;
  proj.token_dim = token_dim;
  const double bound = 1.0 / std::sqrt(static_cast<double>(enc_dim));
  proj.weight.resize(static_cast<Eigen::Index>(tokens) * token_dim, enc_dim);
  fill_uniform(proj.weight, -bound, bound, rng);
  proj.bias = Eigen::VectorXd::Zero(proj.weight.rows());
  return proj;
}

void Projector::validate() const {
  if (tokens < 1 || token_dim < 1) {
    throw Error(ErrorKind::Validation, "projector token shape invalid");
  }
  if (weight.rows() != static_cast<Eigen::Index>(tokens) * token_dim ||
      bias.size() != weight.rows()) {
    throw Error(ErrorKind::Validation, "projector shapes inconsistent");
  }
  check_finite(weight, "projector weight");
  if (!bias.allFinite()) {
    throw Error(ErrorKind::Validation, "projector bias: non-finite value");
  }
}

TrainState TrainState::init(const Projector& proj, AdamHyper hyper,
                            std::uint64_t seed) {
  TrainState state;
  state.m_weight = Eigen::MatrixXd::Zero(proj.weight.rows(), proj.weight.cols());
  state.v_weight = state.m_weight;
  state.m_bias = Eigen::VectorXd::Zero(proj.bias.size());
  state.v_bias = state.m_bias;
  state.hyper = hyper;
  state.seed = seed;
  return state;
}

// ---------------------------------------------------------------------------
// Forward passes

Eigen::MatrixXd to_dense(const EmbeddingMatrix& e) {
  return e.data.cast<double>();
}

EmbeddingMatrix to_embedding(const Eigen::MatrixXd& m) {
  EmbeddingMatrix e;
  e.data = m.cast<float>();
  return e;
}

namespace {

/// Row-wise neighbor means; zero row for isolated nodes.
Eigen::MatrixXd neighbor_means(const TextAttributedGraph& graph,
                               const Eigen::MatrixXd& h) {
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(h.rows(), h.cols());
  for (NodeId v = 0; v < graph.node_count(); ++v) {
    const auto nbrs = graph.neighbors(v);
    if (nbrs.empty()) continue;
    for (NodeId u : nbrs) {
      means.row(v) += h.row(u);
    }
    means.row(v) /= static_cast<double>(nbrs.size());
  }
  return means;
}

struct SageCache {
  std::vector<Eigen::MatrixXd> inputs;   // H^0 .. H^{L-1}
  std::vector<Eigen::MatrixXd> means;    // neighbor means of each input
  std::vector<Eigen::MatrixXd> preacts;  // Z^1 .. Z^L
  Eigen::MatrixXd output;
};

SageCache sage_forward_cached(const TextAttributedGraph& graph,
                              const Eigen::MatrixXd& x,
                              const SageParams& params) {
  if (x.cols() != params.input_dim()) {
    throw Error(ErrorKind::Dimension,
                "sage_forward: input dim " + std::to_string(x.cols()) +
                    " does not match layer 1 dim " +
                    std::to_string(params.input_dim()));
  }
  if (static_cast<std::size_t>(x.rows()) != graph.node_count()) {
    throw Error(ErrorKind::Dimension,
                "sage_forward: row count does not match node count");
  }
  SageCache cache;
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    Eigen::MatrixXd means = neighbor_means(graph, h);
    Eigen::MatrixXd z = h * layer.w_self.transpose() +
                        means * layer.w_neigh.transpose();
    cache.inputs.push_back(std::move(h));
    cache.means.push_back(std::move(means));
    const bool rectify =
        l + 1 < params.layers.size() || params.activation_after_last;
    h = rectify ? z.cwiseMax(0.0) : z;
    cache.preacts.push_back(std::move(z));
  }
  cache.output = h;
  return cache;
}

struct SageGrads {
  std::vector<SageLayer> layers;
};

/// Backpropagates dL/dH^L through the cached forward pass. Returns per-layer
/// weight gradients; the input gradient is discarded (features are fixed).
SageGrads sage_backward(const TextAttributedGraph& graph,
                        const SageParams& params, const SageCache& cache,
                        const Eigen::MatrixXd& grad_output) {
  SageGrads grads;
  grads.layers.resize(params.layers.size());
  Eigen::MatrixXd dh = grad_output;
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& layer = params.layers[l];
    const bool rectify =
        l + 1 < params.layers.size() || params.activation_after_last;
    Eigen::MatrixXd dz =
        rectify
            ? (cache.preacts[l].array() > 0.0).select(dh, 0.0).eval()
            : dh;
    grads.layers[l].w_self = dz.transpose() * cache.inputs[l];
    grads.layers[l].w_neigh = dz.transpose() * cache.means[l];
    if (l == 0) break;
    Eigen::MatrixXd dmean = dz * layer.w_neigh;
    dh = dz * layer.w_self;
    for (NodeId v = 0; v < graph.node_count(); ++v) {
      const auto nbrs = graph.neighbors(v);
      if (nbrs.empty()) continue;
      const double inv = 1.0 / static_cast<double>(nbrs.size());
      for (NodeId u : nbrs) {
        dh.row(u) += inv * dmean.row(v);
      }
    }
  }
  return grads;
}

}  // namespace

Eigen::MatrixXd sage_forward_dense(const TextAttributedGraph& graph,
                                   const Eigen::MatrixXd& x,
                                   const SageParams& params) {
  return sage_forward_cached(graph, x, params).output;
}

EmbeddingMatrix sage_forward(const TextAttributedGraph& graph,
                             const EmbeddingMatrix& x,
                             const SageParams& params) {
  return to_embedding(sage_forward_dense(graph, to_dense(x), params));
}

std::vector<Eigen::VectorXd> project_tokens(const Eigen::VectorXd& h,
                                            const Projector& proj) {
  if (h.size() != proj.weight.cols()) {
    throw Error(ErrorKind::Dimension,
                "project_tokens: input dim " + std::to_string(h.size()) +
                    " does not match projector dim " +
                    std::to_string(proj.weight.cols()));
  }
  const Eigen::VectorXd z = proj.weight * h + proj.bias;
  std::vector<Eigen::VectorXd> tokens;
  tokens.reserve(proj.tokens);
  for (int t = 0; t < proj.tokens; ++t) {
    tokens.push_back(z.segment(static_cast<Eigen::Index>(t) * proj.token_dim,
                               proj.token_dim));
  }
  return tokens;
}

Eigen::VectorXd pooled_projection(const Eigen::VectorXd& h,
                                  const Projector& proj) {
  const auto tokens = project_tokens(h, proj);
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(proj.token_dim);
  for (const auto& token : tokens) pooled += token;
  return pooled / static_cast<double>(tokens.size());
}

// ---------------------------------------------------------------------------
// Losses

namespace {

struct CosineParts {
  double value = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
};

CosineParts cosine_parts(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  CosineParts parts;
  parts.norm_a = a.norm();
  parts.norm_b = b.norm();
  if (parts.norm_a > 0.0 && parts.norm_b > 0.0) {
    parts.value = a.dot(b) / (parts.norm_a * parts.norm_b);
  }
  return parts;
}

/// d cos(a, b) / d a; zero when either vector has zero norm.
Eigen::VectorXd cosine_grad_a(const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b,
                              const CosineParts& parts) {
  if (parts.norm_a == 0.0 || parts.norm_b == 0.0) {
    return Eigen::VectorXd::Zero(a.size());
  }
  return b / (parts.norm_a * parts.norm_b) -
         parts.value / (parts.norm_a * parts.norm_a) * a;
}

Eigen::VectorXd stable_softmax(const Eigen::VectorXd& logits) {
  const double max = logits.maxCoeff();
  Eigen::VectorXd p = (logits.array() - max).exp();
  return p / p.sum();
}

}  // namespace

InfoNceResult infonce_loss(const std::vector<Eigen::VectorXd>& graph_reps,
                           const std::vector<Eigen::VectorXd>& text_reps,
                           double tau) {
  const std::size_t batch = graph_reps.size();
  if (batch == 0) {
    throw Error(ErrorKind::Validation, "infonce_loss: empty batch");
  }
  if (text_reps.size() != batch) {
    throw Error(ErrorKind::Dimension,
                "infonce_loss: graph/text batch sizes differ");
  }
  if (tau <= 0.0) {
    throw Error(ErrorKind::Validation, "infonce_loss: tau must be positive");
  }

  Eigen::MatrixXd scores(batch, batch);
  std::vector<std::vector<CosineParts>> parts(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    parts[i].resize(batch);
    for (std::size_t j = 0; j < batch; ++j) {
      parts[i][j] = cosine_parts(graph_reps[i], text_reps[j]);
      scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parts[i][j].value / tau;
    }
  }

  InfoNceResult result;
  result.grad_graph_reps.assign(batch, Eigen::VectorXd());
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    const Eigen::VectorXd row = scores.row(static_cast<Eigen::Index>(i));
    const double max = row.maxCoeff();
    const double lse = max + std::log((row.array() - max).exp().sum());
    result.loss += (lse - row(static_cast<Eigen::Index>(i))) * inv_batch;

    const Eigen::VectorXd q = stable_softmax(row);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(graph_reps[i].size());
    for (std::size_t j = 0; j < batch; ++j) {
      double coeff = q(static_cast<Eigen::Index>(j));
      if (j == i) coeff -= 1.0;
      if (coeff == 0.0) continue;
      grad += coeff *
              cosine_grad_a(graph_reps[i], text_reps[j], parts[i][j]);
    }
    result.grad_graph_reps[i] = grad * (inv_batch / tau);
  }
  return result;
}

namespace {

Eigen::VectorXd score_logits(const Eigen::VectorXd& pooled,
                             const Eigen::MatrixXd& label_embs, double tau) {
  Eigen::VectorXd logits(label_embs.rows());
  for (Eigen::Index c = 0; c < label_embs.rows(); ++c) {
    const Eigen::VectorXd label = label_embs.row(c).transpose();
    logits(c) = cosine_parts(pooled, label).value / tau;
  }
  return logits;
}

Eigen::VectorXd mean_token(const std::vector<Eigen::VectorXd>& tokens) {
  if (tokens.empty()) {
    throw Error(ErrorKind::Validation, "score_labels_mock: no tokens");
  }
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(tokens.front().size());
  for (const auto& token : tokens) {
    if (token.size() != pooled.size()) {
      throw Error(ErrorKind::Dimension, "score_labels_mock: ragged tokens");
    }
    pooled += token;
  }
  return pooled / static_cast<double>(tokens.size());
}

}  // namespace

Eigen::VectorXd score_labels_mock(const std::vector<Eigen::VectorXd>& tokens,
                                  const Eigen::MatrixXd& label_embs,
                                  double tau) {
  if (label_embs.rows() < 1) {
    throw Error(ErrorKind::Validation, "score_labels_mock: no labels");
  }
  if (tau <= 0.0) {
    throw Error(ErrorKind::Validation, "score_labels_mock: tau must be positive");
  }
  return stable_softmax(score_logits(mean_token(tokens), label_embs, tau));
}

NllScoreResult nll_score_mock(const std::vector<Eigen::VectorXd>& tokens,
                              const Eigen::MatrixXd& label_embs, double tau,
                              int target) {
  if (target < 0 || target >= label_embs.rows()) {
    throw Error(ErrorKind::Validation, "nll_score_mock: target out of range");
  }
  if (tau <= 0.0) {
    throw Error(ErrorKind::Validation, "nll_score_mock: tau must be positive");
  }
  const Eigen::VectorXd pooled = mean_token(tokens);
  const Eigen::VectorXd logits = score_logits(pooled, label_embs, tau);

  const double max = logits.maxCoeff();
  const double lse = max + std::log((logits.array() - max).exp().sum());

  NllScoreResult result;
  result.loss = lse - logits(target);

  Eigen::VectorXd p = stable_softmax(logits);
  p(target) -= 1.0;
  Eigen::VectorXd dpooled = Eigen::VectorXd::Zero(pooled.size());
  for (Eigen::Index c = 0; c < label_embs.rows(); ++c) {
    if (p(c) == 0.0) continue;
    const Eigen::VectorXd label = label_embs.row(c).transpose();
    dpooled += (p(c) / tau) * cosine_grad_a(pooled, label,
                                            cosine_parts(pooled, label));
  }
  const double inv_tokens = 1.0 / static_cast<double>(tokens.size());
  result.grad_tokens.assign(tokens.size(), dpooled * inv_tokens);
  return result;
}

// ---------------------------------------------------------------------------
// Training

namespace {

template <typename Mat>
void adam_update(Mat& param, const Mat& grad, Mat& m, Mat& v, long step,
                 const AdamHyper& h) {
  m = h.beta1 * m + (1.0 - h.beta1) * grad;
  v = (h.beta2 * v.array() + (1.0 - h.beta2) * grad.array().square()).matrix();
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
  param.array() -=
      h.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + h.eps);
}

struct ProjectorGrads {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

ProjectorGrads zero_grads(const Projector& proj) {
  return {Eigen::MatrixXd::Zero(proj.weight.rows(), proj.weight.cols()),
          Eigen::VectorXd::Zero(proj.bias.size())};
}

Eigen::VectorXd stack_token_grads(const std::vector<Eigen::VectorXd>& grads,
                                  int token_dim) {
  Eigen::VectorXd dz(static_cast<Eigen::Index>(grads.size()) * token_dim);
  for (std::size_t t = 0; t < grads.size(); ++t) {
    dz.segment(static_cast<Eigen::Index>(t) * token_dim, token_dim) = grads[t];
  }
  return dz;
}

}  // namespace

Projector train_projector_nll(const TextAttributedGraph& graph,
                              const EmbeddingMatrix& x,
                              const DatasetSplit& split, Projector proj,
                              const SageParams& sage,
                              const Eigen::MatrixXd& label_embs,
                              const AdaptConfig& config, LossCurve* curve) {
  if (config.backend != ScoringBackendKind::Mock) {
    throw Error(ErrorKind::UnsupportedBackend,
                "projector adaptation requires the differentiable mock "
                "scoring backend; HTTP and replay backends are inference-only");
  }
  if (split.train_ids.empty()) {
    throw Error(ErrorKind::Validation, "train split is empty");
  }
  if (label_embs.cols() != proj.token_dim) {
    throw Error(ErrorKind::Dimension,
                "label embedding dim does not match token dim");
  }
  proj.validate();
  sage.validate();

  const Eigen::MatrixXd h_all = sage_forward_dense(graph, to_dense(x), sage);
  std::vector<int> targets;
  targets.reserve(split.train_ids.size());
  for (NodeId v : split.train_ids) {
    if (!graph.valid_node(v)) {
      throw Error(ErrorKind::Validation,
                  "train node " + std::to_string(v) + " is out of range");
    }
    const auto label = graph.label(v);
    if (!label) {
      throw Error(ErrorKind::Validation,
                  "train node " + std::to_string(v) + " has no label");
    }
    targets.push_back(*label);
  }

  const double inv_count = 1.0 / static_cast<double>(split.train_ids.size());
  auto mean_loss_and_grads = [&](ProjectorGrads* grads) {
    double total = 0.0;
    for (std::size_t i = 0; i < split.train_ids.size(); ++i) {
      const Eigen::VectorXd h = h_all.row(split.train_ids[i]).transpose();
      const auto tokens = project_tokens(h, proj);
      const auto scored =
          nll_score_mock(tokens, label_embs, config.tau, targets[i]);
      total += scored.loss;
      if (grads) {
        const Eigen::VectorXd dz =
            stack_token_grads(scored.grad_tokens, proj.token_dim);
        grads->weight += dz * h.transpose();
        grads->bias += dz;
      }
    }
    if (grads) {
      grads->weight *= inv_count;
      grads->bias *= inv_count;
    }
    return total * inv_count;
  };

  TrainState state = TrainState::init(proj, config.hyper, config.seed);
  for (int step = 0; step < config.steps; ++step) {
    ProjectorGrads grads = zero_grads(proj);
    const double loss = mean_loss_and_grads(&grads);
    if (curve) curve->emplace_back(step, loss);
    ++state.step;
    adam_update(proj.weight, grads.weight, state.m_weight, state.v_weight,
                state.step, state.hyper);
    adam_update(proj.bias, grads.bias, state.m_bias, state.v_bias, state.step,
                state.hyper);
  }
  if (curve) curve->emplace_back(config.steps, mean_loss_and_grads(nullptr));
  return proj;
}

ProjectorGradients contrastive_gradient(const Eigen::MatrixXd& encoder_out,
                                        const Eigen::MatrixXd& text_reps,
                                        const Projector& proj,
                                        const std::vector<NodeId>& ids,
                                        double tau,
                                        Eigen::MatrixXd* grad_encoder_out) {
  std::vector<Eigen::VectorXd> graph_reps, batch_text;
  graph_reps.reserve(ids.size());
  batch_text.reserve(ids.size());
  for (NodeId v : ids) {
    graph_reps.push_back(pooled_projection(encoder_out.row(v).transpose(), proj));
    batch_text.push_back(text_reps.row(v).transpose());
  }
  const InfoNceResult nce = infonce_loss(graph_reps, batch_text, tau);

  ProjectorGradients grads;
  grads.loss = nce.loss;
  grads.weight = Eigen::MatrixXd::Zero(proj.weight.rows(), proj.weight.cols());
  grads.bias = Eigen::VectorXd::Zero(proj.bias.size());
  if (grad_encoder_out) {
    grad_encoder_out->setZero(encoder_out.rows(), encoder_out.cols());
  }
  const double inv_tokens = 1.0 / static_cast<double>(proj.tokens);
  Eigen::VectorXd dz(proj.weight.rows());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Eigen::VectorXd h = encoder_out.row(ids[i]).transpose();
    // Pooled rep is the token mean, so every token slice shares the pooled
    // gradient scaled by 1/T.
    for (int t = 0; t < proj.tokens; ++t) {
      dz.segment(static_cast<Eigen::Index>(t) * proj.token_dim,
                 proj.token_dim) = nce.grad_graph_reps[i] * inv_tokens;
    }
    grads.weight += dz * h.transpose();
    grads.bias += dz;
    if (grad_encoder_out) {
      grad_encoder_out->row(ids[i]) += (proj.weight.transpose() * dz).transpose();
    }
  }
  return grads;
}

std::vector<SageLayer> contrastive_encoder_gradient(
    const TextAttributedGraph& graph, const Eigen::MatrixXd& x,
    const Eigen::MatrixXd& text_reps, const Projector& proj,
    const SageParams& sage, const std::vector<NodeId>& ids, double tau) {
  const SageCache cache = sage_forward_cached(graph, x, sage);
  Eigen::MatrixXd dh;
  contrastive_gradient(cache.output, text_reps, proj, ids, tau, &dh);
  return sage_backward(graph, sage, cache, dh).layers;
}

Projector pretrain_contrastive(const TextAttributedGraph& graph,
                               const EmbeddingMatrix& x,
                               const EmbeddingMatrix& text_embs,
                               Projector proj, SageParams& sage,
                               const ContrastiveConfig& config,
                               LossCurve* curve) {
  const std::size_t n = graph.node_count();
  if (config.batch < 1 ||
      static_cast<std::size_t>(config.batch) > n) {
    throw Error(ErrorKind::Validation,
                "batch size " + std::to_string(config.batch) +
                    " exceeds node count " + std::to_string(n));
  }
  if (static_cast<std::size_t>(text_embs.rows()) != n) {
    throw Error(ErrorKind::Dimension,
                "text embedding rows do not match node count");
  }
  if (text_embs.dim() != proj.token_dim) {
    throw Error(ErrorKind::Dimension,
                "text embedding dim does not match token dim");
  }
  proj.validate();
  sage.validate();

  const Eigen::MatrixXd x_dense = to_dense(x);
  const Eigen::MatrixXd text_dense = to_dense(text_embs);

  std::vector<NodeId> all_ids(n);
  std::iota(all_ids.begin(), all_ids.end(), 0);
  SageCache frozen_cache;
  if (!config.train_encoder) {
    frozen_cache = sage_forward_cached(graph, x_dense, sage);
  }
  auto full_loss = [&]() {
    Eigen::MatrixXd h_storage;
    const Eigen::MatrixXd* h_all = &frozen_cache.output;
    if (config.train_encoder) {
      h_storage = sage_forward_dense(graph, x_dense, sage);
      h_all = &h_storage;
    }
    std::vector<Eigen::VectorXd> graph_reps, text_reps;
    graph_reps.reserve(n);
    text_reps.reserve(n);
    for (NodeId v : all_ids) {
      graph_reps.push_back(pooled_projection(h_all->row(v).transpose(), proj));
      text_reps.push_back(text_dense.row(v).transpose());
    }
    return infonce_loss(graph_reps, text_reps, config.tau).loss;
  };

  if (curve) curve->emplace_back(0, full_loss());

  TrainState state = TrainState::init(proj, config.hyper, config.seed);
  std::vector<SageLayer> enc_m, enc_v;
  if (config.train_encoder) {
    for (const auto& layer : sage.layers) {
      SageLayer zero{Eigen::MatrixXd::Zero(layer.w_self.rows(),
                                           layer.w_self.cols()),
                     Eigen::MatrixXd::Zero(layer.w_neigh.rows(),
                                           layer.w_neigh.cols())};
      enc_m.push_back(zero);
      enc_v.push_back(zero);
    }
  }

  Rng rng(config.seed);
  std::vector<NodeId> order = all_ids;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(config.batch)) {
      const std::size_t end =
          std::min(n, start + static_cast<std::size_t>(config.batch));
      const std::vector<NodeId> ids(order.begin() + start, order.begin() + end);

      SageCache scratch;
      if (config.train_encoder) {
        scratch = sage_forward_cached(graph, x_dense, sage);
      }
      const SageCache& cache = config.train_encoder ? scratch : frozen_cache;

      Eigen::MatrixXd dh_all;
      ProjectorGradients grads = contrastive_gradient(
          cache.output, text_dense, proj, ids, config.tau,
          config.train_encoder ? &dh_all : nullptr);

      ++state.step;
      adam_update(proj.weight, grads.weight, state.m_weight, state.v_weight,
                  state.step, state.hyper);
      adam_update(proj.bias, grads.bias, state.m_bias, state.v_bias,
                  state.step, state.hyper);
      if (config.train_encoder) {
        SageGrads enc_grads = sage_backward(graph, sage, cache, dh_all);
        for (std::size_t l = 0; l < sage.layers.size(); ++l) {
          adam_update(sage.layers[l].w_self, enc_grads.layers[l].w_self,
                      enc_m[l].w_self, enc_v[l].w_self, state.step,
                      state.hyper);
          adam_update(sage.layers[l].w_neigh, enc_grads.layers[l].w_neigh,
                      enc_m[l].w_neigh, enc_v[l].w_neigh, state.step,
                      state.hyper);
        }
      }
    }
    if (curve) curve->emplace_back(epoch + 1, full_loss());
  }
  return proj;
}

}  // namespace graphreason
