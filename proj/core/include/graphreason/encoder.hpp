#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "graphreason/embedding.hpp"
#include "graphreason/graph.hpp"
#include "graphreason/rng.hpp"

namespace graphreason {

// ---------------------------------------------------------------------------
// Parameters

struct SageLayer {
  Eigen::MatrixXd w_self;   // d_out x d_in
  Eigen::MatrixXd w_neigh;  // d_out x d_in
};

/// Mean-aggregator message-passing encoder. The rectifier is applied after
/// every layer except (by default) the last.
struct SageParams {
  std::vector<SageLayer> layers;
  bool activation_after_last = false;

  /// dims = [d_in, d_1, ..., d_L]; weights drawn uniform(-1/sqrt(d_in), +).
  static SageParams init(const std::vector<int>& dims, Rng& rng);

  int input_dim() const;
  int output_dim() const;
  std::size_t layer_count() const { return layers.size(); }
  void validate() const;
};

/// Affine map from encoder space into T pseudo-token vectors.
struct Projector {
  Eigen::MatrixXd weight;  // (tokens * token_dim) x d_enc
  Eigen::VectorXd bias;    // tokens * token_dim
  int tokens = 1;
  int token_dim = 1;

  static Projector init(int tokens, int token_dim, int enc_dim, Rng& rng);
  int enc_dim() const { return static_cast<int>(weight.cols()); }
  void validate() const;
};

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam accumulators for the projector, plus the step counter and seed.
struct TrainState {
  Eigen::MatrixXd m_weight, v_weight;
  Eigen::VectorXd m_bias, v_bias;
  long step = 0;
  AdamHyper hyper;
  std::uint64_t seed = 0;

  static TrainState init(const Projector& proj, AdamHyper hyper,
                         std::uint64_t seed);
};

// ---------------------------------------------------------------------------
// Forward passes

Eigen::MatrixXd to_dense(const EmbeddingMatrix& e);
EmbeddingMatrix to_embedding(const Eigen::MatrixXd& m);

/// Full-graph forward pass in double precision. The mean over an empty
/// neighborhood is the zero vector.
Eigen::MatrixXd sage_forward_dense(const TextAttributedGraph& graph,
                                   const Eigen::MatrixXd& x,
                                   const SageParams& params);

/// Spec-facing wrapper over sage_forward_dense returning float32 rows.
EmbeddingMatrix sage_forward(const TextAttributedGraph& graph,
                             const EmbeddingMatrix& x,
                             const SageParams& params);

/// weight * h + bias, reshaped into `tokens` rows of length token_dim.
std::vector<Eigen::VectorXd> project_tokens(const Eigen::VectorXd& h,
                                            const Projector& proj);

/// Mean of the projected token vectors; the representation used for
/// contrastive alignment and mock scoring.
Eigen::VectorXd pooled_projection(const Eigen::VectorXd& h,
                                  const Projector& proj);

// ---------------------------------------------------------------------------
// Losses

struct InfoNceResult {
  double loss = 0.0;
  std::vector<Eigen::VectorXd> grad_graph_reps;
};

/// Graph-to-text InfoNCE with in-batch negatives:
///   loss = (1/B) sum_i -log( exp(cos(g_i,t_i)/tau) / sum_j exp(cos(g_i,t_j)/tau) )
/// The gradient is with respect to the graph representations.
InfoNceResult infonce_loss(const std::vector<Eigen::VectorXd>& graph_reps,
                           const std::vector<Eigen::VectorXd>& text_reps,
                           double tau);

/// Differentiable label scoring: softmax over cosine(mean(tokens), label_c)
/// / tau. Returns a probability vector of length C.
Eigen::VectorXd score_labels_mock(const std::vector<Eigen::VectorXd>& tokens,
                                  const Eigen::MatrixXd& label_embs,
                                  double tau);

struct NllScoreResult {
  double loss = 0.0;
  std::vector<Eigen::VectorXd> grad_tokens;
};

/// -log p[target] under score_labels_mock, with the analytic gradient with
/// respect to every token vector.
NllScoreResult nll_score_mock(const std::vector<Eigen::VectorXd>& tokens,
                              const Eigen::MatrixXd& label_embs, double tau,
                              int target);

struct ProjectorGradients {
  double loss = 0.0;
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

/// InfoNCE loss and analytic projector gradient for one batch of node ids,
/// given precomputed encoder outputs. `grad_encoder_out`, when non-null,
/// receives dLoss/dH for encoder training.
ProjectorGradients contrastive_gradient(const Eigen::MatrixXd& encoder_out,
                                        const Eigen::MatrixXd& text_reps,
                                        const Projector& proj,
                                        const std::vector<NodeId>& ids,
                                        double tau,
                                        Eigen::MatrixXd* grad_encoder_out = nullptr);

/// Analytic gradient of the batch InfoNCE loss with respect to the encoder
/// weights: chains dLoss/dH through the message-passing layers.
std::vector<SageLayer> contrastive_encoder_gradient(
    const TextAttributedGraph& graph, const Eigen::MatrixXd& x,
    const Eigen::MatrixXd& text_reps, const Projector& proj,
    const SageParams& sage, const std::vector<NodeId>& ids, double tau);

// ---------------------------------------------------------------------------
// Training

/// Backend selector mirrored from the run configuration; the trainers only
/// accept the differentiable mock.
enum class ScoringBackendKind { Mock, Replay, Http };

struct AdaptConfig {
  AdamHyper hyper{.lr = 1e-2};
  int steps = 200;
  double tau = 0.1;
  std::uint64_t seed = 0;
  ScoringBackendKind backend = ScoringBackendKind::Mock;
};

struct ContrastiveConfig {
  AdamHyper hyper{.lr = 1e-3};
  int epochs = 10;
  int batch = 64;
  double tau = 0.07;
  bool train_encoder = false;
  std::uint64_t seed = 0;
};

/// (step, loss) pairs; mean per-example loss.
using LossCurve = std::vector<std::pair<long, double>>;

/// Adapts the projector by minimizing NLL of train labels under the mock
/// scoring backend (full batch Adam). Encoder and label embeddings are
/// frozen. The returned curve holds the pre-update loss per step plus a
/// final entry at the trained parameters.
Projector train_projector_nll(const TextAttributedGraph& graph,
                              const EmbeddingMatrix& x,
                              const DatasetSplit& split, Projector proj,
                              const SageParams& sage,
                              const Eigen::MatrixXd& label_embs,
                              const AdaptConfig& config,
                              LossCurve* curve = nullptr);

/// Mini-batch InfoNCE alignment of pooled projections against per-node text
/// embeddings. Trains the projector; the encoder additionally when
/// `train_encoder` is set. The curve holds the full-dataset loss after each
/// epoch (entry 0 is the initial loss).
Projector pretrain_contrastive(const TextAttributedGraph& graph,
                               const EmbeddingMatrix& x,
                               const EmbeddingMatrix& text_embs,
                               Projector proj, SageParams& sage,
                               const ContrastiveConfig& config,
                               LossCurve* curve = nullptr);

}  // namespace graphreason
