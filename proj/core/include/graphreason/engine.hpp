#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphreason/actions.hpp"
#include "graphreason/backend.hpp"
#include "graphreason/encoder.hpp"

namespace graphreason {

// ---------------------------------------------------------------------------
// Run configuration

struct ActionToggles {
  bool topological = true;  // TR
  bool semantic = true;     // SR
  bool refinement = true;   // CF (takes effect for steps >= 3)
  bool search = false;      // off by default
};

struct RunConfig {
  // Schedule and action space
  int steps = 4;        // K reasoning steps
  int topo_count = 4;   // N
  int sem_count = 4;    // M
  int graph_tokens = 5; // T
  int search_count = 6; // S
  double tau = 0.1;     // scoring temperature for projector adaptation
  ActionToggles toggles;
  std::size_t char_budget = 8000;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string backend = "mock";  // mock | replay | http

  // Encoder / projector shape
  int encoder_layers = 3;
  int hidden_dim = 64;
  int token_dim = 64;
  bool normalize_embeddings = true;

  // Paths; empty when unused
  std::string dataset_dir;
  std::string features_path;
  std::string embeddings_path;
  std::string checkpoint_path;
  std::string docs_path;
  std::string templates_dir;
  std::string replay_path;
  std::string record_path;  // when set, backends record replayable traces

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  /// First 16 hex chars of the sha256 of the canonical JSON form.
  std::string config_hash() const;
};

// ---------------------------------------------------------------------------
// Traces

struct TraceEvent {
  int step = 1;
  Purpose purpose = Purpose::Thought;
  std::string prompt_sha256;
  std::string response;
  std::vector<EvidenceSummary> summaries;
  std::size_t context_chars = 0;  // rendered prompt length
};

struct TraceRecord {
  NodeId node = 0;
  std::string config_hash;
  std::vector<TraceEvent> events;
  std::string final_answer;
  std::optional<int> matched_label;
  bool correct = false;
  std::optional<std::string> error;
};

nlohmann::ordered_json trace_to_json(const TraceRecord& trace,
                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Metrics

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long support = 0;
};

struct SeedMetrics {
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  long unmatched = 0;
  std::vector<ClassMetrics> per_class;
};

struct MetricsReport {
  std::vector<SeedMetrics> per_seed;
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;
  double macro_f1_mean = 0.0;
  double macro_f1_std = 0.0;
  long unmatched_total = 0;
  std::vector<ClassMetrics> per_class;  // pooled over seeds
};

/// Accuracy / macro-F1 over one seed's predictions. Unmatched predictions
/// (nullopt) count incorrect and as unmatched; every class participates in
/// the macro average (absent classes contribute F1 = 0).
SeedMetrics compute_seed_metrics(
    const std::vector<int>& gold,
    const std::vector<std::optional<int>>& predicted, std::size_t class_count,
    std::uint64_t seed);

MetricsReport aggregate_metrics(std::vector<SeedMetrics> per_seed,
                                std::size_t class_count);

void write_metrics_csv(std::ostream& out, const MetricsReport& report);
std::string format_metrics_table(const MetricsReport& report,
                                 const std::vector<std::string>& label_names);

// ---------------------------------------------------------------------------
// Episode execution

/// Everything one evaluation seed needs. Graph, templates, verbalizer and
/// documents are shared immutable state; embeddings/projector may be
/// seed-dependent.
struct EpisodeWorld {
  std::shared_ptr<const TextAttributedGraph> graph;
  std::shared_ptr<const PromptTemplateSet> templates;
  std::shared_ptr<const LabelVerbalizer> verbalizer;
  std::shared_ptr<const DocumentIndex> docs;  // null unless search is used
  std::shared_ptr<CompletionBackend> backend;
  EmbeddingMatrix embeddings;       // semantic retrieval space
  Eigen::MatrixXd encoder_outputs;  // per-node encoder outputs (token source)
  Projector projector;
  DatasetSplit split;
  std::string question;  // task question with the category list injected
};

using WorldProvider = std::function<EpisodeWorld(std::uint64_t seed)>;

struct EpisodeResult {
  std::optional<int> label;
  TraceRecord trace;
};

/// One Algorithm-1 episode. steps=1 is a single final call on the
/// instruction and question; steps>=2 runs a thought plus composite
/// retrieval, then (with refinement enabled) thought/refine turns for steps
/// 2..K-1, then a distinct final prediction call. Backend failures abort
/// the episode with the typed error recorded in the trace.
EpisodeResult run_episode(const EpisodeWorld& world, NodeId v,
                          const RunConfig& config);

/// Convenience overload that assembles the world from parts; the references
/// must outlive the call.
EpisodeResult run_episode(const TextAttributedGraph& graph,
                          const EmbeddingMatrix& features,
                          const EmbeddingMatrix& embeddings, NodeId v,
                          const Projector& projector, const SageParams& sage,
                          const RunConfig& config,
                          std::shared_ptr<CompletionBackend> backend,
                          std::shared_ptr<const PromptTemplateSet> templates);

struct EvalSinks {
  std::ostream* trace_jsonl = nullptr;
};

/// Runs every eval node (ascending id) for every configured seed and
/// aggregates mean and standard deviation. Episode errors count incorrect.
MetricsReport evaluate(const WorldProvider& provider, const RunConfig& config,
                       const EvalSinks& sinks = {});

// ---------------------------------------------------------------------------
// Ablations and sweeps

struct AblationRow {
  std::string variant;
  ActionToggles toggles;
  MetricsReport report;
};

/// The six-variant grid: no actions, TR, SR, TR+SR, CF, TR+SR+CF.
std::vector<AblationRow> run_ablation(const WorldProvider& provider,
                                      const RunConfig& base,
                                      const EvalSinks& sinks = {});

void write_ablation_csv(std::ostream& out,
                        const std::vector<AblationRow>& rows);
std::string format_ablation_table(const std::vector<AblationRow>& rows);

enum class SweepAxis { K, N, M, S };

std::optional<SweepAxis> sweep_axis_from_string(std::string_view name);
std::string_view to_string(SweepAxis axis);

struct SweepRow {
  std::string axis;
  int value = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
};

std::vector<SweepRow> run_sweep(const WorldProvider& provider, SweepAxis axis,
                                const std::vector<int>& values,
                                const RunConfig& base);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------------------
// Synthetic benchmark

struct SynthConfig {
  int classes = 4;
  int nodes = 400;
  double p_in = 0.2;
  double p_out = 0.01;
  double signal_q = 0.3;
  int dim = 16;
  std::uint64_t seed = 1;
};

struct SynthData {
  TextAttributedGraph graph;
  EmbeddingMatrix embeddings;
  DatasetSplit split;
};

/// Stochastic-block-model graph with class-keyword texts, one-hot-plus-noise
/// embeddings, and balanced splits; fully determined by the seed.
SynthData generate_synthetic(const SynthConfig& config);

/// Per-seed worlds over freshly generated synthetic data with the mock
/// backend; the base seed is replaced by the evaluation seed.
WorldProvider synthetic_world_provider(const SynthConfig& base,
                                       const RunConfig& config);

}  // namespace graphreason
