#include "graphreason/engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "graphreason/digest.hpp"
#include "graphreason/error.hpp"

namespace graphreason {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::validate() const {
  if (steps < 1) throw Error(ErrorKind::Config, "steps (K) must be >= 1");
  if (topo_count < 0 || sem_count < 0 || search_count < 0) {
    throw Error(ErrorKind::Config, "retrieval counts must be >= 0");
  }
  if (graph_tokens < 1) {
    throw Error(ErrorKind::Config, "graph_tokens (T) must be >= 1");
  }
  if (toggles.search && search_count < 1) {
    throw Error(ErrorKind::Config,
                "search is enabled but search_count (S) is < 1");
  }
  if (tau <= 0.0) throw Error(ErrorKind::Config, "tau must be positive");
  if (char_budget == 0) {
    throw Error(ErrorKind::Config, "char_budget must be positive");
  }
  if (seeds.empty()) throw Error(ErrorKind::Config, "at least one seed");
  if (backend != "mock" && backend != "replay" && backend != "http") {
    throw Error(ErrorKind::Config, "backend must be mock, replay, or http");
  }
  if (encoder_layers < 1 || hidden_dim < 1 || token_dim < 1) {
    throw Error(ErrorKind::Config, "encoder shape must be positive");
  }
  if (!record_path.empty() && record_path == replay_path) {
    throw Error(ErrorKind::Config,
                "record_path and replay_path must differ (recording "
                "truncates the target file)");
  }
}

json RunConfig::to_json() const {
  json j;
  j["steps"] = steps;
  j["topo_count"] = topo_count;
  j["sem_count"] = sem_count;
  j["graph_tokens"] = graph_tokens;
  j["search_count"] = search_count;
  j["tau"] = tau;
  j["toggles"] = {{"topological", toggles.topological},
                  {"semantic", toggles.semantic},
                  {"refinement", toggles.refinement},
                  {"search", toggles.search}};
  j["char_budget"] = char_budget;
  j["seeds"] = seeds;
  j["backend"] = backend;
  j["encoder_layers"] = encoder_layers;
  j["hidden_dim"] = hidden_dim;
  j["token_dim"] = token_dim;
  j["normalize_embeddings"] = normalize_embeddings;
  j["dataset_dir"] = dataset_dir;
  j["features_path"] = features_path;
  j["embeddings_path"] = embeddings_path;
  j["checkpoint_path"] = checkpoint_path;
  j["docs_path"] = docs_path;
  j["templates_dir"] = templates_dir;
  j["replay_path"] = replay_path;
  j["record_path"] = record_path;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig config;
  config.steps = j.value("steps", config.steps);
  config.topo_count = j.value("topo_count", config.topo_count);
  config.sem_count = j.value("sem_count", config.sem_count);
  config.graph_tokens = j.value("graph_tokens", config.graph_tokens);
  config.search_count = j.value("search_count", config.search_count);
  config.tau = j.value("tau", config.tau);
  if (j.contains("toggles")) {
    const auto& t = j.at("toggles");
    config.toggles.topological = t.value("topological", true);
    config.toggles.semantic = t.value("semantic", true);
    config.toggles.refinement = t.value("refinement", true);
    config.toggles.search = t.value("search", false);
  }
  config.char_budget = j.value("char_budget", config.char_budget);
  if (j.contains("seeds")) {
    config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  }
  config.backend = j.value("backend", config.backend);
  config.encoder_layers = j.value("encoder_layers", config.encoder_layers);
  config.hidden_dim = j.value("hidden_dim", config.hidden_dim);
  config.token_dim = j.value("token_dim", config.token_dim);
  config.normalize_embeddings =
      j.value("normalize_embeddings", config.normalize_embeddings);
  config.dataset_dir = j.value("dataset_dir", config.dataset_dir);
  config.features_path = j.value("features_path", config.features_path);
  config.embeddings_path = j.value("embeddings_path", config.embeddings_path);
  config.checkpoint_path = j.value("checkpoint_path", config.checkpoint_path);
  config.docs_path = j.value("docs_path", config.docs_path);
  config.templates_dir = j.value("templates_dir", config.templates_dir);
  config.replay_path = j.value("replay_path", config.replay_path);
  config.record_path = j.value("record_path", config.record_path);
  return config;
}

std::string RunConfig::config_hash() const {
  return sha256_hex(to_json().dump()).substr(0, 16);
}

// ---------------------------------------------------------------------------
// Traces

ordered_json trace_to_json(const TraceRecord& trace, std::uint64_t seed) {
  ordered_json j;
  j["seed"] = seed;
  j["node"] = trace.node;
  j["config"] = trace.config_hash;
  j["events"] = ordered_json::array();
  for (const auto& event : trace.events) {
    ordered_json e;
    e["step"] = event.step;
    e["purpose"] = std::string(to_string(event.purpose));
    e["prompt_sha256"] = event.prompt_sha256;
    e["response"] = event.response;
    e["summaries"] = ordered_json::array();
    for (const auto& summary : event.summaries) {
      ordered_json s;
      s["kind"] = std::string(to_string(summary.kind));
      s["text"] = summary.text;
      s["source_ids"] = summary.source_ids;
      s["step"] = summary.step;
      e["summaries"].push_back(std::move(s));
    }
    e["context_chars"] = event.context_chars;
    j["events"].push_back(std::move(e));
  }
  j["final_answer"] = trace.final_answer;
  if (trace.matched_label) {
    j["matched_label"] = *trace.matched_label;
  } else {
    j["matched_label"] = nullptr;
  }
  j["correct"] = trace.correct;
  if (trace.error) {
    j["error"] = *trace.error;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Episode execution

namespace {

/// Forwards to the real backend while keeping an ordered log of the calls,
/// so actions can run unmodified and the trace still sees every request.
class CallLoggingBackend : public CompletionBackend {
 public:
  struct Entry {
    Purpose purpose;
    std::string prompt_sha256;
    std::string response;
    std::size_t prompt_chars;
  };

  explicit CallLoggingBackend(CompletionBackend& inner) : inner_(inner) {}

  BackendResponse complete(const BackendRequest& request) override {
    BackendResponse response = inner_.complete(request);
    pending_.push_back({request.purpose, sha256_hex(request.prompt),
                        response.text, request.prompt.size()});
    return response;
  }

  std::string_view name() const override { return inner_.name(); }

  /// Moves the logged calls into trace events, pairing them positionally
  /// with the action's summaries (both follow the fixed action order).
  void drain(int step, const std::vector<EvidenceSummary>& summaries,
             std::vector<TraceEvent>& events) {
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      TraceEvent event;
      event.step = step;
      event.purpose = pending_[i].purpose;
      event.prompt_sha256 = std::move(pending_[i].prompt_sha256);
      event.response = std::move(pending_[i].response);
      event.context_chars = pending_[i].prompt_chars;
      if (i < summaries.size()) event.summaries.push_back(summaries[i]);
      events.push_back(std::move(event));
    }
    pending_.clear();
  }

 private:
  CompletionBackend& inner_;
  std::vector<Entry> pending_;
};

const std::vector<EvidenceSummary> kNoSummaries;

}  // namespace

EpisodeResult run_episode(const EpisodeWorld& world, NodeId v,
                          const RunConfig& config) {
  config.validate();
  if (!world.graph || !world.templates || !world.verbalizer || !world.backend) {
    throw Error(ErrorKind::Config, "episode world is incomplete");
  }
  const auto& graph = *world.graph;
  if (!graph.valid_node(v)) {
    throw Error(ErrorKind::Validation,
                "node " + std::to_string(v) + " is out of range");
  }
  if (static_cast<std::size_t>(world.embeddings.rows()) != graph.node_count()) {
    throw Error(ErrorKind::Dimension,
                "embedding rows do not match graph node count");
  }
  if (static_cast<std::size_t>(world.encoder_outputs.rows()) !=
      graph.node_count()) {
    throw Error(ErrorKind::Dimension,
                "encoder output rows do not match graph node count");
  }

  const auto& templates = *world.templates;
  EpisodeResult result;
  TraceRecord& trace = result.trace;
  trace.node = v;
  trace.config_hash = config.config_hash();

  CallLoggingBackend backend(*world.backend);

  const std::string instruction =
      build_instruction(graph.text(v), config.graph_tokens, templates);
  const std::vector<Eigen::VectorXd> tokens = project_tokens(
      world.encoder_outputs.row(v).transpose(), world.projector);
  const std::string& thought_instruction = templates.at("thought_generation");

  auto llm_turn = [&](const ReasoningContext& context,
                      const std::string& question, Purpose purpose, int step) {
    BackendRequest request;
    request.prompt = render_prompt(instruction, context, question, templates,
                                   config.char_budget);
    request.token_vectors = tokens;
    request.purpose = purpose;
    const BackendResponse response = backend.complete(request);
    backend.drain(step, kNoSummaries, trace.events);
    return response.text;
  };

  int active_step = 1;
  try {
    ReasoningContext context;
    context.char_budget = config.char_budget;

    if (config.steps >= 2) {
      // Step 1: initial thought, then composite graph retrieval.
      const std::string thought =
          llm_turn(context, thought_instruction, Purpose::Thought, 1);
      RetrievalToggles retrieval{config.toggles.topological,
                                 config.toggles.semantic,
                                 config.toggles.search};
      Observation observation = act_retrieve(
          graph, world.embeddings, v, config.topo_count, config.sem_count,
          backend, templates, retrieval, instruction, 1, world.docs.get(),
          static_cast<std::size_t>(config.search_count));
      backend.drain(1, observation.summaries, trace.events);
      context = init_context(thought, std::move(observation),
                             config.char_budget);

      // Steps 2..K-1: context refinement (skipped when the toggle is off).
      if (config.toggles.refinement) {
        for (int step = 2; step <= config.steps - 1; ++step) {
          active_step = step;
          const std::string step_thought =
              llm_turn(context, thought_instruction, Purpose::Thought, step);
          Observation refined =
              act_refine(context, step_thought, backend, templates, step);
          backend.drain(step, refined.summaries, trace.events);
          context = update_context(context, step_thought, std::move(refined));
        }
      }
    }

    // Final prediction is a distinct call on (instruction, context, question).
    active_step = config.steps;
    const std::string answer =
        llm_turn(context, world.question, Purpose::Final, config.steps);
    trace.final_answer = answer;
    trace.matched_label = world.verbalizer->match(answer);
  } catch (const Error& err) {
    backend.drain(active_step, kNoSummaries, trace.events);
    trace.error = std::string(to_string(err.kind())) + ": " + err.what();
    trace.matched_label = std::nullopt;
    trace.correct = false;
    result.label = std::nullopt;
    return result;
  }

  const auto gold = graph.label(v);
  trace.correct =
      trace.matched_label && gold && *trace.matched_label == *gold;
  result.label = trace.matched_label;
  return result;
}

EpisodeResult run_episode(const TextAttributedGraph& graph,
                          const EmbeddingMatrix& features,
                          const EmbeddingMatrix& embeddings, NodeId v,
                          const Projector& projector, const SageParams& sage,
                          const RunConfig& config,
                          std::shared_ptr<CompletionBackend> backend,
                          std::shared_ptr<const PromptTemplateSet> templates) {
  EpisodeWorld world;
  world.graph = std::shared_ptr<const TextAttributedGraph>(
      std::shared_ptr<void>(), &graph);
  world.templates = templates;
  world.verbalizer = std::make_shared<LabelVerbalizer>(graph.label_names());
  world.backend = std::move(backend);
  world.embeddings = embeddings;
  world.encoder_outputs = sage_forward_dense(graph, to_dense(features), sage);
  world.projector = projector;
  world.question =
      render_template(templates->at("final_question"),
                      {{"categories", format_categories(graph.label_names())}});
  return run_episode(world, v, config);
}

// ---------------------------------------------------------------------------
// Evaluation

MetricsReport evaluate(const WorldProvider& provider, const RunConfig& config,
                       const EvalSinks& sinks) {
  config.validate();
  std::vector<SeedMetrics> per_seed;
  std::size_t class_count = 0;
  for (const std::uint64_t seed : config.seeds) {
    EpisodeWorld world = provider(seed);
    if (world.split.eval_ids.empty()) {
      throw Error(ErrorKind::Validation, "eval split is empty");
    }
    class_count = world.graph->class_count();

    std::vector<NodeId> eval_ids = world.split.eval_ids;
    std::sort(eval_ids.begin(), eval_ids.end());

    std::vector<int> gold;
    std::vector<std::optional<int>> predicted;
    gold.reserve(eval_ids.size());
    predicted.reserve(eval_ids.size());
    for (const NodeId v : eval_ids) {
      if (!world.graph->valid_node(v)) {
        throw Error(ErrorKind::Validation,
                    "eval node " + std::to_string(v) + " is out of range");
      }
      const auto label = world.graph->label(v);
      if (!label) {
        throw Error(ErrorKind::Validation,
                    "eval node " + std::to_string(v) + " has no label");
      }
      EpisodeResult episode = run_episode(world, v, config);
      gold.push_back(*label);
      predicted.push_back(episode.label);
      if (sinks.trace_jsonl) {
        *sinks.trace_jsonl << trace_to_json(episode.trace, seed).dump()
                           << '\n';
      }
    }
    per_seed.push_back(
        compute_seed_metrics(gold, predicted, class_count, seed));
  }
  return aggregate_metrics(std::move(per_seed), class_count);
}

// ---------------------------------------------------------------------------
// Ablations and sweeps

std::vector<AblationRow> run_ablation(const WorldProvider& provider,
                                      const RunConfig& base,
                                      const EvalSinks& sinks) {
  const std::vector<std::pair<std::string, ActionToggles>> variants = {
      {"variant1", {false, false, false, false}},
      {"variant2", {true, false, false, false}},
      {"variant3", {false, true, false, false}},
      {"variant4", {true, true, false, false}},
      {"variant5", {false, false, true, false}},
      {"full", {true, true, true, false}},
  };
  std::vector<AblationRow> rows;
  for (const auto& [name, toggles] : variants) {
    RunConfig config = base;
    config.toggles = toggles;
    rows.push_back({name, toggles, evaluate(provider, config, sinks)});
  }
  return rows;
}

void write_ablation_csv(std::ostream& out,
                        const std::vector<AblationRow>& rows) {
  out << "variant,seed,accuracy,macro_f1\n";
  char line[128];
  for (const auto& row : rows) {
    for (const auto& seed : row.report.per_seed) {
      std::snprintf(line, sizeof(line), "%s,%llu,%.6f,%.6f\n",
                    row.variant.c_str(),
                    static_cast<unsigned long long>(seed.seed), seed.accuracy,
                    seed.macro_f1);
      out << line;
    }
  }
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::string table;
  table += "variant    TR  SR  CF   accuracy            macro-F1\n";
  char line[160];
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line),
                  "%-10s %-3s %-3s %-3s  %.4f +/- %.4f   %.4f +/- %.4f\n",
                  row.variant.c_str(), row.toggles.topological ? "on" : "off",
                  row.toggles.semantic ? "on" : "off",
                  row.toggles.refinement ? "on" : "off",
                  row.report.accuracy_mean, row.report.accuracy_std,
                  row.report.macro_f1_mean, row.report.macro_f1_std);
    table += line;
  }
  return table;
}

std::optional<SweepAxis> sweep_axis_from_string(std::string_view name) {
  if (name == "K") return SweepAxis::K;
  if (name == "N") return SweepAxis::N;
  if (name == "M") return SweepAxis::M;
  if (name == "S") return SweepAxis::S;
  return std::nullopt;
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::K: return "K";
    case SweepAxis::N: return "N";
    case SweepAxis::M: return "M";
    case SweepAxis::S: return "S";
  }
  return "?";
}

std::vector<SweepRow> run_sweep(const WorldProvider& provider, SweepAxis axis,
                                const std::vector<int>& values,
                                const RunConfig& base) {
  if (values.empty()) {
    throw Error(ErrorKind::Config, "sweep values must be non-empty");
  }
  std::vector<SweepRow> rows;
  for (const int value : values) {
    RunConfig config = base;
    switch (axis) {
      case SweepAxis::K: config.steps = value; break;
      case SweepAxis::N: config.topo_count = value; break;
      case SweepAxis::M: config.sem_count = value; break;
      case SweepAxis::S: config.search_count = value; break;
    }
    const MetricsReport report = evaluate(provider, config);
    for (const auto& seed : report.per_seed) {
      rows.push_back({std::string(to_string(axis)), value, seed.seed,
                      seed.accuracy, seed.macro_f1});
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "axis,value,seed,accuracy,macro_f1\n";
  char line[128];
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line), "%s,%d,%llu,%.6f,%.6f\n",
                  row.axis.c_str(), row.value,
                  static_cast<unsigned long long>(row.seed), row.accuracy,
                  row.macro_f1);
    out << line;
  }
}

}  // namespace graphreason
