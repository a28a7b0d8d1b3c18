// Command-line front end: dataset ingestion, encoder/projector training,
// single-episode runs, evaluation, and the ablation/sweep harnesses.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "graphreason/checkpoint.hpp"
#include "graphreason/engine.hpp"
#include "graphreason/error.hpp"

namespace gr = graphreason;

namespace {

struct CliStage {
  std::string config_file;
  std::optional<int> steps, topo, sem, tokens, search_count;
  std::optional<int> layers, hidden_dim, token_dim;
  std::optional<double> tau;
  std::optional<std::size_t> budget;
  std::optional<std::string> actions;  // comma list: tr,sr,cf,search or none
  std::optional<std::string> seeds;    // comma list
  std::optional<std::string> backend;
  std::optional<std::string> dataset, features, embeddings, checkpoint, docs,
      templates, replay, record;
  std::optional<bool> normalize;

  // HTTP backend wiring (never part of the config hash)
  std::optional<std::string> endpoint, api_key, model;
};

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  std::string part;
  while (std::getline(stream, part, ',')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

gr::RunConfig resolve_config(const CliStage& stage) {
  gr::RunConfig config;
  if (!stage.config_file.empty()) {
    std::ifstream in(stage.config_file);
    if (!in) {
      throw gr::Error(gr::ErrorKind::Io,
                      "cannot open config file " + stage.config_file);
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
      throw gr::Error(gr::ErrorKind::Parse,
                      stage.config_file + ": " + ex.what());
    }
    config = gr::RunConfig::from_json(j);
  }
  if (stage.steps) config.steps = *stage.steps;
  if (stage.topo) config.topo_count = *stage.topo;
  if (stage.sem) config.sem_count = *stage.sem;
  if (stage.tokens) config.graph_tokens = *stage.tokens;
  if (stage.search_count) config.search_count = *stage.search_count;
  if (stage.tau) config.tau = *stage.tau;
  if (stage.budget) config.char_budget = *stage.budget;
  if (stage.layers) config.encoder_layers = *stage.layers;
  if (stage.hidden_dim) config.hidden_dim = *stage.hidden_dim;
  if (stage.token_dim) config.token_dim = *stage.token_dim;
  if (stage.normalize) config.normalize_embeddings = *stage.normalize;
  if (stage.backend) config.backend = *stage.backend;
  if (stage.actions) {
    config.toggles = {false, false, false, false};
    for (const auto& action : split_csv(*stage.actions)) {
      if (action == "tr") config.toggles.topological = true;
      else if (action == "sr") config.toggles.semantic = true;
      else if (action == "cf") config.toggles.refinement = true;
      else if (action == "search") config.toggles.search = true;
      else if (action == "none") {}
      else {
        throw gr::Error(gr::ErrorKind::Config,
                        "unknown action '" + action +
                            "' (expected tr, sr, cf, search, or none)");
      }
    }
  }
  if (stage.seeds) {
    config.seeds.clear();
    for (const auto& seed : split_csv(*stage.seeds)) {
      config.seeds.push_back(std::stoull(seed));
    }
  }
  if (stage.dataset) config.dataset_dir = *stage.dataset;
  if (stage.features) config.features_path = *stage.features;
  if (stage.embeddings) config.embeddings_path = *stage.embeddings;
  if (stage.checkpoint) config.checkpoint_path = *stage.checkpoint;
  if (stage.docs) config.docs_path = *stage.docs;
  if (stage.templates) config.templates_dir = *stage.templates;
  if (stage.replay) config.replay_path = *stage.replay;
  if (stage.record) config.record_path = *stage.record;
  return config;
}

std::shared_ptr<const gr::PromptTemplateSet> load_templates(
    const gr::RunConfig& config) {
  return std::make_shared<const gr::PromptTemplateSet>(
      config.templates_dir.empty()
          ? gr::PromptTemplateSet::defaults()
          : gr::PromptTemplateSet::load_dir(config.templates_dir));
}

gr::HttpBackendConfig http_config(const CliStage& stage) {
  gr::HttpBackendConfig http = gr::HttpBackendConfig::from_env();
  if (stage.endpoint) http.endpoint_url = *stage.endpoint;
  if (stage.api_key) http.api_key = *stage.api_key;
  if (stage.model) http.model = *stage.model;
  return http;
}

/// Per-seed worlds over a dataset directory. Graph, split, templates, and
/// documents load once; encoder/projector parameters come from the
/// checkpoint when given, otherwise from seed-dependent initialization.
gr::WorldProvider dataset_world_provider(const gr::RunConfig& config,
                                         const CliStage& stage) {
  if (config.dataset_dir.empty()) {
    throw gr::Error(gr::ErrorKind::Config, "missing --dataset directory");
  }
  auto graph = std::make_shared<const gr::TextAttributedGraph>(
      gr::load_graph(config.dataset_dir));
  auto split = gr::load_split(config.dataset_dir, *graph);
  auto templates = load_templates(config);
  auto verbalizer =
      std::make_shared<const gr::LabelVerbalizer>(graph->label_names());
  std::shared_ptr<const gr::DocumentIndex> docs;
  if (!config.docs_path.empty()) {
    docs = std::make_shared<const gr::DocumentIndex>(
        gr::DocumentIndex::load(config.docs_path));
  } else if (config.toggles.search) {
    throw gr::Error(gr::ErrorKind::Config,
                    "search action enabled but no --docs index given");
  }

  std::optional<gr::EmbeddingMatrix> features;
  if (!config.features_path.empty()) {
    features = gr::load_embeddings(config.features_path);
  }
  std::optional<gr::EmbeddingMatrix> fixed_embeddings;
  if (!config.embeddings_path.empty()) {
    fixed_embeddings = gr::load_embeddings(config.embeddings_path);
  }
  if (!features && !fixed_embeddings) {
    throw gr::Error(gr::ErrorKind::Config,
                    "need --features (encoder input) or --embeddings "
                    "(precomputed retrieval space)");
  }
  std::optional<gr::Checkpoint> checkpoint;
  if (!config.checkpoint_path.empty()) {
    checkpoint = gr::load_checkpoint(config.checkpoint_path);
  }

  const std::string question = gr::render_template(
      templates->at("final_question"),
      {{"categories", gr::format_categories(graph->label_names())}});
  const auto http = http_config(stage);

  return [=](std::uint64_t seed) {
    gr::EpisodeWorld world;
    world.graph = graph;
    world.templates = templates;
    world.verbalizer = verbalizer;
    world.docs = docs;
    world.split = split;
    world.question = question;

    gr::Rng rng(seed);
    gr::SageParams sage;
    if (checkpoint) {
      sage = checkpoint->sage;
    } else if (features) {
      std::vector<int> dims(static_cast<std::size_t>(config.encoder_layers) + 1,
                            config.hidden_dim);
      dims.front() = static_cast<int>(features->dim());
      sage = gr::SageParams::init(dims, rng);
    }

    if (features) {
      world.encoder_outputs =
          gr::sage_forward_dense(*graph, gr::to_dense(*features), sage);
    } else {
      world.encoder_outputs = gr::to_dense(*fixed_embeddings);
    }
    if (fixed_embeddings) {
      world.embeddings = *fixed_embeddings;
    } else {
      world.embeddings = gr::to_embedding(world.encoder_outputs);
      if (config.normalize_embeddings) {
        gr::l2_normalize_rows(world.embeddings);
      }
    }

    if (checkpoint) {
      world.projector = checkpoint->proj;
    } else {
      world.projector = gr::Projector::init(
          config.graph_tokens, config.token_dim,
          static_cast<int>(world.encoder_outputs.cols()), rng);
    }

    if (config.backend == "mock") {
      world.backend = std::make_shared<gr::MockBackend>(graph);
    } else if (config.backend == "replay") {
      if (config.replay_path.empty()) {
        throw gr::Error(gr::ErrorKind::Config,
                        "replay backend needs --replay trace.jsonl");
      }
      world.backend = gr::ReplayBackend::load(config.replay_path);
    } else {
      world.backend = std::make_shared<gr::HttpBackend>(http);
    }
    if (!config.record_path.empty()) {
      world.backend = std::make_shared<gr::RecordingBackend>(
          world.backend, config.record_path);
    }
    return world;
  };
}

gr::WorldProvider make_provider(const gr::RunConfig& config,
                                const CliStage& stage,
                                const gr::SynthConfig& synth,
                                bool use_synth) {
  if (use_synth) {
    return gr::synthetic_world_provider(synth, config);
  }
  if (config.dataset_dir.empty()) {
    throw gr::Error(gr::ErrorKind::Config,
                    "choose a world: --dataset <dir> or --synth");
  }
  return dataset_world_provider(config, stage);
}

std::uint64_t first_seed(const gr::RunConfig& config) {
  return config.seeds.empty() ? 1 : config.seeds.front();
}

gr::Checkpoint initial_checkpoint(const gr::RunConfig& config,
                                  const gr::EmbeddingMatrix& features) {
  gr::Rng rng(first_seed(config));
  std::vector<int> dims(static_cast<std::size_t>(config.encoder_layers) + 1,
                        config.hidden_dim);
  dims.front() = static_cast<int>(features.dim());
  gr::Checkpoint ckpt;
  ckpt.sage = gr::SageParams::init(dims, rng);
  ckpt.proj = gr::Projector::init(config.graph_tokens, config.token_dim,
                                  config.hidden_dim, rng);
  return ckpt;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw gr::Error(gr::ErrorKind::Io, "cannot write " + path);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-aware reasoning-acting over text-attributed graphs"};
  app.require_subcommand(1);
  app.fallthrough();

  CliStage stage;
  app.add_option("--config", stage.config_file,
                 "JSON file with the full run configuration");
  app.add_option("-K,--steps", stage.steps, "reasoning steps (default 4)");
  app.add_option("-N,--topo", stage.topo, "topological retrieval count");
  app.add_option("-M,--sem", stage.sem, "semantic retrieval count");
  app.add_option("-T,--tokens", stage.tokens, "graph token count");
  app.add_option("-S,--search-count", stage.search_count,
                 "documents per search action");
  app.add_option("--tau", stage.tau, "scoring softmax temperature");
  app.add_option("--budget", stage.budget, "prompt character budget");
  app.add_option("--actions", stage.actions,
                 "enabled actions, e.g. tr,sr,cf (use 'none' for no actions)");
  app.add_option("--seeds", stage.seeds, "comma-separated seed list");
  app.add_option("--backend", stage.backend, "mock | replay | http");
  app.add_option("--layers", stage.layers, "encoder layer count");
  app.add_option("--hidden-dim", stage.hidden_dim, "encoder hidden dim");
  app.add_option("--token-dim", stage.token_dim, "graph token dim");
  app.add_flag_callback(
      "--no-normalize", [&stage] { stage.normalize = false; },
      "skip L2 normalization of encoder-derived retrieval embeddings");
  app.add_option("--dataset", stage.dataset, "dataset directory");
  app.add_option("--features", stage.features, "node feature EMB file");
  app.add_option("--embeddings", stage.embeddings,
                 "precomputed retrieval EMB file");
  app.add_option("--checkpoint", stage.checkpoint, "encoder checkpoint file");
  app.add_option("--docs", stage.docs, "docs.jsonl for the search action");
  app.add_option("--templates", stage.templates, "template directory");
  app.add_option("--replay", stage.replay, "replay trace.jsonl");
  app.add_option("--record", stage.record,
                 "record backend turns to this replayable trace.jsonl");
  app.add_option("--endpoint", stage.endpoint, "http backend endpoint URL");
  app.add_option("--api-key", stage.api_key, "http backend API key");
  app.add_option("--model", stage.model, "http backend model name");

  // --- ingest ---------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "load and validate a dataset");
  std::string ingest_out;
  ingest->add_option("--out", ingest_out, "write a canonicalized copy here");

  // --- synth ----------------------------------------------------------
  auto* synth_cmd = app.add_subcommand(
      "synth", "generate a synthetic stochastic-block-model dataset");
  gr::SynthConfig synth;
  std::string synth_out;
  synth_cmd->add_option("--classes", synth.classes, "class count");
  synth_cmd->add_option("--nodes", synth.nodes, "node count");
  synth_cmd->add_option("--p-in", synth.p_in, "intra-class edge probability");
  synth_cmd->add_option("--p-out", synth.p_out, "inter-class edge probability");
  synth_cmd->add_option("--signal-q", synth.signal_q,
                        "probability a node text names its class");
  synth_cmd->add_option("--dim", synth.dim, "embedding dimension");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--out", synth_out, "output dataset directory")
      ->required();

  // --- embed ----------------------------------------------------------
  auto* embed = app.add_subcommand(
      "embed", "run the encoder forward pass and save embeddings");
  std::string embed_out;
  embed->add_option("--out", embed_out, "output EMB file")->required();

  // --- pretrain -------------------------------------------------------
  auto* pretrain = app.add_subcommand(
      "pretrain", "contrastive alignment of the projector");
  std::string pretrain_out, pretrain_text, pretrain_curve;
  gr::ContrastiveConfig contrastive;
  bool train_encoder = false;
  pretrain->add_option("--text-embs", pretrain_text,
                       "per-node text embedding EMB file")->required();
  pretrain->add_option("--out", pretrain_out, "output checkpoint")->required();
  pretrain->add_option("--epochs", contrastive.epochs, "training epochs");
  pretrain->add_option("--batch", contrastive.batch, "mini-batch size");
  pretrain->add_option("--lr", contrastive.hyper.lr, "Adam learning rate");
  pretrain->add_option("--nce-tau", contrastive.tau, "InfoNCE temperature");
  pretrain->add_flag("--train-encoder", train_encoder,
                     "also update the encoder weights");
  pretrain->add_option("--loss-curve", pretrain_curve, "loss curve CSV path");

  // --- adapt ----------------------------------------------------------
  auto* adapt = app.add_subcommand(
      "adapt", "NLL adaptation of the projector on the train split");
  std::string adapt_out, adapt_curve;
  gr::AdaptConfig adapt_config;
  adapt->add_option("--out", adapt_out, "output checkpoint")->required();
  adapt->add_option("--adam-steps", adapt_config.steps, "Adam steps");
  adapt->add_option("--lr", adapt_config.hyper.lr, "Adam learning rate");
  adapt->add_option("--loss-curve", adapt_curve, "loss curve CSV path");

  // --- run -------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run one episode and print the trace");
  gr::NodeId run_node = 0;
  bool run_synth = false;
  run->add_option("--node", run_node, "target node id")->required();
  run->add_flag("--synth", run_synth, "use the synthetic benchmark world");

  // --- eval ------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "evaluate over the eval split");
  std::string eval_metrics_out, eval_trace_out;
  bool eval_synth = false;
  eval->add_option("--metrics-out", eval_metrics_out, "metrics CSV path");
  eval->add_option("--trace-out", eval_trace_out, "trace JSONL path");
  eval->add_flag("--synth", eval_synth, "use the synthetic benchmark world");

  // --- ablate ----------------------------------------------------------
  auto* ablate = app.add_subcommand(
      "ablate", "run the six-variant action ablation");
  std::string ablate_out;
  bool ablate_synth = false;
  ablate->add_option("--out", ablate_out, "ablation CSV path");
  ablate->add_flag("--synth", ablate_synth,
                   "use the synthetic benchmark world");

  // --- sweep -----------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "sweep one of K, N, M, S");
  std::string sweep_axis_name, sweep_values_csv, sweep_out;
  bool sweep_synth = false;
  sweep->add_option("--axis", sweep_axis_name, "K, N, M, or S")->required();
  sweep->add_option("--values", sweep_values_csv, "comma-separated values")
      ->required();
  sweep->add_option("--out", sweep_out, "sweep CSV path");
  sweep->add_flag("--synth", sweep_synth, "use the synthetic benchmark world");

  // Synthetic-world shape shared by run/eval/ablate/sweep.
  auto* synth_world = app.add_option_group("synthetic world");
  gr::SynthConfig bench;
  synth_world->add_option("--synth-classes", bench.classes, "classes");
  synth_world->add_option("--synth-nodes", bench.nodes, "nodes");
  synth_world->add_option("--synth-p-in", bench.p_in, "p_in");
  synth_world->add_option("--synth-p-out", bench.p_out, "p_out");
  synth_world->add_option("--synth-signal-q", bench.signal_q, "signal_q");
  synth_world->add_option("--synth-dim", bench.dim, "embedding dim");

  CLI11_PARSE(app, argc, argv);

  try {
    gr::RunConfig config = resolve_config(stage);
    config.validate();
    if (!config.record_path.empty()) {
      std::ofstream(config.record_path, std::ios::trunc);  // fresh recording
    }

    if (*ingest) {
      const auto graph = gr::load_graph(config.dataset_dir);
      const auto split = gr::load_split(config.dataset_dir, graph);
      std::size_t labeled = 0;
      for (gr::NodeId v = 0; v < graph.node_count(); ++v) {
        if (graph.label(v)) ++labeled;
      }
      std::cout << "nodes: " << graph.node_count()
                << "\nedges: " << graph.edge_count()
                << "\nclasses: " << graph.class_count()
                << "\nlabeled: " << labeled
                << "\ntrain: " << split.train_ids.size()
                << "\neval: " << split.eval_ids.size() << "\n";
      if (!ingest_out.empty()) {
        gr::save_graph(ingest_out, graph);
        gr::save_split(ingest_out, split);
        std::cout << "wrote canonical copy to " << ingest_out << "\n";
      }
    } else if (*synth_cmd) {
      const auto data = gr::generate_synthetic(synth);
      gr::save_graph(synth_out, data.graph);
      gr::save_split(synth_out, data.split);
      gr::save_embeddings(data.embeddings,
                          std::filesystem::path(synth_out) / "features.emb");
      // Small per-class corpus so the search action has something to rank.
      std::ofstream docs(std::filesystem::path(synth_out) / "docs.jsonl");
      for (std::size_t c = 0; c < data.graph.class_count(); ++c) {
        const auto& name = data.graph.label_names()[c];
        nlohmann::json doc;
        doc["id"] = c;
        doc["title"] = name + " reference";
        doc["body"] = "Background reference for " + name +
                      " related items, covering typical themes, common "
                      "examples, and category signals for " + name + ".";
        docs << doc.dump() << "\n";
      }
      std::cout << "wrote " << data.graph.node_count() << " nodes, "
                << data.graph.edge_count() << " edges to " << synth_out
                << "\n";
    } else if (*embed) {
      const auto graph = gr::load_graph(config.dataset_dir);
      const auto features = gr::load_embeddings(config.features_path);
      gr::SageParams sage;
      if (!config.checkpoint_path.empty()) {
        sage = gr::load_checkpoint(config.checkpoint_path).sage;
      } else {
        sage = initial_checkpoint(config, features).sage;
      }
      auto embeddings = gr::sage_forward(graph, features, sage);
      if (config.normalize_embeddings) gr::l2_normalize_rows(embeddings);
      gr::save_embeddings(embeddings, embed_out);
      std::cout << "wrote " << embeddings.rows() << "x" << embeddings.dim()
                << " embeddings to " << embed_out << "\n";
    } else if (*pretrain) {
      const auto graph = gr::load_graph(config.dataset_dir);
      const auto features = gr::load_embeddings(config.features_path);
      const auto text_embs = gr::load_embeddings(pretrain_text);
      gr::Checkpoint ckpt;
      if (!config.checkpoint_path.empty()) {
        ckpt = gr::load_checkpoint(config.checkpoint_path);
      } else {
        ckpt = initial_checkpoint(config, features);
      }
      contrastive.train_encoder = train_encoder;
      contrastive.seed = first_seed(config);
      gr::LossCurve curve;
      ckpt.proj = gr::pretrain_contrastive(graph, features, text_embs,
                                           ckpt.proj, ckpt.sage, contrastive,
                                           &curve);
      gr::save_checkpoint(pretrain_out, ckpt);
      if (!pretrain_curve.empty()) gr::write_loss_curve_csv(pretrain_curve, curve);
      std::cout << "final contrastive loss: " << curve.back().second << "\n";
    } else if (*adapt) {
      const auto graph = gr::load_graph(config.dataset_dir);
      const auto split = gr::load_split(config.dataset_dir, graph);
      const auto features = gr::load_embeddings(config.features_path);
      gr::Checkpoint ckpt;
      if (!config.checkpoint_path.empty()) {
        ckpt = gr::load_checkpoint(config.checkpoint_path);
      } else {
        ckpt = initial_checkpoint(config, features);
      }
      if (!ckpt.label_embs) {
        // Deterministic unit-norm label embeddings from the run seed.
        gr::Rng rng(first_seed(config) + 0x9e3779b9ULL);
        Eigen::MatrixXd labels(graph.class_count(), ckpt.proj.token_dim);
        for (Eigen::Index r = 0; r < labels.rows(); ++r) {
          for (Eigen::Index c = 0; c < labels.cols(); ++c) {
            labels(r, c) = rng.normal();
          }
          labels.row(r).normalize();
        }
        ckpt.label_embs = std::move(labels);
      }
      adapt_config.tau = config.tau;
      adapt_config.seed = first_seed(config);
      if (config.backend == "replay") {
        adapt_config.backend = gr::ScoringBackendKind::Replay;
      } else if (config.backend == "http") {
        adapt_config.backend = gr::ScoringBackendKind::Http;
      }
      gr::LossCurve curve;
      ckpt.proj = gr::train_projector_nll(graph, features, split, ckpt.proj,
                                          ckpt.sage, *ckpt.label_embs,
                                          adapt_config, &curve);
      gr::save_checkpoint(adapt_out, ckpt);
      if (!adapt_curve.empty()) gr::write_loss_curve_csv(adapt_curve, curve);
      std::cout << "final train NLL: " << curve.back().second << "\n";
    } else if (*run) {
      const auto provider = make_provider(config, stage, bench, run_synth);
      const auto world = provider(first_seed(config));
      const auto result = gr::run_episode(world, run_node, config);
      std::cout << gr::trace_to_json(result.trace, first_seed(config)).dump(2)
                << "\n";
    } else if (*eval) {
      const auto provider = make_provider(config, stage, bench, eval_synth);
      gr::EvalSinks sinks;
      std::ofstream trace_out;
      if (!eval_trace_out.empty()) {
        trace_out = open_out(eval_trace_out);
        sinks.trace_jsonl = &trace_out;
      }
      const auto report = gr::evaluate(provider, config, sinks);
      if (!eval_metrics_out.empty()) {
        auto csv = open_out(eval_metrics_out);
        gr::write_metrics_csv(csv, report);
      }
      std::vector<std::string> names;
      if (!config.dataset_dir.empty() || eval_synth) {
        names = provider(first_seed(config)).graph->label_names();
      }
      std::cout << gr::format_metrics_table(report, names);
    } else if (*ablate) {
      const auto provider = make_provider(config, stage, bench, ablate_synth);
      const auto rows = gr::run_ablation(provider, config);
      if (!ablate_out.empty()) {
        auto csv = open_out(ablate_out);
        gr::write_ablation_csv(csv, rows);
      }
      std::cout << gr::format_ablation_table(rows);
    } else if (*sweep) {
      const auto axis = gr::sweep_axis_from_string(sweep_axis_name);
      if (!axis) {
        throw gr::Error(gr::ErrorKind::Config,
                        "invalid sweep axis '" + sweep_axis_name + "'");
      }
      std::vector<int> values;
      for (const auto& value : split_csv(sweep_values_csv)) {
        values.push_back(std::stoi(value));
      }
      gr::RunConfig base = config;
      if (*axis == gr::SweepAxis::S) base.toggles.search = true;
      const auto provider = make_provider(base, stage, bench, sweep_synth);
      const auto rows = gr::run_sweep(provider, *axis, values, base);
      if (!sweep_out.empty()) {
        auto csv = open_out(sweep_out);
        gr::write_sweep_csv(csv, rows);
      } else {
        gr::write_sweep_csv(std::cout, rows);
      }
    }
    return 0;
  } catch (const gr::Error& err) {
    std::cerr << "error (" << gr::to_string(err.kind()) << "): " << err.what()
              << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
