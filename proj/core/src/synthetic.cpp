#include <algorithm>
#include <numeric>

#include "graphreason/engine.hpp"
#include "graphreason/error.hpp"
#include "graphreason/rng.hpp"

namespace graphreason {

namespace {

const char* kClassNames[] = {
    "Aurora",  "Basalt",  "Cinder",  "Drift",   "Ember",    "Fjord",
    "Garnet",  "Harbor",  "Iris",    "Juniper", "Kestrel",  "Lagoon",
    "Meadow",  "Nimbus",  "Onyx",    "Prairie", "Quartz",   "Reef",
    "Summit",  "Tundra",  "Umbra",   "Vale",    "Willow",   "Zephyr",
};

std::vector<std::string> synth_label_names(int classes) {
  std::vector<std::string> names;
  names.reserve(classes);
  const int known = static_cast<int>(std::size(kClassNames));
  for (int c = 0; c < classes; ++c) {
    if (c < known) {
      names.emplace_back(kClassNames[c]);
    } else {
      names.push_back("Topic " + std::to_string(c));
    }
  }
  return names;
}

}  // namespace

SynthData generate_synthetic(const SynthConfig& config) {
  if (config.classes < 2) {
    throw Error(ErrorKind::Config, "synthetic graph needs at least 2 classes");
  }
  if (config.nodes < config.classes) {
    throw Error(ErrorKind::Config, "fewer nodes than classes");
  }
  if (!(0.0 <= config.p_out && config.p_out <= config.p_in &&
        config.p_in <= 1.0)) {
    throw Error(ErrorKind::Config,
                "edge probabilities must satisfy 0 <= p_out <= p_in <= 1");
  }
  if (config.signal_q < 0.0 || config.signal_q > 1.0) {
    throw Error(ErrorKind::Config, "signal_q must lie in [0, 1]");
  }
  if (config.dim < config.classes) {
    throw Error(ErrorKind::Config,
                "embedding dim must be >= class count for one-hot signals");
  }

  Rng rng(config.seed);
  const int n = config.nodes;
  const auto label_names = synth_label_names(config.classes);

  std::vector<std::int32_t> labels(n);
  for (int v = 0; v < n; ++v) labels[v] = v % config.classes;

  std::vector<NodeText> texts(n);
  for (int v = 0; v < n; ++v) {
    texts[v].title = "Node " + std::to_string(v);
    if (rng.uniform() < config.signal_q) {
      texts[v].description = "This item is mainly about " +
                             label_names[labels[v]] + " related themes.";
    } else {
      texts[v].description = "This item has a generic description.";
    }
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = labels[i] == labels[j] ? config.p_in : config.p_out;
      if (rng.uniform() < p) {
        edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
      }
    }
  }

  EmbeddingMatrix embeddings(n, config.dim);
  for (int v = 0; v < n; ++v) {
    for (int d = 0; d < config.dim; ++d) {
      const double signal = d == labels[v] ? 1.0 : 0.0;
      embeddings.data(v, d) = static_cast<float>(signal + 0.3 * rng.normal());
    }
  }

  // Balanced split: half of each class trains, the rest evaluates.
  DatasetSplit split;
  for (int c = 0; c < config.classes; ++c) {
    std::vector<NodeId> members;
    for (int v = 0; v < n; ++v) {
      if (labels[v] == c) members.push_back(static_cast<NodeId>(v));
    }
    rng.shuffle(members);
    const std::size_t train_count = members.size() / 2;
    for (std::size_t i = 0; i < members.size(); ++i) {
      (i < train_count ? split.train_ids : split.eval_ids).push_back(members[i]);
    }
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.eval_ids.begin(), split.eval_ids.end());

  SynthData data;
  data.graph = TextAttributedGraph::build(std::move(texts), std::move(edges),
                                          std::move(labels), label_names);
  data.embeddings = std::move(embeddings);
  data.split = std::move(split);
  return data;
}

WorldProvider synthetic_world_provider(const SynthConfig& base,
                                       const RunConfig& config) {
  if (config.backend == "http") {
    throw Error(ErrorKind::Config,
                "the synthetic world runs against the mock or replay backend; "
                "save the dataset with `synth --out` and use --dataset for "
                "http runs");
  }
  auto templates = std::make_shared<const PromptTemplateSet>(
      config.templates_dir.empty()
          ? PromptTemplateSet::defaults()
          : PromptTemplateSet::load_dir(config.templates_dir));
  std::shared_ptr<const DocumentIndex> docs;
  if (!config.docs_path.empty()) {
    docs = std::make_shared<const DocumentIndex>(
        DocumentIndex::load(config.docs_path));
  } else if (config.toggles.search) {
    throw Error(ErrorKind::Config,
                "search action enabled but no document index is configured");
  }
  const int tokens = config.graph_tokens;
  const int token_dim = config.token_dim;
  const std::string backend_kind = config.backend;
  const std::string replay_path = config.replay_path;
  const std::string record_path = config.record_path;
  return [base, templates, docs, tokens, token_dim, backend_kind,
          replay_path, record_path](std::uint64_t seed) {
    SynthConfig synth = base;
    synth.seed = seed;
    SynthData data = generate_synthetic(synth);

    EpisodeWorld world;
    world.graph = std::make_shared<const TextAttributedGraph>(
        std::move(data.graph));
    world.templates = templates;
    world.docs = docs;
    world.verbalizer =
        std::make_shared<LabelVerbalizer>(world.graph->label_names());
    if (backend_kind == "replay") {
      if (replay_path.empty()) {
        throw Error(ErrorKind::Config,
                    "replay backend needs a replay trace path");
      }
      world.backend = ReplayBackend::load(replay_path);
    } else {
      world.backend = std::make_shared<MockBackend>(world.graph);
    }
    if (!record_path.empty()) {
      world.backend =
          std::make_shared<RecordingBackend>(world.backend, record_path);
    }
    // The generated features double as the retrieval space and the token
    // source; the mock backend never consumes the token vectors.
    world.encoder_outputs = to_dense(data.embeddings);
    world.embeddings = std::move(data.embeddings);
    Rng rng(seed);
    world.projector = Projector::init(tokens, token_dim, synth.dim, rng);
    world.split = std::move(data.split);
    world.question = render_template(
        templates->at("final_question"),
        {{"categories", format_categories(world.graph->label_names())}});
    return world;
  };
}

}  // namespace graphreason
