#include "graphreason/engine.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "graphreason/error.hpp"
#include "testutil.hpp"

namespace gr = graphreason;

namespace {

gr::RunConfig bench_config(int steps) {
  gr::RunConfig config;
  config.steps = steps;
  config.seeds = {1};
  return config;
}

gr::SynthConfig small_bench() {
  gr::SynthConfig synth;
  synth.classes = 3;
  synth.nodes = 45;
  synth.p_in = 0.3;
  synth.p_out = 0.02;
  synth.dim = 6;
  return synth;
}

int count_purpose(const gr::TraceRecord& trace, gr::Purpose purpose) {
  int count = 0;
  for (const auto& event : trace.events) {
    if (event.purpose == purpose) ++count;
  }
  return count;
}

/// Observations = one composite retrieval (if any step-1 retrieval events
/// exist) plus one per refinement event.
int count_observations(const gr::TraceRecord& trace) {
  bool retrieval = false;
  int refinements = 0;
  for (const auto& event : trace.events) {
    if (event.purpose == gr::Purpose::TopoSummary ||
        event.purpose == gr::Purpose::SemSummary ||
        event.purpose == gr::Purpose::SearchQuery) {
      retrieval = true;
    }
    if (event.purpose == gr::Purpose::Refinement) ++refinements;
  }
  return (retrieval ? 1 : 0) + refinements;
}

}  // namespace

TEST(RunConfig, ValidateRejectsBadValues) {
  gr::RunConfig config;
  config.steps = 0;
  EXPECT_THROW(config.validate(), gr::Error);
  config = {};
  config.graph_tokens = 0;
  EXPECT_THROW(config.validate(), gr::Error);
  config = {};
  config.backend = "carrier-pigeon";
  EXPECT_THROW(config.validate(), gr::Error);
  config = {};
  config.toggles.search = true;
  config.search_count = 0;
  EXPECT_THROW(config.validate(), gr::Error);
  config = {};
  config.record_path = "same.jsonl";
  config.replay_path = "same.jsonl";
  EXPECT_THROW(config.validate(), gr::Error);
  config = {};
  EXPECT_NO_THROW(config.validate());
}

TEST(RunConfig, JsonRoundTripAndStableHash) {
  gr::RunConfig config;
  config.steps = 3;
  config.toggles.search = true;
  config.search_count = 2;
  config.seeds = {9, 8};
  config.dataset_dir = "somewhere";
  const auto restored = gr::RunConfig::from_json(config.to_json());
  EXPECT_EQ(restored.to_json(), config.to_json());
  EXPECT_EQ(restored.config_hash(), config.config_hash());
  EXPECT_EQ(config.config_hash().size(), 16u);

  gr::RunConfig other = config;
  other.steps = 4;
  EXPECT_NE(other.config_hash(), config.config_hash());
}

// ---------------------------------------------------------------------------
// Episode schedule

class EpisodeSchedule : public ::testing::Test {
 protected:
  void SetUp() override {
    provider_ = gr::synthetic_world_provider(small_bench(), bench_config(4));
    world_ = provider_(1);
  }
  gr::WorldProvider provider_;
  gr::EpisodeWorld world_;
};

TEST_F(EpisodeSchedule, SingleStepIsOneFinalCall) {
  const auto result = gr::run_episode(world_, 0, bench_config(1));
  EXPECT_EQ(result.trace.events.size(), 1u);
  EXPECT_EQ(result.trace.events[0].purpose, gr::Purpose::Final);
  EXPECT_EQ(count_purpose(result.trace, gr::Purpose::Thought), 0);
  EXPECT_EQ(count_observations(result.trace), 0);
}

TEST_F(EpisodeSchedule, TwoStepsRetrieveThenFinal) {
  const auto result = gr::run_episode(world_, 0, bench_config(2));
  const auto& events = result.trace.events;
  ASSERT_EQ(events.size(), 4u);
  EXPECT_EQ(events[0].purpose, gr::Purpose::Thought);
  EXPECT_EQ(events[1].purpose, gr::Purpose::TopoSummary);
  EXPECT_EQ(events[2].purpose, gr::Purpose::SemSummary);
  EXPECT_EQ(events[3].purpose, gr::Purpose::Final);
  EXPECT_EQ(count_purpose(result.trace, gr::Purpose::Refinement), 0);
}

TEST_F(EpisodeSchedule, FourStepsFullSchedule) {
  const auto result = gr::run_episode(world_, 0, bench_config(4));
  EXPECT_EQ(count_purpose(result.trace, gr::Purpose::Thought), 3);
  EXPECT_EQ(count_purpose(result.trace, gr::Purpose::Refinement), 2);
  EXPECT_EQ(count_purpose(result.trace, gr::Purpose::Final), 1);
  EXPECT_EQ(count_observations(result.trace), 3);

  // Purposes appear in schedule order.
  std::vector<gr::Purpose> purposes;
  for (const auto& event : result.trace.events) purposes.push_back(event.purpose);
  const std::vector<gr::Purpose> expected = {
      gr::Purpose::Thought, gr::Purpose::TopoSummary, gr::Purpose::SemSummary,
      gr::Purpose::Thought, gr::Purpose::Refinement, gr::Purpose::Thought,
      gr::Purpose::Refinement, gr::Purpose::Final};
  EXPECT_EQ(purposes, expected);
}

TEST_F(EpisodeSchedule, RefinementSkippedWhenToggleOff) {
  auto config = bench_config(4);
  config.toggles.refinement = false;
  const auto result = gr::run_episode(world_, 0, config);
  EXPECT_EQ(count_purpose(result.trace, gr::Purpose::Thought), 1);
  EXPECT_EQ(count_purpose(result.trace, gr::Purpose::Refinement), 0);
  EXPECT_EQ(count_purpose(result.trace, gr::Purpose::Final), 1);
}

TEST_F(EpisodeSchedule, RefinementOnlyVariantRunsOverThoughts) {
  auto config = bench_config(4);
  config.toggles.topological = false;
  config.toggles.semantic = false;
  const auto result = gr::run_episode(world_, 0, config);
  EXPECT_EQ(count_purpose(result.trace, gr::Purpose::Refinement), 2);
  EXPECT_EQ(count_purpose(result.trace, gr::Purpose::TopoSummary), 0);
  // With no retrieved evidence the mock answers label 0.
  EXPECT_EQ(result.trace.final_answer,
            "The category might be " + world_.graph->label_names()[0] + ".");
}

TEST_F(EpisodeSchedule, ExactlyOneFinalEventAlways) {
  for (int steps : {1, 2, 3, 4, 6}) {
    const auto result = gr::run_episode(world_, 2, bench_config(steps));
    EXPECT_EQ(count_purpose(result.trace, gr::Purpose::Final), 1);
    EXPECT_FALSE(result.trace.events.empty());
    EXPECT_EQ(result.trace.events.back().purpose, gr::Purpose::Final);
  }
}

TEST_F(EpisodeSchedule, BackendFailureRecordedAsTypedError) {
  // Replay backend with an empty script fails on the first call.
  auto world = world_;
  world.backend = std::make_shared<gr::ReplayBackend>();
  const auto result = gr::run_episode(world, 0, bench_config(4));
  ASSERT_TRUE(result.trace.error.has_value());
  EXPECT_NE(result.trace.error->find("script_exhausted"), std::string::npos);
  EXPECT_FALSE(result.trace.correct);
  EXPECT_FALSE(result.label.has_value());
}

TEST_F(EpisodeSchedule, SpecShapedOverloadMatchesWorldPath) {
  const auto data = gr::generate_synthetic(small_bench());
  gr::Rng rng(1);
  const auto proj = gr::Projector::init(5, 8, 6, rng);
  gr::SageParams identity;
  identity.layers.push_back({Eigen::MatrixXd::Identity(6, 6),
                             Eigen::MatrixXd::Zero(6, 6)});
  auto backend = std::make_shared<gr::MockBackend>(
      std::make_shared<const gr::TextAttributedGraph>(data.graph));
  auto templates = std::make_shared<const gr::PromptTemplateSet>(
      gr::PromptTemplateSet::defaults());
  const auto result =
      gr::run_episode(data.graph, data.embeddings, data.embeddings, 3, proj,
                      identity, bench_config(2), backend, templates);
  EXPECT_EQ(count_purpose(result.trace, gr::Purpose::Final), 1);
  EXPECT_TRUE(result.label.has_value());
}

// ---------------------------------------------------------------------------
// Metrics

TEST(Metrics, PerfectPredictions) {
  const std::vector<int> gold = {0, 1, 1, 0};
  const std::vector<std::optional<int>> predicted = {0, 1, 1, 0};
  const auto metrics = gr::compute_seed_metrics(gold, predicted, 2, 1);
  EXPECT_DOUBLE_EQ(metrics.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(metrics.macro_f1, 1.0);
  EXPECT_EQ(metrics.unmatched, 0);
}

TEST(Metrics, HandComputedFixture) {
  // class0: 1 correct, 1 -> class1; class1: 2 correct.
  const std::vector<int> gold = {0, 0, 1, 1};
  const std::vector<std::optional<int>> predicted = {0, 1, 1, 1};
  const auto metrics = gr::compute_seed_metrics(gold, predicted, 2, 1);
  EXPECT_DOUBLE_EQ(metrics.accuracy, 0.75);
  EXPECT_NEAR(metrics.macro_f1, 0.7333, 1e-4);
  EXPECT_NEAR(metrics.per_class[0].f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(metrics.per_class[1].f1, 0.8, 1e-12);
}

TEST(Metrics, NeverPredictedClassContributesZeroF1) {
  const std::vector<int> gold = {0, 1, 2};
  const std::vector<std::optional<int>> predicted = {0, 1, 0};
  const auto metrics = gr::compute_seed_metrics(gold, predicted, 3, 1);
  EXPECT_DOUBLE_EQ(metrics.per_class[2].f1, 0.0);
  EXPECT_NEAR(metrics.macro_f1,
              (1.0 + 1.0 + 0.0) / 3.0, 0.2);  // class0 f1 < 1 due to the fp
}

TEST(Metrics, UnmatchedCountsIncorrect) {
  const std::vector<int> gold = {0, 0};
  const std::vector<std::optional<int>> predicted = {std::nullopt, 0};
  const auto metrics = gr::compute_seed_metrics(gold, predicted, 1, 1);
  EXPECT_DOUBLE_EQ(metrics.accuracy, 0.5);
  EXPECT_EQ(metrics.unmatched, 1);
}

TEST(Metrics, MatchesIndependentReferenceOnRandomCases) {
  gr::Rng rng(301);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t classes = 2 + rng.uniform_index(5);
    const std::size_t count = 5 + rng.uniform_index(40);
    std::vector<int> gold(count);
    std::vector<std::optional<int>> predicted(count);
    for (std::size_t i = 0; i < count; ++i) {
      gold[i] = static_cast<int>(rng.uniform_index(classes));
      if (rng.uniform() < 0.1) {
        predicted[i] = std::nullopt;
      } else {
        predicted[i] = static_cast<int>(rng.uniform_index(classes));
      }
    }
    const auto metrics = gr::compute_seed_metrics(gold, predicted, classes, 1);
    const auto reference = testutil::metrics_oracle(gold, predicted, classes);
    EXPECT_NEAR(metrics.accuracy, reference.accuracy, 1e-9);
    EXPECT_NEAR(metrics.macro_f1, reference.macro_f1, 1e-9);
  }
}

TEST(Metrics, AggregateMeanAndStd) {
  gr::SeedMetrics a, b;
  a.seed = 1;
  a.accuracy = 0.8;
  a.macro_f1 = 0.7;
  b.seed = 2;
  b.accuracy = 0.6;
  b.macro_f1 = 0.5;
  const auto report = gr::aggregate_metrics({a, b}, 2);
  EXPECT_DOUBLE_EQ(report.accuracy_mean, 0.7);
  EXPECT_DOUBLE_EQ(report.accuracy_std, 0.1);
  EXPECT_DOUBLE_EQ(report.macro_f1_mean, 0.6);
}

// ---------------------------------------------------------------------------
// Evaluation and harnesses

TEST(Evaluate, DeterministicArtifacts) {
  const auto provider =
      gr::synthetic_world_provider(small_bench(), bench_config(4));
  auto config = bench_config(4);
  config.seeds = {1, 2};

  auto run_once = [&](std::string& traces, std::string& csv) {
    std::ostringstream trace_stream, csv_stream;
    gr::EvalSinks sinks;
    sinks.trace_jsonl = &trace_stream;
    const auto report = gr::evaluate(provider, config, sinks);
    gr::write_metrics_csv(csv_stream, report);
    traces = trace_stream.str();
    csv = csv_stream.str();
    return report;
  };
  std::string traces1, csv1, traces2, csv2;
  run_once(traces1, csv1);
  run_once(traces2, csv2);
  EXPECT_EQ(traces1, traces2);
  EXPECT_EQ(csv1, csv2);
  EXPECT_FALSE(traces1.empty());
}

TEST(Evaluate, RecordThenReplayReproducesMetrics) {
  const auto tmp = std::filesystem::temp_directory_path();
  const auto trace = tmp / "gr_engine_record.jsonl";
  std::filesystem::remove(trace);
  std::ofstream(trace, std::ios::trunc);

  auto config = bench_config(3);
  config.seeds = {1, 2};
  config.record_path = trace.string();
  const auto recording_provider =
      gr::synthetic_world_provider(small_bench(), config);
  std::ostringstream recorded_csv;
  {
    const auto report = gr::evaluate(recording_provider, config);
    gr::write_metrics_csv(recorded_csv, report);
  }

  gr::RunConfig replay_config = config;
  replay_config.record_path.clear();
  replay_config.backend = "replay";
  replay_config.replay_path = trace.string();
  const auto replay_provider =
      gr::synthetic_world_provider(small_bench(), replay_config);
  std::ostringstream replayed_csv;
  {
    const auto report = gr::evaluate(replay_provider, replay_config);
    gr::write_metrics_csv(replayed_csv, report);
  }
  EXPECT_EQ(recorded_csv.str(), replayed_csv.str());
  EXPECT_FALSE(recorded_csv.str().empty());
}

TEST(Evaluate, HighAccuracyOnEasyBenchmark) {
  const auto provider =
      gr::synthetic_world_provider(small_bench(), bench_config(2));
  auto config = bench_config(2);
  config.seeds = {1, 2};
  const auto report = gr::evaluate(provider, config);
  EXPECT_GT(report.accuracy_mean, 0.75);
  EXPECT_EQ(report.per_seed.size(), 2u);
}

TEST(Ablation, VariantToggleMapping) {
  const auto provider =
      gr::synthetic_world_provider(small_bench(), bench_config(2));
  auto config = bench_config(2);
  config.seeds = {1};
  const auto rows = gr::run_ablation(provider, config);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].variant, "variant1");
  EXPECT_FALSE(rows[0].toggles.topological);
  EXPECT_TRUE(rows[1].toggles.topological);
  EXPECT_FALSE(rows[1].toggles.semantic);
  EXPECT_FALSE(rows[1].toggles.refinement);
  EXPECT_TRUE(rows[2].toggles.semantic);
  EXPECT_FALSE(rows[2].toggles.topological);
  EXPECT_TRUE(rows[3].toggles.topological);
  EXPECT_TRUE(rows[3].toggles.semantic);
  EXPECT_TRUE(rows[4].toggles.refinement);
  EXPECT_FALSE(rows[4].toggles.topological);
  EXPECT_TRUE(rows[5].toggles.topological);
  EXPECT_TRUE(rows[5].toggles.semantic);
  EXPECT_TRUE(rows[5].toggles.refinement);

  std::ostringstream csv;
  gr::write_ablation_csv(csv, rows);
  EXPECT_EQ(csv.str().substr(0, 30), "variant,seed,accuracy,macro_f1");
}

TEST(Sweep, CsvHeaderAndRows) {
  const auto provider =
      gr::synthetic_world_provider(small_bench(), bench_config(2));
  auto config = bench_config(2);
  config.seeds = {1};
  const auto rows =
      gr::run_sweep(provider, gr::SweepAxis::K, {1, 2}, config);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].axis, "K");
  EXPECT_EQ(rows[0].value, 1);
  std::ostringstream csv;
  gr::write_sweep_csv(csv, rows);
  EXPECT_EQ(csv.str().substr(0, 33), "axis,value,seed,accuracy,macro_f1");
  EXPECT_THROW(gr::run_sweep(provider, gr::SweepAxis::K, {}, config),
               gr::Error);
}

// ---------------------------------------------------------------------------
// Synthetic generation

TEST(Synthetic, ExtremeProbabilitiesGiveTwoCliques) {
  gr::SynthConfig config;
  config.classes = 2;
  config.nodes = 10;
  config.p_in = 1.0;
  config.p_out = 0.0;
  config.dim = 2;
  const auto data = gr::generate_synthetic(config);
  for (gr::NodeId v = 0; v < 10; ++v) {
    EXPECT_EQ(data.graph.neighbors(v).size(), 4u);  // own class minus itself
    for (const auto u : data.graph.neighbors(v)) {
      EXPECT_EQ(data.graph.label(u), data.graph.label(v));
    }
  }
}

TEST(Synthetic, DeterministicGivenSeed) {
  const auto a = gr::generate_synthetic(small_bench());
  const auto b = gr::generate_synthetic(small_bench());
  ASSERT_EQ(a.graph.node_count(), b.graph.node_count());
  EXPECT_EQ(a.graph.edge_count(), b.graph.edge_count());
  for (gr::NodeId v = 0; v < a.graph.node_count(); ++v) {
    const auto na = a.graph.neighbors(v);
    const auto nb = b.graph.neighbors(v);
    ASSERT_TRUE(std::equal(na.begin(), na.end(), nb.begin(), nb.end()));
    EXPECT_EQ(a.graph.text(v).description, b.graph.text(v).description);
  }
  EXPECT_TRUE(a.embeddings.data == b.embeddings.data);
  EXPECT_EQ(a.split.train_ids, b.split.train_ids);
}

TEST(Synthetic, IntraClassCosineExceedsInterClass) {
  gr::SynthConfig config;
  config.classes = 4;
  config.nodes = 100;
  config.dim = 8;
  config.seed = 5;
  const auto data = gr::generate_synthetic(config);
  double intra = 0.0, inter = 0.0;
  long intra_count = 0, inter_count = 0;
  for (gr::NodeId i = 0; i < 100; ++i) {
    for (gr::NodeId j = i + 1; j < 100; ++j) {
      const double cos = gr::cosine(data.embeddings.row(i).transpose(),
                                    data.embeddings.row(j).transpose());
      if (data.graph.label(i) == data.graph.label(j)) {
        intra += cos;
        ++intra_count;
      } else {
        inter += cos;
        ++inter_count;
      }
    }
  }
  EXPECT_GT(intra / intra_count, inter / inter_count);
}

TEST(Synthetic, InvalidParametersRejected) {
  gr::SynthConfig config;
  config.p_in = 0.1;
  config.p_out = 0.5;  // p_out > p_in
  EXPECT_THROW(gr::generate_synthetic(config), gr::Error);
  config = {};
  config.classes = 1;
  EXPECT_THROW(gr::generate_synthetic(config), gr::Error);
  config = {};
  config.dim = 2;  // < classes
  EXPECT_THROW(gr::generate_synthetic(config), gr::Error);
}

TEST(Synthetic, BalancedSeededSplits) {
  const auto data = gr::generate_synthetic(small_bench());
  EXPECT_EQ(data.split.train_ids.size() + data.split.eval_ids.size(),
            data.graph.node_count());
  std::set<gr::NodeId> train(data.split.train_ids.begin(),
                             data.split.train_ids.end());
  for (const auto v : data.split.eval_ids) EXPECT_EQ(train.count(v), 0u);
}

TEST(TraceJson, StableShape) {
  const auto provider =
      gr::synthetic_world_provider(small_bench(), bench_config(2));
  const auto world = provider(1);
  const auto result = gr::run_episode(world, 1, bench_config(2));
  const auto j = gr::trace_to_json(result.trace, 1);
  EXPECT_EQ(j["seed"], 1);
  EXPECT_EQ(j["node"], 1);
  EXPECT_TRUE(j["events"].is_array());
  EXPECT_EQ(j["events"].size(), 4u);
  EXPECT_TRUE(j.contains("final_answer"));
  EXPECT_TRUE(j.contains("correct"));
}
