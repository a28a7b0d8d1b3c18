#include "graphreason/backend.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "graphreason/digest.hpp"
#include "graphreason/error.hpp"
#include "graphreason/prompting.hpp"
#include "testutil.hpp"

// httplib must follow the Eigen-including project headers.
#include <httplib.h>

#include <thread>

namespace gr = graphreason;
using testutil::make_graph;

namespace {

std::shared_ptr<const gr::TextAttributedGraph> world_graph() {
  // labels: 0:A 1:B 2:A 3:B 4:A 5:B
  static const auto graph = std::make_shared<const gr::TextAttributedGraph>(
      make_graph(6, {{0, 1}}, {0, 1, 0, 1, 0, 1}, {"Alpha", "Beta"}));
  return graph;
}

gr::BackendRequest request_for(gr::Purpose purpose, std::string prompt) {
  gr::BackendRequest request;
  request.purpose = purpose;
  request.prompt = std::move(prompt);
  return request;
}

}  // namespace

// ---------------------------------------------------------------------------
// LabelVerbalizer

TEST(Verbalizer, NormalizationRules) {
  EXPECT_EQ(gr::LabelVerbalizer::normalize("Fairy Tales, Folk Tales & Myths."),
            "fairy tales folk tales & myths");
  EXPECT_EQ(gr::LabelVerbalizer::normalize("  HELLO--world  "), "hello world");
  EXPECT_EQ(gr::LabelVerbalizer::normalize("A&B"), "a&b");
}

TEST(Verbalizer, RejectsDuplicateNormalizedNames) {
  EXPECT_THROW(gr::LabelVerbalizer({"Humor", "humor!"}), gr::Error);
  EXPECT_THROW(gr::LabelVerbalizer({"..."}), gr::Error);
}

TEST(MatchAnswer, ExactAndSentenceForms) {
  const gr::LabelVerbalizer verbalizer(
      {"Humor", "Fairy Tales, Folk Tales & Myths", "History"});
  EXPECT_EQ(verbalizer.match("Humor"), std::optional<int>(0));
  EXPECT_EQ(
      verbalizer.match("The category might be Fairy Tales, Folk Tales & Myths."),
      std::optional<int>(1));
  EXPECT_EQ(verbalizer.match("I cannot determine the category"), std::nullopt);
}

TEST(MatchAnswer, CaseAndPunctuationInvariant) {
  const gr::LabelVerbalizer verbalizer({"Humor", "History"});
  EXPECT_EQ(verbalizer.match("hUMOR!!!"), std::optional<int>(0));
  EXPECT_EQ(verbalizer.match("  history.  "), std::optional<int>(1));
}

TEST(MatchAnswer, LongestNameWinsWhenFullyPresent) {
  const gr::LabelVerbalizer verbalizer({"History", "Natural History"});
  EXPECT_EQ(verbalizer.match("This is about Natural History."),
            std::optional<int>(1));
  EXPECT_EQ(verbalizer.match("plain history here"), std::optional<int>(0));
}

TEST(MatchAnswer, EarliestOccurrenceWins) {
  const gr::LabelVerbalizer verbalizer({"Humor", "History"});
  EXPECT_EQ(verbalizer.match("history then humor"), std::optional<int>(1));
}

TEST(MatchAnswer, IdempotentUnderRenormalization) {
  const gr::LabelVerbalizer verbalizer({"Cars, Trains & Things That Go"});
  const std::string answer = "The answer is Cars, Trains & Things That Go.";
  const auto once = verbalizer.match(answer);
  const auto twice = verbalizer.match(gr::LabelVerbalizer::normalize(answer));
  EXPECT_EQ(once, twice);
  EXPECT_EQ(once, std::optional<int>(0));
}

// ---------------------------------------------------------------------------
// MockBackend

TEST(MockBackend, TopoSummaryNamesMajorityLabel) {
  gr::MockBackend backend(world_graph());
  // Evidence ids 1, 3, 0 have labels B, B, A -> majority Beta.
  const auto response = backend.complete(request_for(
      gr::Purpose::TopoSummary,
      "- Node 1 | Title: t | Description: d\n"
      "- Node 3 | Title: t | Description: d\n"
      "- Node 0 | Title: t | Description: d\n"));
  EXPECT_EQ(response.text,
            "This subgraph covers nodes [1, 3, 0], so the category might be "
            "Beta.");
}

TEST(MockBackend, TieResolvesToSmallestLabelIndex) {
  gr::MockBackend backend(world_graph());
  const auto response = backend.complete(request_for(
      gr::Purpose::SemSummary,
      "- Node 0 | Title: t | Description: d\n"
      "- Node 1 | Title: t | Description: d\n"));
  EXPECT_EQ(response.text,
            "This node set covers nodes [0, 1], so the category might be "
            "Alpha.");
}

TEST(MockBackend, MalformedEvidenceBlockRejected) {
  gr::MockBackend backend(world_graph());
  try {
    backend.complete(request_for(gr::Purpose::TopoSummary, "no evidence here"));
    FAIL() << "expected malformed evidence error";
  } catch (const gr::Error& err) {
    EXPECT_EQ(err.kind(), gr::ErrorKind::Backend);
  }
}

TEST(MockBackend, EmptyEvidenceMarkerAccepted) {
  gr::MockBackend backend(world_graph());
  const auto response = backend.complete(request_for(
      gr::Purpose::TopoSummary, std::string(gr::kNoEvidenceMarker)));
  EXPECT_EQ(response.text,
            "This subgraph covers nodes [], so the category might be Alpha.");
}

TEST(MockBackend, FinalVotesWithCitedEvidence) {
  gr::MockBackend backend(world_graph());
  const auto response = backend.complete(request_for(
      gr::Purpose::Final,
      "Neighbor summary: This subgraph covers nodes [1, 3], so the category "
      "might be Beta.\nNode summary: This node set covers nodes [5], so the "
      "category might be Beta.\n"));
  EXPECT_EQ(response.text, "The category might be Beta.");
}

TEST(MockBackend, FinalWithoutEvidenceAnswersLabelZero) {
  gr::MockBackend backend(world_graph());
  const auto response =
      backend.complete(request_for(gr::Purpose::Final, "Thought: none.\n"));
  EXPECT_EQ(response.text, "The category might be Alpha.");
}

TEST(MockBackend, RefinementNamesMajorityAcrossSummaries) {
  gr::MockBackend backend(world_graph());
  const auto response = backend.complete(request_for(
      gr::Purpose::Refinement,
      "Neighbor summary: blah, so the category might be Beta.\n"
      "Node summary: blah, so the category might be Beta.\n"
      "Summary: earlier digest says the category might be Alpha.\n"));
  EXPECT_EQ(response.text,
            "The evidence discussed so far suggests the category might be "
            "Beta.");
}

TEST(MockBackend, ThoughtEmbedsTargetTitle) {
  gr::MockBackend backend(world_graph());
  const auto response = backend.complete(request_for(
      gr::Purpose::Thought, "USER: stuff\nTitle: Node 4\nmore"));
  EXPECT_NE(response.text.find("Node 4"), std::string::npos);
}

TEST(MockBackend, DeterministicBytes) {
  gr::MockBackend backend(world_graph());
  const auto request = request_for(
      gr::Purpose::TopoSummary, "- Node 2 | Title: t | Description: d\n");
  EXPECT_EQ(backend.complete(request).text, backend.complete(request).text);
}

TEST(MockBackend, RejectsLabelFreeWorld) {
  auto unlabeled = std::make_shared<const gr::TextAttributedGraph>(
      gr::TextAttributedGraph::build(std::vector<gr::NodeText>(3),
                                     {{0, 1}}, {-1, -1, -1}, {}));
  EXPECT_THROW(gr::MockBackend{unlabeled}, gr::Error);
}

TEST(MockBackend, ResponseRespectsMaxChars) {
  gr::MockBackend backend(world_graph());
  auto request = request_for(gr::Purpose::Final, "Thought: x\n");
  request.decode.max_chars = 10;
  EXPECT_LE(backend.complete(request).text.size(), 10u);
}

TEST(Requests, TokenMarkerCountValidated) {
  gr::MockBackend backend(world_graph());
  gr::BackendRequest request;
  request.purpose = gr::Purpose::Thought;
  request.prompt = "only <Token 1> here\nTitle: Node 0";
  request.token_vectors = std::vector<Eigen::VectorXd>(2, Eigen::VectorXd::Ones(3));
  EXPECT_THROW(backend.complete(request), gr::Error);
  request.token_vectors->resize(1, Eigen::VectorXd::Ones(3));
  EXPECT_NO_THROW(backend.complete(request));
  EXPECT_EQ(gr::count_token_markers("<Token 1> <Token 2> x <Token 9>"), 3u);
}

// ---------------------------------------------------------------------------
// Replay / recording

TEST(Replay, ScriptExhaustsAfterRecordedTurns) {
  gr::ReplayBackend backend;
  const std::string prompt = "the prompt";
  const auto hash = gr::sha256_hex(prompt);
  for (int turn = 0; turn < 3; ++turn) {
    backend.add_turn(gr::Purpose::Thought, hash,
                     "turn " + std::to_string(turn));
  }
  for (int turn = 0; turn < 3; ++turn) {
    EXPECT_EQ(backend.complete(request_for(gr::Purpose::Thought, prompt)).text,
              "turn " + std::to_string(turn));
  }
  try {
    backend.complete(request_for(gr::Purpose::Thought, prompt));
    FAIL() << "expected script exhaustion";
  } catch (const gr::Error& err) {
    EXPECT_EQ(err.kind(), gr::ErrorKind::ScriptExhausted);
  }
}

TEST(Replay, KeysOnPurposeAndPromptHash) {
  gr::ReplayBackend backend;
  backend.add_turn(gr::Purpose::Final, gr::sha256_hex("p"), "answer");
  EXPECT_THROW(backend.complete(request_for(gr::Purpose::Thought, "p")),
               gr::Error);
  EXPECT_EQ(backend.complete(request_for(gr::Purpose::Final, "p")).text,
            "answer");
}

TEST(Replay, RecordThenReplayRoundTrip) {
  const auto path =
      std::filesystem::temp_directory_path() / "gr_replay_trace.jsonl";
  std::filesystem::remove(path);
  {
    auto inner = std::make_shared<gr::MockBackend>(world_graph());
    gr::RecordingBackend recorder(inner, path);
    recorder.complete(request_for(gr::Purpose::Thought, "Title: Node 0\n"));
    recorder.complete(request_for(
        gr::Purpose::TopoSummary, "- Node 1 | Title: t | Description: d\n"));
  }
  auto replay = gr::ReplayBackend::load(path);
  gr::MockBackend mock(world_graph());
  for (const auto purpose : {gr::Purpose::Thought, gr::Purpose::TopoSummary}) {
    const auto prompt = purpose == gr::Purpose::Thought
                            ? std::string("Title: Node 0\n")
                            : std::string("- Node 1 | Title: t | Description: d\n");
    EXPECT_EQ(replay->complete(request_for(purpose, prompt)).text,
              mock.complete(request_for(purpose, prompt)).text);
  }
}

TEST(HttpBackend, ClientErrorsDoNotRetry) {
  httplib::Server server;
  std::atomic<int> requests{0};
  server.Post("/v1/chat/completions",
              [&](const httplib::Request&, httplib::Response& res) {
                ++requests;
                res.status = 404;
                res.set_content("nope", "text/plain");
              });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  gr::HttpBackendConfig config;
  config.endpoint_url =
      "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  config.backoff_base = std::chrono::milliseconds(1);
  gr::HttpBackend backend(config);
  try {
    backend.complete(request_for(gr::Purpose::Thought, "hello"));
    FAIL() << "expected backend error";
  } catch (const gr::Error& err) {
    EXPECT_EQ(err.kind(), gr::ErrorKind::Backend);
  }
  EXPECT_EQ(requests.load(), 1);  // 4xx is terminal, no retries

  server.stop();
  listener.join();
}

TEST(HttpBackend, BadEndpointUrlRejected) {
  gr::HttpBackendConfig config;
  config.endpoint_url = "ftp://nope";
  EXPECT_THROW(gr::HttpBackend{config}, gr::Error);
  config.endpoint_url = "https://secure.example/v1";
  EXPECT_THROW(gr::HttpBackend{config}, gr::Error);
}

TEST(PurposeNames, RoundTrip) {
  for (const auto purpose :
       {gr::Purpose::Thought, gr::Purpose::TopoSummary, gr::Purpose::SemSummary,
        gr::Purpose::Refinement, gr::Purpose::SearchQuery, gr::Purpose::Final}) {
    EXPECT_EQ(gr::purpose_from_string(gr::to_string(purpose)), purpose);
  }
  EXPECT_FALSE(gr::purpose_from_string("nonsense").has_value());
}
