#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graphreason/graph.hpp"

namespace graphreason {

// ---------------------------------------------------------------------------
// Requests and responses

enum class Purpose {
  Thought,
  TopoSummary,
  SemSummary,
  Refinement,
  SearchQuery,
  Final,
};

std::string_view to_string(Purpose purpose);
std::optional<Purpose> purpose_from_string(std::string_view name);

struct DecodeParams {
  std::size_t max_chars = 1024;
  double temperature = 0.0;  // 0 => deterministic
};

struct BackendRequest {
  std::string prompt;
  /// Graph token vectors bound to the <Token i> markers in the prompt; the
  /// marker count must match when present.
  std::optional<std::vector<Eigen::VectorXd>> token_vectors;
  Purpose purpose = Purpose::Thought;
  DecodeParams decode;
};

struct BackendResponse {
  std::string text;  // length <= decode.max_chars
  std::size_t prompt_chars = 0;
  std::size_t response_chars = 0;
  double latency_ms = 0.0;
};

/// Count of "<Token k>" markers in a prompt.
std::size_t count_token_markers(std::string_view prompt);

/// Completion contract shared by all backends. Handles are shareable;
/// complete() may be called concurrently.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual BackendResponse complete(const BackendRequest& request) = 0;
  virtual std::string_view name() const = 0;
};

// ---------------------------------------------------------------------------
// Answer matching

/// Maps free-text completions to label indices. Normalization: lowercase,
/// punctuation except '&' replaced by spaces, whitespace collapsed.
class LabelVerbalizer {
 public:
  explicit LabelVerbalizer(std::vector<std::string> label_names);

  static std::string normalize(std::string_view text);

  /// Earliest-occurrence match over normalized label names; at equal
  /// positions the longest name wins ("Natural History" over "History").
  /// nullopt when nothing matches (counted incorrect by metrics).
  std::optional<int> match(std::string_view completion) const;

  const std::vector<std::string>& names() const { return names_; }
  const std::string& normalized_name(int index) const {
    return normalized_[index];
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::string> normalized_;
};

inline std::optional<int> match_answer(const std::string& text,
                                       const LabelVerbalizer& verbalizer) {
  return verbalizer.match(text);
}

// ---------------------------------------------------------------------------
// Deterministic mock backend

/// Evidence block line prefix emitted by the retrieval actions and parsed
/// back by the mock backend.
inline constexpr std::string_view kEvidenceLinePrefix = "- Node ";

/// Test double bound to a graph world. Summaries vote with the true labels
/// of the node ids found in the prompt's evidence block; the final answer
/// votes with every evidence id cited by the context summaries, falling
/// back to label 0 when no evidence is present. Identical (prompt, world)
/// pairs produce identical bytes.
class MockBackend : public CompletionBackend {
 public:
  explicit MockBackend(std::shared_ptr<const TextAttributedGraph> world);

  BackendResponse complete(const BackendRequest& request) override;
  std::string_view name() const override { return "mock"; }

 private:
  std::shared_ptr<const TextAttributedGraph> world_;
  LabelVerbalizer verbalizer_;
};

// ---------------------------------------------------------------------------
// Replay / recording backends

/// Replays a recorded script of (purpose, prompt hash) -> responses, FIFO
/// per key. Requests beyond the recorded turns raise script-exhausted.
class ReplayBackend : public CompletionBackend {
 public:
  ReplayBackend() = default;

  static std::unique_ptr<ReplayBackend> load(
      const std::filesystem::path& trace_jsonl);

  BackendResponse complete(const BackendRequest& request) override;
  std::string_view name() const override { return "replay"; }

  void add_turn(Purpose purpose, const std::string& prompt_sha256,
                std::string response);

 private:
  std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, std::deque<std::string>>
      turns_;
};

/// Wraps another backend and appends {purpose, prompt_sha256, response_text}
/// lines suitable for ReplayBackend::load.
class RecordingBackend : public CompletionBackend {
 public:
  RecordingBackend(std::shared_ptr<CompletionBackend> inner,
                   const std::filesystem::path& out_jsonl);

  BackendResponse complete(const BackendRequest& request) override;
  std::string_view name() const override { return "recording"; }

 private:
  std::shared_ptr<CompletionBackend> inner_;
  std::mutex mutex_;
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// HTTP backend

struct HttpBackendConfig {
  std::string endpoint_url;  // e.g. http://127.0.0.1:8080/v1/chat/completions
  std::string api_key;
  std::string model = "default";
  int max_retries = 3;
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds backoff_base{250};
  int max_in_flight = 4;

  /// Reads GRAPHREASON_ENDPOINT / GRAPHREASON_API_KEY / GRAPHREASON_MODEL.
  static HttpBackendConfig from_env();
};

/// Chat-completions client: single POST of {model, messages, temperature,
/// max_tokens}, response text taken from the first choice's message
/// content. Transport errors and 5xx responses retry with exponential
/// backoff. Token vectors cannot cross a text-only wire; the marker run is
/// replaced by a "[GRAPH_TOKENS:T]" stub and the vectors are dropped.
class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;

  BackendResponse complete(const BackendRequest& request) override;
  std::string_view name() const override { return "http"; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace graphreason
