#include "graphreason/backend.hpp"

// httplib drags in system headers whose macros conflict with Eigen's
// internals; it must come after the Eigen-including project headers.
#include <httplib.h>

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "graphreason/error.hpp"
#include "graphreason/prompting.hpp"

namespace graphreason {

using nlohmann::json;

HttpBackendConfig HttpBackendConfig::from_env() {
  HttpBackendConfig config;
  if (const char* url = std::getenv("GRAPHREASON_ENDPOINT")) {
    config.endpoint_url = url;
  }
  if (const char* key = std::getenv("GRAPHREASON_API_KEY")) {
    config.api_key = key;
  }
  if (const char* model = std::getenv("GRAPHREASON_MODEL")) {
    config.model = model;
  }
  return config;
}

namespace {

struct ParsedUrl {
  std::string host;
  int port = 80;
  std::string path = "/";
};

ParsedUrl parse_url(const std::string& url) {
  constexpr std::string_view kScheme = "http://";
  if (url.rfind("https://", 0) == 0) {
    throw Error(ErrorKind::Config,
                "https endpoints are not supported; use a local http proxy");
  }
  if (url.rfind(kScheme, 0) != 0) {
    throw Error(ErrorKind::Config, "endpoint URL must start with http://");
  }
  ParsedUrl parsed;
  const std::string rest = url.substr(kScheme.size());
  const auto slash = rest.find('/');
  std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  if (slash != std::string::npos) parsed.path = rest.substr(slash);
  const auto colon = authority.find(':');
  if (colon != std::string::npos) {
    parsed.host = authority.substr(0, colon);
    parsed.port = std::stoi(authority.substr(colon + 1));
  } else {
    parsed.host = authority;
  }
  if (parsed.host.empty()) {
    throw Error(ErrorKind::Config, "endpoint URL has no host: " + url);
  }
  return parsed;
}

/// Replaces the "<Token 1> ... <Token T>" run with a textual stub; a
/// text-only wire cannot carry embedding inputs.
std::string stub_token_markers(const std::string& prompt) {
  const std::size_t count = count_token_markers(prompt);
  if (count == 0) return prompt;
  const std::string run = token_markers(static_cast<int>(count));
  const auto pos = prompt.find(run);
  if (pos == std::string::npos) return prompt;
  std::string out = prompt;
  out.replace(pos, run.size(), "[GRAPH_TOKENS:" + std::to_string(count) + "]");
  return out;
}

}  // namespace

struct HttpBackend::Impl {
  HttpBackendConfig config;
  ParsedUrl url;
  std::mutex mutex;
  std::condition_variable slot_free;
  int in_flight = 0;

  explicit Impl(HttpBackendConfig cfg)
      : config(std::move(cfg)), url(parse_url(config.endpoint_url)) {}

  struct FlightGuard {
    Impl& impl;
    explicit FlightGuard(Impl& owner) : impl(owner) {
      std::unique_lock lock(impl.mutex);
      impl.slot_free.wait(
          lock, [&] { return impl.in_flight < impl.config.max_in_flight; });
      ++impl.in_flight;
    }
    ~FlightGuard() {
      {
        std::lock_guard lock(impl.mutex);
        --impl.in_flight;
      }
      impl.slot_free.notify_one();
    }
  };
};

HttpBackend::HttpBackend(HttpBackendConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {
  if (impl_->config.max_in_flight < 1) {
    throw Error(ErrorKind::Config, "max_in_flight must be >= 1");
  }
}

HttpBackend::~HttpBackend() = default;

BackendResponse HttpBackend::complete(const BackendRequest& request) {
  if (request.token_vectors) {
    const std::size_t markers = count_token_markers(request.prompt);
    if (markers != request.token_vectors->size()) {
      throw Error(ErrorKind::Validation,
                  "token vector count does not match prompt markers");
    }
  }
  Impl::FlightGuard guard(*impl_);
  const auto& cfg = impl_->config;

  json body;
  body["model"] = cfg.model;
  body["messages"] =
      json::array({{{"role", "user"}, {"content", stub_token_markers(request.prompt)}}});
  body["temperature"] = request.decode.temperature;
  // Rough chars-to-tokens conversion for the generation cap.
  body["max_tokens"] =
      static_cast<long>((request.decode.max_chars + 3) / 4);
  const std::string payload = body.dump();

  const auto started = std::chrono::steady_clock::now();
  std::string last_failure;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(cfg.backoff_base * (1L << (attempt - 1)));
    }
    httplib::Client client(impl_->url.host, impl_->url.port);
    const auto timeout_s = std::chrono::duration_cast<std::chrono::seconds>(
        cfg.timeout);
    client.set_connection_timeout(timeout_s.count(), 0);
    client.set_read_timeout(timeout_s.count(), 0);
    httplib::Headers headers;
    if (!cfg.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + cfg.api_key);
    }

    auto result = client.Post(impl_->url.path, headers, payload,
                              "application/json");
    if (!result) {
      last_failure = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 500) {
      last_failure = "server error: status " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      throw Error(ErrorKind::Backend,
                  "http backend: status " + std::to_string(result->status) +
                      ": " + result->body.substr(0, 200));
    }
    json parsed;
    try {
      parsed = json::parse(result->body);
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::Backend,
                  std::string("http backend: unparseable body: ") + ex.what());
    }
    try {
      std::string text =
          parsed.at("choices").at(0).at("message").at("content").get<std::string>();
      const double latency_ms =
          std::chrono::duration<double, std::milli>(
              std::chrono::steady_clock::now() - started)
              .count();
      if (text.size() > request.decode.max_chars) {
        text.resize(request.decode.max_chars);
      }
      BackendResponse response;
      response.prompt_chars = request.prompt.size();
      response.response_chars = text.size();
      response.text = std::move(text);
      response.latency_ms = latency_ms;
      return response;
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::Backend,
                  std::string("http backend: missing choices[0].message.content: ") +
                      ex.what());
    }
  }
  throw Error(ErrorKind::Transport,
              "http backend: request failed after " +
                  std::to_string(cfg.max_retries) + " retries (" +
                  last_failure + ")");
}

}  // namespace graphreason
