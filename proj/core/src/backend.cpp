#include "graphreason/backend.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "graphreason/digest.hpp"
#include "graphreason/error.hpp"
#include "graphreason/prompting.hpp"

namespace graphreason {

using nlohmann::json;

std::string_view to_string(Purpose purpose) {
  switch (purpose) {
    case Purpose::Thought: return "thought";
    case Purpose::TopoSummary: return "topo_summary";
    case Purpose::SemSummary: return "sem_summary";
    case Purpose::Refinement: return "refinement";
    case Purpose::SearchQuery: return "search_query";
    case Purpose::Final: return "final";
  }
  return "unknown";
}

std::optional<Purpose> purpose_from_string(std::string_view name) {
  for (Purpose p :
       {Purpose::Thought, Purpose::TopoSummary, Purpose::SemSummary,
        Purpose::Refinement, Purpose::SearchQuery, Purpose::Final}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::size_t count_token_markers(std::string_view prompt) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while ((pos = prompt.find("<Token ", pos)) != std::string_view::npos) {
    std::size_t i = pos + 7;
    std::size_t digits = 0;
    while (i < prompt.size() && std::isdigit(static_cast<unsigned char>(prompt[i]))) {
      ++i;
      ++digits;
    }
    if (digits > 0 && i < prompt.size() && prompt[i] == '>') ++count;
    pos = pos + 7;
  }
  return count;
}

namespace {

void validate_request(const BackendRequest& request) {
  if (request.token_vectors) {
    const std::size_t markers = count_token_markers(request.prompt);
    if (markers != request.token_vectors->size()) {
      throw Error(ErrorKind::Validation,
                  "request has " + std::to_string(request.token_vectors->size()) +
                      " token vectors but the prompt contains " +
                      std::to_string(markers) + " token markers");
    }
  }
  if (request.decode.max_chars == 0) {
    throw Error(ErrorKind::Validation, "decode.max_chars must be positive");
  }
}

BackendResponse make_response(const BackendRequest& request, std::string text,
                              double latency_ms = 0.0) {
  if (text.size() > request.decode.max_chars) {
    text.resize(request.decode.max_chars);
  }
  BackendResponse response;
  response.prompt_chars = request.prompt.size();
  response.response_chars = text.size();
  response.text = std::move(text);
  response.latency_ms = latency_ms;
  return response;
}

}  // namespace

// ---------------------------------------------------------------------------
// LabelVerbalizer

LabelVerbalizer::LabelVerbalizer(std::vector<std::string> label_names)
    : names_(std::move(label_names)) {
  normalized_.reserve(names_.size());
  for (const auto& name : names_) {
    std::string norm = normalize(name);
    if (norm.empty()) {
      throw Error(ErrorKind::Validation,
                  "label '" + name + "' normalizes to an empty string");
    }
    if (std::find(normalized_.begin(), normalized_.end(), norm) !=
        normalized_.end()) {
      throw Error(ErrorKind::Validation,
                  "labels are not distinct after normalization: '" + name + "'");
    }
    normalized_.push_back(std::move(norm));
  }
}

std::string LabelVerbalizer::normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isalnum(c) || raw == '&') {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_space = true;  // punctuation and whitespace both separate
    }
  }
  return out;
}

std::optional<int> LabelVerbalizer::match(std::string_view completion) const {
  const std::string haystack = normalize(completion);
  std::optional<int> best;
  std::size_t best_pos = 0;
  std::size_t best_len = 0;
  for (std::size_t i = 0; i < normalized_.size(); ++i) {
    const auto pos = haystack.find(normalized_[i]);
    if (pos == std::string::npos) continue;
    const std::size_t len = normalized_[i].size();
    if (!best || pos < best_pos || (pos == best_pos && len > best_len)) {
      best = static_cast<int>(i);
      best_pos = pos;
      best_len = len;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// MockBackend

namespace {

/// Ids from evidence block lines ("- Node 12 | ...").
std::vector<std::int64_t> parse_evidence_ids(std::string_view prompt) {
  std::vector<std::int64_t> ids;
  std::size_t pos = 0;
  while (pos < prompt.size()) {
    std::size_t eol = prompt.find('\n', pos);
    if (eol == std::string_view::npos) eol = prompt.size();
    const auto line = prompt.substr(pos, eol - pos);
    if (line.rfind(kEvidenceLinePrefix, 0) == 0) {
      std::size_t i = kEvidenceLinePrefix.size();
      std::int64_t value = 0;
      std::size_t digits = 0;
      while (i < line.size() &&
             std::isdigit(static_cast<unsigned char>(line[i]))) {
        value = value * 10 + (line[i] - '0');
        ++i;
        ++digits;
      }
      if (digits > 0) ids.push_back(value);
    }
    pos = eol + 1;
  }
  return ids;
}

/// Ids cited by summaries as "nodes [3, 7, 12]".
std::vector<std::int64_t> parse_cited_ids(std::string_view prompt) {
  std::vector<std::int64_t> ids;
  std::size_t pos = 0;
  constexpr std::string_view kCite = "nodes [";
  while ((pos = prompt.find(kCite, pos)) != std::string_view::npos) {
    std::size_t i = pos + kCite.size();
    std::int64_t value = 0;
    std::size_t digits = 0;
    while (i < prompt.size()) {
      const char c = prompt[i];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        value = value * 10 + (c - '0');
        ++digits;
      } else if (c == ',' || c == ' ') {
        if (digits > 0) ids.push_back(value);
        value = 0;
        digits = 0;
      } else {
        break;
      }
      ++i;
    }
    if (digits > 0 && i < prompt.size() && prompt[i] == ']') ids.push_back(value);
    pos = i;
  }
  return ids;
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

/// Label names mentioned after "the category might be", one vote per span.
std::vector<int> parse_named_labels(std::string_view prompt,
                                    const LabelVerbalizer& verbalizer) {
  std::vector<int> labels;
  const std::string haystack = lowercase(prompt);
  constexpr std::string_view kPhrase = "the category might be ";
  std::size_t pos = 0;
  while ((pos = haystack.find(kPhrase, pos)) != std::string::npos) {
    const std::size_t start = pos + kPhrase.size();
    std::size_t end = start;
    while (end < haystack.size() && haystack[end] != '.' &&
           haystack[end] != '\n') {
      ++end;
    }
    if (auto label = verbalizer.match(
            std::string_view(haystack).substr(start, end - start))) {
      labels.push_back(*label);
    }
    pos = end;
  }
  return labels;
}

std::optional<std::string> parse_title_line(std::string_view prompt) {
  constexpr std::string_view kTitle = "Title: ";
  const auto pos = prompt.find(kTitle);
  if (pos == std::string_view::npos) return std::nullopt;
  std::size_t end = prompt.find('\n', pos);
  if (end == std::string_view::npos) end = prompt.size();
  return std::string(prompt.substr(pos + kTitle.size(), end - pos - kTitle.size()));
}

int majority_label(const std::vector<int>& votes) {
  if (votes.empty()) return 0;  // fallback: label 0
  std::map<int, int> counts;
  for (int v : votes) ++counts[v];
  int best = votes.front();
  int best_count = 0;
  for (const auto& [label, count] : counts) {
    // map iterates ascending, so ties resolve to the smallest index
    if (count > best_count) {
      best = label;
      best_count = count;
    }
  }
  return best;
}

std::string join_ids(const std::vector<std::int64_t>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(ids[i]);
  }
  return out;
}

}  // namespace

MockBackend::MockBackend(std::shared_ptr<const TextAttributedGraph> world)
    : world_(std::move(world)), verbalizer_(world_->label_names()) {
  if (world_->class_count() == 0) {
    throw Error(ErrorKind::Validation,
                "mock backend needs a world with label names");
  }
}

BackendResponse MockBackend::complete(const BackendRequest& request) {
  validate_request(request);
  const auto& prompt = request.prompt;

  auto votes_for = [&](const std::vector<std::int64_t>& ids) {
    std::vector<int> votes;
    for (std::int64_t id : ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= world_->node_count()) {
        continue;
      }
      if (auto label = world_->label(static_cast<NodeId>(id))) {
        votes.push_back(*label);
      }
    }
    return votes;
  };
  auto label_name = [&](int index) { return world_->label_names().at(index); };

  switch (request.purpose) {
    case Purpose::Thought: {
      const auto title = parse_title_line(prompt);
      return make_response(
          request, "Considering the node titled \"" +
                       title.value_or("this node") +
                       "\", the category should follow from the graph "
                       "evidence gathered so far.");
    }
    case Purpose::TopoSummary:
    case Purpose::SemSummary: {
      const auto ids = parse_evidence_ids(prompt);
      if (ids.empty() && prompt.find(kNoEvidenceMarker) == std::string::npos) {
        throw Error(ErrorKind::Backend,
                    "mock backend: malformed evidence block (no '- Node' "
                    "lines and no empty-evidence marker)");
      }
      const int winner = majority_label(votes_for(ids));
      const bool topo = request.purpose == Purpose::TopoSummary;
      std::string text = topo ? "This subgraph covers nodes ["
                              : "This node set covers nodes [";
      text += join_ids(ids) + "], so the category might be " +
              label_name(winner) + ".";
      return make_response(request, std::move(text));
    }
    case Purpose::Refinement: {
      const auto named = parse_named_labels(prompt, verbalizer_);
      const int winner = majority_label(named);
      return make_response(
          request, "The evidence discussed so far suggests the category "
                   "might be " + label_name(winner) + ".");
    }
    case Purpose::SearchQuery: {
      const auto title = parse_title_line(prompt);
      std::string query;
      if (title) {
        std::istringstream words(*title);
        std::string word;
        int taken = 0;
        while (taken < 4 && words >> word) {
          if (taken > 0) query += " ";
          query += word;
          ++taken;
        }
      }
      if (query.empty()) query = "node category";
      return make_response(request, std::move(query));
    }
    case Purpose::Final: {
      const auto ids = parse_cited_ids(prompt);
      const int winner = majority_label(votes_for(ids));
      return make_response(request,
                           "The category might be " + label_name(winner) + ".");
    }
  }
  throw Error(ErrorKind::Backend, "mock backend: unknown purpose");
}

// ---------------------------------------------------------------------------
// ReplayBackend

std::unique_ptr<ReplayBackend> ReplayBackend::load(
    const std::filesystem::path& trace_jsonl) {
  std::ifstream in(trace_jsonl);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open " + trace_jsonl.string());
  }
  auto backend = std::make_unique<ReplayBackend>();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::Parse, trace_jsonl.string() + " line " +
                                        std::to_string(lineno) + ": " +
                                        ex.what());
    }
    const auto purpose = purpose_from_string(rec.at("purpose").get<std::string>());
    if (!purpose) {
      throw Error(ErrorKind::Parse, trace_jsonl.string() + " line " +
                                        std::to_string(lineno) +
                                        ": unknown purpose");
    }
    backend->add_turn(*purpose, rec.at("prompt_sha256").get<std::string>(),
                      rec.at("response_text").get<std::string>());
  }
  return backend;
}

void ReplayBackend::add_turn(Purpose purpose, const std::string& prompt_sha256,
                             std::string response) {
  std::lock_guard lock(mutex_);
  turns_[{std::string(to_string(purpose)), prompt_sha256}].push_back(
      std::move(response));
}

BackendResponse ReplayBackend::complete(const BackendRequest& request) {
  validate_request(request);
  const std::string hash = sha256_hex(request.prompt);
  std::lock_guard lock(mutex_);
  auto it = turns_.find({std::string(to_string(request.purpose)), hash});
  if (it == turns_.end() || it->second.empty()) {
    throw Error(ErrorKind::ScriptExhausted,
                "replay script exhausted for purpose=" +
                    std::string(to_string(request.purpose)) + " prompt=" +
                    hash.substr(0, 12));
  }
  std::string text = std::move(it->second.front());
  it->second.pop_front();
  if (it->second.empty()) turns_.erase(it);
  return make_response(request, std::move(text));
}

// ---------------------------------------------------------------------------
// RecordingBackend

RecordingBackend::RecordingBackend(std::shared_ptr<CompletionBackend> inner,
                                   const std::filesystem::path& out_jsonl)
    : inner_(std::move(inner)), out_(out_jsonl, std::ios::app) {
  if (!out_) {
    throw Error(ErrorKind::Io, "cannot write " + out_jsonl.string());
  }
}

BackendResponse RecordingBackend::complete(const BackendRequest& request) {
  BackendResponse response = inner_->complete(request);
  json rec;
  rec["purpose"] = std::string(to_string(request.purpose));
  rec["prompt_sha256"] = sha256_hex(request.prompt);
  rec["response_text"] = response.text;
  std::lock_guard lock(mutex_);
  out_ << rec.dump() << '\n';
  out_.flush();
  return response;
}

}  // namespace graphreason
