#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graphreason/graph.hpp"

namespace graphreason {

// ---------------------------------------------------------------------------
// Evidence and observations

struct EvidenceSummary {
  enum class Kind { Topological, Semantic, Search, Refinement };

  Kind kind = Kind::Topological;
  std::string text;
  std::vector<std::int64_t> source_ids;  // node ids, or document ids for search
  int step = 1;
};

std::string_view to_string(EvidenceSummary::Kind kind);

/// Result of one action; retrieval observations keep the fixed
/// topological / semantic / search summary order.
struct Observation {
  int step = 1;
  std::vector<EvidenceSummary> summaries;
};

// ---------------------------------------------------------------------------
// Templates

/// Marker substituted for the {nodes} slot when an action retrieved nothing;
/// keeps the context structure uniform for zero-evidence nodes.
inline constexpr std::string_view kNoEvidenceMarker =
    "(no retrieved nodes available)";

/// Named prompt templates with {slot} placeholders. Doubled braces render
/// literally; slot values are inserted verbatim and never re-scanned.
class PromptTemplateSet {
 public:
  static PromptTemplateSet defaults();

  /// Reads <name>.txt files from `dir`, falling back to the defaults for
  /// any template not present.
  static PromptTemplateSet load_dir(const std::filesystem::path& dir);

  const std::string& at(const std::string& name) const;
  void set(const std::string& name, std::string text);

  static const std::vector<std::string>& known_names();

 private:
  std::map<std::string, std::string> templates_;
};

/// Substitutes {slot} placeholders; "{{" and "}}" escape literal braces.
/// Referencing a slot that was not supplied is an error.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& slots);

/// "<Token 1> <Token 2> ... <Token t>".
std::string token_markers(int count);

/// Quoted, comma-separated category list for the {categories} slot.
std::string format_categories(const std::vector<std::string>& label_names);

/// Task instruction for a node: title/description substituted and `t`
/// ordered token markers at the designated slot.
std::string build_instruction(const NodeText& node, int token_count,
                              const PromptTemplateSet& templates);

// ---------------------------------------------------------------------------
// Reasoning context

struct ContextRecord {
  int step = 1;
  std::string thought;
  Observation observation;
};

/// Append-only (thought, observation) history of one episode. Steps are
/// strictly increasing from 1; never shared across concurrent episodes.
class ReasoningContext {
 public:
  const std::vector<ContextRecord>& records() const { return records_; }
  bool empty() const { return records_.empty(); }
  int last_step() const {
    return records_.empty() ? 0 : records_.back().step;
  }
  std::size_t char_budget = 8000;

  friend ReasoningContext init_context(std::string thought,
                                       Observation observation,
                                       std::size_t budget);
  friend ReasoningContext update_context(const ReasoningContext& context,
                                         std::string thought,
                                         Observation observation);

 private:
  std::vector<ContextRecord> records_;
};

ReasoningContext init_context(std::string thought, Observation observation,
                              std::size_t budget = 8000);
ReasoningContext update_context(const ReasoningContext& context,
                                std::string thought, Observation observation);

// ---------------------------------------------------------------------------
// Rendering

/// Single-turn prompt: preamble, "USER: ", instruction, one block per
/// record (thought, then labeled summaries with their lead-ins), the task
/// question, and the assistant cue. If the result exceeds `budget`, the
/// oldest non-final summaries are dropped first, then the oldest thoughts,
/// never the instruction or question; dropped runs render as "[truncated]".
/// `pending_thought`, when set, renders after the last record (used by the
/// refinement action). An empty instruction is omitted entirely.
std::string render_prompt(const std::string& instruction,
                          const ReasoningContext& context,
                          const std::string& question,
                          const PromptTemplateSet& templates,
                          std::size_t budget,
                          const std::string* pending_thought = nullptr);

}  // namespace graphreason
