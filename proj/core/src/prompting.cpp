#include "graphreason/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "graphreason/error.hpp"

namespace graphreason {

std::string_view to_string(EvidenceSummary::Kind kind) {
  switch (kind) {
    case EvidenceSummary::Kind::Topological: return "topological";
    case EvidenceSummary::Kind::Semantic: return "semantic";
    case EvidenceSummary::Kind::Search: return "search";
    case EvidenceSummary::Kind::Refinement: return "refinement";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Templates

namespace {

const std::map<std::string, std::string>& default_templates() {
  static const std::map<std::string, std::string> kDefaults = {
      {"system_preamble",
       "A chat between a curious user and an artificial intelligence "
       "assistant. The assistant gives helpful, detailed, and polite answers "
       "step by step to the user's questions."},
      {"task_instruction",
       "Given a representation of a node: {token_placeholders}, with the "
       "following information:\nDescription: {description}\nTitle: {title}"},
      {"final_question",
       "Question: Which category does this node belong to? Please directly "
       "give the most likely answer from the following categories: "
       "{categories}."},
      {"thought_generation",
       "The task is to classify a node by its main topic and content. Based "
       "on the node information above, generate one concise sentence as your "
       "current thought to help solve the task."},
      {"topo_summary",
       "You are given a subgraph consisting of a target node and its "
       "neighboring nodes from a graph. Each neighbor is described by a "
       "title and a description. Your task is to infer the most likely "
       "category of the subgraph based ONLY on the textual information of "
       "the neighbors, and generate a one-sentence summary in the following "
       "fixed format: \"This subgraph xxx, so the category might be xxx.\"\n"
       "\n"
       "IMPORTANT RULES (must be followed strictly):\n"
       "1. Text-based inference: Analyze the titles and descriptions of all "
       "neighbors as a whole and identify the dominant themes.\n"
       "2. Noise filtering: Ignore non-informative promotional content and "
       "focus on the core subject matter.\n"
       "3. Category constraint: The final category MUST be chosen from the "
       "following list and cannot be invented or modified: {categories}\n"
       "4. Output constraint: Output exactly ONE sentence in the fixed "
       "format.\n"
       "\n"
       "Target node:\nTitle: {title}\nDescription: {description}\n"
       "\n"
       "Here is the neighbor information:\n{nodes}\n"
       "Please give your reply:"},
      {"sem_summary",
       "You are given a center node and some similar nodes, which are based "
       "on similar semantic node embeddings, from a graph. Each node is "
       "described by a title and a description. Your task is to infer the "
       "most likely category of the node set based ONLY on the textual "
       "information, and generate a one-sentence summary in the following "
       "fixed format: \"This node set xxx, so the category might be xxx.\"\n"
       "\n"
       "IMPORTANT RULES (must be followed strictly):\n"
       "1. Text-based inference: Analyze the titles and descriptions of all "
       "nodes as a whole and identify the dominant themes.\n"
       "2. Noise filtering: Ignore non-informative promotional content and "
       "focus on the core subject matter.\n"
       "3. Category constraint: The final category MUST be chosen from the "
       "following list and cannot be invented or modified: {categories}\n"
       "4. Output constraint: Output exactly ONE sentence in the fixed "
       "format.\n"
       "\n"
       "Center node:\nTitle: {title}\nDescription: {description}\n"
       "\n"
       "Here is the node information:\n{nodes}\n"
       "Please give your reply:"},
      {"refinement",
       "Please summarize the key points from our discussion so far in one "
       "sentence. Focus on the most important information that will help "
       "answer the original question."},
      {"search_query",
       "To better understand the node above, select ONE specific topic, "
       "theme, or concept that is central to it and can be searched in a "
       "document index. Avoid overly generic terms. Output only a short "
       "phrase (maximum 5 words). Do NOT explain."},
      {"topo_leadin",
       "In addition to the information above, the node is part of a graph, "
       "where neighboring nodes are often related or similar. As a result, "
       "adjacent nodes may share the same or closely related categories. The "
       "following summary describes the content and category tendencies of "
       "the neighboring nodes, and can be used as contextual evidence to "
       "help answer the question."},
      {"sem_leadin",
       "Here is another summary generated from nodes that are similar to the "
       "center node."},
      {"search_leadin",
       "The following passages were retrieved from an external document "
       "index and may provide additional context."},
  };
  return kDefaults;
}

}  // namespace

PromptTemplateSet PromptTemplateSet::defaults() {
  PromptTemplateSet set;
  set.templates_ = default_templates();
  return set;
}

PromptTemplateSet PromptTemplateSet::load_dir(
    const std::filesystem::path& dir) {
  PromptTemplateSet set = defaults();
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::Io,
                "template directory not found: " + dir.string());
  }
  for (const auto& name : known_names()) {
    const auto path = dir / (name + ".txt");
    if (!std::filesystem::exists(path)) continue;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream content;
    content << in.rdbuf();
    std::string text = content.str();
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
      text.pop_back();
    }
    set.templates_[name] = std::move(text);
  }
  return set;
}

const std::string& PromptTemplateSet::at(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) {
    throw Error(ErrorKind::Validation, "unknown template '" + name + "'");
  }
  return it->second;
}

void PromptTemplateSet::set(const std::string& name, std::string text) {
  templates_[name] = std::move(text);
}

const std::vector<std::string>& PromptTemplateSet::known_names() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> names;
    for (const auto& [name, text] : default_templates()) names.push_back(name);
    return names;
  }();
  return kNames;
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& slots) {
  std::string out;
  out.reserve(tmpl.size());
  for (std::size_t i = 0; i < tmpl.size();) {
    const char c = tmpl[i];
    if (c == '{') {
      if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
        out.push_back('{');
        i += 2;
        continue;
      }
      const auto close = tmpl.find('}', i + 1);
      if (close == std::string::npos) {
        throw Error(ErrorKind::Parse, "template: unterminated placeholder");
      }
      const std::string name = tmpl.substr(i + 1, close - i - 1);
      if (name.empty() ||
          !std::all_of(name.begin(), name.end(), [](unsigned char ch) {
            return std::isalnum(ch) || ch == '_';
          })) {
        throw Error(ErrorKind::Parse,
                    "template: malformed placeholder '{" + name + "}'");
      }
      auto it = slots.find(name);
      if (it == slots.end()) {
        throw Error(ErrorKind::Validation,
                    "missing template slot '" + name + "'");
      }
      out += it->second;  // verbatim, never re-scanned
      i = close + 1;
      continue;
    }
    if (c == '}') {
      if (i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
        out.push_back('}');
        i += 2;
        continue;
      }
      throw Error(ErrorKind::Parse, "template: stray '}'");
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

std::string token_markers(int count) {
  std::string out;
  for (int t = 1; t <= count; ++t) {
    if (t > 1) out.push_back(' ');
    out += "<Token " + std::to_string(t) + ">";
  }
  return out;
}

std::string format_categories(const std::vector<std::string>& label_names) {
  std::string out;
  for (std::size_t i = 0; i < label_names.size(); ++i) {
    if (i > 0) out += ", ";
    out += "\"" + label_names[i] + "\"";
  }
  return out;
}

std::string build_instruction(const NodeText& node, int token_count,
                              const PromptTemplateSet& templates) {
  if (token_count < 1) {
    throw Error(ErrorKind::Validation,
                "build_instruction: token count must be >= 1");
  }
  return render_template(templates.at("task_instruction"),
                         {{"token_placeholders", token_markers(token_count)},
                          {"title", node.title},
                          {"description", node.description}});
}

// ---------------------------------------------------------------------------
// Reasoning context

ReasoningContext init_context(std::string thought, Observation observation,
                              std::size_t budget) {
  if (observation.step != 1) {
    throw Error(ErrorKind::Validation,
                "init_context: observation step must be 1, got " +
                    std::to_string(observation.step));
  }
  ReasoningContext context;
  context.char_budget = budget;
  context.records_.push_back(
      ContextRecord{1, std::move(thought), std::move(observation)});
  return context;
}

ReasoningContext update_context(const ReasoningContext& context,
                                std::string thought, Observation observation) {
  const int expected = context.last_step() + 1;
  if (observation.step != expected) {
    throw Error(ErrorKind::Validation,
                "update_context: expected step " + std::to_string(expected) +
                    ", got " + std::to_string(observation.step));
  }
  ReasoningContext next = context;
  next.records_.push_back(ContextRecord{observation.step, std::move(thought),
                                        std::move(observation)});
  return next;
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string_view summary_label(EvidenceSummary::Kind kind) {
  switch (kind) {
    case EvidenceSummary::Kind::Topological: return "Neighbor summary";
    case EvidenceSummary::Kind::Semantic: return "Node summary";
    case EvidenceSummary::Kind::Search: return "Search result";
    case EvidenceSummary::Kind::Refinement: return "Summary";
  }
  return "Summary";
}

const char* leadin_name(EvidenceSummary::Kind kind) {
  switch (kind) {
    case EvidenceSummary::Kind::Topological: return "topo_leadin";
    case EvidenceSummary::Kind::Semantic: return "sem_leadin";
    case EvidenceSummary::Kind::Search: return "search_leadin";
    case EvidenceSummary::Kind::Refinement: return nullptr;
  }
  return nullptr;
}

struct PromptItem {
  bool is_thought = false;
  bool final_record = false;
  std::string rendered;
  bool dropped = false;
};

constexpr std::string_view kTruncatedMarker = "[truncated]";

std::string assemble(const std::string& preamble,
                     const std::string& instruction,
                     const std::vector<PromptItem>& items,
                     const std::string& tail) {
  std::string prompt =
      preamble.empty() ? std::string("USER: ") : preamble + " USER: ";
  std::vector<std::string_view> blocks;
  if (!instruction.empty()) blocks.push_back(instruction);
  bool in_dropped_run = false;
  for (const auto& item : items) {
    if (item.dropped) {
      if (!in_dropped_run) blocks.push_back(kTruncatedMarker);
      in_dropped_run = true;
    } else {
      blocks.push_back(item.rendered);
      in_dropped_run = false;
    }
  }
  blocks.push_back(tail);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) prompt += "\n\n";
    prompt += blocks[i];
  }
  prompt += " ASSISTANT:";
  return prompt;
}

}  // namespace

std::string render_prompt(const std::string& instruction,
                          const ReasoningContext& context,
                          const std::string& question,
                          const PromptTemplateSet& templates,
                          std::size_t budget,
                          const std::string* pending_thought) {
  if (budget == 0) {
    throw Error(ErrorKind::Budget, "render_prompt: budget must be positive");
  }
  const std::string& preamble = templates.at("system_preamble");

  std::vector<PromptItem> items;
  const auto& records = context.records();
  for (std::size_t r = 0; r < records.size(); ++r) {
    const bool final_record = (r + 1 == records.size());
    items.push_back(
        {true, final_record, "Thought: " + records[r].thought, false});
    for (const auto& summary : records[r].observation.summaries) {
      std::string block;
      if (const char* leadin = leadin_name(summary.kind)) {
        const std::string& text = templates.at(leadin);
        if (!text.empty()) block = text + "\n";
      }
      block += std::string(summary_label(summary.kind)) + ": " + summary.text;
      items.push_back({false, final_record, std::move(block), false});
    }
  }
  if (pending_thought) {
    items.push_back({true, true, "Thought: " + *pending_thought, false});
  }

  std::string prompt = assemble(preamble, instruction, items, question);
  if (prompt.size() <= budget) return prompt;

  // Drop order: summaries of non-final records (oldest first), then thoughts
  // (oldest first), then summaries of the final record.
  std::vector<std::size_t> drop_order;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].is_thought && !items[i].final_record) drop_order.push_back(i);
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].is_thought) drop_order.push_back(i);
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].is_thought && items[i].final_record) drop_order.push_back(i);
  }
  for (std::size_t idx : drop_order) {
    items[idx].dropped = true;
    prompt = assemble(preamble, instruction, items, question);
    if (prompt.size() <= budget) return prompt;
  }
  throw Error(ErrorKind::Budget,
              "render_prompt: instruction and question exceed the budget of " +
                  std::to_string(budget) + " characters");
}

}  // namespace graphreason
