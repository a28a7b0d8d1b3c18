#include "graphreason/actions.hpp"

#include <algorithm>

#include "graphreason/error.hpp"

namespace graphreason {

namespace {

constexpr std::size_t kPassageChars = 400;

std::string single_turn_prompt(const PromptTemplateSet& templates,
                               const std::string& body) {
  const std::string& preamble = templates.at("system_preamble");
  std::string prompt =
      preamble.empty() ? std::string("USER: ") : preamble + " USER: ";
  prompt += body;
  prompt += " ASSISTANT:";
  return prompt;
}

BackendResponse complete_annotated(CompletionBackend& backend,
                                   const BackendRequest& request,
                                   std::string_view action) {
  try {
    BackendResponse response = backend.complete(request);
    if (response.text.empty()) {
      throw Error(ErrorKind::Backend,
                  std::string(action) + ": backend returned an empty completion");
    }
    return response;
  } catch (const Error& err) {
    if (std::string_view(err.what()).substr(0, action.size()) == action) {
      throw;
    }
    throw Error(err.kind(), std::string(action) + ": " + err.what());
  }
}

std::string categories_slot(const TextAttributedGraph& graph) {
  return format_categories(graph.label_names());
}

}  // namespace

std::string format_evidence_block(const TextAttributedGraph& graph,
                                  const std::vector<NodeId>& ids) {
  if (ids.empty()) return std::string(kNoEvidenceMarker);
  std::string block;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) block += "\n";
    const auto& text = graph.text(ids[i]);
    block += std::string(kEvidenceLinePrefix) + std::to_string(ids[i]) +
             " | Title: " + text.title + " | Description: " + text.description;
  }
  return block;
}

EvidenceSummary act_retrieve_topological(const TextAttributedGraph& graph,
                                         NodeId v, std::size_t n,
                                         CompletionBackend& backend,
                                         const PromptTemplateSet& templates,
                                         int step) {
  const std::vector<NodeId> ids = bfs_first_n(graph, v, n);
  const std::string body =
      render_template(templates.at("topo_summary"),
                      {{"title", graph.text(v).title},
                       {"description", graph.text(v).description},
                       {"categories", categories_slot(graph)},
                       {"nodes", format_evidence_block(graph, ids)}});
  BackendRequest request;
  request.prompt = single_turn_prompt(templates, body);
  request.purpose = Purpose::TopoSummary;
  const auto response =
      complete_annotated(backend, request, "topological summary");

  EvidenceSummary summary;
  summary.kind = EvidenceSummary::Kind::Topological;
  summary.text = response.text;
  summary.source_ids.assign(ids.begin(), ids.end());
  summary.step = step;
  return summary;
}

EvidenceSummary act_retrieve_semantic(const TextAttributedGraph& graph,
                                      const EmbeddingMatrix& embeddings,
                                      NodeId v, std::size_t m,
                                      CompletionBackend& backend,
                                      const PromptTemplateSet& templates,
                                      int step) {
  std::vector<NodeId> ids;
  for (const auto& [id, score] : top_m_similar(embeddings, v, m)) {
    ids.push_back(id);
  }
  const std::string body =
      render_template(templates.at("sem_summary"),
                      {{"title", graph.text(v).title},
                       {"description", graph.text(v).description},
                       {"categories", categories_slot(graph)},
                       {"nodes", format_evidence_block(graph, ids)}});
  BackendRequest request;
  request.prompt = single_turn_prompt(templates, body);
  request.purpose = Purpose::SemSummary;
  const auto response = complete_annotated(backend, request, "semantic summary");

  EvidenceSummary summary;
  summary.kind = EvidenceSummary::Kind::Semantic;
  summary.text = response.text;
  summary.source_ids.assign(ids.begin(), ids.end());
  summary.step = step;
  return summary;
}

EvidenceSummary act_search(const DocumentIndex& index,
                           const std::string& context_text,
                           CompletionBackend& backend, std::size_t top_s,
                           const PromptTemplateSet& templates, int step) {
  if (top_s < 1) {
    throw Error(ErrorKind::Validation, "act_search: top_s must be >= 1");
  }
  if (index.size() == 0) {
    throw Error(ErrorKind::Validation, "act_search: empty document index");
  }
  BackendRequest request;
  request.prompt = single_turn_prompt(
      templates, context_text + "\n\n" + templates.at("search_query"));
  request.purpose = Purpose::SearchQuery;
  const auto query = complete_annotated(backend, request, "search query");

  const auto ranked = index.query(query.text, top_s);
  EvidenceSummary summary;
  summary.kind = EvidenceSummary::Kind::Search;
  summary.step = step;
  std::string text;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const auto& doc = index.document(ranked[i].first);
    std::string passage = doc.body.substr(0, kPassageChars);
    if (i > 0) text += "\n";
    text += "Doc " + std::to_string(doc.id) + " (" + doc.title + "): " + passage;
    summary.source_ids.push_back(doc.id);
  }
  summary.text = text.empty() ? "(no documents retrieved)" : std::move(text);
  return summary;
}

Observation act_retrieve(const TextAttributedGraph& graph,
                         const EmbeddingMatrix& embeddings, NodeId v,
                         std::size_t n, std::size_t m,
                         CompletionBackend& backend,
                         const PromptTemplateSet& templates,
                         const RetrievalToggles& toggles,
                         const std::string& instruction, int step,
                         const DocumentIndex* index, std::size_t top_s) {
  Observation observation;
  observation.step = step;
  if (toggles.topological) {
    observation.summaries.push_back(
        act_retrieve_topological(graph, v, n, backend, templates, step));
  }
  if (toggles.semantic) {
    observation.summaries.push_back(
        act_retrieve_semantic(graph, embeddings, v, m, backend, templates, step));
  }
  if (toggles.search) {
    if (index == nullptr) {
      throw Error(ErrorKind::Config,
                  "search action enabled but no document index is loaded");
    }
    observation.summaries.push_back(
        act_search(*index, instruction, backend, top_s, templates, step));
  }
  return observation;
}

Observation act_refine(const ReasoningContext& context,
                       const std::string& thought, CompletionBackend& backend,
                       const PromptTemplateSet& templates, int step) {
  BackendRequest request;
  request.prompt =
      render_prompt(/*instruction=*/"", context, templates.at("refinement"),
                    templates, context.char_budget, &thought);
  request.purpose = Purpose::Refinement;
  const auto response = complete_annotated(backend, request, "refinement");

  // The refinement contract is a one-sentence digest; keep the first line.
  std::string digest = response.text;
  if (const auto newline = digest.find('\n'); newline != std::string::npos) {
    digest.resize(newline);
  }
  if (digest.empty()) {
    throw Error(ErrorKind::Backend, "refinement: empty digest");
  }

  EvidenceSummary summary;
  summary.kind = EvidenceSummary::Kind::Refinement;
  summary.text = std::move(digest);
  summary.step = step;

  Observation observation;
  observation.step = step;
  observation.summaries.push_back(std::move(summary));
  return observation;
}

}  // namespace graphreason
