#pragma once

#include <string>

#include "graphreason/backend.hpp"
#include "graphreason/doc_index.hpp"
#include "graphreason/embedding.hpp"
#include "graphreason/graph.hpp"
#include "graphreason/prompting.hpp"

namespace graphreason {

/// Which retrieval primitives a composite retrieve action runs. Summaries
/// are always collected topological, then semantic, then search.
struct RetrievalToggles {
  bool topological = true;
  bool semantic = true;
  bool search = false;
};

/// "- Node <id> | Title: ... | Description: ..." lines, one per id;
/// the no-evidence marker when `ids` is empty.
std::string format_evidence_block(const TextAttributedGraph& graph,
                                  const std::vector<NodeId>& ids);

/// BFS-retrieves the first `n` structurally reachable nodes, renders the
/// topological instruction, and summarizes through the backend.
EvidenceSummary act_retrieve_topological(const TextAttributedGraph& graph,
                                         NodeId v, std::size_t n,
                                         CompletionBackend& backend,
                                         const PromptTemplateSet& templates,
                                         int step);

/// Retrieves the top-m cosine neighbors in embedding space and summarizes.
EvidenceSummary act_retrieve_semantic(const TextAttributedGraph& graph,
                                      const EmbeddingMatrix& embeddings,
                                      NodeId v, std::size_t m,
                                      CompletionBackend& backend,
                                      const PromptTemplateSet& templates,
                                      int step);

/// Asks the backend for a short query phrase about `context_text`, ranks
/// documents by TF-IDF cosine, and concatenates passages truncated to 400
/// characters each. Source ids are document ids.
EvidenceSummary act_search(const DocumentIndex& index,
                           const std::string& context_text,
                           CompletionBackend& backend, std::size_t top_s,
                           const PromptTemplateSet& templates, int step);

/// Composite retrieval: runs every enabled primitive in the fixed order and
/// collects the summaries into one observation. All toggles off yields a
/// valid empty observation.
Observation act_retrieve(const TextAttributedGraph& graph,
                         const EmbeddingMatrix& embeddings, NodeId v,
                         std::size_t n, std::size_t m,
                         CompletionBackend& backend,
                         const PromptTemplateSet& templates,
                         const RetrievalToggles& toggles,
                         const std::string& instruction, int step,
                         const DocumentIndex* index = nullptr,
                         std::size_t top_s = 6);

/// Sends the rendered context plus the new thought to the backend and wraps
/// the one-sentence digest as a refinement observation.
Observation act_refine(const ReasoningContext& context,
                       const std::string& thought, CompletionBackend& backend,
                       const PromptTemplateSet& templates, int step);

}  // namespace graphreason
