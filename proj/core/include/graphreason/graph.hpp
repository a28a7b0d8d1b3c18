#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace graphreason {

using NodeId = std::uint32_t;

struct NodeText {
  std::string title;
  std::string description;
};

/// Immutable undirected text-attributed graph in CSR form. Construction
/// symmetrizes edges, drops self-loops, sorts and deduplicates neighbor
/// lists, and validates every invariant; afterwards the graph is safe for
/// concurrent read access.
class TextAttributedGraph {
 public:
  TextAttributedGraph() = default;

  /// `edges` may be directed, duplicated, or contain self-loops; the result
  /// is canonical. `labels` uses -1 for unlabeled nodes.
  static TextAttributedGraph build(std::vector<NodeText> texts,
                                   std::vector<std::pair<NodeId, NodeId>> edges,
                                   std::vector<std::int32_t> labels,
                                   std::vector<std::string> label_names);

  std::size_t node_count() const { return texts_.size(); }
  std::size_t class_count() const { return label_names_.size(); }

  /// Number of undirected edges.
  std::size_t edge_count() const { return adjacency_.size() / 2; }

  /// Sorted, duplicate-free neighbor slice; empty for isolated nodes.
  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }

  const NodeText& text(NodeId v) const { return texts_[v]; }

  std::optional<int> label(NodeId v) const {
    if (labels_[v] < 0) return std::nullopt;
    return labels_[v];
  }

  const std::vector<std::string>& label_names() const { return label_names_; }

  bool valid_node(NodeId v) const { return v < texts_.size(); }

 private:
  std::vector<std::size_t> offsets_;  // length node_count + 1
  std::vector<NodeId> adjacency_;
  std::vector<NodeText> texts_;
  std::vector<std::int32_t> labels_;  // -1 when absent
  std::vector<std::string> label_names_;
};

struct DatasetSplit {
  std::vector<NodeId> train_ids;
  std::vector<NodeId> eval_ids;
};

/// Breadth-first traversal from `v`, excluding `v`. Frontiers are visited in
/// ascending node-id order; returns the first min(n, reachable) nodes in
/// visit order.
std::vector<NodeId> bfs_first_n(const TextAttributedGraph& graph, NodeId v,
                                std::size_t n);

/// Dataset directory I/O. Layout: nodes.jsonl, edges.jsonl, labels.json,
/// splits.json. Parse and validation failures carry the file and line.
TextAttributedGraph load_graph(const std::filesystem::path& dir);
DatasetSplit load_split(const std::filesystem::path& dir,
                        const TextAttributedGraph& graph);
void save_graph(const std::filesystem::path& dir,
                const TextAttributedGraph& graph);
void save_split(const std::filesystem::path& dir, const DatasetSplit& split);

}  // namespace graphreason
