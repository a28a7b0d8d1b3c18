#include "graphreason/graph.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "graphreason/error.hpp"

namespace graphreason {

using nlohmann::json;

TextAttributedGraph TextAttributedGraph::build(
    std::vector<NodeText> texts, std::vector<std::pair<NodeId, NodeId>> edges,
    std::vector<std::int32_t> labels, std::vector<std::string> label_names) {
  const std::size_t n = texts.size();
  if (labels.size() != n) {
    throw Error(ErrorKind::Validation, "label count does not match node count");
  }
  const auto class_count = static_cast<std::int32_t>(label_names.size());
  for (std::size_t v = 0; v < n; ++v) {
    if (labels[v] >= class_count) {
      throw Error(ErrorKind::Validation,
                  "node " + std::to_string(v) + ": label index " +
                      std::to_string(labels[v]) + " out of range [0, " +
                      std::to_string(class_count) + ")");
    }
  }

  std::vector<std::vector<NodeId>> adj(n);
  for (const auto& [src, dst] : edges) {
    if (src >= n || dst >= n) {
      throw Error(ErrorKind::Validation,
                  "edge " + std::to_string(src) + "-" + std::to_string(dst) +
                      ": dangling endpoint in a " + std::to_string(n) +
                      "-node graph");
    }
    if (src == dst) continue;  // self-loops dropped
    adj[src].push_back(dst);
    adj[dst].push_back(src);
  }

  TextAttributedGraph g;
  g.offsets_.reserve(n + 1);
  g.offsets_.push_back(0);
  for (std::size_t v = 0; v < n; ++v) {
    auto& list = adj[v];
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    g.adjacency_.insert(g.adjacency_.end(), list.begin(), list.end());
    g.offsets_.push_back(g.adjacency_.size());
  }
  g.texts_ = std::move(texts);
  g.labels_ = std::move(labels);
  g.label_names_ = std::move(label_names);
  return g;
}

std::vector<NodeId> bfs_first_n(const TextAttributedGraph& graph, NodeId v,
                                std::size_t n) {
  std::vector<NodeId> visited;
  if (n == 0) return visited;

  std::vector<bool> seen(graph.node_count(), false);
  seen[v] = true;
  std::vector<NodeId> frontier{v};

  while (!frontier.empty() && visited.size() < n) {
    std::vector<NodeId> next;
    for (NodeId u : frontier) {
      for (NodeId w : graph.neighbors(u)) {
        if (!seen[w]) {
          seen[w] = true;
          next.push_back(w);
        }
      }
    }
    // Neighbor lists are sorted, but different frontier nodes discover ids
    // out of order; the frontier as a whole is visited ascending.
    std::sort(next.begin(), next.end());
    for (NodeId w : next) {
      if (visited.size() == n) break;
      visited.push_back(w);
    }
    frontier = std::move(next);
  }
  return visited;
}

namespace {

json parse_json_line(const std::string& line, const std::string& file,
                     std::size_t lineno) {
  try {
    return json::parse(line);
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::Parse,
                file + " line " + std::to_string(lineno) + ": " + ex.what());
  }
}

json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::Parse, path.string() + ": " + ex.what());
  }
}

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(parse_json_line(line, path.filename().string(), lineno), lineno);
    } catch (const json::exception& ex) {
      // Field-type errors inside a structurally valid record.
      throw Error(ErrorKind::Parse, path.filename().string() + " line " +
                                        std::to_string(lineno) + ": " +
                                        ex.what());
    }
  }
}

NodeId require_node(const json& value, const char* key, std::size_t node_count,
                    const std::string& file, std::size_t lineno) {
  if (!value.contains(key) || !value[key].is_number_integer()) {
    throw Error(ErrorKind::Parse, file + " line " + std::to_string(lineno) +
                                      ": missing integer field '" + key + "'");
  }
  const auto raw = value[key].get<std::int64_t>();
  if (raw < 0 || static_cast<std::size_t>(raw) >= node_count) {
    throw Error(ErrorKind::Validation,
                file + " line " + std::to_string(lineno) + ": " + key + "=" +
                    std::to_string(raw) + " is not a valid node id");
  }
  return static_cast<NodeId>(raw);
}

}  // namespace

TextAttributedGraph load_graph(const std::filesystem::path& dir) {
  const auto labels_json = parse_json_file(dir / "labels.json");
  if (!labels_json.is_array()) {
    throw Error(ErrorKind::Parse, "labels.json: expected an array of names");
  }
  std::vector<std::string> label_names;
  for (const auto& name : labels_json) {
    if (!name.is_string()) {
      throw Error(ErrorKind::Parse,
                  "labels.json: entry " + std::to_string(label_names.size()) +
                      " is not a string");
    }
    label_names.push_back(name.get<std::string>());
  }

  struct RawNode {
    NodeText text;
    std::int32_t label;
  };
  std::vector<std::optional<RawNode>> nodes;
  std::size_t node_records = 0;
  for_each_jsonl(dir / "nodes.jsonl", [&](const json& rec, std::size_t lineno) {
    ++node_records;
    if (!rec.contains("id") || !rec["id"].is_number_integer()) {
      throw Error(ErrorKind::Parse, "nodes.jsonl line " +
                                        std::to_string(lineno) +
                                        ": missing integer field 'id'");
    }
    const auto id = rec["id"].get<std::int64_t>();
    if (id < 0) {
      throw Error(ErrorKind::Validation,
                  "nodes.jsonl line " + std::to_string(lineno) +
                      ": negative node id");
    }
    if (static_cast<std::size_t>(id) >= nodes.size()) {
      nodes.resize(static_cast<std::size_t>(id) + 1);
    }
    if (nodes[static_cast<std::size_t>(id)].has_value()) {
      throw Error(ErrorKind::Validation,
                  "nodes.jsonl line " + std::to_string(lineno) +
                      ": duplicate node id " + std::to_string(id));
    }
    RawNode node;
    node.text.title = rec.value("title", std::string{});
    node.text.description = rec.value("description", std::string{});
    node.label = -1;
    if (rec.contains("label") && !rec["label"].is_null()) {
      node.label = rec["label"].get<std::int32_t>();
      if (node.label < 0 ||
          node.label >= static_cast<std::int32_t>(label_names.size())) {
        throw Error(ErrorKind::Validation,
                    "nodes.jsonl line " + std::to_string(lineno) +
                        ": label index " + std::to_string(node.label) +
                        " out of range [0, " +
                        std::to_string(label_names.size()) + ")");
      }
    }
    nodes[static_cast<std::size_t>(id)] = std::move(node);
  });
  if (nodes.size() != node_records) {
    throw Error(ErrorKind::Validation,
                "nodes.jsonl: node ids are not contiguous from 0");
  }

  std::vector<NodeText> texts;
  std::vector<std::int32_t> labels;
  texts.reserve(nodes.size());
  labels.reserve(nodes.size());
  for (auto& node : nodes) {
    texts.push_back(std::move(node->text));
    labels.push_back(node->label);
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  for_each_jsonl(dir / "edges.jsonl", [&](const json& rec, std::size_t lineno) {
    const NodeId src = require_node(rec, "src", texts.size(), "edges.jsonl", lineno);
    const NodeId dst = require_node(rec, "dst", texts.size(), "edges.jsonl", lineno);
    edges.emplace_back(src, dst);
  });

  return TextAttributedGraph::build(std::move(texts), std::move(edges),
                                    std::move(labels), std::move(label_names));
}

DatasetSplit load_split(const std::filesystem::path& dir,
                        const TextAttributedGraph& graph) {
  const auto splits = parse_json_file(dir / "splits.json");
  auto read_ids = [&](const char* key) {
    std::vector<NodeId> ids;
    if (!splits.contains(key) || !splits[key].is_array()) {
      throw Error(ErrorKind::Parse,
                  std::string("splits.json: missing array '") + key + "'");
    }
    for (const auto& value : splits[key]) {
      if (!value.is_number_integer()) {
        throw Error(ErrorKind::Parse,
                    std::string("splits.json: ") + key +
                        " contains a non-integer entry");
      }
      const auto raw = value.get<std::int64_t>();
      if (raw < 0 || static_cast<std::size_t>(raw) >= graph.node_count()) {
        throw Error(ErrorKind::Validation,
                    std::string("splits.json: ") + key + " id " +
                        std::to_string(raw) + " is not a valid node");
      }
      ids.push_back(static_cast<NodeId>(raw));
    }
    return ids;
  };
  DatasetSplit split{read_ids("train"), read_ids("eval")};
  std::unordered_set<NodeId> train(split.train_ids.begin(),
                                   split.train_ids.end());
  for (NodeId v : split.eval_ids) {
    if (train.count(v)) {
      throw Error(ErrorKind::Validation,
                  "splits.json: node " + std::to_string(v) +
                      " appears in both train and eval");
    }
  }
  return split;
}

void save_graph(const std::filesystem::path& dir,
                const TextAttributedGraph& graph) {
  std::filesystem::create_directories(dir);

  std::ofstream nodes(dir / "nodes.jsonl");
  if (!nodes) throw Error(ErrorKind::Io, "cannot write nodes.jsonl");
  for (NodeId v = 0; v < graph.node_count(); ++v) {
    json rec;
    rec["id"] = v;
    rec["title"] = graph.text(v).title;
    rec["description"] = graph.text(v).description;
    if (auto label = graph.label(v)) {
      rec["label"] = *label;
    } else {
      rec["label"] = nullptr;
    }
    nodes << rec.dump() << '\n';
  }

  std::ofstream edges(dir / "edges.jsonl");
  if (!edges) throw Error(ErrorKind::Io, "cannot write edges.jsonl");
  for (NodeId v = 0; v < graph.node_count(); ++v) {
    for (NodeId u : graph.neighbors(v)) {
      if (v < u) {
        edges << json{{"src", v}, {"dst", u}}.dump() << '\n';
      }
    }
  }

  std::ofstream labels(dir / "labels.json");
  if (!labels) throw Error(ErrorKind::Io, "cannot write labels.json");
  labels << json(graph.label_names()).dump(2) << '\n';
}

void save_split(const std::filesystem::path& dir, const DatasetSplit& split) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "splits.json");
  if (!out) throw Error(ErrorKind::Io, "cannot write splits.json");
  out << json{{"train", split.train_ids}, {"eval", split.eval_ids}}.dump(2)
      << '\n';
}

}  // namespace graphreason
