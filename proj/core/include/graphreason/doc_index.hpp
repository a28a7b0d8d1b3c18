#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace graphreason {

struct Document {
  int id = 0;
  std::string title;
  std::string body;
};

/// Lowercased whitespace tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Exact TF-IDF retrieval over a small local corpus. idf = ln(1 + N/df);
/// document vectors are L2-normalized; queries score by cosine. Immutable
/// after construction.
class DocumentIndex {
 public:
  static DocumentIndex load(const std::filesystem::path& docs_jsonl);
  static DocumentIndex from_documents(std::vector<Document> docs);

  /// Top-s documents by descending score, ties by ascending document id.
  std::vector<std::pair<int, double>> query(std::string_view text,
                                            std::size_t top_s) const;

  const Document& document(int id) const;
  std::size_t size() const { return docs_.size(); }

 private:
  std::vector<Document> docs_;
  std::unordered_map<int, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> vocab_;
  std::vector<double> idf_;
  // Per document: (term index, normalized tf-idf weight), sorted by term.
  std::vector<std::vector<std::pair<std::size_t, double>>> weights_;

  void build();
};

}  // namespace graphreason
