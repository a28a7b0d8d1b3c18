#include "graphreason/doc_index.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "graphreason/error.hpp"

namespace graphreason {

using nlohmann::json;

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else {
      current.push_back(
          static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

DocumentIndex DocumentIndex::load(const std::filesystem::path& docs_jsonl) {
  std::ifstream in(docs_jsonl);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open " + docs_jsonl.string());
  }
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::Parse, "docs.jsonl line " +
                                        std::to_string(lineno) + ": " +
                                        ex.what());
    }
    Document doc;
    doc.id = rec.at("id").get<int>();
    doc.title = rec.value("title", std::string{});
    doc.body = rec.value("body", std::string{});
    docs.push_back(std::move(doc));
  }
  return from_documents(std::move(docs));
}

DocumentIndex DocumentIndex::from_documents(std::vector<Document> docs) {
  DocumentIndex index;
  index.docs_ = std::move(docs);
  index.build();
  return index;
}

void DocumentIndex::build() {
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    if (!by_id_.emplace(docs_[i].id, i).second) {
      throw Error(ErrorKind::Validation,
                  "duplicate document id " + std::to_string(docs_[i].id));
    }
  }

  // Term frequencies per document; title and body share one bag.
  std::vector<std::map<std::size_t, double>> tf(docs_.size());
  std::vector<std::size_t> df;
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    for (const auto& token : tokenize(docs_[i].title + " " + docs_[i].body)) {
      auto [it, inserted] = vocab_.emplace(token, vocab_.size());
      if (inserted) df.push_back(0);
      auto [tf_it, first] = tf[i].emplace(it->second, 0.0);
      tf_it->second += 1.0;
      if (first) ++df[it->second];
    }
  }

  const double n = static_cast<double>(docs_.size());
  idf_.resize(df.size());
  for (std::size_t t = 0; t < df.size(); ++t) {
    idf_[t] = std::log(1.0 + n / static_cast<double>(df[t]));
  }

  weights_.resize(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    double norm_sq = 0.0;
    for (const auto& [term, count] : tf[i]) {
      const double w = count * idf_[term];
      weights_[i].emplace_back(term, w);
      norm_sq += w * w;
    }
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (auto& [term, w] : weights_[i]) w *= inv;
    }
  }
}

std::vector<std::pair<int, double>> DocumentIndex::query(
    std::string_view text, std::size_t top_s) const {
  if (docs_.empty()) {
    throw Error(ErrorKind::Validation, "query against an empty document index");
  }
  std::map<std::size_t, double> query_tf;
  for (const auto& token : tokenize(text)) {
    auto it = vocab_.find(token);
    if (it != vocab_.end()) query_tf[it->second] += 1.0;
  }
  double query_norm_sq = 0.0;
  for (auto& [term, count] : query_tf) {
    count *= idf_[term];
    query_norm_sq += count * count;
  }
  const double query_inv =
      query_norm_sq > 0.0 ? 1.0 / std::sqrt(query_norm_sq) : 0.0;

  std::vector<std::pair<int, double>> scored;
  scored.reserve(docs_.size());
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    double dot = 0.0;
    for (const auto& [term, weight] : weights_[i]) {
      auto it = query_tf.find(term);
      if (it != query_tf.end()) dot += weight * it->second;
    }
    scored.emplace_back(docs_[i].id, dot * query_inv);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (scored.size() > top_s) scored.resize(top_s);
  return scored;
}

const Document& DocumentIndex::document(int id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    throw Error(ErrorKind::Validation,
                "unknown document id " + std::to_string(id));
  }
  return docs_[it->second];
}

}  // namespace graphreason
