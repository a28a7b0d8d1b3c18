#include "graphreason/doc_index.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "graphreason/error.hpp"
#include "graphreason/rng.hpp"

namespace gr = graphreason;

namespace {

gr::DocumentIndex make_index(std::vector<gr::Document> docs) {
  return gr::DocumentIndex::from_documents(std::move(docs));
}

/// Independent TF-IDF scorer: same definition (idf = ln(1 + N/df),
/// L2-normalized vectors), different code path.
std::vector<std::pair<int, double>> oracle_query(
    const std::vector<gr::Document>& docs, const std::string& query,
    std::size_t top_s) {
  std::map<std::string, int> df;
  std::vector<std::map<std::string, double>> tf(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::set<std::string> seen;
    for (const auto& token : gr::tokenize(docs[i].title + " " + docs[i].body)) {
      tf[i][token] += 1.0;
      seen.insert(token);
    }
    for (const auto& token : seen) ++df[token];
  }
  const double n = static_cast<double>(docs.size());
  auto idf = [&](const std::string& token) {
    auto it = df.find(token);
    if (it == df.end()) return 0.0;
    return std::log(1.0 + n / it->second);
  };

  std::map<std::string, double> query_weights;
  for (const auto& token : gr::tokenize(query)) query_weights[token] += 1.0;
  double query_norm = 0.0;
  for (auto& [token, weight] : query_weights) {
    weight *= idf(token);
    query_norm += weight * weight;
  }
  query_norm = std::sqrt(query_norm);

  std::vector<std::pair<int, double>> scored;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double doc_norm = 0.0;
    for (const auto& [token, count] : tf[i]) {
      const double weight = count * idf(token);
      doc_norm += weight * weight;
    }
    doc_norm = std::sqrt(doc_norm);
    double dot = 0.0;
    for (const auto& [token, weight] : query_weights) {
      auto it = tf[i].find(token);
      if (it != tf[i].end()) dot += weight * it->second * idf(token);
    }
    const double denom = doc_norm * query_norm;
    scored.emplace_back(docs[i].id, denom > 0.0 ? dot / denom : 0.0);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (scored.size() > top_s) scored.resize(top_s);
  return scored;
}

}  // namespace

TEST(DocIndex, SingletonCorpusReturnsTheDocument) {
  const auto index = make_index({{7, "fairy tales", "stories about fairies"}});
  const auto hits = index.query("fairy stories", 6);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].first, 7);
}

TEST(DocIndex, RequestBeyondCorpusReturnsWholeCorpusRanked) {
  const auto index = make_index({{0, "alpha", "alpha text"},
                                 {1, "beta", "beta text"},
                                 {2, "gamma", "gamma text"}});
  const auto hits = index.query("beta", 10);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].first, 1);
}

TEST(DocIndex, TokenOverlapWinsOnTwoDocCorpus) {
  const auto index = make_index(
      {{0, "trains", "steam trains and railway engines"},
       {1, "cooking", "recipes for pasta and soup"}});
  const auto hits = index.query("railway engines", 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].first, 0);
  EXPECT_GT(hits[0].second, hits[1].second);
  EXPECT_DOUBLE_EQ(hits[1].second, 0.0);
}

TEST(DocIndex, TiesBreakByAscendingId) {
  const auto index = make_index({{5, "same", "tokens here"},
                                 {2, "same", "tokens here"},
                                 {9, "same", "tokens here"}});
  const auto hits = index.query("tokens", 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].first, 2);
  EXPECT_EQ(hits[1].first, 5);
  EXPECT_EQ(hits[2].first, 9);
}

TEST(DocIndex, EmptyIndexRejectsQueries) {
  const auto index = make_index({});
  EXPECT_THROW(index.query("anything", 3), gr::Error);
}

TEST(DocIndex, DuplicateIdsRejected) {
  EXPECT_THROW(make_index({{1, "a", "x"}, {1, "b", "y"}}), gr::Error);
}

TEST(DocIndex, TokenizeLowercasesAndSplits) {
  const auto tokens = gr::tokenize("  Hello\tWORLD  again ");
  EXPECT_EQ(tokens, (std::vector<std::string>{"hello", "world", "again"}));
}

TEST(DocIndex, MatchesExhaustiveOracleOnRandomCorpora) {
  const std::vector<std::string> vocab = {
      "fairy", "train", "magic",  "river", "engine", "recipe",
      "soup",  "stone", "forest", "star",  "cloud",  "song"};
  gr::Rng rng(101);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<gr::Document> docs;
    const std::size_t count = 5 + rng.uniform_index(96);  // up to 100 docs
    for (std::size_t i = 0; i < count; ++i) {
      std::string body;
      const std::size_t words = 3 + rng.uniform_index(20);
      for (std::size_t w = 0; w < words; ++w) {
        body += vocab[rng.uniform_index(vocab.size())] + " ";
      }
      docs.push_back({static_cast<int>(i), "doc " + std::to_string(i), body});
    }
    std::string query;
    for (int w = 0; w < 3; ++w) {
      query += vocab[rng.uniform_index(vocab.size())] + " ";
    }
    const auto index = gr::DocumentIndex::from_documents(docs);
    const auto expected = oracle_query(docs, query, 6);
    const auto actual = index.query(query, 6);
    ASSERT_EQ(actual.size(), expected.size());
    for (std::size_t i = 0; i < actual.size(); ++i) {
      EXPECT_EQ(actual[i].first, expected[i].first) << "trial " << trial;
      EXPECT_NEAR(actual[i].second, expected[i].second, 1e-12);
    }
  }
}
