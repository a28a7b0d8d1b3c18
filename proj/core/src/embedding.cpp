#include "graphreason/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "graphreason/error.hpp"

namespace graphreason {

namespace {

template <typename Derived>
double cosine_impl(const Derived& a, const Derived& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::Dimension,
                "cosine: dimension mismatch (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]);
    const double y = static_cast<double>(b[i]);
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double cosine(const Eigen::Ref<const Eigen::VectorXf>& a,
              const Eigen::Ref<const Eigen::VectorXf>& b) {
  return cosine_impl(a, b);
}

double cosine(const Eigen::Ref<const Eigen::VectorXd>& a,
              const Eigen::Ref<const Eigen::VectorXd>& b) {
  return cosine_impl(a, b);
}

std::vector<std::pair<NodeId, double>> top_m_similar(const EmbeddingMatrix& e,
                                                     NodeId v, std::size_t m) {
  std::vector<std::pair<NodeId, double>> scored;
  if (m == 0 || e.rows() == 0) return scored;
  scored.reserve(static_cast<std::size_t>(e.rows()) - 1);
  const Eigen::VectorXf query = e.row(v).transpose();
  for (Eigen::Index u = 0; u < e.rows(); ++u) {
    if (static_cast<NodeId>(u) == v) continue;
    scored.emplace_back(static_cast<NodeId>(u),
                        cosine(query, e.row(u).transpose()));
  }
  const std::size_t keep = std::min(m, scored.size());
  auto better = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  };
  std::partial_sort(scored.begin(), scored.begin() + keep, scored.end(),
                    better);
  scored.resize(keep);
  return scored;
}

void l2_normalize_rows(EmbeddingMatrix& e) {
  for (Eigen::Index v = 0; v < e.rows(); ++v) {
    const double norm = e.data.row(v).template cast<double>().norm();
    if (norm > 0.0) {
      e.data.row(v) /= static_cast<float>(norm);
    }
  }
}

namespace {

void check_finite(const EmbeddingMatrix& e, const std::string& context) {
  if (!e.data.allFinite()) {
    throw Error(ErrorKind::Validation, context + ": non-finite value");
  }
}

}  // namespace

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, "cannot open " + path.string());
  }
  std::string header;
  if (!std::getline(in, header)) {
    throw Error(ErrorKind::Parse, path.string() + ": missing header");
  }
  long rows = -1, dim = -1;
  char dtype[8] = {0};
  if (std::sscanf(header.c_str(), "EMB v1 rows=%ld dim=%ld dtype=%7s", &rows,
                  &dim, dtype) != 3 ||
      std::string(dtype) != "f32" || rows < 0 || dim < 0) {
    throw Error(ErrorKind::Parse, path.string() + ": bad header '" + header + "'");
  }
  EmbeddingMatrix e(rows, dim);
  const std::size_t bytes = static_cast<std::size_t>(rows) *
                            static_cast<std::size_t>(dim) * sizeof(float);
  in.read(reinterpret_cast<char*>(e.data.data()),
          static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) {
    throw Error(ErrorKind::Parse,
                path.string() + ": payload size mismatch (header says " +
                    std::to_string(rows) + "x" + std::to_string(dim) + ")");
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::Parse, path.string() + ": trailing data");
  }
  check_finite(e, path.string());
  return e;
}

void save_embeddings(const EmbeddingMatrix& e,
                     const std::filesystem::path& path) {
  check_finite(e, path.string());
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::Io, "cannot write " + path.string());
  }
  out << "EMB v1 rows=" << e.rows() << " dim=" << e.dim() << " dtype=f32\n";
  out.write(reinterpret_cast<const char*>(e.data.data()),
            static_cast<std::streamsize>(static_cast<std::size_t>(e.rows()) *
                                         static_cast<std::size_t>(e.dim()) *
                                         sizeof(float)));
  if (!out) {
    throw Error(ErrorKind::Io, "short write to " + path.string());
  }
}

}  // namespace graphreason
