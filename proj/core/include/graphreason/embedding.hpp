#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "graphreason/graph.hpp"

namespace graphreason {

/// Dense per-node vectors, row-major float32 to mirror the on-disk format.
/// Immutable once computed; concurrent queries are safe.
struct EmbeddingMatrix {
  using Storage =
      Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Storage data;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(Eigen::Index rows, Eigen::Index dim) : data(rows, dim) {}

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }

  auto row(Eigen::Index v) const { return data.row(v); }
};

/// dot(a, b) / (|a| |b|); 0 when either norm is zero. Accumulates in double.
double cosine(const Eigen::Ref<const Eigen::VectorXf>& a,
              const Eigen::Ref<const Eigen::VectorXf>& b);
double cosine(const Eigen::Ref<const Eigen::VectorXd>& a,
              const Eigen::Ref<const Eigen::VectorXd>& b);

/// Exact top-M by cosine similarity to row `v`, excluding `v`. Sorted by
/// score descending, ties by ascending node id.
std::vector<std::pair<NodeId, double>> top_m_similar(const EmbeddingMatrix& e,
                                                     NodeId v, std::size_t m);

/// Scales every row to unit L2 norm; zero rows are left untouched.
void l2_normalize_rows(EmbeddingMatrix& e);

/// File format: one ASCII header line "EMB v1 rows=<r> dim=<d> dtype=f32\n"
/// followed by the little-endian float32 row-major payload. Round trips are
/// bit exact; non-finite values are rejected on both paths.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingMatrix& e,
                     const std::filesystem::path& path);

}  // namespace graphreason
