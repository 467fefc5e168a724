#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fame/linalg.hpp"

namespace fame::embedding {

inline constexpr double kNormEpsilon = 1e-8;

/// Dense embeddings keyed by paper id; row i belongs to ids()[i].
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::vector<std::string> ids, Matrix rows);

  std::size_t size() const noexcept { return ids_.size(); }
  Eigen::Index dim() const noexcept { return rows_.cols(); }
  const Matrix& rows() const noexcept { return rows_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  std::span<const double> row(std::size_t i) const {
    return row_span(rows_, static_cast<Eigen::Index>(i));
  }
  std::optional<std::size_t> index_of(std::string_view id) const;

  // Rows for the listed ids, in order. Throws DataError on an unknown id.
  Matrix gather(std::span<const std::string> ids) const;

  // Replaces one row in place (tests and what-if tooling).
  void set_row(std::size_t i, std::span<const double> values);

 private:
  std::vector<std::string> ids_;
  Matrix rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// CSV layout: header line "N,d", then N lines "id,v1,...,vd".
EmbeddingMatrix parse_embeddings_csv(std::istream& in);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path);
void write_embeddings_csv(std::ostream& out, const EmbeddingMatrix& m);
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m);

double cosine_similarity(std::span<const double> u, std::span<const double> v);

struct TopicModel {
  Matrix centroids;              // k x d
  std::vector<int> assignments;  // training row -> cluster in [0, k)
  int k = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
};

struct KMeansOptions {
  int max_iterations = 100;
  double tolerance = 1e-6;  // max centroid shift
};

/// Lloyd's algorithm with k-means++ seeding. When `objective_trace` is
/// given, the within-cluster sum of squares after each assignment step is
/// appended to it.
TopicModel fit_kmeans(const Matrix& points, int k, std::uint64_t seed,
                      const KMeansOptions& options = {},
                      std::vector<double>* objective_trace = nullptr);

/// Nearest centroid by Euclidean distance; lowest index wins ties.
int assign_topic(std::span<const double> x, const TopicModel& model);

double within_cluster_ss(const Matrix& points, const TopicModel& model);

/// POSTs {"texts": [...]} to an embedding service and returns
/// {"embeddings": [[...]]} as a matrix. Throws ServiceError on transport or
/// protocol failure.
Matrix fetch_embeddings(const std::string& endpoint, std::span<const std::string> texts,
                        const std::string& bearer_token = {}, int timeout_seconds = 60);

}  // namespace fame::embedding
