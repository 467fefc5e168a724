#include "fame/embedding_space.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "fame/errors.hpp"
#include "fame/random.hpp"

namespace fame::embedding {

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, Matrix rows)
    : ids_(std::move(ids)), rows_(std::move(rows)) {
  if (static_cast<Eigen::Index>(ids_.size()) != rows_.rows())
    throw ArgumentError("embedding ids/rows count mismatch");
  if (!rows_.allFinite()) throw DataError("embedding matrix contains NaN or Inf");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second)
      throw DataError("duplicate embedding id '" + ids_[i] + "'");
  }
}

std::optional<std::size_t> EmbeddingMatrix::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Matrix EmbeddingMatrix::gather(std::span<const std::string> ids) const {
  Matrix out(static_cast<Eigen::Index>(ids.size()), dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto r = index_of(ids[i]);
    if (!r) throw DataError("no embedding for paper '" + ids[i] + "'");
    out.row(static_cast<Eigen::Index>(i)) = rows_.row(static_cast<Eigen::Index>(*r));
  }
  return out;
}

void EmbeddingMatrix::set_row(std::size_t i, std::span<const double> values) {
  if (static_cast<Eigen::Index>(values.size()) != dim()) throw ArgumentError("set_row: dimension mismatch");
  for (Eigen::Index c = 0; c < dim(); ++c) {
    if (!std::isfinite(values[static_cast<std::size_t>(c)])) throw DataError("set_row: non-finite value");
    rows_(static_cast<Eigen::Index>(i), c) = values[static_cast<std::size_t>(c)];
  }
}

EmbeddingMatrix parse_embeddings_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing embedding header", 1);
  long n = 0, d = 0;
  {
    std::istringstream hs(line);
    char comma = 0;
    if (!(hs >> n >> comma >> d) || comma != ',' || n < 0 || d <= 0)
      throw ParseError("embedding header must be 'N,d'", 1);
  }
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  Matrix rows(n, d);
  for (long i = 0; i < n; ++i) {
    const std::size_t lineno = static_cast<std::size_t>(i) + 2;
    if (!std::getline(in, line)) throw ParseError("expected " + std::to_string(n) + " rows", lineno);
    std::istringstream ls(line);
    std::string field;
    if (!std::getline(ls, field, ',') || field.empty()) throw ParseError("missing id", lineno);
    ids.push_back(field);
    for (long c = 0; c < d; ++c) {
      if (!std::getline(ls, field, ',')) throw ParseError("expected " + std::to_string(d) + " values", lineno);
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str()) throw ParseError("bad number '" + field + "'", lineno);
      rows(i, c) = v;
    }
    if (std::getline(ls, field, ',')) throw ParseError("too many values", lineno);
  }
  return EmbeddingMatrix(std::move(ids), std::move(rows));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  return parse_embeddings_csv(in);
}

void write_embeddings_csv(std::ostream& out, const EmbeddingMatrix& m) {
  out << m.size() << ',' << m.dim() << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << m.ids()[i];
    for (double v : m.row(i)) out << ',' << v;
    out << '\n';
  }
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& m) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_embeddings_csv(out, m);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw ArgumentError("cosine_similarity: dimension mismatch");
  const auto a = as_vector(u);
  const auto b = as_vector(v);
  const double na = a.norm();
  const double nb = b.norm();
  if (na < kNormEpsilon || nb < kNormEpsilon) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

namespace {

int nearest(const Matrix& centroids, const Eigen::Ref<const Eigen::RowVectorXd>& x, double* dist2 = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

Matrix seed_plus_plus(const Matrix& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  Matrix centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  Vector d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    } else {
      double target = rng.uniform() * total;
      for (pick = 0; pick < n - 1; ++pick) {
        target -= d2[pick];
        if (target < 0.0) break;
      }
    }
    centroids.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (points.row(i) - centroids.row(c)).squaredNorm());
  }
  return centroids;
}

}  // namespace

TopicModel fit_kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options,
                      std::vector<double>* objective_trace) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw ArgumentError("fit_kmeans: k must be >= 1");
  if (n < k) throw ArgumentError("fit_kmeans: fewer points (" + std::to_string(n) + ") than clusters (" +
                                 std::to_string(k) + ")");
  Rng rng(seed);
  TopicModel model;
  model.k = k;
  model.seed = seed;
  model.centroids = seed_plus_plus(points, k, rng);
  model.assignments.assign(static_cast<std::size_t>(n), 0);

  std::vector<double> dist2(static_cast<std::size_t>(n));
  for (int it = 0; it < options.max_iterations; ++it) {
    double sse = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      model.assignments[static_cast<std::size_t>(i)] = nearest(model.centroids, points.row(i), &dist2[static_cast<std::size_t>(i)]);
      sse += dist2[static_cast<std::size_t>(i)];
    }
    if (objective_trace) objective_trace->push_back(sse);

    Matrix next = Matrix::Zero(k, points.cols());
    std::vector<long> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = model.assignments[static_cast<std::size_t>(i)];
      next.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: take over the point farthest from its own centroid.
      std::size_t far = 0;
      for (std::size_t i = 1; i < dist2.size(); ++i)
        if (dist2[i] > dist2[far]) far = i;
      next.row(c) = points.row(static_cast<Eigen::Index>(far));
      dist2[far] = 0.0;
    }
    const double shift = (next - model.centroids).rowwise().norm().maxCoeff();
    model.centroids = std::move(next);
    model.iterations = it + 1;
    if (shift < options.tolerance) break;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    model.assignments[static_cast<std::size_t>(i)] = nearest(model.centroids, points.row(i));
  return model;
}

int assign_topic(std::span<const double> x, const TopicModel& model) {
  if (static_cast<Eigen::Index>(x.size()) != model.centroids.cols())
    throw ArgumentError("assign_topic: dimension mismatch");
  Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
  return nearest(model.centroids, row);
}

double within_cluster_ss(const Matrix& points, const TopicModel& model) {
  double sse = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    sse += (points.row(i) - model.centroids.row(model.assignments[static_cast<std::size_t>(i)])).squaredNorm();
  return sse;
}

}  // namespace fame::embedding
