#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>

#include "fame/errors.hpp"
#include "fame/evaluation.hpp"
#include "fame/random.hpp"

namespace fame::eval {

namespace {

// Dominant eigenpair of a symmetric PSD matrix.
std::pair<double, Vector> power_iteration(const Eigen::MatrixXd& c, Rng& rng, int iterations) {
  Vector v(c.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  if (v.norm() == 0.0) v[0] = 1.0;
  v.normalize();
  for (int it = 0; it < iterations; ++it) {
    Vector w = c * v;
    const double n = w.norm();
    if (n < 1e-300) return {0.0, v};
    w /= n;
    const double change = (w - v).norm();
    v = std::move(w);
    if (change < 1e-13) break;
  }
  Eigen::Index pivot;
  v.cwiseAbs().maxCoeff(&pivot);
  if (v[pivot] < 0.0) v = -v;
  return {v.dot(c * v), v};
}

}  // namespace

Projection project_2d(const Matrix& latents, std::uint64_t seed, int iterations) {
  if (latents.rows() == 0 || latents.cols() == 0) throw ArgumentError("project_2d: empty input");
  const Eigen::MatrixXd centered = latents.rowwise() - latents.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(latents.rows());
  Rng rng(seed);
  Projection p;
  p.components = Matrix::Zero(2, latents.cols());
  p.variances = Vector::Zero(2);
  for (int c = 0; c < 2 && c < latents.cols(); ++c) {
    auto [lambda, v] = power_iteration(cov, rng, iterations);
    p.components.row(c) = v.transpose();
    p.variances[c] = lambda;
    cov -= lambda * v * v.transpose();
  }
  p.coords = centered * p.components.transpose();
  return p;
}

void export_projection(const std::filesystem::path& path, const Projection& projection,
                       std::span<const std::string> ids, std::span<const double> weights, std::span<const int> topics) {
  const auto n = static_cast<std::size_t>(projection.coords.rows());
  if (ids.size() != n || weights.size() != n || topics.size() != n)
    throw ArgumentError("export_projection: length mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "x,y,id,weight,topic\n" << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << projection.coords(r, 0) << ',' << projection.coords(r, 1) << ',' << ids[i] << ',' << weights[i] << ','
        << topics[i] << '\n';
  }
}

std::string format_score_context(std::span<const double> scores) {
  std::string out =
      "manifold scores for this eval batch (same index order as the ideas list below): \n"
      "where score is the trained manifold prediction and z-scores are taken over this batch. Use as auxiliary "
      "signal, judge each idea on its own merits:\n"
      "(z-scores use the population standard deviation of this batch)\n";
  const double n = static_cast<double>(scores.size());
  double mean = 0.0, var = 0.0;
  for (double s : scores) mean += s;
  if (!scores.empty()) mean /= n;
  for (double s : scores) var += (s - mean) * (s - mean);
  const double sd = scores.empty() ? 0.0 : std::sqrt(var / n);
  const bool defined = scores.size() >= 2 && sd > 0.0;
  char line[128];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (defined) {
      std::snprintf(line, sizeof line, "- index %zu: score=%.4f, z=%+.4f\n", i, scores[i], (scores[i] - mean) / sd);
    } else {
      std::snprintf(line, sizeof line, "- index %zu: score=%.4f, z=undefined (%s)\n", i, scores[i],
                    scores.size() < 2 ? "single-item batch" : "constant batch");
    }
    out += line;
  }
  return out;
}

}  // namespace fame::eval
