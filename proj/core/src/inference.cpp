#include <algorithm>
#include <cmath>
#include <numeric>

#include "fame/errors.hpp"
#include "fame/evaluation.hpp"
#include "fame/random.hpp"

namespace fame::eval {

double score_paper(std::span<const double> x, double t_days, const manifold::ManifoldModel& model,
                   const embedding::TopicModel& topics, double dt) {
  Matrix row = as_vector(x).transpose();
  return score_papers(row, std::span<const double>(&t_days, 1), model, topics, dt).front();
}

std::vector<double> score_papers(const Matrix& x, std::span<const double> t_days,
                                 const manifold::ManifoldModel& model, const embedding::TopicModel& topics,
                                 double dt) {
  if (static_cast<std::size_t>(x.rows()) != t_days.size()) throw ArgumentError("score_papers: row/time mismatch");
  if (x.rows() == 0) return {};
  if (x.cols() != topics.centroids.cols()) throw ArgumentError("score_papers: embedding/centroid dimension mismatch");
  std::vector<int> k;
  std::vector<double> t;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    k.push_back(embedding::assign_topic(row_span(x, r), topics));
    t.push_back(model.config().time.normalize(t_days[static_cast<std::size_t>(r)]));
  }
  ad::Tape tape;
  ad::Var z = model.map(tape, x, t);
  ad::Var mu = model.spine(tape, k, t);
  ad::Var drift = model.momentum_from(tape, mu, k, t, dt);
  const Matrix residual = z.value() - mu.value();
  std::vector<double> scores;
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    scores.push_back(embedding::cosine_similarity(row_span(residual, r), row_span(drift.value(), r)));
  return scores;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw ArgumentError("spearman: length mismatch");
  if (pred.size() < 2) return std::nullopt;
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(truth);
  const double n = static_cast<double>(rp.size());
  const double mp = std::accumulate(rp.begin(), rp.end(), 0.0) / n;
  const double mt = std::accumulate(rt.begin(), rt.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rp.size(); ++i) {
    const double a = rp[i] - mp, b = rt[i] - mt;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

std::vector<std::size_t> top_indices(std::span<const double> v, std::span<const std::string> ids, std::size_t k) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (v[a] != v[b]) return v[a] > v[b];
    return ids[a] < ids[b];
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

double top_k_accuracy(std::span<const double> pred, std::span<const double> truth, std::span<const std::string> ids,
                      int k) {
  if (pred.size() != truth.size() || ids.size() != pred.size())
    throw ArgumentError("top_k_accuracy: length mismatch");
  if (k < 1) throw ArgumentError("top_k_accuracy: k must be >= 1");
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k), pred.size());
  if (kk == 0) return 0.0;
  const auto a = top_indices(pred, ids, kk);
  const auto b = top_indices(truth, ids, kk);
  std::vector<std::size_t> both;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
  return static_cast<double>(both.size()) / static_cast<double>(kk);
}

NaiveScorer::NaiveScorer(ad::ParamStore params, int hidden_layers, double target_mean, double target_scale)
    : params_(std::move(params)), hidden_layers_(hidden_layers), mean_(target_mean), scale_(target_scale) {}

namespace {

ad::Var regressor(ad::Tape& tape, const ad::ParamStore& params, int hidden_layers, const Matrix& x) {
  ad::Var h = tape.constant(x);
  for (int l = 0; l <= hidden_layers; ++l) {
    const auto s = std::to_string(l);
    h = ad::add_bias(ad::matmul(h, tape.param(params, "naive.w" + s)), tape.param(params, "naive.b" + s));
    if (l < hidden_layers) h = ad::relu(h);
  }
  return h;
}

}  // namespace

std::vector<double> NaiveScorer::predict(const Matrix& x) const {
  ad::Tape tape;
  const Matrix out = regressor(tape, params_, hidden_layers_, x).value();
  std::vector<double> pred(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index r = 0; r < out.rows(); ++r) pred[static_cast<std::size_t>(r)] = mean_ + scale_ * out(r, 0);
  return pred;
}

NaiveScorer naive_baseline(const Matrix& x, std::span<const double> weights, const NaiveConfig& config,
                           std::uint64_t seed) {
  if (static_cast<std::size_t>(x.rows()) != weights.size()) throw ArgumentError("naive_baseline: row/weight mismatch");
  if (x.rows() == 0) throw ArgumentError("naive_baseline: empty training set");
  Rng rng(seed);
  ad::ParamStore params;
  int fan_in = static_cast<int>(x.cols());
  for (int l = 0; l <= config.hidden_layers; ++l) {
    const int fan_out = l == config.hidden_layers ? 1 : config.hidden_width;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    params.add("naive.w" + std::to_string(l), std::move(w));
    params.add("naive.b" + std::to_string(l), Matrix::Zero(1, fan_out));
    fan_in = fan_out;
  }

  const double n = static_cast<double>(weights.size());
  const double mean = std::accumulate(weights.begin(), weights.end(), 0.0) / n;
  double var = 0.0;
  for (double w : weights) var += (w - mean) * (w - mean);
  const double scale = var > 0.0 ? std::sqrt(var / n) : 1.0;
  Matrix target(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) target(r, 0) = (weights[static_cast<std::size_t>(r)] - mean) / scale;

  const int rows = static_cast<int>(x.rows());
  const int batch = config.batch_size <= 0 ? rows : std::min(config.batch_size, rows);
  std::vector<int> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (int p0 = 0; p0 < rows; p0 += batch) {
      const int p1 = std::min(rows, p0 + batch);
      Matrix xb(p1 - p0, x.cols()), yb(p1 - p0, 1);
      for (int i = p0; i < p1; ++i) {
        xb.row(i - p0) = x.row(order[static_cast<std::size_t>(i)]);
        yb(i - p0, 0) = target(order[static_cast<std::size_t>(i)], 0);
      }
      ad::Tape tape;
      ad::Var err = ad::sub(regressor(tape, params, config.hidden_layers, xb), tape.constant(yb));
      ad::Var loss = ad::mean(ad::l2_norm_sq(err));
      tape.backward(loss);
      ad::adam_step(params, tape.parameter_gradients(params), config.learning_rate);
    }
  }
  return NaiveScorer(std::move(params), config.hidden_layers, mean, scale);
}

}  // namespace fame::eval
