#include <algorithm>
#include <cmath>
#include <numeric>

#include "fame/errors.hpp"
#include "fame/manifold.hpp"
#include "fame/random.hpp"

namespace fame::manifold {

void TrainConfig::validate() const {
  if (weights.alpha < 0 || weights.beta < 0 || weights.gamma < 0)
    throw ArgumentError("loss weights must be non-negative");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
  if (!(finite_diff_step > 0.0)) throw ArgumentError("finite-difference step must be positive");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 0) throw ArgumentError("batch size must be >= 0");
  if (!(vanguard.tau_time_days > 0.0)) throw ArgumentError("tau_time must be positive");
}

TrainingData prepare_training_data(const corpus::Corpus& train, const embedding::EmbeddingMatrix& embeddings,
                                   const embedding::TopicModel& topics, const graph::EdgeSet& edges,
                                   const corpus::MetricParams& metrics, const VanguardConfig& vanguard,
                                   int d_time, double frequency_base) {
  if (topics.assignments.size() != train.size())
    throw DataError("topic assignments do not cover the training papers");
  TrainingData data;
  for (const auto& p : train) data.ids.push_back(p.id);
  data.embeddings = embeddings.gather(data.ids);
  data.topics = topics.assignments;
  for (const auto& p : train) data.timestamps_days.push_back(p.timestamp_days);
  data.weights = corpus::compute_weights(train, metrics);

  data.time.d_time = d_time;
  data.time.frequency_base = frequency_base;
  if (!train.empty()) {
    const auto [lo, hi] = std::minmax_element(data.timestamps_days.begin(), data.timestamps_days.end());
    data.time.t_min = *lo;
    data.time.t_max = *hi > *lo ? *hi : *lo + 1.0;
    for (double t : data.timestamps_days) data.t_norm.push_back(data.time.normalize(t));
    data.weights_norm = corpus::normalize_weights(data.weights);
    const auto [wlo, whi] = std::minmax_element(data.weights.begin(), data.weights.end());
    data.weight_min = *wlo;
    data.weight_max = *whi;
    data.medians = compute_neighborhood_medians(data.timestamps_days, data.topics, data.weights,
                                                vanguard.tau_time_days);
  }
  for (const auto& e : edges) {
    auto from = train.index_of(e.from_id);
    auto to = train.index_of(e.to_id);
    if (!from || !to)
      throw DataError("edge " + e.from_id + " -> " + e.to_id + " references a paper outside the training set");
    data.edges.emplace_back(static_cast<int>(*from), static_cast<int>(*to));
  }
  return data;
}

namespace {

Matrix rows_of(const Matrix& m, std::span<const int> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

template <class T>
std::vector<T> pick(const std::vector<T>& v, std::span<const int> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(v[static_cast<std::size_t>(r)]);
  return out;
}

}  // namespace

BatchLosses build_losses(ad::Tape& tape, const ManifoldModel& model, const TrainingData& data,
                         std::span<const int> paper_rows, std::span<const int> edge_rows,
                         const TrainConfig& config) {
  BatchLosses out;
  const double dt = config.finite_diff_step;

  if (paper_rows.empty()) {
    out.spine = tape.constant(Matrix::Zero(1, 1));
    out.vanguard = tape.constant(Matrix::Zero(1, 1));
  } else {
    const auto t = pick(data.t_norm, paper_rows);
    const auto k = pick(data.topics, paper_rows);
    ad::Var z = model.map(tape, rows_of(data.embeddings, paper_rows), t);
    ad::Var mu = model.spine(tape, k, t);
    ad::Var drift = model.momentum_from(tape, mu, k, t, dt);
    out.spine = loss_spine(z, mu, config.reduction);

    std::vector<bool> high;
    std::vector<double> margins;
    for (int r : paper_rows) {
      const auto i = static_cast<std::size_t>(r);
      high.push_back(data.weights[i] >= data.medians[i]);
      margins.push_back(config.vanguard.delta_base + (1.0 - config.vanguard.delta_base) * data.weights_norm[i]);
    }
    out.vanguard = loss_vanguard(ad::sub(z, mu), drift, high, margins, config.reduction);
  }

  if (edge_rows.empty()) {
    out.inspire = tape.constant(Matrix::Zero(1, 1));
  } else {
    std::vector<int> from, to;
    for (int e : edge_rows) {
      from.push_back(data.edges[static_cast<std::size_t>(e)].first);
      to.push_back(data.edges[static_cast<std::size_t>(e)].second);
    }
    const auto t_from = pick(data.t_norm, from);
    const auto t_to = pick(data.t_norm, to);
    ad::Var z_from = model.map(tape, rows_of(data.embeddings, from), t_from);
    ad::Var z_to = model.map(tape, rows_of(data.embeddings, to), t_to);
    ad::Var drift_to = model.momentum(tape, pick(data.topics, to), t_to, dt);
    out.inspire = loss_inspire(z_from, z_to, drift_to, config.delta_align, config.reduction);
  }

  const std::pair<double, ad::Var> terms[] = {
      {config.weights.alpha, out.spine}, {config.weights.beta, out.inspire}, {config.weights.gamma, out.vanguard}};
  out.total = ad::weighted_sum(terms);
  return out;
}

TrainResult train(const TrainingData& data, ModelConfig model_config, const TrainConfig& config) {
  config.validate();
  model_config.time = data.time;
  TrainResult result;
  result.model = ManifoldModel::initialize(model_config, config.seed);
  Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

  const int n = static_cast<int>(data.ids.size());
  if (n == 0) {
    result.rng_state = rng.state();
    return result;
  }
  const int batch = config.batch_size <= 0 ? n : std::min(config.batch_size, n);
  const int num_batches = (n + batch - 1) / batch;
  const int num_edges = static_cast<int>(data.edges.size());

  std::vector<int> papers(static_cast<std::size_t>(n));
  std::iota(papers.begin(), papers.end(), 0);
  std::vector<int> edges(static_cast<std::size_t>(num_edges));
  std::iota(edges.begin(), edges.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(papers.begin(), papers.end());
    rng.shuffle(edges.begin(), edges.end());
    EpochLoss acc{epoch + 1, 0, 0, 0, 0};
    for (int b = 0; b < num_batches; ++b) {
      const int p0 = b * batch, p1 = std::min(n, p0 + batch);
      // Edges are spread evenly over the epoch's batches.
      const int e0 = static_cast<int>(static_cast<long>(num_edges) * b / num_batches);
      const int e1 = static_cast<int>(static_cast<long>(num_edges) * (b + 1) / num_batches);
      ad::Tape tape;
      auto losses = build_losses(tape, result.model, data,
                                 std::span<const int>(papers.data() + p0, static_cast<std::size_t>(p1 - p0)),
                                 std::span<const int>(edges.data() + e0, static_cast<std::size_t>(e1 - e0)),
                                 config);
      const std::pair<const char*, double> parts[] = {{"spine", losses.spine.scalar()},
                                                      {"inspire", losses.inspire.scalar()},
                                                      {"vanguard", losses.vanguard.scalar()},
                                                      {"total", losses.total.scalar()}};
      for (const auto& [name, value] : parts) {
        if (!std::isfinite(value))
          throw DivergenceError(std::string("training diverged: ") + name + " loss is non-finite at epoch " +
                                std::to_string(epoch + 1) + ", batch " + std::to_string(b + 1));
      }
      tape.backward(losses.total);
      ad::adam_step(result.model.params(), tape.parameter_gradients(result.model.params()), config.learning_rate,
                    config.adam);
      acc.spine += parts[0].second;
      acc.inspire += parts[1].second;
      acc.vanguard += parts[2].second;
      acc.total += parts[3].second;
    }
    acc.spine /= num_batches;
    acc.inspire /= num_batches;
    acc.vanguard /= num_batches;
    acc.total /= num_batches;
    result.trace.push_back(acc);
  }
  result.rng_state = rng.state();
  return result;
}

}  // namespace fame::manifold
