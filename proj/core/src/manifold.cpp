#include "fame/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fame/errors.hpp"
#include "fame/random.hpp"

namespace fame::manifold {

void TimeEncoderConfig::validate() const {
  if (d_time <= 0 || d_time % 2 != 0) throw ArgumentError("d_time must be a positive even number");
  if (!(t_max > t_min)) throw ArgumentError("time window needs t_max > t_min");
  if (!(frequency_base > 0.0)) throw ArgumentError("time frequency base must be positive");
}

double TimeEncoderConfig::frequency(int j) const {
  return 2.0 * std::numbers::pi * std::pow(frequency_base, j);
}

Matrix time_encode_normalized(std::span<const double> t_norm, const TimeEncoderConfig& cfg) {
  Matrix out(static_cast<Eigen::Index>(t_norm.size()), cfg.d_time);
  for (std::size_t r = 0; r < t_norm.size(); ++r) {
    for (int j = 0; j < cfg.d_time / 2; ++j) {
      const double angle = cfg.frequency(j) * t_norm[r];
      out(static_cast<Eigen::Index>(r), 2 * j) = std::sin(angle);
      out(static_cast<Eigen::Index>(r), 2 * j + 1) = std::cos(angle);
    }
  }
  return out;
}

Vector time_encode(double t_days, const TimeEncoderConfig& cfg) {
  cfg.validate();
  const double t = cfg.normalize(t_days);
  return time_encode_normalized(std::span<const double>(&t, 1), cfg).row(0).transpose();
}

void ModelConfig::validate() const {
  if (input_dim <= 0) throw ArgumentError("model input_dim must be positive");
  if (latent_dim <= 0 || topic_dim <= 0) throw ArgumentError("latent/topic dims must be positive");
  if (hidden_width <= 0 || hidden_layers < 0) throw ArgumentError("invalid hidden layer shape");
  if (num_topics < 1) throw ArgumentError("num_topics must be >= 1");
  if (activation != "relu") throw ArgumentError("unsupported activation '" + activation + "'");
  time.validate();
}

namespace {

void add_mlp_params(ad::ParamStore& store, const std::string& prefix, int in, int hidden, int layers, int out,
                    Rng& rng) {
  int fan_in = in;
  for (int l = 0; l <= layers; ++l) {
    const int fan_out = l == layers ? out : hidden;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-bound, bound);
    store.add(prefix + ".w" + std::to_string(l), std::move(w));
    store.add(prefix + ".b" + std::to_string(l), Matrix::Zero(1, fan_out));
    fan_in = fan_out;
  }
}

}  // namespace

ManifoldModel::ManifoldModel(ModelConfig config, ad::ParamStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const auto& bases = params_.value("topic_bases");
  if (bases.rows() != config_.num_topics || bases.cols() != config_.topic_dim)
    throw DataError("topic_bases shape does not match model config");
}

ManifoldModel ManifoldModel::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ad::ParamStore store;
  add_mlp_params(store, "mapper", config.input_dim + config.time.d_time, config.hidden_width,
                 config.hidden_layers, config.latent_dim, rng);
  add_mlp_params(store, "spine", config.topic_dim + config.time.d_time, config.hidden_width,
                 config.hidden_layers, config.latent_dim, rng);
  Matrix bases(config.num_topics, config.topic_dim);
  for (Eigen::Index i = 0; i < bases.size(); ++i) bases.data()[i] = 0.01 * rng.normal();
  store.add("topic_bases", std::move(bases));
  return ManifoldModel(config, std::move(store));
}

ad::Var ManifoldModel::mlp(ad::Tape& tape, const std::string& prefix, ad::Var input) const {
  ad::Var h = input;
  for (int l = 0; l <= config_.hidden_layers; ++l) {
    const auto suffix = std::to_string(l);
    h = ad::add_bias(ad::matmul(h, tape.param(params_, prefix + ".w" + suffix)),
                     tape.param(params_, prefix + ".b" + suffix));
    if (l < config_.hidden_layers) h = ad::relu(h);
  }
  return h;
}

ad::Var ManifoldModel::map(ad::Tape& tape, const Matrix& x, std::span<const double> t_norm) const {
  if (x.cols() != config_.input_dim)
    throw ArgumentError("map: embedding dimension " + std::to_string(x.cols()) + " != model input " +
                        std::to_string(config_.input_dim));
  if (static_cast<std::size_t>(x.rows()) != t_norm.size()) throw ArgumentError("map: row/time count mismatch");
  ad::Var input = ad::concat_cols(tape.constant(x), tape.constant(time_encode_normalized(t_norm, config_.time)));
  return mlp(tape, "mapper", input);
}

ad::Var ManifoldModel::spine(ad::Tape& tape, std::span<const int> topics, std::span<const double> t_norm) const {
  if (topics.size() != t_norm.size()) throw ArgumentError("spine: topic/time count mismatch");
  for (int k : topics)
    if (k < 0 || k >= config_.num_topics) throw ArgumentError("spine: topic id out of range");
  ad::Var bases = ad::gather_rows(tape.param(params_, "topic_bases"), topics);
  ad::Var input = ad::concat_cols(bases, tape.constant(time_encode_normalized(t_norm, config_.time)));
  return mlp(tape, "spine", input);
}

ad::Var ManifoldModel::momentum_from(ad::Tape& tape, ad::Var spine_now, std::span<const int> topics,
                                     std::span<const double> t_norm, double dt) const {
  std::vector<double> earlier(t_norm.begin(), t_norm.end());
  for (double& t : earlier) t -= dt;
  return ad::sub(spine_now, spine(tape, topics, earlier));
}

ad::Var ManifoldModel::momentum(ad::Tape& tape, std::span<const int> topics, std::span<const double> t_norm,
                                double dt) const {
  return momentum_from(tape, spine(tape, topics, t_norm), topics, t_norm, dt);
}

Vector ManifoldModel::map_paper(std::span<const double> x, double t_days) const {
  ad::Tape tape;
  Matrix row = as_vector(x).transpose();
  const double t = config_.time.normalize(t_days);
  return map(tape, row, std::span<const double>(&t, 1)).value().row(0).transpose();
}

Vector ManifoldModel::spine_at(int topic, double t_days) const {
  ad::Tape tape;
  const double t = config_.time.normalize(t_days);
  return spine(tape, std::span<const int>(&topic, 1), std::span<const double>(&t, 1)).value().row(0).transpose();
}

Vector ManifoldModel::spine_momentum(int topic, double t_days, double dt) const {
  ad::Tape tape;
  const double t = config_.time.normalize(t_days);
  return momentum(tape, std::span<const int>(&topic, 1), std::span<const double>(&t, 1), dt)
      .value()
      .row(0)
      .transpose();
}

namespace {

ad::Var reduce(ad::Var per_row, Reduction reduction) {
  return reduction == Reduction::kMean ? ad::mean(per_row) : ad::sum(per_row);
}

}  // namespace

ad::Var loss_spine(ad::Var z, ad::Var spine_points, Reduction reduction) {
  return reduce(ad::l2_norm_sq(ad::sub(z, spine_points)), reduction);
}

ad::Var loss_inspire(ad::Var z_from, ad::Var z_to, ad::Var momentum_to, double delta_align, Reduction reduction) {
  ad::Var jump = ad::sub(z_to, z_from);
  ad::Var align = ad::hinge(ad::cosine_sim(jump, momentum_to), delta_align);
  return reduce(ad::add(align, ad::l2_norm_sq(jump)), reduction);
}

ad::Var loss_vanguard(ad::Var residual, ad::Var momentum, const std::vector<bool>& high,
                      const std::vector<double>& margins, Reduction reduction) {
  const auto n = residual.rows();
  if (static_cast<Eigen::Index>(high.size()) != n || static_cast<Eigen::Index>(margins.size()) != n)
    throw ArgumentError("loss_vanguard: mask/margin length mismatch");
  Matrix hi_mask(n, 1), lo_mask(n, 1), margin(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    hi_mask(i, 0) = high[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    lo_mask(i, 0) = 1.0 - hi_mask(i, 0);
    margin(i, 0) = margins[static_cast<std::size_t>(i)];
  }
  ad::Var cos = ad::cosine_sim(residual, momentum);
  ad::Var pull = ad::mul_const(ad::hinge(cos, margin), hi_mask);
  ad::Var push = ad::mul_const(ad::relu(cos), lo_mask);
  return reduce(ad::add(pull, push), reduction);
}

std::vector<double> compute_neighborhood_medians(std::span<const double> timestamps_days,
                                                 std::span<const int> topics, std::span<const double> weights,
                                                 double tau_time_days) {
  const std::size_t n = timestamps_days.size();
  if (topics.size() != n || weights.size() != n) throw ArgumentError("neighborhood medians: length mismatch");
  if (!(tau_time_days > 0.0)) throw ArgumentError("tau_time must be positive");
  std::vector<double> medians(n);
  std::vector<double> bucket;
  for (std::size_t i = 0; i < n; ++i) {
    bucket.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (topics[j] == topics[i] && std::abs(timestamps_days[j] - timestamps_days[i]) <= tau_time_days)
        bucket.push_back(weights[j]);
    }
    std::sort(bucket.begin(), bucket.end());
    const std::size_t m = bucket.size();
    medians[i] = m % 2 == 1 ? bucket[m / 2] : 0.5 * (bucket[m / 2 - 1] + bucket[m / 2]);
  }
  return medians;
}

}  // namespace fame::manifold
