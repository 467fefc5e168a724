#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fame/corpus.hpp"
#include "fame/diffkernel.hpp"
#include "fame/embedding_space.hpp"
#include "fame/inspiration_graph.hpp"
#include "fame/linalg.hpp"

namespace fame::manifold {

/// Sinusoidal time features. Timestamps are first mapped to
/// t' = (t - t_min) / (t_max - t_min); channel pair j uses angular
/// frequency 2π·base^j and is laid out as (sin, cos).
struct TimeEncoderConfig {
  int d_time = 64;
  double t_min = 0.0;
  double t_max = 1.0;
  double frequency_base = 0.8;

  void validate() const;
  double normalize(double t_days) const { return (t_days - t_min) / (t_max - t_min); }
  double frequency(int j) const;
};

/// One row per normalized timestamp.
Matrix time_encode_normalized(std::span<const double> t_norm, const TimeEncoderConfig& cfg);
Vector time_encode(double t_days, const TimeEncoderConfig& cfg);

struct ModelConfig {
  int input_dim = 0;
  int latent_dim = 128;
  int topic_dim = 128;
  int hidden_width = 256;
  int hidden_layers = 2;
  int num_topics = 1;
  std::string activation = "relu";
  TimeEncoderConfig time;

  void validate() const;
};

/// Paper mapper, topic spine network, and per-topic base vectors.
class ManifoldModel {
 public:
  ManifoldModel() = default;
  ManifoldModel(ModelConfig config, ad::ParamStore params);

  // Fan-in uniform weights, zero biases, N(0, 0.01²) topic bases.
  static ManifoldModel initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ModelConfig& config() { return config_; }
  const ad::ParamStore& params() const { return params_; }
  ad::ParamStore& params() { return params_; }

  ad::Var map(ad::Tape& tape, const Matrix& x, std::span<const double> t_norm) const;
  ad::Var spine(ad::Tape& tape, std::span<const int> topics, std::span<const double> t_norm) const;
  /// μ(t') - μ(t' - dt), a backward difference not divided by dt.
  ad::Var momentum(ad::Tape& tape, std::span<const int> topics, std::span<const double> t_norm,
                   double dt) const;
  /// Same as momentum() but reuses an already-built spine(t') node.
  ad::Var momentum_from(ad::Tape& tape, ad::Var spine_now, std::span<const int> topics,
                        std::span<const double> t_norm, double dt) const;

  Vector map_paper(std::span<const double> x, double t_days) const;
  Vector spine_at(int topic, double t_days) const;
  Vector spine_momentum(int topic, double t_days, double dt) const;

 private:
  ad::Var mlp(ad::Tape& tape, const std::string& prefix, ad::Var input) const;

  ModelConfig config_;
  ad::ParamStore params_;
};

struct LossWeights {
  double alpha = 1.0;  // spine
  double beta = 0.1;   // inspiration
  double gamma = 1.0;  // vanguard
};

struct VanguardConfig {
  double tau_time_days = 90.0;
  double delta_base = 0.0;
};

enum class Reduction { kMean, kSum };

struct TrainConfig {
  LossWeights weights;
  double learning_rate = 1e-4;
  double finite_diff_step = 0.01;  // normalized time units
  double delta_align = 0.5;
  VanguardConfig vanguard;
  int epochs = 200;
  int batch_size = 256;  // 0 = full batch
  std::uint64_t seed = 0;
  Reduction reduction = Reduction::kMean;
  ad::AdamConfig adam;

  void validate() const;
};

// Loss terms over already-built tape nodes. Empty batches yield 0.
ad::Var loss_spine(ad::Var z, ad::Var spine_points, Reduction reduction = Reduction::kMean);
ad::Var loss_inspire(ad::Var z_from, ad::Var z_to, ad::Var momentum_to, double delta_align,
                     Reduction reduction = Reduction::kMean);
/// high[i] selects the alignment hinge with margins[i]; otherwise the
/// anti-alignment hinge max(0, cos) applies.
ad::Var loss_vanguard(ad::Var residual, ad::Var momentum, const std::vector<bool>& high,
                      const std::vector<double>& margins, Reduction reduction = Reduction::kMean);

/// Median impact over each paper's same-topic neighbors within ±tau_time
/// days (the paper itself included). Even-sized sets average the middle two.
std::vector<double> compute_neighborhood_medians(std::span<const double> timestamps_days,
                                                 std::span<const int> topics,
                                                 std::span<const double> weights, double tau_time_days);

/// Everything train() consumes, already in row order.
struct TrainingData {
  std::vector<std::string> ids;
  Matrix embeddings;
  std::vector<double> timestamps_days;
  std::vector<double> t_norm;
  std::vector<int> topics;
  std::vector<double> weights;
  std::vector<double> weights_norm;
  std::vector<double> medians;
  std::vector<std::pair<int, int>> edges;  // (from row, to row)
  TimeEncoderConfig time;                  // t_min/t_max fitted on these rows
  double weight_min = 0.0;
  double weight_max = 0.0;
};

/// Builds TrainingData from training papers. Topic ids come from
/// `topics.assignments`, aligned with `train` order. Edges whose endpoints
/// are not both in `train` raise DataError.
TrainingData prepare_training_data(const corpus::Corpus& train,
                                   const embedding::EmbeddingMatrix& embeddings,
                                   const embedding::TopicModel& topics, const graph::EdgeSet& edges,
                                   const corpus::MetricParams& metrics, const VanguardConfig& vanguard,
                                   int d_time = 64, double frequency_base = 0.8);

struct BatchLosses {
  ad::Var total;
  ad::Var spine;
  ad::Var inspire;
  ad::Var vanguard;
};

BatchLosses build_losses(ad::Tape& tape, const ManifoldModel& model, const TrainingData& data,
                         std::span<const int> paper_rows, std::span<const int> edge_rows,
                         const TrainConfig& config);

struct EpochLoss {
  int epoch = 0;
  double total = 0.0;
  double spine = 0.0;
  double inspire = 0.0;
  double vanguard = 0.0;
};

struct TrainResult {
  ManifoldModel model;
  std::vector<EpochLoss> trace;
  std::string rng_state;
};

/// Mini-batch adaptive-moment training on the weighted objective.
/// Deterministic for a given seed. Throws DivergenceError on a non-finite
/// loss component.
TrainResult train(const TrainingData& data, ModelConfig model_config, const TrainConfig& config);

}  // namespace fame::manifold
