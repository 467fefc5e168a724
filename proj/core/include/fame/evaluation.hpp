#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fame/checkpoint.hpp"
#include "fame/corpus.hpp"
#include "fame/embedding_space.hpp"
#include "fame/inspiration_graph.hpp"
#include "fame/manifold.hpp"

namespace fame::eval {

// ---------------------------------------------------------------------------
// Scoring

/// Cosine between the paper's residual from its topic spine and the spine's
/// momentum at publication time. Zero when either vector vanishes.
double score_paper(std::span<const double> x, double t_days, const manifold::ManifoldModel& model,
                   const embedding::TopicModel& topics, double dt);

/// Batched score_paper over the rows of `x`.
std::vector<double> score_papers(const Matrix& x, std::span<const double> t_days,
                                 const manifold::ManifoldModel& model, const embedding::TopicModel& topics,
                                 double dt);

// ---------------------------------------------------------------------------
// Rank metrics

/// 1-based ranks; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. nullopt when undefined (fewer than
/// two items or a constant input). Throws ArgumentError on length mismatch.
std::optional<double> spearman(std::span<const double> pred, std::span<const double> truth);

/// |top-k by pred ∩ top-k by truth| / k, with ties at the cut broken by
/// ascending id. k is clamped to the list length.
double top_k_accuracy(std::span<const double> pred, std::span<const double> truth,
                      std::span<const std::string> ids, int k = 5);

// ---------------------------------------------------------------------------
// Naive baseline: MLP regressor from raw embeddings to standardized weights.

struct NaiveConfig {
  int hidden_width = 256;
  int hidden_layers = 2;
  double learning_rate = 1e-4;
  int epochs = 200;
  int batch_size = 256;
};

class NaiveScorer {
 public:
  NaiveScorer() = default;
  NaiveScorer(ad::ParamStore params, int hidden_layers, double target_mean, double target_scale);
  std::vector<double> predict(const Matrix& x) const;
  const ad::ParamStore& params() const { return params_; }

 private:
  ad::ParamStore params_;
  int hidden_layers_ = 0;
  double mean_ = 0.0;
  double scale_ = 1.0;
};

NaiveScorer naive_baseline(const Matrix& x, std::span<const double> weights, const NaiveConfig& config,
                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Temporal out-of-distribution evaluation

enum class Variant {
  kFull,
  kNoInspire,
  kNoVanguard,
  kNoSpine,
  kFullCitationGraph,
  kRandomGraph,
  kNaive,
};

inline constexpr Variant kAllVariants[] = {Variant::kFull,    Variant::kNoInspire,         Variant::kNoVanguard,
                                           Variant::kNoSpine, Variant::kFullCitationGraph, Variant::kRandomGraph,
                                           Variant::kNaive};

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

struct PipelineConfig {
  int num_topics = 10;
  graph::GraphConfig graph;
  double mock_threshold = 0.8;
  // When set, replaces the mock verifier (e.g. a cached remote verifier).
  std::shared_ptr<graph::Verifier> verifier;
  corpus::MetricParams metrics;
  manifold::ModelConfig model;  // input_dim and num_topics are filled per window
  manifold::TrainConfig train;  // seed is overridden per run
  NaiveConfig naive;
  double horizon_days = 61.0;
};

/// Everything a window derives from its training papers.
struct WindowArtifacts {
  corpus::CorpusSplit split;
  embedding::TopicModel topics;
  graph::EdgeSet edges;
  manifold::TrainingData data;
  manifold::ModelCheckpoint checkpoint;  // empty model for the naive variant
};

struct WindowResult {
  double cutoff = 0.0;
  std::uint64_t seed = 0;
  Variant variant = Variant::kFull;
  int n_train = 0;
  int n_test = 0;
  std::optional<double> spearman;
  std::optional<double> top5;
  std::vector<std::string> ids;
  std::vector<double> predicted;
  std::vector<double> truth;
};

/// Trains the manifold on `train` with fixed topics and edges. The
/// checkpoint carries everything scoring needs.
manifold::ModelCheckpoint train_checkpoint(const corpus::Corpus& train, const embedding::EmbeddingMatrix& embeddings,
                                           const embedding::TopicModel& topics, const graph::EdgeSet& edges,
                                           const PipelineConfig& config, std::uint64_t seed,
                                           manifold::TrainingData* data_out = nullptr);

/// Trains on papers with t <= cutoff and scores papers in
/// (cutoff, cutoff + horizon]. Returns nullopt (with a warning) when either
/// side is empty or too small to cluster.
std::optional<WindowResult> run_window(const corpus::Corpus& corpus, const embedding::EmbeddingMatrix& embeddings,
                                       double cutoff, const PipelineConfig& config, std::uint64_t seed,
                                       Variant variant = Variant::kFull, WindowArtifacts* artifacts = nullptr);

/// Cutoffs for `n_windows` consecutive non-overlapping test windows of
/// `horizon_days` that end at the corpus' last timestamp.
std::vector<double> trailing_cutoffs(const corpus::Corpus& corpus, int n_windows, double horizon_days = 61.0);

struct SummaryRow {
  Variant variant = Variant::kFull;
  double cutoff = 0.0;
  double mean_spearman = 0.0;
  double std_spearman = 0.0;
  double mean_top5 = 0.0;
  int runs = 0;
  int missing = 0;
};

struct EvalReport {
  std::vector<WindowResult> rows;
  std::vector<std::uint64_t> seeds;

  /// Mean ± population std over seeds per (variant, cutoff); missing
  /// correlations are excluded and counted.
  std::vector<SummaryRow> summarize() const;
  /// Mean Spearman over all defined rows of a variant (nullopt if none).
  std::optional<double> mean_spearman(Variant variant) const;
};

EvalReport sliding_window_eval(const corpus::Corpus& corpus, const embedding::EmbeddingMatrix& embeddings,
                               std::span<const double> cutoffs, const PipelineConfig& config,
                               std::span<const std::uint64_t> seeds,
                               std::span<const Variant> variants = std::span<const Variant>(kAllVariants, 1));

/// CSV: window_cutoff,n_test,seed,spearman,top5,variant ("NA" when missing).
void write_report_csv(std::ostream& out, const EvalReport& report);
void write_summary_csv(std::ostream& out, const EvalReport& report);

/// All seven variants on every window and seed.
EvalReport ablation_suite(const corpus::Corpus& corpus, const embedding::EmbeddingMatrix& embeddings,
                          std::span<const double> cutoffs, const PipelineConfig& config,
                          std::span<const std::uint64_t> seeds);

/// One row per variant: per-window means and the overall mean.
void write_ablation_table(std::ostream& out, const EvalReport& report);

/// (α, β, γ) on the probability simplex with the given step; step 0.25
/// yields 15 points.
std::vector<manifold::LossWeights> simplex_grid(double step);

struct SweepRow {
  manifold::LossWeights weights;
  std::optional<double> mean_spearman;
};

std::vector<SweepRow> loss_weight_sweep(std::span<const manifold::LossWeights> grid, const corpus::Corpus& corpus,
                                        const embedding::EmbeddingMatrix& embeddings, std::span<const double> cutoffs,
                                        const PipelineConfig& config, std::span<const std::uint64_t> seeds);

/// CSV: alpha,beta,gamma,mean_spearman
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

// ---------------------------------------------------------------------------
// Export helpers

struct Projection {
  Matrix coords;      // n x 2
  Matrix components;  // 2 x d, unit rows
  Vector variances;   // variance captured by each component
};

/// Centers the rows and projects them on the top two principal directions
/// found by power iteration with deflation.
Projection project_2d(const Matrix& latents, std::uint64_t seed, int iterations = 500);

/// CSV: x,y,id,weight,topic
void export_projection(const std::filesystem::path& path, const Projection& projection,
                       std::span<const std::string> ids, std::span<const double> weights,
                       std::span<const int> topics);

/// Score context block in batch index order with population z-scores.
std::string format_score_context(std::span<const double> scores);

}  // namespace fame::eval
