#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fame/corpus.hpp"
#include "fame/embedding_space.hpp"
#include "fame/linalg.hpp"

namespace fame::synth {

/// Planted-signal corpus settings. Defaults give three well-separated topics
/// drifting over two years, with impact driven by how well a paper's offset
/// from its topic centroid lines up with the topic's drift.
struct SynthConfig {
  int n_papers = 900;
  int n_topics = 3;
  int embed_dim = 32;
  double start_day = 19358.0;  // 2023-01-01
  double span_days = 730.0;
  double topic_spread = 1.0;   // per-coordinate std of topic base vectors
  double drift_rate = 10.0;    // centroid displacement over the full span
  double noise_sigma = 1.0;    // per-coordinate std of paper offsets
  double impact_gain = 10.0;   // lambda: weight per unit of alignment
  double impact_noise = 0.7;
  double impact_base = 3.0;
  double citations_per_paper = 6.0;
  double inspiration_rate = 0.6;  // chance a paper has one planted precursor
  double inspiration_gap_days = 60.0;
  double p_true = 0.9;            // chance a planted precursor is recoverable
  double coupling = 0.8;          // offset correlation along a recoverable edge
  std::uint64_t seed = 7;

  void validate() const;
};

struct PlantedInspiration {
  std::string from_id;
  std::string to_id;
  bool recoverable = false;
};

struct PlantedTruth {
  Matrix bases;  // K x d
  Matrix drift;  // K x d, unit rows scaled by drift_rate
  std::vector<int> topics;
  std::vector<double> alignments;  // cos(offset, drift)
  std::vector<double> weights;     // recomputable from signals
  std::vector<PlantedInspiration> inspirations;
};

struct SynthCorpus {
  corpus::Corpus corpus;
  embedding::EmbeddingMatrix embeddings;
  PlantedTruth truth;
};

SynthCorpus generate(const SynthConfig& config);

void save_truth(const std::filesystem::path& path, const SynthConfig& config, const SynthCorpus& data);

}  // namespace fame::synth
