#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fame/corpus.hpp"
#include "fame/evaluation.hpp"
#include "fame/inspiration_graph.hpp"
#include "fame/manifold.hpp"
#include "fame/synthcorpus.hpp"

namespace fame::cli {

/// Every tunable the pipeline exposes. Each field has a flat dotted key so it
/// can come from a config file; command-line flags take precedence.
struct Settings {
  std::filesystem::path workdir = "fame-work";
  std::filesystem::path config_file;
  std::uint64_t seed = 0;

  // ingest
  std::string corpus_path;
  std::string embeddings_path;
  std::string embedding_url;

  corpus::MetricParams metrics;
  int num_topics = 10;
  std::string cutoff = "latest";

  graph::GraphConfig graph;
  std::string verifier = "mock";
  double mock_threshold = 0.8;
  std::string verifier_url;

  manifold::TrainConfig train;
  manifold::ModelConfig model;
  eval::NaiveConfig naive;

  // eval, ablate, sweep
  int windows = 3;
  double horizon_days = 61.0;
  std::string cutoffs;
  std::string seeds = "0";
  std::string variants = "full,naive";
  double sweep_step = 0.25;

  synth::SynthConfig synth;
  int projection_iterations = 500;
  bool score_all = false;
};

/// Splits "key = value" lines; '#' starts a comment. Throws ArgumentError
/// naming the offending line.
std::map<std::string, std::string> parse_config_text(std::istream& in);

class KeyRegistry {
 public:
  explicit KeyRegistry(Settings& settings);

  /// Adds `flag` to `app`, bound to the field behind `key`.
  CLI::Option* add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help);

  /// Applies config values whose flags were not given on the command line.
  /// Unknown keys are an ArgumentError.
  void apply(const std::map<std::string, std::string>& values);

  /// All keys as "key = value" lines, readable by parse_config_text.
  std::string dump() const;
  std::map<std::string, std::string> snapshot() const;

 private:
  struct Binding {
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
    std::function<CLI::Option*(CLI::App&, const std::string&, const std::string&)> make;
    std::vector<CLI::Option*> options;
  };

  template <class T>
  void bind(const std::string& key, T& field);

  std::map<std::string, Binding> bindings_;
};

}  // namespace fame::cli
