#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace fame::cli {

struct Artifact {
  const char* file;
  const char* producer;  // subcommand that writes it
};

inline constexpr Artifact kCorpus{"corpus.jsonl", "ingest"};
inline constexpr Artifact kEmbeddings{"embeddings.csv", "ingest"};
inline constexpr Artifact kWeights{"weights.csv", "weights"};
inline constexpr Artifact kTopics{"topics.json", "cluster"};
inline constexpr Artifact kEdges{"edges.jsonl", "graph"};
inline constexpr Artifact kCheckpoint{"model.ckpt", "train"};
inline constexpr Artifact kLossTrace{"loss_trace.csv", "train"};
inline constexpr Artifact kScores{"scores.csv", "score"};
inline constexpr Artifact kContext{"context.txt", "context"};
inline constexpr Artifact kReport{"report.csv", "eval"};
inline constexpr Artifact kSummary{"summary.csv", "eval"};
inline constexpr Artifact kAblation{"ablation.csv", "ablate"};
inline constexpr Artifact kAblationTable{"ablation_table.csv", "ablate"};
inline constexpr Artifact kSweep{"sweep.csv", "sweep"};
inline constexpr Artifact kTruth{"truth.json", "simulate"};
inline constexpr Artifact kProjection{"projection.csv", "project"};

/// A working directory of pipeline artifacts. Tracks what a command read and
/// wrote so the run manifest can hash both.
class Workspace {
 public:
  explicit Workspace(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path(const Artifact& a) const { return root_ / a.file; }

  /// Path of an upstream artifact; DataError naming its producer if absent.
  std::filesystem::path require(const Artifact& a);
  /// Records an external input file.
  void input(const std::filesystem::path& p);
  /// Path to write `a` to; recorded for the manifest.
  std::filesystem::path output(const Artifact& a);

  /// Writes manifests/<command>.json with input/output hashes.
  void write_manifest(const std::string& command, std::uint64_t seed,
                      const std::map<std::string, std::string>& config) const;

 private:
  std::filesystem::path root_;
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> outputs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace fame::cli
