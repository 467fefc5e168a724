#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "fame/corpus.hpp"
#include "fame/embedding_space.hpp"

namespace fame::graph {

struct GraphConfig {
  double tau_sim = 0.6;
  double delta_days_min = 60.0;
  int top_k = 12;
  double confidence_min = 0.6;  // inclusive
  int max_in_flight = 8;        // concurrent verifier calls

  void validate() const;
};

struct CandidatePair {
  std::string earlier_id;
  std::string later_id;
  double similarity = 0.0;
  double time_delta_days = 0.0;
};

struct Verdict {
  bool is_inspired = false;
  double confidence = 0.0;
  std::string rationale;
};

struct InspirationEdge {
  std::string from_id;  // earlier, inspiring
  std::string to_id;    // later, inspired
  double confidence = 1.0;

  friend bool operator==(const InspirationEdge&, const InspirationEdge&) = default;
};

/// Sorted by (to_id, from_id); build functions never emit duplicates.
using EdgeSet = std::vector<InspirationEdge>;

/// Verification prompt for one pair (later paper A, earlier paper B).
std::string render_verification_prompt(const corpus::PaperRecord& earlier,
                                       const corpus::PaperRecord& later, double similarity,
                                       double time_delta_days);

/// Parses the verifier's strict-JSON verdict. Throws ServiceError
/// (non-retryable) on anything else.
Verdict parse_verdict(const std::string& body);

class Verifier {
 public:
  virtual ~Verifier() = default;
  // Must be safe to call concurrently.
  virtual Verdict verify(const CandidatePair& pair, const corpus::PaperRecord& earlier,
                         const corpus::PaperRecord& later) = 0;
  // True when calls wait on the network, so build_graph overlaps them.
  virtual bool blocking_io() const { return false; }
};

/// Deterministic stand-in: similarity >= threshold -> (true, similarity).
class MockVerifier final : public Verifier {
 public:
  explicit MockVerifier(double threshold = 0.8) : threshold_(threshold) {}
  Verdict verify(const CandidatePair& pair, const corpus::PaperRecord&,
                 const corpus::PaperRecord&) override;

 private:
  double threshold_;
};

struct RemoteVerifierOptions {
  std::string endpoint;  // full URL, POST {"prompt": ...}
  std::string bearer_token;
  int max_attempts = 3;
  int timeout_seconds = 60;
  int backoff_ms = 200;
};

class RemoteVerifier final : public Verifier {
 public:
  explicit RemoteVerifier(RemoteVerifierOptions options);
  Verdict verify(const CandidatePair& pair, const corpus::PaperRecord& earlier,
                 const corpus::PaperRecord& later) override;
  bool blocking_io() const override { return true; }

 private:
  RemoteVerifierOptions options_;
};

/// Wraps another verifier with an append-only JSONL cache keyed by
/// (earlier_id, later_id, sha256(prompt)).
class CachingVerifier final : public Verifier {
 public:
  CachingVerifier(std::shared_ptr<Verifier> inner, std::filesystem::path cache_path);
  Verdict verify(const CandidatePair& pair, const corpus::PaperRecord& earlier,
                 const corpus::PaperRecord& later) override;
  bool blocking_io() const override { return inner_->blocking_io(); }
  std::size_t hits() const;
  std::size_t misses() const;

 private:
  std::shared_ptr<Verifier> inner_;
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, Verdict> cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

/// Citation-linked, similar-enough, old-enough precursors of `target`, best
/// `top_k` by similarity (ties: earlier timestamp, then id).
std::vector<CandidatePair> retrieve_candidates(const corpus::PaperRecord& target,
                                               const corpus::Corpus& corpus,
                                               const embedding::EmbeddingMatrix& embeddings,
                                               const GraphConfig& config);

Verdict verify_pair(const CandidatePair& pair, const corpus::Corpus& corpus, Verifier& verifier);

struct GraphStats {
  std::size_t candidates = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t failed = 0;  // verifier errors, skipped
};

/// Retrieve-and-verify over every paper in `corpus` (pass the training
/// subset only). Verifier failures are logged and skipped.
EdgeSet build_graph(const corpus::Corpus& corpus, const embedding::EmbeddingMatrix& embeddings,
                    const GraphConfig& config, Verifier& verifier, GraphStats* stats = nullptr);

/// Every resolvable bibliography entry as an edge with confidence 1.
EdgeSet full_citation_graph(const corpus::Corpus& corpus);

/// For each paper, min(8, #earlier) distinct strictly-earlier papers drawn
/// uniformly.
EdgeSet random_inspiration_graph(const corpus::Corpus& corpus, std::uint64_t seed,
                                 int per_paper = 8);

void write_edges(std::ostream& out, const EdgeSet& edges);
EdgeSet parse_edges(std::istream& in);
void save_edges(const std::filesystem::path& path, const EdgeSet& edges);
EdgeSet load_edges(const std::filesystem::path& path);

}  // namespace fame::graph
