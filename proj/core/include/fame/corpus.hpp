#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fame::corpus {

inline constexpr int kSchemaVersion = 1;

struct ImpactSignals {
  double github_stars = 0.0;
  double citations = 0.0;
  double influential_citations = 0.0;
  double altmetric = 0.0;

  std::array<double, 4> as_array() const {
    return {github_stars, citations, influential_citations, altmetric};
  }
};

struct PaperRecord {
  std::string id;
  std::string title;
  std::string abstract_text;
  double timestamp_days = 0.0;  // days since 1970-01-01 UTC
  std::vector<std::string> bibliography;
  ImpactSignals signals;
  std::optional<std::size_t> embedding_index;
};

/// One log-normalized metric channel: log_base(scale * s + 1).
struct MetricScale {
  double scale = 1.0;
  double base = std::numbers::e;
};

/// Per-channel scale/base, ordered stars, citations, influential, altmetric.
struct MetricParams {
  std::array<MetricScale, 4> channels{{
      {1.0, std::numbers::e},
      {1.0, 8.0},
      {10.0, 8.0},
      {1.0, 4.0},
  }};

  void validate() const;
};

/// Immutable-after-load paper collection with id lookup. Insertion order is
/// preserved.
class Corpus {
 public:
  Corpus() = default;

  // Validates the record and rejects duplicate ids.
  void add(PaperRecord record);

  std::size_t size() const noexcept { return papers_.size(); }
  bool empty() const noexcept { return papers_.empty(); }

  const PaperRecord& operator[](std::size_t i) const { return papers_[i]; }
  const std::vector<PaperRecord>& papers() const noexcept { return papers_; }
  auto begin() const { return papers_.begin(); }
  auto end() const { return papers_.end(); }

  std::optional<std::size_t> index_of(std::string_view id) const;
  const PaperRecord& at(std::string_view id) const;
  bool contains(std::string_view id) const { return index_of(id).has_value(); }

  // Sets each record's embedding_index from an id -> row lookup.
  template <class Lookup>
  void attach_embeddings(const Lookup& row_of) {
    for (auto& p : papers_) p.embedding_index = row_of(p.id);
  }

  // Papers whose ids are listed, in the given order.
  Corpus subset(std::span<const std::string> ids) const;

 private:
  std::vector<PaperRecord> papers_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct CorpusSplit {
  double cutoff_T = 0.0;
  double end_T = 0.0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

Corpus parse_corpus(std::istream& in);
Corpus load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

double compute_impact_weight(const ImpactSignals& signals,
                             const MetricParams& params = {});

std::vector<double> compute_weights(const Corpus& corpus, const MetricParams& params = {});

/// Min-max rescale to [0,1]. A degenerate range maps everything to 0.
std::vector<double> normalize_weights(std::span<const double> weights);

/// Papers with timestamp <= cutoff go to train, the rest to test. end_T
/// defaults to the latest timestamp in the corpus.
CorpusSplit temporal_split(const Corpus& corpus, double cutoff_T,
                           std::optional<double> end_T = std::nullopt);

void write_weights_csv(std::ostream& out, const Corpus& corpus,
                       std::span<const double> weights);

}  // namespace fame::corpus
