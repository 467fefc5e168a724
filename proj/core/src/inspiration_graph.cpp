#include "fame/inspiration_graph.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "fame/errors.hpp"
#include "fame/log.hpp"
#include "fame/random.hpp"

namespace fame::graph {

using nlohmann::json;

void GraphConfig::validate() const {
  if (top_k < 1) throw ArgumentError("graph top_k must be >= 1");
  if (!(tau_sim > -1.0 - 1e-12 && tau_sim <= 1.0)) throw ArgumentError("graph tau_sim must lie in [-1, 1]");
  if (delta_days_min < 0.0) throw ArgumentError("graph delta_days_min must be >= 0");
  if (max_in_flight < 1) throw ArgumentError("graph max_in_flight must be >= 1");
}

namespace {

void sort_edges(EdgeSet& edges) {
  std::sort(edges.begin(), edges.end(), [](const InspirationEdge& a, const InspirationEdge& b) {
    return std::tie(a.to_id, a.from_id) < std::tie(b.to_id, b.from_id);
  });
}

std::span<const double> embedding_of(const corpus::PaperRecord& p, const embedding::EmbeddingMatrix& e) {
  auto row = p.embedding_index;
  if (!row || *row >= e.size() || e.ids()[*row] != p.id) row = e.index_of(p.id);
  if (!row) throw DataError("paper '" + p.id + "' has no embedding");
  return e.row(*row);
}

}  // namespace

std::vector<CandidatePair> retrieve_candidates(const corpus::PaperRecord& target,
                                               const corpus::Corpus& corpus,
                                               const embedding::EmbeddingMatrix& embeddings,
                                               const GraphConfig& config) {
  config.validate();
  const auto target_vec = embedding_of(target, embeddings);
  std::vector<CandidatePair> pool;
  std::set<std::string> seen;
  for (const auto& cited_id : target.bibliography) {
    if (!seen.insert(cited_id).second) continue;
    auto idx = corpus.index_of(cited_id);
    if (!idx) continue;
    const auto& earlier = corpus[*idx];
    const double delta = target.timestamp_days - earlier.timestamp_days;
    if (!(delta > config.delta_days_min)) continue;
    const double sim = embedding::cosine_similarity(embedding_of(earlier, embeddings), target_vec);
    if (!(sim > config.tau_sim)) continue;
    pool.push_back({earlier.id, target.id, sim, delta});
  }
  std::sort(pool.begin(), pool.end(), [&](const CandidatePair& a, const CandidatePair& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    // Larger delta means an earlier precursor.
    if (a.time_delta_days != b.time_delta_days) return a.time_delta_days > b.time_delta_days;
    return a.earlier_id < b.earlier_id;
  });
  if (pool.size() > static_cast<std::size_t>(config.top_k)) pool.resize(static_cast<std::size_t>(config.top_k));
  return pool;
}

Verdict verify_pair(const CandidatePair& pair, const corpus::Corpus& corpus, Verifier& verifier) {
  return verifier.verify(pair, corpus.at(pair.earlier_id), corpus.at(pair.later_id));
}

EdgeSet build_graph(const corpus::Corpus& corpus, const embedding::EmbeddingMatrix& embeddings,
                    const GraphConfig& config, Verifier& verifier, GraphStats* stats) {
  config.validate();
  std::vector<CandidatePair> candidates;
  for (const auto& paper : corpus) {
    auto c = retrieve_candidates(paper, corpus, embeddings, config);
    candidates.insert(candidates.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
  }

  // Verify in bounded waves; slot i always holds candidate i's outcome.
  std::vector<std::optional<Verdict>> verdicts(candidates.size());
  const std::size_t wave = verifier.blocking_io() ? static_cast<std::size_t>(config.max_in_flight) : 1;
  auto run_one = [&](std::size_t i) -> std::optional<Verdict> {
    try {
      return verify_pair(candidates[i], corpus, verifier);
    } catch (const ServiceError& e) {
      log::warning(std::string("skipping pair: ") + e.what());
      return std::nullopt;
    }
  };
  for (std::size_t start = 0; start < candidates.size(); start += wave) {
    const std::size_t stop = std::min(candidates.size(), start + wave);
    if (stop - start == 1 || wave == 1) {
      for (std::size_t i = start; i < stop; ++i) verdicts[i] = run_one(i);
      continue;
    }
    std::vector<std::future<std::optional<Verdict>>> inflight;
    for (std::size_t i = start; i < stop; ++i) inflight.push_back(std::async(std::launch::async, run_one, i));
    for (std::size_t i = start; i < stop; ++i) verdicts[i] = inflight[i - start].get();
  }

  GraphStats local;
  local.candidates = candidates.size();
  EdgeSet edges;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!verdicts[i]) {
      ++local.failed;
      continue;
    }
    if (verdicts[i]->is_inspired && verdicts[i]->confidence >= config.confidence_min) {
      edges.push_back({candidates[i].earlier_id, candidates[i].later_id, verdicts[i]->confidence});
      ++local.accepted;
    } else {
      ++local.rejected;
    }
  }
  sort_edges(edges);
  if (stats) *stats = local;
  return edges;
}

EdgeSet full_citation_graph(const corpus::Corpus& corpus) {
  EdgeSet edges;
  for (const auto& paper : corpus) {
    std::set<std::string> seen;
    for (const auto& cited : paper.bibliography) {
      if (!corpus.contains(cited) || !seen.insert(cited).second) continue;
      edges.push_back({cited, paper.id, 1.0});
    }
  }
  sort_edges(edges);
  return edges;
}

EdgeSet random_inspiration_graph(const corpus::Corpus& corpus, std::uint64_t seed, int per_paper) {
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(corpus[a].timestamp_days, corpus[a].id) < std::tie(corpus[b].timestamp_days, corpus[b].id);
  });
  Rng rng(seed);
  EdgeSet edges;
  std::size_t earlier_end = 0;  // order[0, earlier_end) are strictly earlier than the current paper
  std::vector<std::size_t> pool;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const auto& target = corpus[order[pos]];
    while (earlier_end < pos && corpus[order[earlier_end]].timestamp_days < target.timestamp_days) ++earlier_end;
    if (earlier_end == 0) continue;
    pool.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(earlier_end));
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(per_paper), pool.size());
    // Partial Fisher-Yates: first `take` slots become a uniform sample.
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.index(pool.size() - i);
      std::swap(pool[i], pool[j]);
      edges.push_back({corpus[pool[i]].id, target.id, 1.0});
    }
  }
  sort_edges(edges);
  return edges;
}

void write_edges(std::ostream& out, const EdgeSet& edges) {
  for (const auto& e : edges)
    out << json{{"from", e.from_id}, {"to", e.to_id}, {"confidence", e.confidence}}.dump() << '\n';
}

EdgeSet parse_edges(std::istream& in) {
  EdgeSet edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      edges.push_back({j.at("from").get<std::string>(), j.at("to").get<std::string>(),
                       j.value("confidence", 1.0)});
    } catch (const json::exception& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  sort_edges(edges);
  return edges;
}

void save_edges(const std::filesystem::path& path, const EdgeSet& edges) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_edges(out, edges);
}

EdgeSet load_edges(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge file " + path.string());
  return parse_edges(in);
}

}  // namespace fame::graph
