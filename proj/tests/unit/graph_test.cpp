#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <set>
#include <sstream>

#include "fame/errors.hpp"
#include "fame/inspiration_graph.hpp"
#include "fame/synthcorpus.hpp"
#include "test_support.hpp"

using namespace fame;
using fame::testing::paper;

namespace {

// Unit vector in the plane at the given cosine to (1, 0).
std::vector<double> at_cos(double c) { return {c, std::sqrt(std::max(0.0, 1.0 - c * c))}; }

struct Fixture {
  corpus::Corpus corpus;
  std::vector<std::string> ids;
  Matrix rows;
  void add(corpus::PaperRecord p, std::vector<double> v) {
    ids.push_back(p.id);
    rows.conservativeResize(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(v.size()));
    for (std::size_t j = 0; j < v.size(); ++j) rows(rows.rows() - 1, static_cast<Eigen::Index>(j)) = v[j];
    corpus.add(std::move(p));
  }
  embedding::EmbeddingMatrix embeddings() const { return embedding::EmbeddingMatrix(ids, rows); }
};

class FixedVerifier : public graph::Verifier {
 public:
  explicit FixedVerifier(graph::Verdict v) : v_(v) {}
  graph::Verdict verify(const graph::CandidatePair&, const corpus::PaperRecord&, const corpus::PaperRecord&) override {
    return v_;
  }

 private:
  graph::Verdict v_;
};

class FailingVerifier : public graph::Verifier {
 public:
  graph::Verdict verify(const graph::CandidatePair&, const corpus::PaperRecord&, const corpus::PaperRecord&) override {
    return graph::parse_verdict("not json at all");
  }
};

}  // namespace

TEST(RetrieveCandidates, EmptyBibliography) {
  Fixture f;
  f.add(paper("old", 0), at_cos(1));
  f.add(paper("new", 200), at_cos(1));
  EXPECT_TRUE(graph::retrieve_candidates(f.corpus[1], f.corpus, f.embeddings(), {}).empty());
}

TEST(RetrieveCandidates, SinglePairPassingThresholds) {
  Fixture f;
  f.add(paper("old", 0), at_cos(0.7));
  f.add(paper("new", 90, {"old"}), at_cos(1));
  auto c = graph::retrieve_candidates(f.corpus[1], f.corpus, f.embeddings(), {});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].earlier_id, "old");
  EXPECT_EQ(c[0].later_id, "new");
  EXPECT_NEAR(c[0].similarity, 0.7, 1e-12);
  EXPECT_DOUBLE_EQ(c[0].time_delta_days, 90.0);
}

TEST(RetrieveCandidates, ThresholdsAreStrict) {
  Fixture f;
  f.add(paper("sim_at_tau", 0), at_cos(0.6));
  f.add(paper("gap_at_delta", 40), at_cos(0.9));
  f.add(paper("new", 100, {"sim_at_tau", "gap_at_delta"}), at_cos(1));
  auto c = graph::retrieve_candidates(f.corpus[2], f.corpus, f.embeddings(), {});
  // cos exactly 0.6 may round either side; the 60-day gap must be excluded.
  for (const auto& p : c) EXPECT_NE(p.earlier_id, "gap_at_delta");
  for (const auto& p : c) EXPECT_GT(p.similarity, 0.6);
}

TEST(RetrieveCandidates, KeepsTopKBySimilarity) {
  Fixture f;
  std::vector<std::string> bib;
  Rng rng(31);
  std::vector<std::pair<double, std::string>> expected;
  for (int i = 0; i < 20; ++i) {
    const std::string id = "c" + std::to_string(i);
    const double c = rng.uniform(0.61, 0.99);
    f.add(paper(id, i), at_cos(c));
    bib.push_back(id);
    expected.emplace_back(c, id);
  }
  f.add(paper("target", 500, bib), at_cos(1));
  auto got = graph::retrieve_candidates(f.corpus[20], f.corpus, f.embeddings(), {});
  std::sort(expected.begin(), expected.end(), std::greater<>());
  ASSERT_EQ(got.size(), 12u);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(got[i].earlier_id, expected[i].second);
}

TEST(RetrieveCandidates, TiesPreferEarlierThenId) {
  Fixture f;
  f.add(paper("b", 10), at_cos(0.8));
  f.add(paper("a", 10), at_cos(0.8));
  f.add(paper("z", 5), at_cos(0.8));
  f.add(paper("t", 300, {"b", "a", "z"}), at_cos(1));
  graph::GraphConfig cfg;
  cfg.top_k = 2;
  auto got = graph::retrieve_candidates(f.corpus[3], f.corpus, f.embeddings(), cfg);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].earlier_id, "z");
  EXPECT_EQ(got[1].earlier_id, "a");
}

TEST(RetrieveCandidates, UnknownBibliographyEntriesAreIgnored) {
  Fixture f;
  f.add(paper("old", 0), at_cos(0.9));
  f.add(paper("new", 100, {"old", "outside-corpus"}), at_cos(1));
  EXPECT_EQ(graph::retrieve_candidates(f.corpus[1], f.corpus, f.embeddings(), {}).size(), 1u);
}

TEST(MockVerifier, Contract) {
  graph::MockVerifier mock(0.8);
  auto p = paper("x", 0);
  auto v = mock.verify({"a", "b", 0.9, 100}, p, p);
  EXPECT_TRUE(v.is_inspired);
  EXPECT_DOUBLE_EQ(v.confidence, 0.9);
  EXPECT_FALSE(mock.verify({"a", "b", 0.7, 100}, p, p).is_inspired);
  EXPECT_TRUE(mock.verify({"a", "b", 0.8, 100}, p, p).is_inspired);
}

TEST(ParseVerdict, StrictJson) {
  auto v = graph::parse_verdict(R"({"is_inspired": true, "confidence": 0.75, "rationale": "shared method"})");
  EXPECT_TRUE(v.is_inspired);
  EXPECT_DOUBLE_EQ(v.confidence, 0.75);
  EXPECT_EQ(v.rationale, "shared method");
  EXPECT_THROW(graph::parse_verdict("```json\n{}\n```"), ServiceError);
  EXPECT_THROW(graph::parse_verdict(R"({"is_inspired": "yes", "confidence": 0.5})"), ServiceError);
  EXPECT_THROW(graph::parse_verdict(R"({"is_inspired": true})"), ServiceError);
  EXPECT_THROW(graph::parse_verdict(R"({"is_inspired": true, "confidence": 1.5})"), ServiceError);
  EXPECT_THROW(graph::parse_verdict("[1,2]"), ServiceError);
  try {
    graph::parse_verdict("nope");
  } catch (const ServiceError& e) {
    EXPECT_FALSE(e.retryable());
  }
}

TEST(Prompt, ContainsBothPapersAndSignals) {
  auto earlier = paper("2101.00001", 0);
  auto later = paper("2201.00002", 300);
  const auto p = graph::render_verification_prompt(earlier, later, 0.73456, 300);
  const auto a = p.find("Later paper A:\n- arXiv ID: 2201.00002");
  const auto b = p.find("Earlier paper B:\n- arXiv ID: 2101.00001");
  ASSERT_NE(a, std::string::npos);
  ASSERT_NE(b, std::string::npos);
  EXPECT_LT(a, b);
  EXPECT_NE(p.find("- cosine_similarity: 0.7346\n"), std::string::npos);
  EXPECT_NE(p.find("- time_delta_days(A_minus_B): 300.0\n"), std::string::npos);
  EXPECT_NE(p.find("\"is_inspired\""), std::string::npos);
}

TEST(BuildGraph, NoCandidatesNoEdges) {
  Fixture f;
  f.add(paper("a", 0), at_cos(1));
  f.add(paper("b", 10), at_cos(0));
  graph::MockVerifier mock(0.0);
  EXPECT_TRUE(graph::build_graph(f.corpus, f.embeddings(), {}, mock).empty());
}

TEST(BuildGraph, ConfidenceThresholdIsInclusive) {
  Fixture f;
  f.add(paper("old", 0), at_cos(0.9));
  f.add(paper("new", 100, {"old"}), at_cos(1));
  FixedVerifier at_min({true, 0.6, ""});
  auto kept = graph::build_graph(f.corpus, f.embeddings(), {}, at_min);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].from_id, "old");
  EXPECT_EQ(kept[0].to_id, "new");
  EXPECT_DOUBLE_EQ(kept[0].confidence, 0.6);
  FixedVerifier below({true, 0.59, ""});
  EXPECT_TRUE(graph::build_graph(f.corpus, f.embeddings(), {}, below).empty());
  FixedVerifier rejected({false, 0.99, ""});
  EXPECT_TRUE(graph::build_graph(f.corpus, f.embeddings(), {}, rejected).empty());
}

TEST(BuildGraph, VerifierFailuresAreSkipped) {
  Fixture f;
  f.add(paper("old", 0), at_cos(0.9));
  f.add(paper("new", 100, {"old"}), at_cos(1));
  FailingVerifier failing;
  graph::GraphStats stats;
  EXPECT_TRUE(graph::build_graph(f.corpus, f.embeddings(), {}, failing, &stats).empty());
  EXPECT_EQ(stats.failed, 1u);
  EXPECT_EQ(stats.candidates, 1u);
}

TEST(BuildGraph, MissingEmbeddingIsDataError) {
  Fixture f;
  f.add(paper("old", 0), at_cos(0.9));
  f.add(paper("new", 100, {"old"}), at_cos(1));
  embedding::EmbeddingMatrix partial({"new"}, f.rows.bottomRows(1));
  graph::MockVerifier mock;
  EXPECT_THROW(graph::build_graph(f.corpus, partial, {}, mock), DataError);
}

TEST(BuildGraph, ImpossibleConfidenceGivesEmptySet) {
  synth::SynthConfig sc;
  sc.n_papers = 120;
  auto data = synth::generate(sc);
  graph::GraphConfig cfg;
  cfg.confidence_min = 1.01;
  graph::MockVerifier mock(0.0);
  EXPECT_TRUE(graph::build_graph(data.corpus, data.embeddings, cfg, mock).empty());
}

TEST(BuildGraph, AcceptAllEqualsCitationGraphCappedAtTopK) {
  synth::SynthConfig sc;
  sc.n_papers = 150;
  auto data = synth::generate(sc);
  graph::GraphConfig cfg;
  cfg.tau_sim = -1.0;
  cfg.delta_days_min = 0.0;
  cfg.confidence_min = 0.0;
  cfg.top_k = 3;
  graph::MockVerifier accept_all(-2.0);
  const auto built = graph::build_graph(data.corpus, data.embeddings, cfg, accept_all);

  // Oracle: every citation, then the best top_k per citing paper.
  std::set<std::pair<std::string, std::string>> expected;
  const auto full = graph::full_citation_graph(data.corpus);
  std::map<std::string, std::vector<std::pair<double, std::string>>> by_target;
  for (const auto& e : full) {
    const auto& a = data.embeddings.row(*data.embeddings.index_of(e.from_id));
    const auto& b = data.embeddings.row(*data.embeddings.index_of(e.to_id));
    by_target[e.to_id].emplace_back(embedding::cosine_similarity(a, b), e.from_id);
  }
  for (auto& [to, list] : by_target) {
    std::sort(list.begin(), list.end(), std::greater<>());
    for (std::size_t i = 0; i < list.size() && i < 3; ++i) expected.emplace(list[i].second, to);
  }
  std::set<std::pair<std::string, std::string>> got;
  for (const auto& e : built) got.emplace(e.from_id, e.to_id);
  EXPECT_EQ(got, expected);
}

TEST(BuildGraph, EdgesSatisfyConstraintsAndPointForward) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    synth::SynthConfig sc;
    sc.n_papers = 150;
    sc.seed = seed;
    auto data = synth::generate(sc);
    graph::MockVerifier mock(0.8);
    graph::GraphConfig cfg;
    const auto edges = graph::build_graph(data.corpus, data.embeddings, cfg, mock);
    for (const auto& e : edges) {
      const auto& from = data.corpus.at(e.from_id);
      const auto& to = data.corpus.at(e.to_id);
      EXPECT_NE(std::find(to.bibliography.begin(), to.bibliography.end(), e.from_id), to.bibliography.end());
      EXPECT_GT(to.timestamp_days - from.timestamp_days, cfg.delta_days_min);
      EXPECT_GT(embedding::cosine_similarity(data.embeddings.row(*data.embeddings.index_of(e.from_id)),
                                             data.embeddings.row(*data.embeddings.index_of(e.to_id))),
                cfg.tau_sim);
      EXPECT_GE(e.confidence, cfg.confidence_min);
    }
    EXPECT_TRUE(std::is_sorted(edges.begin(), edges.end(), [](const auto& a, const auto& b) {
      return std::tie(a.to_id, a.from_id) < std::tie(b.to_id, b.from_id);
    }));
  }
}

TEST(Baselines, FullCitationGraphSkipsUnknownIds) {
  corpus::Corpus c;
  c.add(paper("a", 0));
  c.add(paper("b", 5, {"a", "ghost"}));
  auto g = graph::full_citation_graph(c);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].from_id, "a");
  EXPECT_EQ(g[0].to_id, "b");
  EXPECT_DOUBLE_EQ(g[0].confidence, 1.0);
}

TEST(Baselines, RandomGraphPointsBackwardAndIsSeeded) {
  corpus::Corpus c;
  for (int i = 0; i < 30; ++i) c.add(paper("p" + std::to_string(i), i * 3.0));
  auto g1 = graph::random_inspiration_graph(c, 5);
  auto g2 = graph::random_inspiration_graph(c, 5);
  EXPECT_EQ(g1, g2);
  std::map<std::string, int> in_degree;
  for (const auto& e : g1) {
    EXPECT_LT(c.at(e.from_id).timestamp_days, c.at(e.to_id).timestamp_days);
    ++in_degree[e.to_id];
  }
  for (const auto& [id, n] : in_degree) EXPECT_LE(n, 8);
  EXPECT_EQ(in_degree["p20"], 8);
  EXPECT_EQ(in_degree.count("p0"), 0u);
}

TEST(EdgeJsonl, RoundTrip) {
  graph::EdgeSet edges{{"a", "b", 0.75}, {"a", "c", 0.6}};
  std::ostringstream out;
  graph::write_edges(out, edges);
  EXPECT_NE(out.str().find("\"from\":\"a\""), std::string::npos);
  std::istringstream in(out.str());
  EXPECT_EQ(graph::parse_edges(in), edges);
  std::istringstream bad("{\"from\":\"a\"}\n");
  EXPECT_THROW(graph::parse_edges(bad), DataError);
}
