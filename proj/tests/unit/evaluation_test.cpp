#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fame/errors.hpp"
#include "fame/evaluation.hpp"
#include "fame/random.hpp"
#include "fame/synthcorpus.hpp"
#include "test_support.hpp"

using namespace fame;
using namespace fame::eval;

namespace {

std::vector<std::string> make_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("id" + std::to_string(1000 + i));
  return ids;
}

// Brute-force top-k overlap: select greedily by (value desc, id asc).
double oracle_top_k(const std::vector<double>& p, const std::vector<double>& t, const std::vector<std::string>& ids,
                    std::size_t k) {
  auto pick = [&](const std::vector<double>& v) {
    std::set<std::size_t> chosen;
    k = std::min(k, v.size());
    while (chosen.size() < k) {
      std::size_t best = v.size();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (chosen.count(i)) continue;
        if (best == v.size() || v[i] > v[best] || (v[i] == v[best] && ids[i] < ids[best])) best = i;
      }
      chosen.insert(best);
    }
    return chosen;
  };
  const auto a = pick(p), b = pick(t);
  std::size_t both = 0;
  for (auto i : a) both += b.count(i);
  return static_cast<double>(both) / static_cast<double>(k);
}

PipelineConfig tiny_pipeline() {
  PipelineConfig pc;
  pc.num_topics = 3;
  pc.model.latent_dim = 8;
  pc.model.topic_dim = 8;
  pc.model.hidden_width = 16;
  pc.model.hidden_layers = 1;
  pc.model.time.d_time = 8;
  pc.train.epochs = 3;
  pc.naive.epochs = 3;
  pc.naive.hidden_width = 8;
  return pc;
}

}  // namespace

TEST(Ranks, AverageTies) {
  const std::vector<double> v{3, 1, 3, 2};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{3.5, 1, 3.5, 2}));
}

TEST(Spearman, Examples) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{10, 20, 30, 40, 50};
  const std::vector<double> c{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(*spearman(a, b), 1.0);
  EXPECT_DOUBLE_EQ(*spearman(a, c), -1.0);
  EXPECT_FALSE(spearman(a, std::vector<double>(5, 2.0)).has_value());
  EXPECT_FALSE(spearman(std::vector<double>{1}, std::vector<double>{1}).has_value());
  EXPECT_THROW(spearman(a, std::vector<double>{1, 2}), ArgumentError);
}

TEST(Spearman, MatchesOracleOnRandomCases) {
  Rng rng(77);
  for (int c = 0; c < 1000; ++c) {
    const std::size_t n = 2 + rng.index(40);
    std::vector<double> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse values force ties.
      p[i] = std::floor(rng.uniform(0, 6));
      t[i] = rng.uniform() < 0.5 ? std::floor(rng.uniform(0, 6)) : rng.normal();
    }
    const auto got = spearman(p, t);
    const auto rp = fame::testing::oracle_ranks(p), rt = fame::testing::oracle_ranks(t);
    const double expected = fame::testing::oracle_pearson(rp, rt);
    if (std::isnan(expected)) {
      EXPECT_FALSE(got.has_value());
    } else {
      ASSERT_TRUE(got.has_value());
      EXPECT_NEAR(*got, expected, 1e-12);
    }
  }
}

TEST(TopK, Examples) {
  const auto ids = make_ids(6);
  const std::vector<double> t{6, 5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(top_k_accuracy(t, t, ids, 5), 1.0);
  const std::vector<double> rev{1, 2, 3, 4, 5, 6};
  EXPECT_DOUBLE_EQ(top_k_accuracy(rev, t, ids, 3), 0.0);
  EXPECT_DOUBLE_EQ(top_k_accuracy(rev, t, ids, 5), 4.0 / 5);
  // k larger than the list is clamped.
  EXPECT_DOUBLE_EQ(top_k_accuracy(rev, t, ids, 50), 1.0);
  // Ties at the cut fall to the smaller id.
  const std::vector<double> flat(6, 1.0);
  EXPECT_DOUBLE_EQ(top_k_accuracy(flat, t, ids, 2), 1.0);
  EXPECT_THROW(top_k_accuracy(t, t, ids, 0), ArgumentError);
}

TEST(TopK, MatchesOracle) {
  Rng rng(5);
  for (int c = 0; c < 500; ++c) {
    const std::size_t n = 1 + rng.index(25);
    std::vector<double> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = std::floor(rng.uniform(0, 4));
      t[i] = std::floor(rng.uniform(0, 4));
    }
    auto ids = make_ids(n);
    rng.shuffle(ids.begin(), ids.end());
    EXPECT_DOUBLE_EQ(top_k_accuracy(p, t, ids, 5), oracle_top_k(p, t, ids, 5));
  }
}

TEST(Score, CosineOfResidualAndMomentum) {
  manifold::ModelConfig mc;
  mc.input_dim = 2;
  mc.latent_dim = 2;
  mc.topic_dim = 2;
  mc.hidden_width = 4;
  mc.hidden_layers = 1;
  mc.time.d_time = 4;
  mc.time.t_min = 0;
  mc.time.t_max = 100;
  auto model = manifold::ManifoldModel::initialize(mc, 3);
  embedding::TopicModel topics;
  topics.k = 1;
  topics.centroids = Matrix::Zero(1, 2);
  const std::vector<double> x{0.4, -1.2};
  const double s = score_paper(x, 40, model, topics, 0.01);
  const Vector r = model.map_paper(x, 40) - model.spine_at(0, 40);
  const Vector m = model.spine_momentum(0, 40, 0.01);
  EXPECT_NEAR(s, r.dot(m) / (r.norm() * m.norm()), 1e-12);
  EXPECT_GE(s, -1.0);
  EXPECT_LE(s, 1.0);
}

TEST(Score, VanishingMomentumScoresZero) {
  manifold::ModelConfig mc;
  mc.input_dim = 2;
  mc.latent_dim = 2;
  mc.topic_dim = 2;
  mc.hidden_width = 4;
  mc.hidden_layers = 1;
  mc.time.d_time = 4;
  auto model = manifold::ManifoldModel::initialize(mc, 3);
  model.params().value("spine.w1").setZero();
  embedding::TopicModel topics;
  topics.k = 1;
  topics.centroids = Matrix::Zero(1, 2);
  EXPECT_EQ(score_paper(std::vector<double>{1, 2}, 0.5, model, topics, 0.01), 0.0);
  EXPECT_THROW(score_paper(std::vector<double>{1, 2, 3}, 0.5, model, topics, 0.01), ArgumentError);
}

TEST(Projection, MatchesEigenDecomposition) {
  Rng rng(8);
  Matrix x(60, 5);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = rng.normal() * (5.0 - static_cast<double>(j)) + 3.0;
  const auto p = project_2d(x, 1, 2000);
  Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  for (int c = 0; c < 2; ++c) {
    const Eigen::VectorXd v = es.eigenvectors().col(4 - c);
    EXPECT_NEAR(std::abs(p.components.row(c).dot(v.transpose())), 1.0, 1e-6);
    EXPECT_NEAR(p.variances(c), es.eigenvalues()(4 - c), 1e-6 * es.eigenvalues()(4));
    const Eigen::VectorXd proj = centered * p.components.row(c).transpose();
    EXPECT_TRUE(proj.isApprox(p.coords.col(c), 1e-12));
  }
  EXPECT_NEAR(p.components.row(0).dot(p.components.row(1)), 0.0, 1e-9);
}

TEST(Projection, ExportCsv) {
  fame::testing::TempDir dir("proj");
  Matrix x(3, 2);
  x << 0, 0, 1, 1, 2, 0;
  const auto p = project_2d(x, 0);
  const std::vector<std::string> ids{"a", "b", "c"};
  const std::vector<double> w{1, 2, 3};
  const std::vector<int> k{0, 1, 0};
  export_projection(dir / "p.csv", p, ids, w, k);
  std::ifstream in(dir / "p.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y,id,weight,topic");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(ScoreContext, Format) {
  const std::vector<double> s{0.5, -0.5};
  const auto text = format_score_context(s);
  std::istringstream in(text);
  std::string l1, l2, l3, a, b;
  std::getline(in, l1);
  std::getline(in, l2);
  std::getline(in, l3);
  std::getline(in, a);
  std::getline(in, b);
  EXPECT_EQ(l1, "manifold scores for this eval batch (same index order as the ideas list below): ");
  EXPECT_EQ(a, "- index 0: score=0.5000, z=+1.0000");
  EXPECT_EQ(b, "- index 1: score=-0.5000, z=-1.0000");
}

TEST(ScoreContext, DegenerateBatches) {
  EXPECT_NE(format_score_context(std::vector<double>{0.3}).find("- index 0: score=0.3000, z=undefined"),
            std::string::npos);
  EXPECT_NE(format_score_context(std::vector<double>{0.1, 0.1}).find("z=undefined (constant batch)"),
            std::string::npos);
}

TEST(SimplexGrid, QuarterStepHasFifteenPoints) {
  const auto g = simplex_grid(0.25);
  ASSERT_EQ(g.size(), 15u);
  for (const auto& w : g) {
    EXPECT_NEAR(w.alpha + w.beta + w.gamma, 1.0, 1e-12);
    EXPECT_GE(std::min({w.alpha, w.beta, w.gamma}), 0.0);
  }
  EXPECT_EQ(simplex_grid(0.5).size(), 6u);
  EXPECT_THROW(simplex_grid(0.3), ArgumentError);
}

TEST(Variants, NamesRoundTrip) {
  for (Variant v : kAllVariants) EXPECT_EQ(parse_variant(variant_name(v)), v);
  EXPECT_THROW(parse_variant("bogus"), ArgumentError);
}

TEST(Cutoffs, TrailingWindows) {
  corpus::Corpus c;
  c.add(fame::testing::paper("a", 0));
  c.add(fame::testing::paper("b", 500));
  const auto cut = trailing_cutoffs(c, 3, 61);
  EXPECT_EQ(cut, (std::vector<double>{500 - 183.0, 500 - 122.0, 500 - 61.0}));
}

TEST(Window, TrainsOnPastScoresFuture) {
  synth::SynthConfig sc;
  sc.n_papers = 240;
  sc.embed_dim = 8;
  auto data = synth::generate(sc);
  const auto cut = trailing_cutoffs(data.corpus, 1, 61)[0];
  WindowArtifacts art;
  const auto r = run_window(data.corpus, data.embeddings, cut, tiny_pipeline(), 0, Variant::kFull, &art);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(static_cast<std::size_t>(r->n_train), art.split.train_ids.size());
  const std::set<std::string> train(art.split.train_ids.begin(), art.split.train_ids.end());
  for (const auto& id : train) EXPECT_LE(data.corpus.at(id).timestamp_days, cut);
  for (const auto& id : r->ids) {
    EXPECT_GT(data.corpus.at(id).timestamp_days, cut);
    EXPECT_LE(data.corpus.at(id).timestamp_days, cut + 61);
  }
  EXPECT_EQ(r->ids.size(), r->predicted.size());
  for (const auto& e : art.edges) {
    EXPECT_TRUE(train.count(e.from_id));
    EXPECT_TRUE(train.count(e.to_id));
  }
}

TEST(Window, EmptySideIsSkipped) {
  synth::SynthConfig sc;
  sc.n_papers = 60;
  sc.embed_dim = 8;
  auto data = synth::generate(sc);
  EXPECT_FALSE(run_window(data.corpus, data.embeddings, 1e9, tiny_pipeline(), 0).has_value());
  EXPECT_FALSE(run_window(data.corpus, data.embeddings, -1e9, tiny_pipeline(), 0).has_value());
}

TEST(Report, CsvSchemaAndSummary) {
  EvalReport rep;
  rep.seeds = {0, 1};
  WindowResult a;
  a.cutoff = 100;
  a.n_test = 7;
  a.seed = 0;
  a.spearman = 0.5;
  a.top5 = 0.4;
  WindowResult b = a;
  b.seed = 1;
  b.spearman = 0.3;
  WindowResult c = a;
  c.seed = 2;
  c.spearman.reset();
  c.top5.reset();
  c.variant = Variant::kNaive;
  rep.rows = {a, b, c};
  std::ostringstream out;
  write_report_csv(out, rep);
  EXPECT_EQ(out.str(),
            "window_cutoff,n_test,seed,spearman,top5,variant\n"
            "100,7,0,0.5,0.40000000000000002,full\n"
            "100,7,1,0.29999999999999999,0.40000000000000002,full\n"
            "100,7,2,NA,NA,naive\n");
  const auto s = rep.summarize();
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s[0].mean_spearman, 0.4, 1e-12);
  EXPECT_NEAR(s[0].std_spearman, 0.1, 1e-12);
  EXPECT_EQ(s[1].missing, 1);
  EXPECT_NEAR(*rep.mean_spearman(Variant::kFull), 0.4, 1e-12);
  EXPECT_FALSE(rep.mean_spearman(Variant::kNaive).has_value());
}

TEST(Naive, FitsLinearTarget) {
  Rng rng(4);
  Matrix x(200, 3);
  std::vector<double> y;
  for (Eigen::Index i = 0; i < 200; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
    y.push_back(2.0 + x(i, 0) - 0.5 * x(i, 2));
  }
  NaiveConfig cfg;
  cfg.hidden_width = 16;
  cfg.hidden_layers = 1;
  cfg.learning_rate = 1e-2;
  cfg.epochs = 200;
  cfg.batch_size = 50;
  const auto scorer = naive_baseline(x, y, cfg, 1);
  EXPECT_GT(*spearman(scorer.predict(x), y), 0.95);
}
