#include <benchmark/benchmark.h>

#include "fame/corpus.hpp"
#include "fame/evaluation.hpp"
#include "fame/manifold.hpp"
#include "fame/random.hpp"
#include "fame/synthcorpus.hpp"

using namespace fame;

namespace {

Matrix random_matrix(std::uint64_t seed, Eigen::Index r, Eigen::Index c) {
  Rng rng(seed);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

const synth::SynthCorpus& corpus_fixture() {
  static const synth::SynthCorpus data = synth::generate(synth::SynthConfig{});
  return data;
}

}  // namespace

static void BM_TrainingStep(benchmark::State& state) {
  const auto& data = corpus_fixture();
  const auto topics = embedding::fit_kmeans(data.embeddings.rows(), 3, 0);
  graph::MockVerifier mock;
  const auto edges = graph::build_graph(data.corpus, data.embeddings, {}, mock);
  const auto td = manifold::prepare_training_data(data.corpus, data.embeddings, topics, edges, {}, {});
  manifold::ModelConfig mc;
  mc.input_dim = static_cast<int>(data.embeddings.dim());
  mc.num_topics = 3;
  mc.time = td.time;
  auto model = manifold::ManifoldModel::initialize(mc, 0);
  manifold::TrainConfig tc;
  const int batch = static_cast<int>(state.range(0));
  std::vector<int> rows(static_cast<std::size_t>(batch));
  for (int i = 0; i < batch; ++i) rows[static_cast<std::size_t>(i)] = i;
  std::vector<int> edge_rows;
  for (int e = 0; e < std::min<int>(batch / 4, static_cast<int>(td.edges.size())); ++e) edge_rows.push_back(e);
  for (auto _ : state) {
    ad::Tape tape;
    auto losses = manifold::build_losses(tape, model, td, rows, edge_rows, tc);
    tape.backward(losses.total);
    ad::adam_step(model.params(), tape.parameter_gradients(model.params()), tc.learning_rate);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_TrainingStep)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_KMeans(benchmark::State& state) {
  const Matrix x = random_matrix(1, state.range(0), 32);
  for (auto _ : state) benchmark::DoNotOptimize(embedding::fit_kmeans(x, 10, 0));
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

static void BM_BuildGraph(benchmark::State& state) {
  const auto& data = corpus_fixture();
  graph::MockVerifier mock;
  for (auto _ : state) benchmark::DoNotOptimize(graph::build_graph(data.corpus, data.embeddings, {}, mock));
}
BENCHMARK(BM_BuildGraph)->Unit(benchmark::kMillisecond);

static void BM_ImpactWeights(benchmark::State& state) {
  const auto& data = corpus_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(corpus::compute_weights(data.corpus));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(data.corpus.size()));
}
BENCHMARK(BM_ImpactWeights);

static void BM_Spearman(benchmark::State& state) {
  const Matrix a = random_matrix(2, state.range(0), 1), b = random_matrix(3, state.range(0), 1);
  const std::span<const double> sa(a.data(), static_cast<std::size_t>(a.size()));
  const std::span<const double> sb(b.data(), static_cast<std::size_t>(b.size()));
  for (auto _ : state) benchmark::DoNotOptimize(eval::spearman(sa, sb));
}
BENCHMARK(BM_Spearman)->Arg(1000)->Arg(100000);

static void BM_Project2d(benchmark::State& state) {
  const Matrix z = random_matrix(4, 2000, 128);
  for (auto _ : state) benchmark::DoNotOptimize(eval::project_2d(z, 0, 200));
}
BENCHMARK(BM_Project2d)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
