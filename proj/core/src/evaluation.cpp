#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

#include "fame/errors.hpp"
#include "fame/evaluation.hpp"
#include "fame/log.hpp"

namespace fame::eval {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoInspire: return "no_inspire";
    case Variant::kNoVanguard: return "no_vanguard";
    case Variant::kNoSpine: return "no_spine";
    case Variant::kFullCitationGraph: return "full_citation_graph";
    case Variant::kRandomGraph: return "random_graph";
    case Variant::kNaive: return "naive";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants)
    if (variant_name(v) == name) return v;
  throw ArgumentError("unknown variant '" + std::string(name) + "'");
}

manifold::ModelCheckpoint train_checkpoint(const corpus::Corpus& train, const embedding::EmbeddingMatrix& embeddings,
                                           const embedding::TopicModel& topics, const graph::EdgeSet& edges,
                                           const PipelineConfig& config, std::uint64_t seed,
                                           manifold::TrainingData* data_out) {
  auto data = manifold::prepare_training_data(train, embeddings, topics, edges, config.metrics, config.train.vanguard,
                                              config.model.time.d_time, config.model.time.frequency_base);
  manifold::TrainConfig tc = config.train;
  tc.seed = seed;
  manifold::ModelConfig mc = config.model;
  mc.input_dim = static_cast<int>(embeddings.dim());
  mc.num_topics = topics.k;
  auto trained = manifold::train(data, mc, tc);

  manifold::ModelCheckpoint ckpt;
  ckpt.model = std::move(trained.model);
  ckpt.train_config = tc;
  ckpt.topics = topics;
  ckpt.trace = std::move(trained.trace);
  ckpt.rng_state = std::move(trained.rng_state);
  ckpt.weight_min = data.weight_min;
  ckpt.weight_max = data.weight_max;
  if (data_out) *data_out = std::move(data);
  return ckpt;
}

std::optional<WindowResult> run_window(const corpus::Corpus& corpus, const embedding::EmbeddingMatrix& embeddings,
                                       double cutoff, const PipelineConfig& config, std::uint64_t seed,
                                       Variant variant, WindowArtifacts* artifacts) {
  auto split = corpus::temporal_split(corpus, cutoff);
  std::vector<std::string> test_ids;
  for (const auto& id : split.test_ids)
    if (corpus.at(id).timestamp_days <= cutoff + config.horizon_days) test_ids.push_back(id);
  split.test_ids = test_ids;

  if (split.train_ids.empty() || test_ids.empty() ||
      split.train_ids.size() < static_cast<std::size_t>(config.num_topics)) {
    log::warning("skipping window at cutoff " + std::to_string(cutoff) + ": " +
                 std::to_string(split.train_ids.size()) + " train / " + std::to_string(test_ids.size()) +
                 " test papers");
    return std::nullopt;
  }

  const corpus::Corpus train_corpus = corpus.subset(split.train_ids);
  const corpus::Corpus test_corpus = corpus.subset(test_ids);
  const Matrix x_train = embeddings.gather(split.train_ids);
  const Matrix x_test = embeddings.gather(test_ids);

  WindowResult result;
  result.cutoff = cutoff;
  result.seed = seed;
  result.variant = variant;
  result.n_train = static_cast<int>(split.train_ids.size());
  result.n_test = static_cast<int>(test_ids.size());
  result.ids = test_ids;
  result.truth = corpus::compute_weights(test_corpus, config.metrics);

  WindowArtifacts local;
  local.split = split;
  local.topics = embedding::fit_kmeans(x_train, config.num_topics, seed);

  if (variant == Variant::kNaive) {
    const auto w_train = corpus::compute_weights(train_corpus, config.metrics);
    result.predicted = naive_baseline(x_train, w_train, config.naive, seed).predict(x_test);
  } else {
    switch (variant) {
      case Variant::kFullCitationGraph:
        local.edges = graph::full_citation_graph(train_corpus);
        break;
      case Variant::kRandomGraph:
        local.edges = graph::random_inspiration_graph(train_corpus, seed);
        break;
      default: {
        std::shared_ptr<graph::Verifier> verifier = config.verifier;
        if (!verifier) verifier = std::make_shared<graph::MockVerifier>(config.mock_threshold);
        local.edges = graph::build_graph(train_corpus, embeddings, config.graph, *verifier);
      }
    }
    PipelineConfig cfg = config;
    if (variant == Variant::kNoInspire) cfg.train.weights.beta = 0.0;
    if (variant == Variant::kNoVanguard) cfg.train.weights.gamma = 0.0;
    if (variant == Variant::kNoSpine) cfg.train.weights.alpha = 0.0;
    local.checkpoint = train_checkpoint(train_corpus, embeddings, local.topics, local.edges, cfg, seed, &local.data);
    const auto& tc = local.checkpoint.train_config;

    std::vector<double> t_test;
    for (const auto& p : test_corpus) t_test.push_back(p.timestamp_days);
    result.predicted = score_papers(x_test, t_test, local.checkpoint.model, local.topics, tc.finite_diff_step);
  }

  result.spearman = spearman(result.predicted, result.truth);
  result.top5 = top_k_accuracy(result.predicted, result.truth, result.ids, 5);
  if (artifacts) *artifacts = std::move(local);
  return result;
}

std::vector<double> trailing_cutoffs(const corpus::Corpus& corpus, int n_windows, double horizon_days) {
  if (corpus.empty() || n_windows < 1) return {};
  double last = corpus[0].timestamp_days;
  for (const auto& p : corpus) last = std::max(last, p.timestamp_days);
  std::vector<double> cutoffs;
  for (int w = n_windows; w >= 1; --w) cutoffs.push_back(last - w * horizon_days);
  return cutoffs;
}

std::vector<SummaryRow> EvalReport::summarize() const {
  std::vector<SummaryRow> out;
  std::map<std::pair<int, double>, std::size_t> slot;
  std::vector<std::vector<double>> rho;
  std::vector<std::vector<double>> top;
  for (const auto& r : rows) {
    const auto key = std::make_pair(static_cast<int>(r.variant), r.cutoff);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.size()).first;
      out.push_back({r.variant, r.cutoff});
      rho.emplace_back();
      top.emplace_back();
    }
    auto& s = out[it->second];
    ++s.runs;
    if (r.spearman) {
      rho[it->second].push_back(*r.spearman);
    } else {
      ++s.missing;
    }
    if (r.top5) top[it->second].push_back(*r.top5);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = rho[i];
    if (!v.empty()) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - m) * (x - m);
      out[i].mean_spearman = m;
      out[i].std_spearman = std::sqrt(var / static_cast<double>(v.size()));
    } else {
      out[i].mean_spearman = std::nan("");
    }
    double tm = 0.0;
    for (double x : top[i]) tm += x;
    out[i].mean_top5 = top[i].empty() ? std::nan("") : tm / static_cast<double>(top[i].size());
  }
  return out;
}

std::optional<double> EvalReport::mean_spearman(Variant variant) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : rows) {
    if (r.variant != variant || !r.spearman) continue;
    sum += *r.spearman;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

EvalReport sliding_window_eval(const corpus::Corpus& corpus, const embedding::EmbeddingMatrix& embeddings,
                               std::span<const double> cutoffs, const PipelineConfig& config,
                               std::span<const std::uint64_t> seeds, std::span<const Variant> variants) {
  EvalReport report;
  report.seeds.assign(seeds.begin(), seeds.end());
  for (double cutoff : cutoffs) {
    for (std::uint64_t seed : seeds) {
      for (Variant v : variants) {
        if (auto row = run_window(corpus, embeddings, cutoff, config, seed, v)) report.rows.push_back(std::move(*row));
      }
    }
  }
  return report;
}

namespace {

void put_optional(std::ostream& out, const std::optional<double>& v) {
  if (v) {
    out << *v;
  } else {
    out << "NA";
  }
}

}  // namespace

void write_report_csv(std::ostream& out, const EvalReport& report) {
  out << "window_cutoff,n_test,seed,spearman,top5,variant\n" << std::setprecision(17);
  for (const auto& r : report.rows) {
    out << r.cutoff << ',' << r.n_test << ',' << r.seed << ',';
    put_optional(out, r.spearman);
    out << ',';
    put_optional(out, r.top5);
    out << ',' << variant_name(r.variant) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const EvalReport& report) {
  out << "variant,window_cutoff,mean_spearman,std_spearman,mean_top5,runs,missing\n" << std::setprecision(6);
  for (const auto& s : report.summarize()) {
    out << variant_name(s.variant) << ',' << std::setprecision(17) << s.cutoff << std::setprecision(6) << ','
        << s.mean_spearman << ',' << s.std_spearman << ',' << s.mean_top5 << ',' << s.runs << ',' << s.missing
        << '\n';
  }
}

EvalReport ablation_suite(const corpus::Corpus& corpus, const embedding::EmbeddingMatrix& embeddings,
                          std::span<const double> cutoffs, const PipelineConfig& config,
                          std::span<const std::uint64_t> seeds) {
  return sliding_window_eval(corpus, embeddings, cutoffs, config, seeds, kAllVariants);
}

void write_ablation_table(std::ostream& out, const EvalReport& report) {
  const auto summary = report.summarize();
  std::vector<double> cutoffs;
  for (const auto& s : summary)
    if (std::find(cutoffs.begin(), cutoffs.end(), s.cutoff) == cutoffs.end()) cutoffs.push_back(s.cutoff);
  std::sort(cutoffs.begin(), cutoffs.end());

  out << "variant";
  for (double c : cutoffs) out << ",T" << std::fixed << std::setprecision(1) << c << "_mean,T" << c << "_std";
  out << ",average,missing\n" << std::defaultfloat << std::setprecision(6);

  std::vector<Variant> order;
  for (Variant v : kAllVariants) {
    bool present = false;
    for (const auto& s : summary) present |= s.variant == v;
    if (present) order.push_back(v);
  }
  for (Variant v : order) {
    out << variant_name(v);
    int missing = 0;
    for (double c : cutoffs) {
      auto it = std::find_if(summary.begin(), summary.end(),
                             [&](const SummaryRow& s) { return s.variant == v && s.cutoff == c; });
      if (it == summary.end()) {
        out << ",NA,NA";
        continue;
      }
      missing += it->missing;
      out << ',' << it->mean_spearman << ',' << it->std_spearman;
    }
    out << ',';
    put_optional(out, report.mean_spearman(v));
    out << ',' << missing << '\n';
  }
}

std::vector<manifold::LossWeights> simplex_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw ArgumentError("simplex step must lie in (0, 1]");
  const int n = static_cast<int>(std::lround(1.0 / step));
  if (std::abs(n * step - 1.0) > 1e-9) throw ArgumentError("simplex step must divide 1");
  std::vector<manifold::LossWeights> grid;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; a + b <= n; ++b)
      grid.push_back({a * step, b * step, (n - a - b) * step});
  return grid;
}

std::vector<SweepRow> loss_weight_sweep(std::span<const manifold::LossWeights> grid, const corpus::Corpus& corpus,
                                        const embedding::EmbeddingMatrix& embeddings, std::span<const double> cutoffs,
                                        const PipelineConfig& config, std::span<const std::uint64_t> seeds) {
  std::vector<SweepRow> rows;
  for (const auto& w : grid) {
    PipelineConfig cfg = config;
    cfg.train.weights = w;
    const auto report = sliding_window_eval(corpus, embeddings, cutoffs, cfg, seeds);
    rows.push_back({w, report.mean_spearman(Variant::kFull)});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "alpha,beta,gamma,mean_spearman\n" << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.weights.alpha << ',' << r.weights.beta << ',' << r.weights.gamma << ',';
    put_optional(out, r.mean_spearman);
    out << '\n';
  }
}

}  // namespace fame::eval
