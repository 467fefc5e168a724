#include "commands.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fame/checkpoint.hpp"
#include "fame/errors.hpp"
#include "fame/evaluation.hpp"
#include "fame/log.hpp"
#include "fame/synthcorpus.hpp"
#include "workspace.hpp"

namespace fame::cli {

namespace {

constexpr std::size_t kEmbeddingBatch = 64;

std::string env_or(const std::string& value, const char* name) {
  if (!value.empty()) return value;
  const char* v = std::getenv(name);
  return v ? v : "";
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double parse_number(const std::string& what, const std::string& text) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || *end != '\0') throw ArgumentError(what + ": expected a number, got '" + text + "'");
  return v;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& s : split_list(text)) {
    if (s.find_first_not_of("0123456789") != std::string::npos)
      throw ArgumentError("seeds: expected non-negative integers, got '" + s + "'");
    out.push_back(std::stoull(s));
  }
  if (out.empty()) throw ArgumentError("seeds: at least one seed is required");
  return out;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

// topics.json carries the training ids alongside the cluster model so later
// steps agree on which papers form the training set.
struct TopicArtifact {
  double cutoff = 0.0;
  std::vector<std::string> ids;
  embedding::TopicModel model;
};

void save_topics(const std::filesystem::path& p, const TopicArtifact& t) {
  nlohmann::json j;
  j["cutoff"] = t.cutoff;
  j["k"] = t.model.k;
  j["seed"] = t.model.seed;
  j["iterations"] = t.model.iterations;
  j["ids"] = t.ids;
  j["assignments"] = t.model.assignments;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < t.model.centroids.rows(); ++r) {
    const auto row = t.model.centroids.row(r);
    rows.push_back(std::vector<double>(row.data(), row.data() + row.size()));
  }
  j["centroids"] = rows;
  open_out(p) << j.dump() << '\n';
}

TopicArtifact load_topics(const std::filesystem::path& p) {
  std::ifstream in(p);
  TopicArtifact t;
  try {
    const auto j = nlohmann::json::parse(in);
    t.cutoff = j.at("cutoff").get<double>();
    t.ids = j.at("ids").get<std::vector<std::string>>();
    t.model.k = j.at("k").get<int>();
    t.model.seed = j.at("seed").get<std::uint64_t>();
    t.model.iterations = j.at("iterations").get<int>();
    t.model.assignments = j.at("assignments").get<std::vector<int>>();
    const auto rows = j.at("centroids").get<std::vector<std::vector<double>>>();
    if (rows.size() != static_cast<std::size_t>(t.model.k)) throw DataError("centroid count does not match k");
    const auto d = rows.empty() ? 0 : rows[0].size();
    t.model.centroids.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != d) throw DataError("ragged centroid rows");
      for (std::size_t c = 0; c < d; ++c)
        t.model.centroids(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
  if (t.ids.size() != t.model.assignments.size()) throw DataError(p.string() + ": ids and assignments differ in length");
  return t;
}

double resolve_cutoff(const std::string& text, const corpus::Corpus& corpus) {
  if (text == "latest" || text.empty()) {
    if (corpus.empty()) throw DataError("corpus is empty");
    double last = corpus[0].timestamp_days;
    for (const auto& p : corpus) last = std::max(last, p.timestamp_days);
    return last;
  }
  return parse_number("cutoff", text);
}

std::shared_ptr<graph::Verifier> make_verifier(const Settings& s, const Workspace& ws) {
  if (s.verifier == "mock") return std::make_shared<graph::MockVerifier>(s.mock_threshold);
  if (s.verifier != "remote") throw ArgumentError("--verifier must be 'remote' or 'mock', got '" + s.verifier + "'");
  graph::RemoteVerifierOptions opts;
  opts.endpoint = env_or(s.verifier_url, "FAME_VERIFIER_URL");
  opts.bearer_token = env_or("", "FAME_VERIFIER_TOKEN");
  if (opts.endpoint.empty())
    throw ArgumentError("remote verifier needs --verifier-url or FAME_VERIFIER_URL");
  std::filesystem::create_directories(ws.root());
  return std::make_shared<graph::CachingVerifier>(std::make_shared<graph::RemoteVerifier>(opts),
                                                  ws.root() / "verifier_cache.jsonl");
}

eval::PipelineConfig pipeline_config(const Settings& s) {
  eval::PipelineConfig pc;
  pc.num_topics = s.num_topics;
  pc.graph = s.graph;
  pc.mock_threshold = s.mock_threshold;
  pc.metrics = s.metrics;
  pc.model = s.model;
  pc.train = s.train;
  pc.naive = s.naive;
  pc.horizon_days = s.horizon_days;
  pc.graph.validate();
  pc.metrics.validate();
  pc.train.validate();
  return pc;
}

struct Inputs {
  corpus::Corpus corpus;
  embedding::EmbeddingMatrix embeddings;
};

Inputs load_inputs(Workspace& ws) {
  Inputs in;
  in.corpus = corpus::load_corpus(ws.require(kCorpus));
  in.embeddings = embedding::load_embeddings(ws.require(kEmbeddings));
  return in;
}

std::vector<double> window_cutoffs(const Settings& s, const corpus::Corpus& corpus) {
  std::vector<double> cutoffs;
  if (!s.cutoffs.empty()) {
    for (const auto& c : split_list(s.cutoffs)) cutoffs.push_back(parse_number("cutoffs", c));
  } else {
    if (s.windows < 1) throw ArgumentError("--windows must be >= 1");
    cutoffs = eval::trailing_cutoffs(corpus, s.windows, s.horizon_days);
  }
  return cutoffs;
}

void print_summary(const eval::EvalReport& report) {
  for (const auto& row : report.summarize()) {
    std::printf("%-20s cutoff=%.1f spearman=%.4f±%.4f top5=%.4f runs=%d missing=%d\n",
                std::string(eval::variant_name(row.variant)).c_str(), row.cutoff, row.mean_spearman,
                row.std_spearman, row.mean_top5, row.runs, row.missing);
  }
}

// ---------------------------------------------------------------------------

std::uint64_t cmd_ingest(Settings& s, Workspace& ws) {
  if (s.corpus_path.empty()) throw ArgumentError("ingest needs --corpus");
  ws.input(s.corpus_path);
  auto corpus = corpus::load_corpus(s.corpus_path);

  embedding::EmbeddingMatrix emb;
  if (!s.embeddings_path.empty()) {
    ws.input(s.embeddings_path);
    emb = embedding::load_embeddings(s.embeddings_path);
  } else {
    const std::string url = env_or(s.embedding_url, "FAME_EMBEDDING_URL");
    if (url.empty())
      throw ArgumentError("ingest needs --embeddings or an embedding endpoint (--embedding-url / FAME_EMBEDDING_URL)");
    const std::string token = env_or("", "FAME_EMBEDDING_TOKEN");
    std::vector<std::string> ids, texts;
    for (const auto& p : corpus) {
      ids.push_back(p.id);
      texts.push_back(p.title + "\n" + p.abstract_text);
    }
    Matrix rows;
    for (std::size_t b = 0; b < texts.size(); b += kEmbeddingBatch) {
      const auto n = std::min(kEmbeddingBatch, texts.size() - b);
      Matrix part = embedding::fetch_embeddings(url, std::span(texts).subspan(b, n), token);
      if (rows.size() == 0) rows.resize(static_cast<Eigen::Index>(texts.size()), part.cols());
      rows.middleRows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(n)) = part;
    }
    emb = embedding::EmbeddingMatrix(ids, std::move(rows));
  }

  std::vector<std::string> ids;
  for (const auto& p : corpus) {
    if (!emb.index_of(p.id)) throw DataError("no embedding for paper '" + p.id + "'");
    ids.push_back(p.id);
  }
  corpus::save_corpus(ws.output(kCorpus), corpus);
  embedding::save_embeddings(ws.output(kEmbeddings), embedding::EmbeddingMatrix(ids, emb.gather(ids)));
  std::printf("ingested %zu papers, embedding dim %ld\n", corpus.size(), static_cast<long>(emb.dim()));
  return s.seed;
}

std::uint64_t cmd_weights(Settings& s, Workspace& ws) {
  s.metrics.validate();
  const auto corpus = corpus::load_corpus(ws.require(kCorpus));
  auto out = open_out(ws.output(kWeights));
  corpus::write_weights_csv(out, corpus, corpus::compute_weights(corpus, s.metrics));
  return s.seed;
}

std::uint64_t cmd_cluster(Settings& s, Workspace& ws) {
  const auto in = load_inputs(ws);
  TopicArtifact t;
  t.cutoff = resolve_cutoff(s.cutoff, in.corpus);
  t.ids = corpus::temporal_split(in.corpus, t.cutoff).train_ids;
  t.model = embedding::fit_kmeans(in.embeddings.gather(t.ids), s.num_topics, s.seed);
  save_topics(ws.output(kTopics), t);
  std::printf("clustered %zu training papers (t <= %.2f) into %d topics in %d iterations\n", t.ids.size(), t.cutoff,
              t.model.k, t.model.iterations);
  return s.seed;
}

std::uint64_t cmd_graph(Settings& s, Workspace& ws) {
  s.graph.validate();
  const auto in = load_inputs(ws);
  const auto topics = load_topics(ws.require(kTopics));
  const auto train = in.corpus.subset(topics.ids);
  auto verifier = make_verifier(s, ws);
  graph::GraphStats stats;
  const auto edges = graph::build_graph(train, in.embeddings, s.graph, *verifier, &stats);
  if (stats.failed > 0 && stats.accepted + stats.rejected == 0)
    throw ServiceError("verifier failed on all " + std::to_string(stats.failed) + " candidate pairs");
  graph::save_edges(ws.output(kEdges), edges);
  std::printf("graph: %zu candidates, %zu accepted, %zu rejected, %zu failed\n", stats.candidates, stats.accepted,
              stats.rejected, stats.failed);
  return s.seed;
}

std::uint64_t cmd_train(Settings& s, Workspace& ws) {
  const auto cfg = pipeline_config(s);
  const auto in = load_inputs(ws);
  const auto topics = load_topics(ws.require(kTopics));
  const auto edges = graph::load_edges(ws.require(kEdges));
  const auto train = in.corpus.subset(topics.ids);
  const auto ckpt = eval::train_checkpoint(train, in.embeddings, topics.model, edges, cfg, s.seed);
  manifold::save_checkpoint(ws.output(kCheckpoint), ckpt);
  auto trace = open_out(ws.output(kLossTrace));
  manifold::write_loss_trace(trace, ckpt.trace);
  if (!ckpt.trace.empty())
    std::printf("trained %zu papers, %zu edges; final loss %.6g\n", train.size(), edges.size(),
                ckpt.trace.back().total);
  return s.seed;
}

std::uint64_t cmd_score(Settings& s, Workspace& ws) {
  const auto in = load_inputs(ws);
  const auto topics = load_topics(ws.require(kTopics));
  const auto ckpt = manifold::load_checkpoint(ws.require(kCheckpoint));
  std::unordered_set<std::string> seen(topics.ids.begin(), topics.ids.end());
  std::vector<std::string> ids;
  for (const auto& p : in.corpus)
    if (s.score_all || !seen.count(p.id)) ids.push_back(p.id);
  if (ids.empty()) {
    log::warning("every paper is in the training set; scoring all of them");
    for (const auto& p : in.corpus) ids.push_back(p.id);
  }
  std::vector<double> t;
  for (const auto& id : ids) t.push_back(in.corpus.at(id).timestamp_days);
  const auto scores = eval::score_papers(in.embeddings.gather(ids), t, ckpt.model, ckpt.topics,
                                         ckpt.train_config.finite_diff_step);
  auto out = open_out(ws.output(kScores));
  out << "id,score\n";
  char buf[64];
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", scores[i]);
    out << ids[i] << ',' << buf << '\n';
  }
  std::printf("scored %zu papers\n", ids.size());
  return s.seed;
}

std::uint64_t cmd_context(Settings& s, Workspace& ws) {
  std::ifstream in(ws.require(kScores));
  std::string line;
  std::getline(in, line);
  if (line != "id,score") throw DataError("scores.csv: unexpected header '" + line + "'");
  std::vector<double> scores;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw ParseError("expected id,score", lineno);
    try {
      scores.push_back(parse_number("score", line.substr(comma + 1)));
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  const std::string block = eval::format_score_context(scores);
  open_out(ws.output(kContext)) << block;
  std::cout << block;
  return s.seed;
}

std::uint64_t cmd_eval(Settings& s, Workspace& ws) {
  auto cfg = pipeline_config(s);
  const auto in = load_inputs(ws);
  if (s.verifier != "mock") cfg.verifier = make_verifier(s, ws);
  const auto cutoffs = window_cutoffs(s, in.corpus);
  const auto seeds = parse_seeds(s.seeds);
  std::vector<eval::Variant> variants;
  for (const auto& v : split_list(s.variants)) variants.push_back(eval::parse_variant(v));
  if (variants.empty()) throw ArgumentError("--variants must name at least one variant");
  const auto report = eval::sliding_window_eval(in.corpus, in.embeddings, cutoffs, cfg, seeds, variants);
  auto out = open_out(ws.output(kReport));
  eval::write_report_csv(out, report);
  auto sum = open_out(ws.output(kSummary));
  eval::write_summary_csv(sum, report);
  print_summary(report);
  return seeds.front();
}

std::uint64_t cmd_ablate(Settings& s, Workspace& ws) {
  auto cfg = pipeline_config(s);
  const auto in = load_inputs(ws);
  if (s.verifier != "mock") cfg.verifier = make_verifier(s, ws);
  const auto cutoffs = window_cutoffs(s, in.corpus);
  const auto seeds = parse_seeds(s.seeds);
  const auto report = eval::ablation_suite(in.corpus, in.embeddings, cutoffs, cfg, seeds);
  auto out = open_out(ws.output(kAblation));
  eval::write_report_csv(out, report);
  auto table = open_out(ws.output(kAblationTable));
  eval::write_ablation_table(table, report);
  eval::write_ablation_table(std::cout, report);
  return seeds.front();
}

std::uint64_t cmd_sweep(Settings& s, Workspace& ws) {
  auto cfg = pipeline_config(s);
  const auto in = load_inputs(ws);
  if (s.verifier != "mock") cfg.verifier = make_verifier(s, ws);
  const auto cutoffs = window_cutoffs(s, in.corpus);
  const auto seeds = parse_seeds(s.seeds);
  const auto grid = eval::simplex_grid(s.sweep_step);
  const auto rows = eval::loss_weight_sweep(grid, in.corpus, in.embeddings, cutoffs, cfg, seeds);
  auto out = open_out(ws.output(kSweep));
  eval::write_sweep_csv(out, rows);
  eval::write_sweep_csv(std::cout, rows);
  return seeds.front();
}

std::uint64_t cmd_simulate(Settings& s, Workspace& ws) {
  const auto data = synth::generate(s.synth);
  corpus::save_corpus(ws.output(kCorpus), data.corpus);
  embedding::save_embeddings(ws.output(kEmbeddings), data.embeddings);
  synth::save_truth(ws.output(kTruth), s.synth, data);
  std::printf("simulated %zu papers in %d topics, %zu planted inspirations\n", data.corpus.size(), s.synth.n_topics,
              data.truth.inspirations.size());
  return s.synth.seed;
}

std::uint64_t cmd_project(Settings& s, Workspace& ws) {
  const auto in = load_inputs(ws);
  const auto ckpt = manifold::load_checkpoint(ws.require(kCheckpoint));
  std::vector<std::string> ids;
  Matrix latents(static_cast<Eigen::Index>(in.corpus.size()), ckpt.model.config().latent_dim);
  std::vector<int> topics;
  for (const auto& p : in.corpus) {
    const auto x = in.embeddings.row(*in.embeddings.index_of(p.id));
    latents.row(static_cast<Eigen::Index>(ids.size())) = ckpt.model.map_paper(x, p.timestamp_days).transpose();
    topics.push_back(embedding::assign_topic(x, ckpt.topics));
    ids.push_back(p.id);
  }
  const auto weights = corpus::compute_weights(in.corpus, s.metrics);
  const auto proj = eval::project_2d(latents, s.seed, s.projection_iterations);
  eval::export_projection(ws.output(kProjection), proj, ids, weights, topics);
  return s.seed;
}

using Handler = std::uint64_t (*)(Settings&, Workspace&);

struct CommandSpec {
  const char* name;
  const char* help;
  Handler run;
};

constexpr CommandSpec kCommands[] = {
    {"ingest", "Validate a corpus JSONL and attach embeddings (file or HTTP endpoint)", cmd_ingest},
    {"weights", "Compute composite impact weights to weights.csv", cmd_weights},
    {"cluster", "Fit k-means topics on papers up to the cutoff", cmd_cluster},
    {"graph", "Retrieve and verify inspiration edges among training papers", cmd_graph},
    {"train", "Train the manifold on the clustered papers and graph", cmd_train},
    {"score", "Score papers outside the training set with a trained checkpoint", cmd_score},
    {"eval", "Sliding-window temporal evaluation", cmd_eval},
    {"ablate", "Run all seven ablation variants", cmd_ablate},
    {"sweep", "Grid sweep of loss weights on the simplex", cmd_sweep},
    {"simulate", "Generate a synthetic corpus with planted structure", cmd_simulate},
    {"project", "Export a 2D linear projection of paper latents", cmd_project},
    {"context", "Format scores as a text block for downstream prompts", cmd_context},
};

// Flag groups -------------------------------------------------------------

void common_flags(CLI::App& sub, Settings& s, KeyRegistry& keys) {
  keys.add(sub, "-w,--workdir", "workdir", "Artifact directory");
  sub.add_option("-c,--config", s.config_file, "Flat dotted-key config file; flags win");
}

void metric_flags(CLI::App& sub, KeyRegistry& keys) {
  static const char* names[] = {"stars", "citations", "influential", "altmetric"};
  for (const char* n : names) {
    keys.add(sub, std::string("--") + n + "-scale", std::string("metrics.") + n + ".scale",
             std::string("Scale factor for ") + n);
    keys.add(sub, std::string("--") + n + "-base", std::string("metrics.") + n + ".base",
             std::string("Log base for ") + n);
  }
}

void graph_flags(CLI::App& sub, KeyRegistry& keys) {
  keys.add(sub, "--tau-sim", "graph.tau_sim", "Candidate cosine threshold (exclusive)");
  keys.add(sub, "--delta-days", "graph.delta_days", "Minimum publication gap in days (exclusive)");
  keys.add(sub, "--top-k", "graph.top_k", "Candidates kept per paper");
  keys.add(sub, "--confidence-min", "graph.confidence_min", "Minimum verifier confidence (inclusive)");
  keys.add(sub, "--max-in-flight", "graph.max_in_flight", "Concurrent remote verifier requests");
  keys.add(sub, "--verifier", "verifier.kind", "remote or mock");
  keys.add(sub, "--mock-threshold", "verifier.mock_threshold", "Mock verifier acceptance threshold");
  keys.add(sub, "--verifier-url", "verifier.url", "Remote verifier endpoint (else FAME_VERIFIER_URL)");
}

void train_flags(CLI::App& sub, KeyRegistry& keys) {
  keys.add(sub, "--lr", "train.lr", "Learning rate");
  keys.add(sub, "--dt", "train.dt", "Finite-difference step in normalized time");
  keys.add(sub, "--delta-align", "train.delta_align", "Inspiration alignment margin");
  keys.add(sub, "--alpha", "train.alpha", "Spine loss weight");
  keys.add(sub, "--beta", "train.beta", "Inspiration loss weight");
  keys.add(sub, "--gamma", "train.gamma", "Vanguard loss weight");
  keys.add(sub, "--epochs", "train.epochs", "Training epochs");
  keys.add(sub, "--batch-size", "train.batch_size", "Mini-batch size (0 = full batch)");
  keys.add(sub, "--tau-time", "vanguard.tau_time", "Median neighborhood half-width in days");
  keys.add(sub, "--delta-base", "vanguard.delta_base", "Base vanguard margin");
  keys.add(sub, "--latent-dim", "model.latent_dim", "Latent dimension d_z");
  keys.add(sub, "--topic-dim", "model.topic_dim", "Topic base dimension d_topic");
  keys.add(sub, "--hidden-width", "model.hidden_width", "MLP hidden width");
  keys.add(sub, "--hidden-layers", "model.hidden_layers", "MLP hidden layers");
  keys.add(sub, "--d-time", "time.d_time", "Time encoding dimension");
  keys.add(sub, "--frequency-base", "time.frequency_base", "Geometric ratio between time frequencies");
}

void naive_flags(CLI::App& sub, KeyRegistry& keys) {
  keys.add(sub, "--naive-epochs", "naive.epochs", "Naive baseline epochs");
  keys.add(sub, "--naive-lr", "naive.lr", "Naive baseline learning rate");
  keys.add(sub, "--naive-batch-size", "naive.batch_size", "Naive baseline batch size");
  keys.add(sub, "--naive-hidden-width", "naive.hidden_width", "Naive baseline hidden width");
  keys.add(sub, "--naive-hidden-layers", "naive.hidden_layers", "Naive baseline hidden layers");
}

void window_flags(CLI::App& sub, KeyRegistry& keys) {
  keys.add(sub, "-k,--topics", "cluster.k", "Number of topics");
  keys.add(sub, "--windows", "eval.windows", "Trailing test windows (ignored with --cutoffs)");
  keys.add(sub, "--horizon-days", "eval.horizon_days", "Test window length in days");
  keys.add(sub, "--cutoffs", "eval.cutoffs", "Comma-separated cutoffs in days");
  keys.add(sub, "--seeds", "eval.seeds", "Comma-separated seeds");
}

void pipeline_flags(CLI::App& sub, KeyRegistry& keys) {
  window_flags(sub, keys);
  graph_flags(sub, keys);
  train_flags(sub, keys);
  naive_flags(sub, keys);
  metric_flags(sub, keys);
}

void synth_flags(CLI::App& sub, KeyRegistry& keys) {
  keys.add(sub, "--n-papers", "synth.n_papers", "Papers to generate");
  keys.add(sub, "--n-topics", "synth.n_topics", "Topics");
  keys.add(sub, "--embed-dim", "synth.embed_dim", "Embedding dimension");
  keys.add(sub, "--start-day", "synth.start_day", "First timestamp (days since epoch)");
  keys.add(sub, "--span-days", "synth.span_days", "Time span in days");
  keys.add(sub, "--topic-spread", "synth.topic_spread", "Std of topic base vectors");
  keys.add(sub, "--drift-rate", "synth.drift_rate", "Centroid displacement over the span");
  keys.add(sub, "--noise-sigma", "synth.noise_sigma", "Std of paper offsets");
  keys.add(sub, "--impact-gain", "synth.impact_gain", "Impact per unit of drift alignment");
  keys.add(sub, "--impact-noise", "synth.impact_noise", "Impact noise std");
  keys.add(sub, "--impact-base", "synth.impact_base", "Impact intercept");
  keys.add(sub, "--citations-per-paper", "synth.citations_per_paper", "Mean bibliography length");
  keys.add(sub, "--inspiration-rate", "synth.inspiration_rate", "Chance of a planted precursor");
  keys.add(sub, "--inspiration-gap-days", "synth.inspiration_gap_days", "Minimum precursor gap in days");
  keys.add(sub, "--p-true", "synth.p_true", "Chance a planted precursor is recoverable");
  keys.add(sub, "--coupling", "synth.coupling", "Offset correlation along recoverable edges");
  keys.add(sub, "--seed", "synth.seed", "Generator seed");
}

}  // namespace

void register_commands(CLI::App& app, Settings& s, KeyRegistry& keys) {
  for (const auto& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    common_flags(*sub, s, keys);
    const std::string name = cmd.name;
    if (name == "ingest") {
      keys.add(*sub, "--corpus", "ingest.corpus", "Corpus JSONL to ingest");
      keys.add(*sub, "--embeddings", "ingest.embeddings", "Embedding CSV ('N,d' header)");
      keys.add(*sub, "--embedding-url", "ingest.embedding_url", "Embedding endpoint (else FAME_EMBEDDING_URL)");
    } else if (name == "weights") {
      metric_flags(*sub, keys);
    } else if (name == "cluster") {
      keys.add(*sub, "-k,--topics", "cluster.k", "Number of topics");
      keys.add(*sub, "--cutoff", "cluster.cutoff", "Training cutoff in days, or 'latest'");
      keys.add(*sub, "--seed", "seed", "Random seed");
    } else if (name == "graph") {
      graph_flags(*sub, keys);
    } else if (name == "train") {
      train_flags(*sub, keys);
      metric_flags(*sub, keys);
      keys.add(*sub, "--seed", "seed", "Random seed");
    } else if (name == "score") {
      keys.add(*sub, "--all", "score.all", "Also score training papers");
    } else if (name == "eval") {
      pipeline_flags(*sub, keys);
      keys.add(*sub, "--variants", "eval.variants", "Comma-separated variants");
    } else if (name == "ablate") {
      pipeline_flags(*sub, keys);
    } else if (name == "sweep") {
      pipeline_flags(*sub, keys);
      keys.add(*sub, "--step", "sweep.step", "Simplex grid step");
    } else if (name == "simulate") {
      synth_flags(*sub, keys);
    } else if (name == "project") {
      keys.add(*sub, "--iterations", "project.iterations", "Power-iteration steps");
      keys.add(*sub, "--seed", "seed", "Random seed");
      metric_flags(*sub, keys);
    }
  }
}

int run_command(const std::string& name, Settings& s, const KeyRegistry& keys) {
  for (const auto& cmd : kCommands) {
    if (name != cmd.name) continue;
    Workspace ws(s.workdir);
    const std::uint64_t seed = cmd.run(s, ws);
    ws.write_manifest(name, seed, keys.snapshot());
    return 0;
  }
  throw ArgumentError("unknown subcommand '" + name + "'");
}

}  // namespace fame::cli
