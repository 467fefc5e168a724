#include "fame/synthcorpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fame/errors.hpp"
#include "fame/random.hpp"

namespace fame::synth {

void SynthConfig::validate() const {
  if (n_topics < 1) throw ArgumentError("synth: n_topics must be >= 1");
  if (n_papers < n_topics) throw ArgumentError("synth: n_papers must be >= n_topics");
  if (embed_dim < 1) throw ArgumentError("synth: embed_dim must be >= 1");
  if (!(span_days > 0.0)) throw ArgumentError("synth: span_days must be positive");
  if (noise_sigma < 0.0 || topic_spread < 0.0 || impact_noise < 0.0)
    throw ArgumentError("synth: scales must be non-negative");
  if (!(p_true >= 0.0 && p_true <= 1.0)) throw ArgumentError("synth: p_true must lie in [0,1]");
  if (!(inspiration_rate >= 0.0 && inspiration_rate <= 1.0))
    throw ArgumentError("synth: inspiration_rate must lie in [0,1]");
  if (!(coupling >= 0.0 && coupling <= 1.0)) throw ArgumentError("synth: coupling must lie in [0,1]");
  if (citations_per_paper < 0.0) throw ArgumentError("synth: citations_per_paper must be >= 0");
}

namespace {

Vector gaussian(Rng& rng, int d, double sd) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = sd * rng.normal();
  return v;
}

}  // namespace

SynthCorpus generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const int d = cfg.embed_dim;
  const int k = cfg.n_topics;
  const int n = cfg.n_papers;

  PlantedTruth truth;
  truth.bases.resize(k, d);
  truth.drift.resize(k, d);
  for (int t = 0; t < k; ++t) {
    truth.bases.row(t) = gaussian(rng, d, cfg.topic_spread).transpose();
    Vector dir = gaussian(rng, d, 1.0);
    dir.normalize();
    truth.drift.row(t) = cfg.drift_rate * dir.transpose();
  }

  std::vector<double> times(static_cast<std::size_t>(n));
  for (double& t : times) t = cfg.start_day + rng.uniform() * cfg.span_days;
  std::sort(times.begin(), times.end());

  Matrix x(n, d);
  Matrix offsets(n, d);
  std::vector<std::vector<int>> by_topic(static_cast<std::size_t>(k));
  std::vector<corpus::PaperRecord> records;
  char idbuf[32];
  const double max_cites = 2.0 * cfg.citations_per_paper;

  for (int i = 0; i < n; ++i) {
    const int topic = static_cast<int>(rng.index(static_cast<std::size_t>(k)));
    const double t_days = times[static_cast<std::size_t>(i)];
    const double t_norm = (t_days - cfg.start_day) / cfg.span_days;
    std::snprintf(idbuf, sizeof idbuf, "syn-%05d", i);

    corpus::PaperRecord rec;
    rec.id = idbuf;
    rec.title = "Synthetic study " + std::to_string(i) + " in topic " + std::to_string(topic);
    rec.abstract_text = "Templated abstract for synthetic paper " + rec.id + ".";
    rec.timestamp_days = t_days;

    // Bibliography: distinct strictly-earlier papers from the same topic.
    std::vector<int> earlier;
    for (int j : by_topic[static_cast<std::size_t>(topic)])
      if (times[static_cast<std::size_t>(j)] < t_days) earlier.push_back(j);
    const auto want = static_cast<std::size_t>(std::floor(rng.uniform() * (max_cites + 1.0)));
    const std::size_t take = std::min(want, earlier.size());
    for (std::size_t c = 0; c < take; ++c) {
      const std::size_t pick = c + rng.index(earlier.size() - c);
      std::swap(earlier[c], earlier[pick]);
    }
    std::vector<int> cited(earlier.begin(), earlier.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(cited.begin(), cited.end());
    for (int j : cited) rec.bibliography.push_back(records[static_cast<std::size_t>(j)].id);

    // Optional planted precursor among the old-enough citations.
    std::vector<int> eligible;
    for (int j : cited)
      if (t_days - times[static_cast<std::size_t>(j)] > cfg.inspiration_gap_days) eligible.push_back(j);
    Vector offset = gaussian(rng, d, cfg.noise_sigma);
    if (!eligible.empty() && rng.uniform() < cfg.inspiration_rate) {
      const int src = eligible[rng.index(eligible.size())];
      const bool recoverable = rng.uniform() < cfg.p_true;
      if (recoverable) {
        offset = cfg.coupling * offsets.row(src).transpose() + std::sqrt(1.0 - cfg.coupling * cfg.coupling) * offset;
      }
      truth.inspirations.push_back({records[static_cast<std::size_t>(src)].id, rec.id, recoverable});
    }

    offsets.row(i) = offset.transpose();
    x.row(i) = truth.bases.row(topic) + t_norm * truth.drift.row(topic) + offset.transpose();

    const double on = offset.norm();
    const double dn = truth.drift.row(topic).norm();
    const double align = (on < 1e-8 || dn < 1e-8) ? 0.0 : offset.dot(truth.drift.row(topic).transpose()) / (on * dn);
    const double target = std::max(0.0, cfg.impact_base + cfg.impact_gain * align + cfg.impact_noise * rng.normal());
    // Everything goes through the citation channel: log_8(c + 1) = target.
    rec.signals.citations = std::expm1(target * std::log(8.0));

    truth.topics.push_back(topic);
    truth.alignments.push_back(align);
    truth.weights.push_back(corpus::compute_impact_weight(rec.signals));
    by_topic[static_cast<std::size_t>(topic)].push_back(i);
    records.push_back(std::move(rec));
  }

  SynthCorpus out;
  std::vector<std::string> ids;
  for (auto& r : records) {
    ids.push_back(r.id);
    out.corpus.add(std::move(r));
  }
  out.embeddings = embedding::EmbeddingMatrix(ids, std::move(x));
  out.corpus.attach_embeddings([&](const std::string& id) { return out.embeddings.index_of(id); });
  out.truth = std::move(truth);
  return out;
}

void save_truth(const std::filesystem::path& path, const SynthConfig& cfg, const SynthCorpus& data) {
  using nlohmann::json;
  auto rows = [](const Matrix& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      std::vector<double> row(m.row(r).data(), m.row(r).data() + m.cols());
      a.push_back(row);
    }
    return a;
  };
  json j;
  j["config"] = {{"n_papers", cfg.n_papers},
                 {"n_topics", cfg.n_topics},
                 {"embed_dim", cfg.embed_dim},
                 {"start_day", cfg.start_day},
                 {"span_days", cfg.span_days},
                 {"topic_spread", cfg.topic_spread},
                 {"drift_rate", cfg.drift_rate},
                 {"noise_sigma", cfg.noise_sigma},
                 {"impact_gain", cfg.impact_gain},
                 {"impact_noise", cfg.impact_noise},
                 {"impact_base", cfg.impact_base},
                 {"citations_per_paper", cfg.citations_per_paper},
                 {"inspiration_rate", cfg.inspiration_rate},
                 {"inspiration_gap_days", cfg.inspiration_gap_days},
                 {"p_true", cfg.p_true},
                 {"coupling", cfg.coupling},
                 {"seed", cfg.seed}};
  j["bases"] = rows(data.truth.bases);
  j["drift"] = rows(data.truth.drift);
  json papers = json::array();
  for (std::size_t i = 0; i < data.corpus.size(); ++i) {
    papers.push_back({{"id", data.corpus[i].id},
                      {"topic", data.truth.topics[i]},
                      {"alignment", data.truth.alignments[i]},
                      {"weight", data.truth.weights[i]}});
  }
  j["papers"] = papers;
  json insp = json::array();
  for (const auto& e : data.truth.inspirations)
    insp.push_back({{"from", e.from_id}, {"to", e.to_id}, {"recoverable", e.recoverable}});
  j["inspirations"] = insp;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

}  // namespace fame::synth
