#include "fame/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "fame/errors.hpp"

namespace fame::corpus {

using nlohmann::json;

void MetricParams::validate() const {
  for (const auto& c : channels) {
    if (!(c.scale > 0.0)) throw ArgumentError("metric scale must be positive");
    if (!(c.base > 1.0)) throw ArgumentError("metric base must exceed 1");
  }
}

void Corpus::add(PaperRecord record) {
  if (record.id.empty()) throw DataError("paper id must be non-empty");
  if (!std::isfinite(record.timestamp_days))
    throw DataError("paper '" + record.id + "' has a non-finite timestamp");
  for (double s : record.signals.as_array()) {
    if (!(s >= 0.0) || !std::isfinite(s))
      throw DataError("paper '" + record.id + "' has a negative or non-finite impact signal");
  }
  if (std::find(record.bibliography.begin(), record.bibliography.end(), record.id) !=
      record.bibliography.end())
    throw DataError("paper '" + record.id + "' cites itself");
  if (index_.contains(record.id)) throw DataError("duplicate paper id '" + record.id + "'");
  index_.emplace(record.id, papers_.size());
  papers_.push_back(std::move(record));
}

std::optional<std::size_t> Corpus::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const PaperRecord& Corpus::at(std::string_view id) const {
  auto i = index_of(id);
  if (!i) throw DataError("unknown paper id '" + std::string(id) + "'");
  return papers_[*i];
}

Corpus Corpus::subset(std::span<const std::string> ids) const {
  Corpus out;
  for (const auto& id : ids) out.add(at(id));
  return out;
}

namespace {

PaperRecord record_from_json(const json& j) {
  PaperRecord r;
  r.id = j.at("id").get<std::string>();
  r.title = j.value("title", std::string{});
  r.abstract_text = j.value("abstract", std::string{});
  r.timestamp_days = j.at("timestamp_days").get<double>();
  if (j.contains("bibliography")) r.bibliography = j.at("bibliography").get<std::vector<std::string>>();
  if (j.contains("signals")) {
    const auto& s = j.at("signals");
    r.signals.github_stars = s.value("github_stars", 0.0);
    r.signals.citations = s.value("citations", 0.0);
    r.signals.influential_citations = s.value("influential_citations", 0.0);
    r.signals.altmetric = s.value("altmetric", 0.0);
  }
  return r;
}

json record_to_json(const PaperRecord& r) {
  return json{{"schema_version", kSchemaVersion},
              {"id", r.id},
              {"title", r.title},
              {"abstract", r.abstract_text},
              {"timestamp_days", r.timestamp_days},
              {"bibliography", r.bibliography},
              {"signals",
               {{"github_stars", r.signals.github_stars},
                {"citations", r.signals.citations},
                {"influential_citations", r.signals.influential_citations},
                {"altmetric", r.signals.altmetric}}}};
}

}  // namespace

Corpus parse_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    PaperRecord record;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) throw ParseError("expected a JSON object", lineno);
      if (j.contains("schema_version") && j.at("schema_version").get<int>() > kSchemaVersion)
        throw ParseError("unsupported schema_version " + j.at("schema_version").dump(), lineno);
      record = record_from_json(j);
    } catch (const ParseError&) {
      throw;
    } catch (const json::exception& e) {
      throw ParseError(e.what(), lineno);
    }
    try {
      corpus.add(std::move(record));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return parse_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& p : corpus) out << record_to_json(p).dump() << '\n';
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_corpus(out, corpus);
}

double compute_impact_weight(const ImpactSignals& signals, const MetricParams& params) {
  const auto s = signals.as_array();
  double w = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    const auto& c = params.channels[m];
    w += std::log1p(c.scale * s[m]) / std::log(c.base);
  }
  return w;
}

std::vector<double> compute_weights(const Corpus& corpus, const MetricParams& params) {
  params.validate();
  std::vector<double> w;
  w.reserve(corpus.size());
  for (const auto& p : corpus) w.push_back(compute_impact_weight(p.signals, params));
  return w;
}

std::vector<double> normalize_weights(std::span<const double> weights) {
  if (weights.empty()) throw ArgumentError("normalize_weights: empty input");
  const auto [lo, hi] = std::minmax_element(weights.begin(), weights.end());
  const double range = *hi - *lo;
  std::vector<double> out(weights.size(), 0.0);
  if (range <= 0.0) return out;
  for (std::size_t i = 0; i < weights.size(); ++i) out[i] = (weights[i] - *lo) / range;
  return out;
}

CorpusSplit temporal_split(const Corpus& corpus, double cutoff_T, std::optional<double> end_T) {
  CorpusSplit split;
  split.cutoff_T = cutoff_T;
  double latest = -std::numeric_limits<double>::infinity();
  for (const auto& p : corpus) {
    latest = std::max(latest, p.timestamp_days);
    (p.timestamp_days <= cutoff_T ? split.train_ids : split.test_ids).push_back(p.id);
  }
  split.end_T = end_T.value_or(corpus.empty() ? cutoff_T : latest);
  return split;
}

void write_weights_csv(std::ostream& out, const Corpus& corpus, std::span<const double> weights) {
  if (weights.size() != corpus.size()) throw ArgumentError("weights/corpus size mismatch");
  out << "id,weight\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < corpus.size(); ++i) out << corpus[i].id << ',' << weights[i] << '\n';
}

}  // namespace fame::corpus
