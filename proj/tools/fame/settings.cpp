#include "settings.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <istream>
#include <sstream>

#include "fame/errors.hpp"

namespace fame::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
    return std::filesystem::path(text);
  } else if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ArgumentError("config key " + key + ": expected true/false, got '" + text + "'");
  } else if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(text.c_str(), &end);
    if (text.empty() || *end != '\0' || errno != 0)
      throw ArgumentError("config key " + key + ": expected a number, got '" + text + "'");
    return v;
  } else {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size())
      throw ArgumentError("config key " + key + ": expected an integer, got '" + text + "'");
    return v;
  }
}

template <class T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
    return v.string();
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_floating_point_v<T>) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  } else {
    return std::to_string(v);
  }
}

}  // namespace

std::map<std::string, std::string> parse_config_text(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ArgumentError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ArgumentError("config line " + std::to_string(lineno) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

template <class T>
void KeyRegistry::bind(const std::string& key, T& field) {
  Binding b;
  b.set = [key, &field](const std::string& text) { field = parse_value<T>(key, text); };
  b.get = [&field] { return format_value(field); };
  b.make = [&field](CLI::App& app, const std::string& flag, const std::string& help) -> CLI::Option* {
    if constexpr (std::is_same_v<T, bool>) {
      return app.add_flag(flag, field, help);
    } else {
      return app.add_option(flag, field, help);
    }
  };
  bindings_.emplace(key, std::move(b));
}

KeyRegistry::KeyRegistry(Settings& s) {
  bind("workdir", s.workdir);
  bind("seed", s.seed);

  bind("ingest.corpus", s.corpus_path);
  bind("ingest.embeddings", s.embeddings_path);
  bind("ingest.embedding_url", s.embedding_url);

  static const char* channel_names[] = {"stars", "citations", "influential", "altmetric"};
  for (std::size_t c = 0; c < 4; ++c) {
    bind(std::string("metrics.") + channel_names[c] + ".scale", s.metrics.channels[c].scale);
    bind(std::string("metrics.") + channel_names[c] + ".base", s.metrics.channels[c].base);
  }

  bind("cluster.k", s.num_topics);
  bind("cluster.cutoff", s.cutoff);

  bind("graph.tau_sim", s.graph.tau_sim);
  bind("graph.delta_days", s.graph.delta_days_min);
  bind("graph.top_k", s.graph.top_k);
  bind("graph.confidence_min", s.graph.confidence_min);
  bind("graph.max_in_flight", s.graph.max_in_flight);
  bind("verifier.kind", s.verifier);
  bind("verifier.mock_threshold", s.mock_threshold);
  bind("verifier.url", s.verifier_url);

  bind("train.lr", s.train.learning_rate);
  bind("train.dt", s.train.finite_diff_step);
  bind("train.delta_align", s.train.delta_align);
  bind("train.alpha", s.train.weights.alpha);
  bind("train.beta", s.train.weights.beta);
  bind("train.gamma", s.train.weights.gamma);
  bind("train.epochs", s.train.epochs);
  bind("train.batch_size", s.train.batch_size);
  bind("vanguard.tau_time", s.train.vanguard.tau_time_days);
  bind("vanguard.delta_base", s.train.vanguard.delta_base);
  bind("model.latent_dim", s.model.latent_dim);
  bind("model.topic_dim", s.model.topic_dim);
  bind("model.hidden_width", s.model.hidden_width);
  bind("model.hidden_layers", s.model.hidden_layers);
  bind("time.d_time", s.model.time.d_time);
  bind("time.frequency_base", s.model.time.frequency_base);
  bind("naive.epochs", s.naive.epochs);
  bind("naive.lr", s.naive.learning_rate);
  bind("naive.batch_size", s.naive.batch_size);
  bind("naive.hidden_width", s.naive.hidden_width);
  bind("naive.hidden_layers", s.naive.hidden_layers);

  bind("eval.windows", s.windows);
  bind("eval.horizon_days", s.horizon_days);
  bind("eval.cutoffs", s.cutoffs);
  bind("eval.seeds", s.seeds);
  bind("eval.variants", s.variants);
  bind("sweep.step", s.sweep_step);

  bind("synth.n_papers", s.synth.n_papers);
  bind("synth.n_topics", s.synth.n_topics);
  bind("synth.embed_dim", s.synth.embed_dim);
  bind("synth.start_day", s.synth.start_day);
  bind("synth.span_days", s.synth.span_days);
  bind("synth.topic_spread", s.synth.topic_spread);
  bind("synth.drift_rate", s.synth.drift_rate);
  bind("synth.noise_sigma", s.synth.noise_sigma);
  bind("synth.impact_gain", s.synth.impact_gain);
  bind("synth.impact_noise", s.synth.impact_noise);
  bind("synth.impact_base", s.synth.impact_base);
  bind("synth.citations_per_paper", s.synth.citations_per_paper);
  bind("synth.inspiration_rate", s.synth.inspiration_rate);
  bind("synth.inspiration_gap_days", s.synth.inspiration_gap_days);
  bind("synth.p_true", s.synth.p_true);
  bind("synth.coupling", s.synth.coupling);
  bind("synth.seed", s.synth.seed);

  bind("project.iterations", s.projection_iterations);
  bind("score.all", s.score_all);
}

CLI::Option* KeyRegistry::add(CLI::App& app, const std::string& flag, const std::string& key,
                              const std::string& help) {
  auto it = bindings_.find(key);
  if (it == bindings_.end()) throw std::logic_error("unregistered config key " + key);
  CLI::Option* opt = it->second.make(app, flag, help + " [" + key + "]");
  it->second.options.push_back(opt);
  return opt;
}

void KeyRegistry::apply(const std::map<std::string, std::string>& values) {
  for (const auto& [key, text] : values) {
    auto it = bindings_.find(key);
    if (it == bindings_.end()) throw ArgumentError("unknown config key '" + key + "'");
    bool given = false;
    for (const CLI::Option* opt : it->second.options) given = given || opt->count() > 0;
    if (!given) it->second.set(text);
  }
}

std::map<std::string, std::string> KeyRegistry::snapshot() const {
  std::map<std::string, std::string> out;
  for (const auto& [key, b] : bindings_) out[key] = b.get();
  return out;
}

std::string KeyRegistry::dump() const {
  std::ostringstream os;
  for (const auto& [key, value] : snapshot()) os << key << " = " << value << '\n';
  return os.str();
}

}  // namespace fame::cli
