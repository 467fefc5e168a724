#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "fame/errors.hpp"
#include "fame/hashing.hpp"
#include "fame/inspiration_graph.hpp"
#include "fame/log.hpp"
#include "http_endpoint.hpp"

#include <httplib.h>

namespace fame::graph {

using nlohmann::json;

std::string render_verification_prompt(const corpus::PaperRecord& earlier,
                                       const corpus::PaperRecord& later, double similarity,
                                       double time_delta_days) {
  char signal[160];
  std::snprintf(signal, sizeof signal,
                "- cosine_similarity: %.4f\n- time_delta_days(A_minus_B): %.1f\n", similarity,
                time_delta_days);
  std::string p;
  p += "You judge whether a later paper is inspired by an earlier paper.\n";
  p += "Return strict JSON:\n";
  p += "{\n";
  p += "  \"is_inspired\": true,\n";
  p += "  \"confidence\": 0.0,\n";
  p += "  \"rationale\": \"1-2 sentence explanation\"\n";
  p += "}\n\n";
  p += "Later paper A:\n";
  p += "- arXiv ID: " + later.id + "\n";
  p += "- Title: " + later.title + "\n";
  p += "- Abstract: " + later.abstract_text + "\n\n";
  p += "Earlier paper B:\n";
  p += "- arXiv ID: " + earlier.id + "\n";
  p += "- Title: " + earlier.title + "\n";
  p += "- Abstract: " + earlier.abstract_text + "\n\n";
  p += "Additional signal:\n";
  p += signal;
  return p;
}

Verdict parse_verdict(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw ServiceError(std::string("verifier returned non-JSON payload: ") + e.what(), false);
  }
  if (!j.is_object()) throw ServiceError("verifier payload is not a JSON object", false);
  if (!j.contains("is_inspired") || !j["is_inspired"].is_boolean())
    throw ServiceError("verifier payload lacks boolean 'is_inspired'", false);
  if (!j.contains("confidence") || !j["confidence"].is_number())
    throw ServiceError("verifier payload lacks numeric 'confidence'", false);
  Verdict v;
  v.is_inspired = j["is_inspired"].get<bool>();
  v.confidence = j["confidence"].get<double>();
  if (!(v.confidence >= 0.0 && v.confidence <= 1.0))
    throw ServiceError("verifier confidence outside [0,1]", false);
  if (j.contains("rationale")) {
    if (!j["rationale"].is_string()) throw ServiceError("verifier 'rationale' is not a string", false);
    v.rationale = j["rationale"].get<std::string>();
  }
  return v;
}

Verdict MockVerifier::verify(const CandidatePair& pair, const corpus::PaperRecord&,
                             const corpus::PaperRecord&) {
  Verdict v;
  v.is_inspired = pair.similarity >= threshold_;
  v.confidence = std::clamp(pair.similarity, 0.0, 1.0);
  v.rationale = "mock: similarity vs threshold";
  return v;
}

RemoteVerifier::RemoteVerifier(RemoteVerifierOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw ArgumentError("remote verifier needs an endpoint URL");
  if (options_.max_attempts < 1) throw ArgumentError("remote verifier max_attempts must be >= 1");
}

Verdict RemoteVerifier::verify(const CandidatePair& pair, const corpus::PaperRecord& earlier,
                               const corpus::PaperRecord& later) {
  const auto ep = detail::split_url(options_.endpoint);
  const std::string body =
      json{{"prompt", render_verification_prompt(earlier, later, pair.similarity, pair.time_delta_days)}}
          .dump();
  httplib::Headers headers;
  if (!options_.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + options_.bearer_token);

  std::string last_error;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    httplib::Client client(ep.origin);
    client.set_connection_timeout(options_.timeout_seconds);
    client.set_read_timeout(options_.timeout_seconds);
    auto res = client.Post(ep.path, headers, body, "application/json");
    if (res && res->status == 200) return parse_verdict(res->body);
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (res && res->status < 500 && res->status != 429) break;
    if (attempt < options_.max_attempts)
      std::this_thread::sleep_for(std::chrono::milliseconds(options_.backoff_ms * attempt));
  }
  throw ServiceError("verifier request failed for " + pair.earlier_id + " -> " + pair.later_id + ": " +
                     last_error);
}

namespace {

std::string cache_key(const std::string& earlier, const std::string& later, const std::string& prompt_hash) {
  return earlier + '\x1f' + later + '\x1f' + prompt_hash;
}

}  // namespace

CachingVerifier::CachingVerifier(std::shared_ptr<Verifier> inner, std::filesystem::path cache_path)
    : inner_(std::move(inner)), path_(std::move(cache_path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      Verdict v{j.at("is_inspired").get<bool>(), j.at("confidence").get<double>(),
                j.value("rationale", std::string{})};
      cache_[cache_key(j.at("earlier").get<std::string>(), j.at("later").get<std::string>(),
                       j.at("prompt_sha256").get<std::string>())] = v;
    } catch (const json::exception&) {
      log::warning("ignoring corrupt verifier cache line in " + path_.string());
    }
  }
}

Verdict CachingVerifier::verify(const CandidatePair& pair, const corpus::PaperRecord& earlier,
                                const corpus::PaperRecord& later) {
  const std::string hash =
      sha256_hex(render_verification_prompt(earlier, later, pair.similarity, pair.time_delta_days));
  const std::string key = cache_key(pair.earlier_id, pair.later_id, hash);
  {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++hits_;
      return it->second;
    }
    ++misses_;
  }
  Verdict v = inner_->verify(pair, earlier, later);
  std::lock_guard lock(mu_);
  cache_[key] = v;
  std::ofstream out(path_, std::ios::app);
  out << json{{"earlier", pair.earlier_id},
              {"later", pair.later_id},
              {"prompt_sha256", hash},
              {"is_inspired", v.is_inspired},
              {"confidence", v.confidence},
              {"rationale", v.rationale}}
             .dump()
      << '\n';
  return v;
}

std::size_t CachingVerifier::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::size_t CachingVerifier::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

}  // namespace fame::graph
